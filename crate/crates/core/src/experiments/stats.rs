use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    /// Bootstrap standard deviation of the mean.
    pub se: f64,
    /// Percentile interval at the requested level.
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap of the sample mean with `resamples` draws.
pub fn bootstrap_mean(values: &[f64], resamples: usize, seed: u64, level: f64) -> BootstrapSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    if n < 2 || resamples == 0 {
        return BootstrapSummary { mean, se: 0.0, lo: mean, hi: mean };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let m = means.iter().sum::<f64>() / resamples as f64;
    let se = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt();
    let q = |p: f64| means[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    let tail = (1.0 - level) / 2.0;
    BootstrapSummary { mean, se, lo: q(tail), hi: q(1.0 - tail) }
}

/// Means of `batches` equal consecutive blocks (a trailing remainder is dropped).
pub fn batch_means(series: &[f64], batches: usize) -> Vec<f64> {
    let len = series.len() / batches.max(1);
    if len == 0 {
        return Vec::new();
    }
    series.chunks_exact(len).take(batches).map(|c| c.iter().sum::<f64>() / len as f64).collect()
}
