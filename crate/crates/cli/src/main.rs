use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use caom_cli::{parse_config, run, SUBCOMMANDS};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "caom", version, about = "Stochastic coupled atmosphere-ocean simulator")]
struct Args {
    /// One of simulate, attractor, determining, fixedpoint, ergodicity, feedback, selftest.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUBCOMMANDS))]
    subcommand: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; the CAOM_OUT environment variable takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Sampling stride of time series, in steps.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn main_inner(args: Args) -> Result<bool> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(s) = args.stride {
        anyhow::ensure!(s > 0, "--stride must be positive");
        anyhow::ensure!(cfg.snapshot_stride % s == 0, "--stride must divide snapshot_stride = {}", cfg.snapshot_stride);
        cfg.stride = s;
    }
    let out = std::env::var_os("CAOM_OUT").map(PathBuf::from).or(args.out).unwrap_or_else(|| cfg.out.clone());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let outcome = pool.install(|| run(&args.subcommand, &cfg, &out))?;
    if !args.quiet {
        for v in &outcome.verdicts {
            println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
        }
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
