use std::fmt::Write;

use super::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Statistics, tolerances and verdicts of one experiment, plus its data table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: String,
    pub config_hash: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    pub noise_seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub stats: Vec<(String, f64)>,
    pub tolerances: Vec<(String, f64)>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(kind: &str, cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            kind: kind.into(),
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            seeds: cfg.seeds.clone(),
            noise_seed: cfg.noise_seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            stats: Vec::new(),
            tolerances: Vec::new(),
            verdicts: Vec::new(),
            notes: super::provenance_notes(cfg),
        }
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.stats.push((name.into(), value));
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.push((name.into(), value));
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.stats.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find_verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "kind = {}", self.kind).unwrap();
        writeln!(s, "config_hash = {}", self.config_hash).unwrap();
        writeln!(s, "code_version = {}", self.code_version).unwrap();
        writeln!(s, "noise_seed = {}", self.noise_seed).unwrap();
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        writeln!(s, "seeds = [{}]", seeds.join(", ")).unwrap();
        writeln!(s, "result = {}", if self.passed() { "PASS" } else { "FAIL" }).unwrap();
        writeln!(s, "\n[stats]").unwrap();
        for (n, v) in &self.stats {
            writeln!(s, "{n} = {v:e}").unwrap();
        }
        writeln!(s, "\n[tolerances]").unwrap();
        for (n, v) in &self.tolerances {
            writeln!(s, "{n} = {v:e}").unwrap();
        }
        writeln!(s, "\n[verdicts]").unwrap();
        for v in &self.verdicts {
            writeln!(s, "{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail).unwrap();
        }
        writeln!(s, "\n[notes]").unwrap();
        for n in &self.notes {
            writeln!(s, "- {n}").unwrap();
        }
        s
    }
}
