use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "seed = 5\nstride = 5\nsnapshot_stride = 50\n[grid]\nny = 8\nnz = 8\n[time]\ndt = 0.01\nt_end = 2.0\n";

const ZERO_DATA: &str = "[model]\na = 0.0\n[profiles]\ns_a = 0.0\ns_o = 0.0\nf = 0.0\n[noise]\nsigma0 = 0.0\n";

fn caom(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_caom"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env_remove("CAOM_OUT")
        .output()
        .unwrap()
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())).collect()
}

#[test]
fn simulate_writes_csv_text_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = caom(&["simulate", "--out", out.to_str().unwrap()], SMALL, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS salinity_mass"));
    assert!(stdout.contains("PASS gronwall_envelope"));
    let names: Vec<String> = listing(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 1);
    assert_eq!(names.iter().filter(|n| n.ends_with(".txt")).count(), 1);
    // every 50 steps over 200 steps, t = 0 included
    assert_eq!(names.iter().filter(|n| n.ends_with(".snap")).count(), 5);
    assert!(names.iter().any(|n| n.starts_with("simulate-") && n.ends_with("-00000200.snap")));
    let snap = names.iter().find(|n| n.ends_with("-00000200.snap")).unwrap();
    let u = caom_cli::read_snapshot(&mut fs::File::open(out.join(snap)).unwrap()).unwrap();
    assert!((u.time - 2.0).abs() < 1e-12);
    assert_eq!(u.q.grid().ny(), 8);
}

#[test]
fn zero_data_energy_csv_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = format!("{SMALL}\n[initial]\nnorm_sq = 4.0\n{ZERO_DATA}");
    let o = caom(&["simulate", "--quiet", "--out", out.to_str().unwrap()], &config, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let (_, csv) = listing(&out).into_iter().find(|(n, _)| n.ends_with(".csv")).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), caom_core::diagnostics::ENERGY_CSV_HEADER);
    let h: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(h.len(), 41);
    assert!((h[0] - 4.0).abs() < 1e-9, "{}", h[0]);
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad = caom(&["simulate", "--out", out.to_str().unwrap()], "[grid]\nny = 8\nnz = 8\n[profiles]\nb = 1.3\n", tmp.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("profiles.b"));
    let unknown = caom(&["simulate"], "[grid]\nnx = 8\n", tmp.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("grid.nx"));
    let sub = Command::new(env!("CARGO_BIN_EXE_caom")).arg("nonsense").output().unwrap();
    assert_ne!(sub.status.code(), Some(0));
    // two short horizons cannot shrink the ensemble by a factor of ten
    let short = format!("{SMALL}[attractor]\nmembers = 4\nhorizons = [0.1, 0.2]\n");
    let fail = caom(&["attractor", "--out", out.to_str().unwrap()], &short, tmp.path());
    assert_eq!(fail.status.code(), Some(2), "{}", String::from_utf8_lossy(&fail.stderr));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL final_ratio"));
}

#[test]
fn environment_overrides_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let (flag, env) = (tmp.path().join("flag"), tmp.path().join("env"));
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_caom"))
        .args(["selftest", "--quiet", "--config", cfg.to_str().unwrap(), "--out", flag.to_str().unwrap()])
        .env("CAOM_OUT", &env)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env.is_dir());
    assert!(!flag.exists());
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    caom(&["simulate", "--quiet", "--out", a.to_str().unwrap()], SMALL, tmp.path());
    caom(&["simulate", "--quiet", "--seed", "6", "--out", b.to_str().unwrap()], SMALL, tmp.path());
    let (la, lb) = (listing(&a), listing(&b));
    assert_ne!(la[0].0, lb[0].0);
    assert_ne!(la[0].1, lb[0].1);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}[attractor]\nmembers = 4\nhorizons = [0.5, 1.0]\n");
    let mut outs = Vec::new();
    for (i, (sub, workers)) in [("simulate", "1"), ("simulate", "1"), ("attractor", "1"), ("attractor", "1"), ("attractor", "2")]
        .into_iter()
        .enumerate()
    {
        let dir = tmp.path().join(format!("r{i}"));
        let o = caom(&[sub, "--quiet", "--workers", workers, "--out", dir.to_str().unwrap()], &config, tmp.path());
        assert!(o.status.code() == Some(0) || o.status.code() == Some(2), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(listing(&dir));
    }
    assert!(!outs[0].is_empty());
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[2], outs[3]);
    assert_eq!(outs[2], outs[4]);
}
