use caom_cli::{parse_config, run};

const CONFIG: &str = "seed = 42\nworkers = 1\n[grid]\nny = 8\nnz = 8\n[time]\ndt = 0.01\nt_end = 1.0\n[attractor]\nmembers = 6\nhorizons = [1.0, 2.0, 4.0]\n";

// frozen from the first validated build
const DIAMETERS: [(f64, f64); 3] = [(1.0, 4.051173164369633), (2.0, 2.7445780922071275), (4.0, 1.2469058642960364)];
const R1: f64 = 83.10747633547155;
const HASH: &str = "df0808e59cc1763d";

#[test]
fn attractor_fixture() {
    let cfg = parse_config(CONFIG).unwrap();
    assert_eq!(cfg.hash("attractor"), HASH);
    let tmp = tempfile::tempdir().unwrap();
    let out = run("attractor", &cfg, tmp.path()).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join(format!("attractor-{HASH}.csv"))).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), DIAMETERS.len());
    for (row, (h, d)) in rows.iter().zip(DIAMETERS) {
        assert_eq!(row[0], h);
        assert!((row[1] / d - 1.0).abs() < 1e-9, "T = {h}: {} vs {d}", row[1]);
    }
    let txt = std::fs::read_to_string(tmp.path().join(format!("attractor-{HASH}.txt"))).unwrap();
    let r1: f64 = txt.lines().find_map(|l| l.strip_prefix("r1 = ")).unwrap().parse().unwrap();
    assert!((r1 / R1 - 1.0).abs() < 1e-9);
    let names: Vec<&str> = out.verdicts.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["diameter_non_increasing", "final_ratio"]);
    assert!(out.verdicts[0].passed);
    assert!(!out.passed);
}
