use caom_cli::{parse_config, ConfigError};

#[test]
fn empty_file_takes_every_default() {
    let cfg = parse_config("").unwrap();
    assert_eq!((cfg.grid.ny(), cfg.grid.nz()), (64, 64));
    assert_eq!(cfg.dt, 1e-3);
    assert_eq!(cfg.seed, 0);
    assert!(cfg.defaulted.contains(&"grid.ny".to_string()));
    assert!(cfg.defaulted.contains(&"profiles.b".to_string()));
    assert_eq!(cfg.attractor.horizons, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
    assert_eq!(cfg.attractor.members, 16);
    assert_eq!(cfg.ergodicity.members, 64);
    assert_eq!(cfg.feedback.sigma_sweep.len(), 3);
}

#[test]
fn given_keys_are_not_reported_as_defaulted() {
    let cfg = parse_config("seed = 7\n[grid]\nny = 16\nnz = 8\n").unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!((cfg.grid.ny(), cfg.grid.nz()), (16, 8));
    assert!(!cfg.defaulted.iter().any(|k| k == "grid.ny" || k == "seed"));
    assert!(cfg.defaulted.iter().any(|k| k == "time.dt"));
}

#[test]
fn unknown_keys_and_sections_are_errors() {
    assert_eq!(parse_config("[grid]\nnx = 8\n").unwrap_err(), ConfigError::UnknownKey("grid.nx".into()));
    assert_eq!(parse_config("[ocean]\nx = 1\n").unwrap_err(), ConfigError::UnknownKey("ocean".into()));
    assert!(matches!(parse_config("[profiles]\nb = { kind = \"cosine\", mean = 0.5, phase = 1 }\n"),
        Err(ConfigError::UnknownKey(k)) if k == "profiles.b.phase"));
}

#[test]
fn coupling_outside_unit_interval_names_the_key() {
    let err = parse_config("[grid]\nny = 8\nnz = 8\n[profiles]\nb = 1.3\n").unwrap_err();
    match &err {
        ConfigError::Constraint { key, message } => {
            assert_eq!(key, "profiles.b");
            assert!(message.contains("0 <= b <= 1"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn flux_with_nonzero_integral_is_rejected() {
    let err = parse_config("[grid]\nny = 8\nnz = 8\n[profiles]\nf = 0.013\n").unwrap_err();
    assert!(err.to_string().contains("flux.F integral nonzero"), "{err}");
}

#[test]
fn syntax_errors_report_the_line() {
    let err = parse_config("seed = 1\n[grid]\nny = = 3\n").unwrap_err();
    assert!(matches!(err, ConfigError::Syntax { line: 3, .. }), "{err:?}");
}

#[test]
fn type_and_range_errors() {
    assert!(matches!(parse_config("[time]\ndt = \"fast\"\n"), Err(ConfigError::Type { key, .. }) if key == "time.dt"));
    assert!(matches!(parse_config("[time]\ndt = -1.0\n"), Err(ConfigError::Constraint { key, .. }) if key == "time.dt"));
    assert!(matches!(parse_config("[time]\ndt = 0.3\nt_end = 1.0\n"), Err(ConfigError::Constraint { key, .. }) if key == "time.t_end"));
    assert!(matches!(parse_config("[noise]\ngamma = 0.5\n"), Err(ConfigError::Constraint { key, .. }) if key == "noise.gamma"));
    assert!(matches!(parse_config("[attractor]\nhorizons = [2.0, 1.0]\n"), Err(ConfigError::Constraint { key, .. }) if key == "attractor.horizons"));
    assert!(matches!(parse_config("grid = 3\n"), Err(ConfigError::Type { key, .. }) if key == "grid"));
    assert!(matches!(parse_config("stride = 3\nsnapshot_stride = 10\n"), Err(ConfigError::Constraint { key, .. }) if key == "snapshot_stride"));
    assert!(parse_config("[grid]\nny = 2\n").is_err());
}

#[test]
fn profiles_accept_constants_lists_and_cosines() {
    let cfg = parse_config("[grid]\nny = 4\nnz = 4\n[profiles]\nb = [0.1, 0.2, 0.3, 0.2, 0.1]\ns_a = { kind = \"cosine\", mean = 1.0, amp = -0.2, k = 2 }\n").unwrap();
    assert_eq!(cfg.params.b.values.to_vec(), vec![0.1, 0.2, 0.3, 0.2, 0.1]);
    assert!((cfg.params.s_a.values[0] - 0.8).abs() < 1e-12);
    // node lists of any length are interpolated onto the grid
    let coarse = parse_config("[grid]\nny = 4\nnz = 4\n[profiles]\nb = [0.1, 0.3]\n").unwrap();
    assert!((coarse.params.b.values[2] - 0.2).abs() < 1e-12);
    assert!(parse_config("[grid]\nny = 4\nnz = 4\n[profiles]\nb = [0.1]\n").is_err());
}

#[test]
fn hash_ignores_output_location_and_workers() {
    let a = parse_config("out = \"x\"\nworkers = 1\n").unwrap();
    let b = parse_config("out = \"y\"\nworkers = 4\n").unwrap();
    assert_eq!(a.hash("simulate"), b.hash("simulate"));
    assert_ne!(a.hash("simulate"), a.hash("attractor"));
    let c = parse_config("seed = 1\n").unwrap();
    assert_ne!(a.hash("simulate"), c.hash("simulate"));
    assert_eq!(a.hash("simulate").len(), 16);
}

#[test]
fn experiment_configs_follow_sections() {
    let cfg = parse_config("seed = 3\n[fixedpoint]\nrealizations = 5\ndata_factor = 0.02\nnu = 6.0\n").unwrap();
    let e = cfg.experiment("fixedpoint").unwrap();
    assert_eq!(e.seeds.len(), 5);
    assert_eq!(e.params.nu, 6.0);
    assert!(cfg.experiment("simulate").is_none());
    let d = cfg.experiment("determining").unwrap();
    assert_eq!(d.mode_sweep, vec![0, 1, 2, 4, 8, 16, 32, 64]);
}
