use std::path::Path;
use std::process::Command;

use cgo_core::cli::{exit_code, run, EXIT_NUMERICAL, EXIT_VALIDATION};
use cgo_core::config::RunConfig;
use cgo_core::report::{read_report, Cell};

fn cgo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cgo"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn summary_value(dir: &Path, quantity: &str) -> f64 {
    let s = read_report(&dir.join("summary.csv")).unwrap();
    let row = s.rows.iter().find(|r| r[0] == Cell::Text(quantity.into())).unwrap();
    match row[1] {
        Cell::Num(v) => v,
        _ => panic!("no value for {quantity}"),
    }
}

#[test]
fn unknown_command_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = cgo().args(["plot", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown command"));
}

#[test]
fn steep_phase_config_is_rejected_by_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[phase]\nkappa = 1.1\n");
    let out = cgo().args(["eikonal", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phase.kappa"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[radon]\nnodez = 3\n");
    let out = cgo().args(["radon", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodez"));
}

#[test]
fn seed_beyond_toml_range_is_rejected() {
    let out = cgo()
        .args(["carleman", "--seed", "18446744073709551615"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    let cfg = RunConfig {
        seed: u64::MAX,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn flat_eikonal_grid_is_x2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[phase]\nkappa = 0.0\n[eikonal]\nnodes = 64\n");
    let out = dir.path().join("out");
    let st = cgo()
        .args(["eikonal", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let s = read_report(&out.join("eikonal.csv")).unwrap();
    assert_eq!(s.columns, ["x1", "x2", "psi"]);
    assert_eq!(s.rows.len(), 64 * 64);
    let x2 = s.column("x2").unwrap();
    let psi = s.column("psi").unwrap();
    assert!(x2.iter().zip(&psi).all(|(a, b)| (a - b).abs() <= 1e-12));
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[eikonal]\nnodes = 16\n");
    let st = cgo()
        .args(["eikonal", "--config"])
        .arg(&cfg)
        .env("CGO_OUT_DIR", dir.path().join("env"))
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("env/eikonal.csv").exists());
    let st = cgo()
        .args(["eikonal", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("flag"))
        .env("CGO_OUT_DIR", dir.path().join("env2"))
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("flag/eikonal.csv").exists());
    assert!(!dir.path().join("env2").exists());
}

#[test]
fn command_can_come_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "command = \"eikonal\"\n[eikonal]\nnodes = 8\n");
    let st = cgo()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("eikonal.csv").exists());
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "seed = 11\n[carleman]\ngrid = [33, 33, 9]\nfields = 3\ntaus = [8.0, 16.0]\n",
    );
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let st = cgo()
            .args(["carleman", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        outputs.push(out);
    }
    for f in ["carleman.csv", "carleman_slopes.csv", "summary.csv"] {
        let a = std::fs::read(outputs[0].join(f)).unwrap();
        let b = std::fs::read(outputs[1].join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let echo = |d: &Path| -> Vec<String> {
        std::fs::read_to_string(d.join("config.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out_dir"))
            .map(String::from)
            .collect()
    };
    assert_eq!(echo(&outputs[0]), echo(&outputs[1]));
}

#[test]
fn seed_flag_changes_random_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[carleman]\ngrid = [33, 33, 9]\nfields = 2\ntaus = [8.0, 16.0]\n",
    );
    let mut files = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let st = cgo()
            .args(["carleman", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        files.push(std::fs::read(out.join("carleman.csv")).unwrap());
    }
    assert_ne!(files[0], files[1]);
}

#[test]
fn unscaling_overflow_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[forward]\ngrid = [33, 33, 9]\ntau = 200.0\n");
    let out = cgo()
        .args(["forward", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_NUMERICAL));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cgo") && err.contains("exponent"), "{err}");
}

#[test]
fn identity_report_has_fixed_columns_sorted_by_tau() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.identity.grid = [33, 33, 17];
    cfg.identity.taus = vec![16.0, 8.0, 12.0];
    cfg.identity.boundary = true;
    let o = run("identity", &cfg, dir.path()).unwrap();
    let s = read_report(&dir.path().join("identity.csv")).unwrap();
    assert_eq!(s.columns, ["tau", "re_I", "im_I", "re_B", "im_B", "abs_I_minus_P"]);
    assert_eq!(s.column("tau").unwrap(), vec![8.0, 12.0, 16.0]);
    assert!(s.column("re_B").unwrap().iter().all(|v| v.is_finite()));
    assert!(o.files.iter().any(|f| f.ends_with("summary.csv")));
}

#[test]
fn synthetic_reconstruction_reports_relative_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    let r = &mut cfg.reconstruct;
    r.gamma_points = 5;
    r.gamma_max = 2.0;
    r.section_nodes = 16;
    r.angles = 24;
    r.offsets = 21;
    r.x3_nodes = 9;
    let o = run("reconstruct", &cfg, dir.path());
    assert_eq!(exit_code(&o), 0);
    let e = read_report(&dir.path().join("error_summary.csv")).unwrap();
    assert_eq!(e.rows[0][0], Cell::Text("rel_error".into()));
    assert!(matches!(e.rows[0][1], Cell::Num(v) if v.is_finite() && v > 0.0));
    let f = read_report(&dir.path().join("reconstruction.csv")).unwrap();
    assert_eq!(f.columns, ["x1", "x2", "x3", "re", "im", "re_truth", "im_truth"]);
    assert!(!f.rows.is_empty());
    assert!(summary_value(dir.path(), "rel_error").is_finite());
}

#[test]
fn blind_reconstruction_runs_from_boundary_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        mode: cgo_core::config::Mode::Blind,
        ..Default::default()
    };
    cfg.phase.epsilon = 0.2;
    let r = &mut cfg.reconstruct;
    r.gamma_points = 1;
    r.section_nodes = 10;
    r.angles = 6;
    r.offsets = 5;
    r.x3_nodes = 5;
    r.blind_grid = [33, 33, 9];
    let o = run("reconstruct", &cfg, dir.path()).unwrap();
    assert!(dir.path().join("reconstruction.csv").exists());
    assert!(summary_value(dir.path(), "rel_error").is_finite());
    assert!(o.summary.rows.iter().any(|r| r[0] == Cell::Text("warning".into())));
}

mod config_fuzz {
    use cgo_core::config::{Mode, RunConfig};
    use proptest::prelude::*;
    use std::path::Path;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn written_config_parses_back_unchanged(kappa in -0.5..0.5f64, eps in 0.05..0.5f64, seed in 0..=i64::MAX as u64,
                                                 n in 8usize..300, blind in any::<bool>(),
                                                 taus in prop::collection::vec(1.0..60.0f64, 1..6)) {
            let mut cfg = RunConfig::default();
            cfg.phase.kappa = kappa;
            cfg.phase.epsilon = eps;
            cfg.seed = seed;
            cfg.eikonal.nodes = n;
            cfg.identity.taus = taus;
            cfg.mode = if blind { Mode::Blind } else { Mode::Synthetic };
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text, Path::new(".")).unwrap();
            prop_assert_eq!(back, cfg);
        }

        #[test]
        fn arbitrary_text_never_panics(text in "[ -~\n]{0,200}") {
            let _ = RunConfig::from_toml(&text, Path::new("."));
        }
    }
}
