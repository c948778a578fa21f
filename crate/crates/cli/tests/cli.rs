use std::fs;
use std::process::Command;

use dirac1d::fit::DecaySeries;
use dirac1d_cli::experiments::{run_experiment, Kind};
use dirac1d_cli::report::{emit_series, parse_series_csv, series_csv, SeriesFormat};
use dirac1d_cli::ExperimentConfig;
use proptest::prelude::*;

const SMALL: &str = r#"
mass = 1.0
sigma = 3.0
epsilon = 0.5

[grid]
L = 60.0
N = 1024

[potential]
family = "gaussian_offdiag"
params = { amplitude = 0.0, width = 1.0, phase = 0.0 }

[evolution]
dt = 0.02
t_max = 50.0

[fit]
window = [10.0, 50.0]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac1d"))
}

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(rows in prop::collection::vec((1e-3f64..1e3, 1e-300f64..1e300), 0..40)) {
        let mut t = 0.0;
        let (times, norms): (Vec<f64>, Vec<f64>) = rows.iter().map(|(dt, n)| { t += dt; (t, *n) }).unzip();
        let s = DecaySeries::new(times, norms).unwrap();
        let back = parse_series_csv(&series_csv(&s)).unwrap();
        prop_assert_eq!(back.times.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), s.times.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back.norms.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), s.norms.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn empty_series_writes_the_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    emit_series(&DecaySeries::default(), &p, SeriesFormat::Csv).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap(), "t,norm\n");
    let back = parse_series_csv("t,norm\n").unwrap();
    assert!(back.times.is_empty());
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(parse_series_csv("time,value\n1,2\n").is_err());
    assert!(parse_series_csv("t,norm\n1;2\n").is_err());
    assert!(parse_series_csv("t,norm\n2,1\n1,1\n").is_err());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = ExperimentConfig::from_toml_str(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&cfg, Kind::FreeDecay, None).unwrap();
    let rb = run_experiment(&cfg, Kind::FreeDecay, None).unwrap();
    ra.write(a.path()).unwrap();
    rb.write(b.path()).unwrap();
    for f in ["free_norm.csv", "free_decay.json", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("free_decay.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], cfg.hash());
    assert!(json["series"]["free_norm"]["fitted_exponent"].is_number());
}

#[test]
fn cli_exit_codes_follow_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("free.toml");
    fs::write(&cfg, SMALL).unwrap();

    let out = dir.path().join("nonsingularity");
    let st = bin().args(["nonsingularity", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("nonsingularity.json")).unwrap()).unwrap();
    assert_eq!(json["results"]["verdict"], "SINGULAR");
    assert_eq!(json["pass"], true);

    // V = 0 has no gap eigenvalues, but the free flow of the boosted packet is its own scattering state
    let out = dir.path().join("scattering");
    let st = bin().args(["scattering", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));
}

#[test]
fn bad_configs_exit_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, SMALL.replace("sigma = 3.0", "sigma = 3.0\nomega_max = 9.0")).unwrap();
    let st = bin().args(["free_decay", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("omega_max"));

    fs::write(&cfg, SMALL.replace("sigma = 3.0", "sigma = 2.0")).unwrap();
    let st = bin().args(["free_decay", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    let st = bin().args(["no_such_kind", "--config"]).arg(&cfg).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn shipped_configs_parse() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            ExperimentConfig::load(&p).unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}
