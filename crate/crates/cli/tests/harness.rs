use std::process::Command;

use steklov_cli::{
    replay_bundle, run_scan, run_verify, write_bundle, Bundle, ExperimentConfig, Family, HarnessError,
    Status,
};
use steklov_core::random::random_weight_detailed;
use steklov_core::zeta_invariant;

fn small_scan(dir: &std::path::Path, sigma: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::random_suite(11, 5, dir);
    cfg.m = 4;
    cfg.m_big = 64;
    cfg.k_list = vec![1, 2];
    cfg.s_grid = vec![1.0, 2.0];
    cfg.explore_s = vec![0.0, 0.5];
    cfg.family = Family::Random {
        sigma,
        rho: 0.5,
        count: 5,
    };
    cfg
}

#[test]
fn scan_is_deterministic_and_seed_ordered() {
    let tmp = tempfile::tempdir().unwrap();
    let (r1, rows1) = run_scan(&small_scan(&tmp.path().join("a"), 0.3)).unwrap();
    let (r2, rows2) = run_scan(&small_scan(&tmp.path().join("b"), 0.3)).unwrap();
    assert_eq!(rows1, rows2);
    let margins = |r: &steklov_cli::ResultRecord| -> Vec<(String, Option<u64>)> {
        r.checks
            .iter()
            .map(|c| (c.name.clone(), c.margin.map(f64::to_bits)))
            .collect()
    };
    assert_eq!(margins(&r1), margins(&r2));
    assert_eq!(r1.config_hash, r2.config_hash);
    let seeds: Vec<u64> = rows1.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, [11, 11, 12, 12, 13, 13, 14, 14, 15, 15]);
    assert!(tmp.path().join("a/scan.csv").is_file());
    assert!(tmp.path().join("a/scan_psi.csv").is_file());
}

#[test]
fn scan_of_the_constant_family_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let (record, rows) = run_scan(&small_scan(tmp.path(), 0.0)).unwrap();
    assert!(rows.iter().all(|r| r.z_k == 0.0 && r.z_k_imag == 0.0));
    assert_eq!(record.min_margin("psi_min"), Some(0.0));
    assert_eq!(record.status(), Status::Pass);
}

#[test]
fn budget_overrun_is_skipped_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_scan(tmp.path(), 0.3);
    cfg.budget = 10;
    let (record, rows) = run_scan(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.k == 1));
    assert!(record.named("z2").all(|c| c.status == Status::Warn));
    assert_eq!(record.exit_code(), 0);
}

#[test]
fn bundles_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let rw = random_weight_detailed(5, 6, 0.3, 0.7).unwrap();
    let z = zeta_invariant(&rw.weight, 2).unwrap();
    let bundle = Bundle {
        seed: 5,
        m: 6,
        sigma: 0.3,
        rho: 0.7,
        k: 2,
        budget: 1_000_000,
        z_k: z.re,
        z_k_imag: z.im,
        weight_file: "weight.json".into(),
    };
    let dir = write_bundle(&tmp.path().join("b"), &bundle, &rw.weight).unwrap();
    let (back, recomputed) = replay_bundle(&dir).unwrap();
    assert_eq!(back, bundle);
    assert!((recomputed - z.re).abs() <= 1e-12 * (1.0 + z.re.abs()));

    let other = random_weight_detailed(6, 6, 0.3, 0.7).unwrap().weight;
    std::fs::write(dir.join("weight.json"), other.to_json()).unwrap();
    assert!(replay_bundle(&dir).is_err());
}

fn gallery_cfg(dir: &std::path::Path, name: &str, m_big: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::random_suite(0, 0, dir);
    cfg.m_big = m_big;
    cfg.family = Family::Gallery {
        names: vec![name.into()],
    };
    cfg.cross_check_s = vec![1.0, 2.0];
    cfg
}

#[test]
fn verify_disk_passes_with_zero_margins() {
    let tmp = tempfile::tempdir().unwrap();
    let record = run_verify(&gallery_cfg(tmp.path(), "disk", 32)).unwrap();
    assert_eq!(record.status(), Status::Pass, "{}", record.to_json());
    for name in ["weinstock", "psi_zero", "psi_nonnegative", "psi_monotone", "rayleigh_bound", "z1_edward"] {
        let m = record.min_margin(name).unwrap();
        assert!(m.abs() < 1e-12, "{name}: {m}");
    }
    assert!(record.named("trivial_traces").next().is_some());
    assert!(tmp.path().join("verify.json").is_file());
    assert!(record.artifacts.iter().all(|p| p.is_file()));
}

#[test]
fn verify_moebius_runs_the_triviality_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let record = run_verify(&gallery_cfg(tmp.path(), "moebius(0.5, 0)", 128)).unwrap();
    for name in ["trivial_spectrum", "trivial_traces", "z1_trivial", "z2_trivial"] {
        let c = record.named(name).next().unwrap_or_else(|| panic!("{name} missing"));
        assert_eq!(c.status, Status::Pass, "{name}: {}", c.detail);
    }
    assert_eq!(record.exit_code(), 0, "{}", record.to_json());
}

#[test]
fn verify_random_weight_is_nonnegative() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::random_suite(1, 1, tmp.path());
    cfg.m_big = 64;
    let record = run_verify(&cfg).unwrap();
    let c = record.named("psi_nonnegative").next().unwrap();
    assert_eq!(c.status, Status::Pass);
    assert!(record.named("growth_increment").next().is_some());
}

#[test]
fn invalid_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::random_suite(1, 1, tmp.path());
    cfg.s_grid = vec![3.0, 1.0];
    assert!(matches!(run_verify(&cfg), Err(HarnessError::Config(_))));
    cfg.s_grid = vec![1.0];
    cfg.family = Family::Gallery { names: vec![] };
    assert!(matches!(run_scan(&cfg), Err(HarnessError::Config(_))));
}

fn steklov(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .env("STEKLOV_WORKERS", "1")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = steklov(&["gallery"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("perturbed_disk(0.1, 2)"));

    let out = steklov(&["spectrum", "--weight", "disk", "--M-big", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,lambda,reference,delta"));

    assert_eq!(steklov(&["spectrum", "--weight", "square"]).status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1}"#).unwrap();
    assert_eq!(steklov(&["verify", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let dir = tmp.path().join("verify");
    let out = steklov(&["verify", "--weight", "disk", "--M-big", "32", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("verify.json").is_file());
}

#[test]
fn cli_weight_files_and_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let out = steklov(&["gallery", "cosine(0.5, 2)"]);
    assert_eq!(out.status.code(), Some(0));
    let file = tmp.path().join("w.json");
    std::fs::write(&file, &out.stdout).unwrap();

    let out = steklov(&["invariants", "--weight", file.to_str().unwrap(), "--k", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let z1 = v[0]["Z_k"].as_f64().unwrap();
    assert!((z1 - 0.25).abs() < 1e-14, "{z1}");

    let psi = tmp.path().join("psi.csv");
    let out = steklov(&["zeta", "--weight", "disk", "--M-big", "16", "--s", "0,1,2", "--out", psi.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&psi).unwrap().lines().count(), 4);

    let out = steklov(&["zeta", "--weight", "disk", "--M-big", "16", "--x", "-1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Vec<(f64, f64)> = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v[0].1 + 1.0 / 6.0).abs() < 1e-12);
}
