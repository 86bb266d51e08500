//! Conjecture scans over seeded random weights, with counterexample bundles.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use steklov_core::invariants::zeta_invariant_series;
use steklov_core::random::random_weight_detailed;
use steklov_core::{estimate_residuals, normalize, Error, WeightFunction, ZetaEngine};

use crate::record::{Check, ResultRecord, Status};
use crate::{create_dir, with_workers, ExperimentConfig, Family, HarnessError};

/// A `Z_k` below `−COUNTEREXAMPLE_TOL` is bundled.
pub const COUNTEREXAMPLE_TOL: f64 = 1e-8;
pub const PSI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub seed: u64,
    pub k: usize,
    pub z_k: f64,
    pub z_k_imag: f64,
    pub ratio_cubic: Option<f64>,
    pub ratio_power: Option<f64>,
    pub ratio_power_of_weight: Option<f64>,
    /// Factor applied by the positivity repair, if it fired.
    pub repair: Option<f64>,
}

/// Everything needed to recompute a reported `Z_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma: f64,
    pub rho: f64,
    pub k: usize,
    pub budget: u64,
    pub z_k: f64,
    pub z_k_imag: f64,
    pub weight_file: String,
}

/// Writes `bundle.json` and `weight.json` into `dir`.
pub fn write_bundle(dir: &Path, bundle: &Bundle, a: &WeightFunction) -> Result<PathBuf, HarnessError> {
    create_dir(dir)?;
    let wpath = dir.join(&bundle.weight_file);
    std::fs::write(&wpath, a.to_json()).map_err(|e| HarnessError::io(&wpath, e))?;
    let bpath = dir.join("bundle.json");
    let text = serde_json::to_string_pretty(bundle).expect("bundle serialization");
    std::fs::write(&bpath, text).map_err(|e| HarnessError::io(&bpath, e))?;
    Ok(dir.to_path_buf())
}

/// Recomputes `Z_k` from a bundle directory. Returns the bundle and the
/// recomputed value; also confirms that the seed regenerates the stored weight.
pub fn replay_bundle(dir: &Path) -> Result<(Bundle, f64), HarnessError> {
    let bpath = dir.join("bundle.json");
    let text = std::fs::read_to_string(&bpath).map_err(|e| HarnessError::io(&bpath, e))?;
    let bundle: Bundle =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let wpath = dir.join(&bundle.weight_file);
    let wtext = std::fs::read_to_string(&wpath).map_err(|e| HarnessError::io(&wpath, e))?;
    let a = WeightFunction::from_json(&wtext)?;
    let regenerated = random_weight_detailed(bundle.seed, bundle.m, bundle.sigma, bundle.rho)?.weight;
    if regenerated.series() != a.series() {
        return Err(HarnessError::Config(format!(
            "seed {} does not regenerate the stored weight",
            bundle.seed
        )));
    }
    let z = zeta_invariant_series(a.series(), bundle.k, bundle.budget)?.value.re;
    Ok((bundle, z))
}

struct SeedResult {
    rows: Vec<ScanRow>,
    explore: Vec<(f64, f64)>,
    min_psi: Option<(f64, f64)>,
    checks: Vec<Check>,
    bundles: Vec<PathBuf>,
}

fn scan_seed(cfg: &ExperimentConfig, seed: u64, sigma: f64, rho: f64) -> SeedResult {
    let label = format!("seed={seed}");
    let mut out = SeedResult {
        rows: Vec::new(),
        explore: Vec::new(),
        min_psi: None,
        checks: Vec::new(),
        bundles: Vec::new(),
    };
    let rw = match random_weight_detailed(seed, cfg.m, sigma, rho) {
        Ok(rw) => rw,
        Err(e) => {
            out.checks.push(Check::error("weight", &label, e));
            return out;
        }
    };
    let a = &rw.weight;
    for &k in &cfg.k_list {
        match estimate_residuals(a, k, cfg.budget) {
            Ok(r) => {
                if r.z_k < -COUNTEREXAMPLE_TOL {
                    let bundle = Bundle {
                        seed,
                        m: cfg.m,
                        sigma,
                        rho,
                        k,
                        budget: cfg.budget,
                        z_k: r.z_k,
                        z_k_imag: r.z_k_imag,
                        weight_file: "weight.json".into(),
                    };
                    let dir = cfg.out_dir.join("counterexamples").join(format!("seed{seed}_k{k}"));
                    match write_bundle(&dir, &bundle, a) {
                        Ok(p) => out.bundles.push(p),
                        Err(e) => out.checks.push(Check::error("bundle", &label, e)),
                    }
                }
                out.rows.push(ScanRow {
                    seed,
                    k,
                    z_k: r.z_k,
                    z_k_imag: r.z_k_imag,
                    ratio_cubic: r.ratios.cubic,
                    ratio_power: r.ratios.power,
                    ratio_power_of_weight: r.ratios.power_of_weight,
                    repair: rw.repair,
                });
            }
            Err(e @ Error::BudgetExceeded { .. }) => {
                out.checks
                    .push(Check::with_status(&format!("z{k}"), &label, Status::Warn, e.to_string()));
            }
            Err(e) => out.checks.push(Check::error(&format!("z{k}"), &label, e)),
        }
    }
    if cfg.s_grid.is_empty() && cfg.explore_s.is_empty() {
        return out;
    }
    let engine = match normalize(a).and_then(|n| ZetaEngine::new(&n, cfg.m_big)) {
        Ok(e) => e,
        Err(e) => {
            out.checks.push(Check::error("zeta_engine", &label, e));
            return out;
        }
    };
    for &s in cfg.s_grid.iter().filter(|&&s| s >= 1.0) {
        match engine.psi(s) {
            Ok(p) => {
                if out.min_psi.is_none_or(|m| p < m.1) {
                    out.min_psi = Some((s, p));
                }
            }
            Err(e) => out.checks.push(Check::error("psi", &label, format!("s = {s}: {e}"))),
        }
    }
    for &s in &cfg.explore_s {
        match engine.psi(s) {
            Ok(p) => out.explore.push((s, p)),
            // exploratory only
            Err(e) => out.checks.push(Check::with_status(
                "psi_explore",
                &label,
                Status::Warn,
                format!("s = {s}: {e}"),
            )),
        }
    }
    out
}

fn write_rows(path: &Path, rows: &[ScanRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_explore(path: &Path, seeds: &[(u64, &[(f64, f64)])]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e))?;
    w.write_record(["seed", "s", "psi"]).map_err(|e| HarnessError::io(path, e))?;
    for (seed, pts) in seeds {
        for (s, p) in pts.iter() {
            w.write_record([seed.to_string(), s.to_string(), p.to_string()])
                .map_err(|e| HarnessError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Scans the random family. Writes `scan.csv`, `scan_psi.csv` (exploratory
/// `ψ` samples), `scan.json`, and one bundle per `Z_k < −1e−8`.
pub fn run_scan(cfg: &ExperimentConfig) -> Result<(ResultRecord, Vec<ScanRow>), HarnessError> {
    cfg.validate()?;
    let Family::Random { sigma, rho, count } = cfg.family else {
        return Err(HarnessError::Config("scan needs a random family".into()));
    };
    let start = Instant::now();
    create_dir(&cfg.out_dir)?;
    let seeds: Vec<u64> = (0..count).map(|i| cfg.seed + i).collect();
    let results: Vec<SeedResult> =
        with_workers(|| seeds.par_iter().map(|&s| scan_seed(cfg, s, sigma, rho)).collect())?;

    let mut record = ResultRecord {
        command: "scan".into(),
        config_hash: cfg.hash(),
        checks: Vec::new(),
        artifacts: Vec::new(),
        wall_clock_s: 0.0,
    };
    let rows: Vec<ScanRow> = results.iter().flat_map(|r| r.rows.clone()).collect();
    for r in &results {
        record.checks.extend(r.checks.iter().cloned());
    }
    let bundles: Vec<PathBuf> = results.iter().flat_map(|r| r.bundles.clone()).collect();
    for &k in &cfg.k_list {
        let worst = rows
            .iter()
            .filter(|r| r.k == k)
            .min_by(|x, y| x.z_k.total_cmp(&y.z_k));
        if let Some(w) = worst {
            let detail = format!("min at seed {}; {} bundle(s)", w.seed, bundles.len());
            record
                .checks
                .push(Check::margin(&format!("z{k}_min"), "scan", w.z_k, COUNTEREXAMPLE_TOL, detail).soft());
        }
    }
    let min_psi = seeds
        .iter()
        .zip(&results)
        .filter_map(|(&seed, r)| r.min_psi.map(|(s, p)| (seed, s, p)))
        .min_by(|x, y| x.2.total_cmp(&y.2));
    if let Some((seed, s, p)) = min_psi {
        record.checks.push(Check::margin(
            "psi_min",
            "scan",
            p,
            PSI_TOL,
            format!("min at seed {seed}, s = {s}"),
        ));
    }
    let csv_path = cfg.out_dir.join("scan.csv");
    write_rows(&csv_path, &rows)?;
    record.artifacts.push(csv_path);
    if !cfg.explore_s.is_empty() {
        let path = cfg.out_dir.join("scan_psi.csv");
        let pts: Vec<(u64, &[(f64, f64)])> = seeds
            .iter()
            .zip(&results)
            .map(|(&s, r)| (s, r.explore.as_slice()))
            .collect();
        write_explore(&path, &pts)?;
        record.artifacts.push(path);
    }
    record.artifacts.extend(bundles);
    let path = cfg.out_dir.join("scan.json");
    record.artifacts.push(path.clone());
    record.wall_clock_s = start.elapsed().as_secs_f64();
    record.write(&path)?;
    Ok((record, rows))
}
