//! The verification battery.
//!
//! Every check has a fixed tolerance. Inequalities that are theorems fail
//! when violated. Empirical statements (asymptotic decay, the sign of `Z_k`
//! for `k ≥ 2`, agreement of lattice sums with traces at the top of the
//! `s` range) only warn.

use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use steklov_core::zeta::{sandwich_with, AGREEMENT_TOL, S_MAX, TRIVIALITY_TOL};
use steklov_core::{
    asymptotic_residuals, classical_inequality_report, conformal_defect, estimate_residuals,
    normalize, steklov_spectrum, zeta::growth_certificate_with, Error, Estimator, SteklovSpectrum,
    WeightFunction, ZetaEngine,
};

use crate::record::{Check, ResultRecord, Status};
use crate::{create_dir, with_workers, ExperimentConfig, HarnessError};

pub const INEQUALITY_TOL: f64 = 1e-9;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const INCREMENT_TOL: f64 = 1e-8;
/// Trusted spectrum of a conformally trivial weight against the disk.
pub const TRIVIAL_SPECTRUM_TOL: f64 = 1e-6;
pub const TRIVIAL_TRACE_TOL: f64 = 1e-7;
pub const TRIVIAL_INVARIANT_TOL: f64 = 1e-8;
pub const EDWARD_RTOL: f64 = 1e-12;
/// Absolute floor for the Edward comparison when `Z_1` itself is rounding noise.
pub const EDWARD_FLOOR: f64 = 1e-15;
pub const ASYMPTOTIC_FROM: usize = 30;
pub const ASYMPTOTIC_TOL: f64 = 1e-8;
pub const CONJECTURE_TOL: f64 = 1e-8;
/// Rayleigh quotients are checked on `|n| ≤ RAYLEIGH_MODES`.
pub const RAYLEIGH_MODES: i64 = 32;
const CHAIN_POWERS: [f64; 2] = [2.0, 3.0];
const TRIVIAL_TRACE_S: [f64; 3] = [1.0, 2.0, 3.0];

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::io(path, e)
}

fn write_spectrum(sp: &SteklovSpectrum, path: &Path) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    sp.write_csv(f)?;
    Ok(())
}

fn write_curve(s: &[f64], psi: &[(f64, f64)], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["s", "psi", "gap"]).map_err(|e| io_err(path, e))?;
    for (s, (v, g)) in s.iter().zip(psi) {
        w.write_record([s.to_string(), v.to_string(), g.to_string()])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

struct Battery<'a> {
    label: &'a str,
    cfg: &'a ExperimentConfig,
    checks: Vec<Check>,
}

impl Battery<'_> {
    fn margin(&mut self, name: &str, margin: f64, tol: f64, detail: impl Into<String>) {
        self.checks.push(Check::margin(name, self.label, margin, tol, detail));
    }

    fn soft_margin(&mut self, name: &str, margin: f64, tol: f64, detail: impl Into<String>) {
        self.checks.push(Check::margin(name, self.label, margin, tol, detail).soft());
    }

    fn error(&mut self, name: &str, e: impl std::fmt::Display) {
        self.checks.push(Check::error(name, self.label, e));
    }

    fn spectrum(&mut self, a: &WeightFunction, trivial: bool) -> Option<SteklovSpectrum> {
        let sp = match steklov_spectrum(a, self.cfg.m_big) {
            Ok(sp) => sp,
            Err(e) => {
                self.error("spectrum", e);
                return None;
            }
        };
        match classical_inequality_report(&sp) {
            Ok(r) => {
                self.margin("weinstock", r.weinstock_margin, INEQUALITY_TOL, "2π/L − λ_1");
                self.margin(
                    "hersch_payne_schiffer",
                    r.hps_min_margin,
                    INEQUALITY_TOL,
                    format!("worst k = {}", r.hps_worst_k),
                );
                self.margin(
                    "product_bound",
                    r.product_min_margin,
                    INEQUALITY_TOL,
                    format!("worst (k, l) = {:?}", r.product_worst_pair),
                );
            }
            Err(e) => self.error("classical_inequalities", e),
        }
        let res = asymptotic_residuals(&sp);
        if sp.k_trust() > ASYMPTOTIC_FROM {
            let worst = res.max_abs_from(ASYMPTOTIC_FROM);
            self.soft_margin(
                "asymptotic_decay",
                ASYMPTOTIC_TOL - worst,
                0.0,
                format!(
                    "max |δ_n|, n ≥ {ASYMPTOTIC_FROM}: {worst:e}; log-log slope {:?}, log-linear slope {:?}",
                    res.log_log_slope, res.log_linear_slope
                ),
            );
        }
        if trivial {
            let reference = sp.reference();
            let worst = sp
                .trusted()
                .iter()
                .zip(&reference)
                .map(|(l, r)| (l - r).abs())
                .fold(0.0, f64::max);
            self.margin(
                "trivial_spectrum",
                TRIVIAL_SPECTRUM_TOL - worst,
                0.0,
                format!("max |λ_n − (2π/L)λ_n(disk)| = {worst:e}"),
            );
        }
        Some(sp)
    }

    fn zeta(&mut self, engine: &ZetaEngine, trivial: Option<f64>) -> Vec<(f64, f64)> {
        let cfg = self.cfg;
        let mut curve = Vec::with_capacity(cfg.s_grid.len());
        for &s in &cfg.s_grid {
            match engine.trace(s, Estimator::PhiTrace) {
                Ok(tv) => curve.push((tv.value, tv.gap)),
                Err(e) => {
                    self.error("psi", format!("s = {s}: {e}"));
                    return Vec::new();
                }
            }
        }
        match engine.psi(0.0) {
            Ok(p0) => self.margin("psi_zero", -p0.abs(), INEQUALITY_TOL, format!("ψ(0) = {p0:e}")),
            Err(e) => self.error("psi_zero", e),
        }
        let upper: Vec<(f64, f64)> = cfg
            .s_grid
            .iter()
            .zip(&curve)
            .filter(|(&s, _)| s >= 1.0)
            .map(|(&s, &(p, _))| (s, p))
            .collect();
        if let Some(&(s, p)) = upper.iter().min_by(|x, y| x.1.total_cmp(&y.1)) {
            self.margin("psi_nonnegative", p, INEQUALITY_TOL, format!("min at s = {s}"));
        }
        if let Some((s, inc)) = upper
            .windows(2)
            .map(|w| (w[1].0, w[1].1 - w[0].1))
            .min_by(|x, y| x.1.total_cmp(&y.1))
        {
            self.margin("psi_monotone", inc, INEQUALITY_TOL, format!("smallest step ends at s = {s}"));
        }
        self.sandwich(engine);
        self.rayleigh(engine);
        self.cross_check(engine, &curve);
        match trivial {
            Some(defect) => {
                let mut worst: f64 = 0.0;
                for s in TRIVIAL_TRACE_S {
                    match engine.psi(s) {
                        Ok(p) => worst = worst.max(p.abs()),
                        Err(e) => return self.bail("trivial_traces", e, curve),
                    }
                }
                self.margin(
                    "trivial_traces",
                    TRIVIAL_TRACE_TOL - worst,
                    0.0,
                    format!("max |ψ(s)|, s ∈ {{1,2,3}}: {worst:e}; defect {defect:e}"),
                );
            }
            None => self.growth(engine),
        }
        curve
    }

    fn bail(&mut self, name: &str, e: Error, curve: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        self.error(name, e);
        curve
    }

    fn sandwich(&mut self, engine: &ZetaEngine) {
        let mut worst: Option<(f64, f64, f64)> = None;
        for &(t, s) in &self.cfg.sandwich_pairs {
            match sandwich_with(engine, t, s) {
                Ok(sw) => {
                    let scale = 1.0 + sw.middle.abs();
                    let m = (sw.upper - sw.middle).min(sw.middle - sw.lower) / scale;
                    if worst.is_none_or(|w| m < w.0) {
                        worst = Some((m, t, s));
                    }
                }
                Err(e) => return self.error("sandwich", format!("(t, s) = ({t}, {s}): {e}")),
            }
        }
        if let Some((m, t, s)) = worst {
            self.margin(
                "sandwich",
                m,
                SANDWICH_TOL,
                format!("relative to 1 + |middle|, worst (t, s) = ({t}, {s})"),
            );
        }
    }

    fn rayleigh(&mut self, engine: &ZetaEngine) {
        let phi = engine.phi();
        let top = RAYLEIGH_MODES.min(phi.order() as i64);
        let excess1: Vec<f64> = (-top..=top)
            .map(|n| phi.rayleigh_one(n) - n.abs() as f64)
            .collect();
        let (n, worst) = (-top..=top)
            .zip(excess1.iter().copied())
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty mode range");
        self.margin("rayleigh_bound", worst, INEQUALITY_TOL, format!("worst n = {n}"));
        let mut chain = f64::INFINITY;
        let mut at = (0, 0.0);
        for s in CHAIN_POWERS {
            let excess = match phi.excess(s) {
                Ok(e) => e,
                Err(e) => return self.error("rayleigh_chain", e),
            };
            for (n, e1) in (-top..=top).zip(&excess1) {
                let nf = n.abs() as f64;
                // (Λ_a^s φ_n, φ_n) − |n|^{s−1}(Λ_a φ_n, φ_n), in excess form
                let m = excess[phi.lambda().index(n)] - nf.powf(s - 1.0) * e1;
                if m < chain {
                    chain = m;
                    at = (n, s);
                }
            }
        }
        self.margin(
            "rayleigh_chain",
            chain,
            INEQUALITY_TOL,
            format!("t = 1, worst (n, s) = {at:?}"),
        );
    }

    fn cross_check(&mut self, engine: &ZetaEngine, curve: &[(f64, f64)]) {
        let mut worst: Option<(f64, f64)> = None;
        for &s in &self.cfg.cross_check_s {
            let known = self
                .cfg
                .s_grid
                .iter()
                .position(|&x| x == s)
                .map(|i| curve[i].0);
            let phi = match known.map(Ok).unwrap_or_else(|| engine.psi(s)) {
                Ok(p) => p,
                Err(e) => return self.error("estimator_agreement", e),
            };
            let pair = match engine.trace(s, Estimator::EigenPairing) {
                Ok(tv) => tv.value,
                Err(e) => return self.error("estimator_agreement", e),
            };
            let m = AGREEMENT_TOL * (1.0 + phi.abs()) - (phi - pair).abs();
            if worst.is_none_or(|w| m < w.0) {
                worst = Some((m, s));
            }
        }
        if let Some((m, s)) = worst {
            self.margin("estimator_agreement", m, 0.0, format!("worst s = {s}"));
        }
    }

    fn growth(&mut self, engine: &ZetaEngine) {
        match growth_certificate_with(engine, &self.cfg.t_grid) {
            Ok(c) => {
                let detail = format!("n0 = {}, defect = {:e}", c.n0, c.defect);
                self.margin("growth_lower_bound", c.lower_bound_margin, INEQUALITY_TOL, detail.clone());
                self.margin("growth_increment", c.increment_margin, INCREMENT_TOL, detail);
            }
            Err(e @ Error::NoWitness { .. }) => {
                self.checks
                    .push(Check::with_status("growth_lower_bound", self.label, Status::Warn, e.to_string()));
            }
            Err(e) => self.error("growth_lower_bound", e),
        }
    }

    fn invariants(&mut self, a: &WeightFunction, engine: Option<&ZetaEngine>, trivial: bool) {
        let length = match steklov_core::boundary_length(a) {
            Ok(l) => l,
            Err(e) => return self.error("invariants", e),
        };
        for &k in &self.cfg.k_list {
            let name = format!("z{k}");
            let report = match estimate_residuals(a, k, self.cfg.budget) {
                Ok(r) => r,
                Err(e @ Error::BudgetExceeded { .. }) => {
                    self.checks.push(Check::with_status(&name, self.label, Status::Warn, e.to_string()));
                    continue;
                }
                Err(e) => {
                    self.error(&name, e);
                    continue;
                }
            };
            let z = report.z_k;
            self.soft_margin(&format!("{name}_nonnegative"), z, CONJECTURE_TOL, format!("Z_{k} = {z:e}"));
            if let Some(e) = report.edward {
                let tol = EDWARD_RTOL * e.abs() + EDWARD_FLOOR;
                self.margin("z1_edward", tol - (z - e).abs(), 0.0, format!("lattice {z:e}, closed form {e:e}"));
            }
            if trivial {
                self.margin(
                    &format!("{name}_trivial"),
                    TRIVIAL_INVARIANT_TOL - z.abs(),
                    0.0,
                    format!("Z_{k} = {z:e}"),
                );
            }
            let s = 2.0 * k as f64;
            if let (Some(engine), true) = (engine, s <= S_MAX) {
                // ζ_a(−2k) = (2π/L)^{2k} ψ_ã(2k), and ζ_R(−2k) = 0
                match engine.psi(s) {
                    Ok(p) => {
                        let from_trace = (2.0 * PI / length).powf(s) * p;
                        self.soft_margin(
                            &format!("{name}_vs_trace"),
                            AGREEMENT_TOL * (1.0 + z.abs()) - (z - from_trace).abs(),
                            0.0,
                            format!("lattice {z:e}, trace {from_trace:e}"),
                        );
                    }
                    Err(e) => self.error(&format!("{name}_vs_trace"), e),
                }
            }
        }
    }
}

/// The battery for one weight. Artifacts go to `dir` with names starting
/// with `stem`.
pub fn verify_weight(
    label: &str,
    a: &WeightFunction,
    cfg: &ExperimentConfig,
    dir: &Path,
    stem: &str,
) -> (Vec<Check>, Vec<PathBuf>) {
    let mut b = Battery {
        label,
        cfg,
        checks: Vec::new(),
    };
    let mut artifacts = Vec::new();
    let normalized = match normalize(a) {
        Ok(n) => n,
        Err(e) => {
            b.error("normalize", e);
            return (b.checks, artifacts);
        }
    };
    let defect = match conformal_defect(&normalized) {
        Ok(d) => {
            let trivial = d < TRIVIALITY_TOL;
            b.checks.push(Check::with_status(
                "conformal_defect",
                label,
                Status::Pass,
                format!("{d:e} ({})", if trivial { "trivial" } else { "nontrivial" }),
            ));
            Some(d)
        }
        Err(e) => {
            b.error("conformal_defect", e);
            None
        }
    };
    let trivial = defect.filter(|&d| d < TRIVIALITY_TOL);
    if let Some(sp) = b.spectrum(a, trivial.is_some()) {
        let path = dir.join(format!("{stem}_spectrum.csv"));
        match write_spectrum(&sp, &path) {
            Ok(()) => artifacts.push(path),
            Err(e) => b.error("artifact", e),
        }
    }
    let engine = match ZetaEngine::new(&normalized, cfg.m_big) {
        Ok(e) => Some(e),
        Err(e) => {
            b.error("zeta_engine", e);
            None
        }
    };
    if let Some(engine) = &engine {
        let curve = b.zeta(engine, trivial);
        if !curve.is_empty() {
            let path = dir.join(format!("{stem}_psi.csv"));
            match write_curve(&cfg.s_grid, &curve, &path) {
                Ok(()) => artifacts.push(path),
                Err(e) => b.error("artifact", e),
            }
        }
    }
    b.invariants(a, engine.as_ref(), trivial.is_some());
    let json = a.to_json();
    for c in b.checks.iter_mut().filter(|c| c.status == Status::Fail) {
        c.offending_weight = Some(json.clone());
    }
    (b.checks, artifacts)
}

/// Runs the battery over every weight of the family and writes
/// `verify.json` into the output directory.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<ResultRecord, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    create_dir(&cfg.out_dir)?;
    let weights = cfg.weights();
    let results: Vec<(Vec<Check>, Vec<PathBuf>)> = with_workers(|| {
        weights
            .par_iter()
            .enumerate()
            .map(|(i, (label, w))| match w {
                Ok(a) => verify_weight(label, a, cfg, &cfg.out_dir, &format!("w{i:03}")),
                Err(e) => (vec![Check::error("weight", label, e)], Vec::new()),
            })
            .collect()
    })?;
    let mut record = ResultRecord {
        command: "verify".into(),
        config_hash: cfg.hash(),
        checks: Vec::new(),
        artifacts: Vec::new(),
        wall_clock_s: 0.0,
    };
    for (checks, paths) in results {
        record.checks.extend(checks);
        record.artifacts.extend(paths);
    }
    let path = cfg.out_dir.join("verify.json");
    record.artifacts.push(path.clone());
    record.wall_clock_s = start.elapsed().as_secs_f64();
    record.write(&path)?;
    Ok(record)
}
