//! Zeta function of a weight through regularized traces.
//!
//! For a normalized weight, `ψ(s) = ζ_a(−s) − 2ζ_R(−s) = Tr(Λ_a^s − |D_a|^s)`.
//! Two estimators are provided: diagonal reads of `Λ_a^s` in the φ basis, and
//! pairing of Fourier Galerkin eigenvalues with the disk spectrum.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{boundary_length, normalize, WeightFunction};
use crate::operators::{kernel_power, mode_power, PhiBasis};
use crate::riemann::riemann_zeta;
use crate::spectrum::{disk_eigenvalue, steklov_spectrum, trusted_count, PhiSpectralData};
use crate::sum::CompensatedSum;

/// Largest `s` accepted by [`psi_curve`].
pub const S_MAX: f64 = 6.0;
/// Relative size of the gap between orders `M_big` and `M_big/2` that is
/// reported as divergence.
pub const DIVERGENCE_TOL: f64 = 1e-4;
/// Threshold on `(Λ_a φ_n, φ_n) − n` for a growth witness.
pub const WITNESS_TOL: f64 = 1e-6;
/// Below this, `conformal_defect` counts as conformally trivial.
pub const TRIVIALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    PhiTrace,
    EigenPairing,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::PhiTrace => "phi_trace",
            Estimator::EigenPairing => "eigen_pairing",
        })
    }
}

/// `ψ(s)` with the difference against the half-order evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceValue {
    pub value: f64,
    pub gap: f64,
}

/// Cached decompositions for one normalized weight at one Galerkin order.
///
/// The φ-basis data at `M_big` and `M_big/2` is built eagerly; the Fourier
/// spectra used by eigen pairing are built on first use, at twice the order
/// so that the whole pairing window sits well inside the resolved range.
pub struct ZetaEngine {
    weight: WeightFunction,
    m_big: usize,
    phi: PhiSpectralData,
    phi_half: PhiSpectralData,
    pairing: OnceLock<Result<Vec<f64>>>,
    pairing_half: OnceLock<Result<Vec<f64>>>,
}

impl ZetaEngine {
    pub fn new(a: &WeightFunction, m_big: usize) -> Result<Self> {
        if m_big < 4 {
            return Err(Error::InvalidInput(format!("M_big = {m_big} is too small")));
        }
        let (phi, phi_half) = rayon::join(
            || PhiSpectralData::new(a, m_big),
            || PhiSpectralData::new(a, m_big / 2),
        );
        Ok(Self {
            weight: a.clone(),
            m_big,
            phi: phi?,
            phi_half: phi_half?,
            pairing: OnceLock::new(),
            pairing_half: OnceLock::new(),
        })
    }

    pub fn m_big(&self) -> usize {
        self.m_big
    }

    pub fn k_trust(&self) -> usize {
        trusted_count(self.m_big)
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn phi(&self) -> &PhiSpectralData {
        &self.phi
    }

    fn spectrum_at(&self, half: bool) -> Result<&[f64]> {
        let (cell, order) = if half {
            (&self.pairing_half, self.m_big)
        } else {
            (&self.pairing, 2 * self.m_big)
        };
        cell.get_or_init(|| steklov_spectrum(&self.weight, order).map(|sp| sp.values().to_vec()))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(Clone::clone)
    }

    /// Galerkin eigenvalues used by eigen pairing at `M_big`.
    pub fn pairing_spectrum(&self) -> Result<&[f64]> {
        self.spectrum_at(false)
    }

    fn phi_sum(data: &PhiSpectralData, s: f64, k: usize) -> Result<f64> {
        Ok(data
            .trace_terms(s, k)?
            .into_iter()
            .map(|(_, t)| t)
            .collect::<CompensatedSum>()
            .value())
    }

    fn pair_sum(values: &[f64], s: f64, k: usize) -> f64 {
        (1..=k.min(values.len() - 1))
            .map(|n| kernel_power(values[n], s) - disk_eigenvalue(n).powf(s))
            .collect::<CompensatedSum>()
            .value()
    }

    fn raw(&self, s: f64, estimator: Estimator) -> Result<TraceValue> {
        let k = self.k_trust();
        let (full, half) = match estimator {
            Estimator::PhiTrace => (
                Self::phi_sum(&self.phi, s, k)?,
                Self::phi_sum(&self.phi_half, s, k / 2)?,
            ),
            Estimator::EigenPairing => (
                Self::pair_sum(self.spectrum_at(false)?, s, k),
                Self::pair_sum(self.spectrum_at(true)?, s, k / 2),
            ),
        };
        Ok(TraceValue {
            value: full,
            gap: (full - half).abs(),
        })
    }

    /// `ψ(s)` with its convergence gap; fails when the gap is not small
    /// against `1 + |ψ|`.
    pub fn trace(&self, s: f64, estimator: Estimator) -> Result<TraceValue> {
        if !(s >= 0.0) {
            return Err(Error::UnsupportedArgument(s));
        }
        let tv = self.raw(s, estimator)?;
        if tv.gap > DIVERGENCE_TOL * (1.0 + tv.value.abs()) {
            return Err(Error::EstimatorDivergence {
                value: tv.value,
                gap: tv.gap,
            });
        }
        Ok(tv)
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(self.trace(s, Estimator::PhiTrace)?.value)
    }

    /// `Σ_{|n|≤K} |n|^{s−t} [(Λ_a^t φ_n, φ_n) − |n|^t]`.
    pub fn weighted_trace(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self
            .phi
            .trace_terms(t, self.k_trust())?
            .into_iter()
            .map(|(n, term)| if n == 0 { 0.0 } else { mode_power(n, s - t) * term })
            .collect::<CompensatedSum>()
            .value())
    }

    /// Largest per-mode term `|(Λ_a^s φ_n, φ_n) − |n|^s|` over the outer
    /// quarter of the trusted window, against the rounding floor there.
    pub fn edge_terms(&self, s: f64) -> Result<(f64, f64)> {
        let k = self.k_trust();
        let terms = self.phi.trace_terms(s, k)?;
        let edge = (3 * k / 4) as i64;
        let worst = terms
            .iter()
            .filter(|(n, _)| n.abs() >= edge)
            .map(|(_, t)| t.abs())
            .fold(0.0, f64::max);
        let top = self.phi.eigen().values().last().copied().unwrap_or(1.0).max(1.0);
        let floor = (self.phi.order() as f64) * f64::EPSILON * top.powf(s);
        Ok((worst, floor))
    }
}

/// `ψ(s)` for a normalized weight.
pub fn trace_r(a: &WeightFunction, s: f64, m_big: usize, estimator: Estimator) -> Result<TraceValue> {
    ZetaEngine::new(a, m_big)?.trace(s, estimator)
}

/// `ζ_a(x)` for `x > 1` or `x ≤ 0`.
///
/// For `x ≤ 0` the value is `(L/2π)^x [ψ_ã(−x) + 2ζ_R(x)]` with `ã` the
/// normalized weight. For `x > 1` the trusted eigenvalues are summed directly
/// and the remainder is modelled by the disk spectrum scaled by `2π/L`.
pub fn zeta_a(a: &WeightFunction, x: f64, m_big: usize) -> Result<f64> {
    if x > 0.0 && x <= 1.0 || x.is_nan() {
        return Err(Error::UnsupportedArgument(x));
    }
    let length = boundary_length(a)?;
    let ratio = length / (2.0 * PI);
    if x <= 0.0 {
        let psi = ZetaEngine::new(&normalize(a)?, m_big)?.psi(-x)?;
        return Ok(ratio.powf(x) * (psi + 2.0 * riemann_zeta(x)?));
    }
    let sp = steklov_spectrum(a, m_big)?;
    let k = sp.k_trust();
    let mut acc = CompensatedSum::new();
    let mut disk_head = CompensatedSum::new();
    for n in 1..k.min(sp.values().len()) {
        acc.add(sp.values()[n].powf(-x));
        disk_head.add(disk_eigenvalue(n).powf(-x));
    }
    let tail = ratio.powf(x) * (2.0 * riemann_zeta(x)? - disk_head.value());
    Ok(acc.value() + tail)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaCurve {
    pub weight: String,
    pub s_grid: Vec<f64>,
    /// Primary curve.
    pub psi: Vec<f64>,
    pub estimator: Estimator,
    /// Cross-check curve from the other estimator.
    pub psi_pair: Vec<f64>,
    pub m_big: usize,
    pub k_trust: usize,
    pub convergence_gap: Vec<f64>,
    /// `ψ(s) ≥ −slack` for all grid points with `s ≥ 1`.
    pub nonneg_on_s_ge_1: bool,
    pub monotone: bool,
    pub estimators_agree: bool,
}

/// Slack for the sign and monotonicity flags.
pub const CURVE_SLACK: f64 = 1e-9;
/// Relative tolerance for estimator agreement.
pub const AGREEMENT_TOL: f64 = 1e-6;

impl ZetaCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["s", "psi_phi", "psi_pair", "gap"]).map_err(io)?;
        for i in 0..self.s_grid.len() {
            w.write_record([
                self.s_grid[i].to_string(),
                self.psi[i].to_string(),
                self.psi_pair[i].to_string(),
                self.convergence_gap[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serialization")
    }
}

/// `ψ` on a grid from both estimators. The flags use the φ-trace curve.
pub fn psi_curve(a: &WeightFunction, s_grid: &[f64], m_big: usize) -> Result<ZetaCurve> {
    psi_curve_with(&ZetaEngine::new(a, m_big)?, s_grid)
}

pub fn psi_curve_with(engine: &ZetaEngine, s_grid: &[f64]) -> Result<ZetaCurve> {
    if let Some(&bad) = s_grid.iter().find(|&&s| !(0.0..=S_MAX).contains(&s)) {
        return Err(Error::UnsupportedArgument(bad));
    }
    if s_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("s grid must be sorted".into()));
    }
    // warm the lazily built spectra before fanning out
    engine.pairing_spectrum()?;
    let points: Vec<(TraceValue, TraceValue)> = s_grid
        .par_iter()
        .map(|&s| {
            Ok((
                engine.trace(s, Estimator::PhiTrace)?,
                engine.trace(s, Estimator::EigenPairing)?,
            ))
        })
        .collect::<Result<_>>()?;
    let psi: Vec<f64> = points.iter().map(|p| p.0.value).collect();
    let psi_pair: Vec<f64> = points.iter().map(|p| p.1.value).collect();
    let nonneg = s_grid
        .iter()
        .zip(&psi)
        .all(|(&s, &p)| s < 1.0 || p >= -CURVE_SLACK);
    let monotone = psi.windows(2).all(|w| w[1] >= w[0] - CURVE_SLACK);
    let agree = psi
        .iter()
        .zip(&psi_pair)
        .all(|(x, y)| (x - y).abs() <= AGREEMENT_TOL * (1.0 + x.abs()));
    Ok(ZetaCurve {
        weight: engine.weight().meta().to_string(),
        s_grid: s_grid.to_vec(),
        psi,
        estimator: Estimator::PhiTrace,
        psi_pair,
        m_big: engine.m_big(),
        k_trust: engine.k_trust(),
        convergence_gap: points.iter().map(|p| p.0.gap).collect(),
        nonneg_on_s_ge_1: nonneg,
        monotone,
        estimators_agree: agree,
    })
}

/// `(ψ(t), Tr[|D_a|^{s−t}(Λ_a^t − |D_a|^t)], ψ(s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl Sandwich {
    /// Both inequalities, each within `tol·(1 + |middle|)`.
    pub fn ordered(&self, tol: f64) -> bool {
        let slack = tol * (1.0 + self.middle.abs());
        self.upper >= self.middle - slack && self.middle >= self.lower - slack
    }
}

pub fn sandwich_check(a: &WeightFunction, t: f64, s: f64, m_big: usize) -> Result<Sandwich> {
    sandwich_with(&ZetaEngine::new(a, m_big)?, t, s)
}

pub fn sandwich_with(engine: &ZetaEngine, t: f64, s: f64) -> Result<Sandwich> {
    if !(t >= 1.0 && s >= t) {
        return Err(Error::InvalidInput(format!("need 1 ≤ t ≤ s, got t={t}, s={s}")));
    }
    Ok(Sandwich {
        lower: engine.psi(t)?,
        middle: engine.weighted_trace(t, s)?,
        upper: engine.psi(s)?,
    })
}

/// `(Λ_a φ_1, φ_1) − 1`, zero exactly for weights conformally equivalent to `1`.
pub fn conformal_defect(a: &WeightFunction) -> Result<f64> {
    Ok(PhiBasis::new(a, 1)?.lambda_matrix().get(1, 1).re - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthCertificate {
    /// Witness mode `n₀ ≥ 2`.
    pub n0: i64,
    /// `(Λ_a φ_{n₀}, φ_{n₀}) − n₀`.
    pub defect: f64,
    /// `ln n₀`.
    pub alpha: f64,
    pub t_grid: Vec<f64>,
    pub psi: Vec<f64>,
    /// `C_t = (Λ_a^t φ_{n₀}, φ_{n₀}) − n₀^t`.
    pub c_t: Vec<f64>,
    /// `min_t [C_t − n₀^{t−1}·defect]`.
    pub lower_bound_margin: f64,
    /// `min_{t≤s} [ψ(s) − ψ(t) − C_t(n₀^{s−t} − 1)]`.
    pub increment_margin: f64,
}

impl GrowthCertificate {
    pub fn verified(&self, tol_lower: f64, tol_increment: f64) -> bool {
        self.lower_bound_margin >= -tol_lower && self.increment_margin >= -tol_increment
    }
}

pub fn growth_certificate(a: &WeightFunction, t_grid: &[f64], m_big: usize) -> Result<GrowthCertificate> {
    growth_certificate_with(&ZetaEngine::new(a, m_big)?, t_grid)
}

pub fn growth_certificate_with(engine: &ZetaEngine, t_grid: &[f64]) -> Result<GrowthCertificate> {
    if t_grid.iter().any(|&t| !(t >= 1.0 && t <= S_MAX)) {
        return Err(Error::InvalidInput("t grid must lie in [1, s_max]".into()));
    }
    let k = engine.k_trust() as i64;
    let phi = engine.phi();
    let n0 = (2..=k)
        .find(|&n| phi.rayleigh_one(n) - n as f64 > WITNESS_TOL)
        .ok_or(Error::NoWitness { searched: k as usize })?;
    let defect = phi.rayleigh_one(n0) - n0 as f64;
    let nf = n0 as f64;
    let psi = t_grid.iter().map(|&t| engine.psi(t)).collect::<Result<Vec<_>>>()?;
    let c_t = t_grid
        .iter()
        .map(|&t| Ok(phi.rayleigh(n0, t)? - nf.powf(t)))
        .collect::<Result<Vec<_>>>()?;
    let lower_bound_margin = t_grid
        .iter()
        .zip(&c_t)
        .map(|(&t, &c)| c - nf.powf(t - 1.0) * defect)
        .fold(f64::INFINITY, f64::min);
    let mut increment_margin = f64::INFINITY;
    for (i, &t) in t_grid.iter().enumerate() {
        for (j, &s) in t_grid.iter().enumerate() {
            if s >= t {
                let m = psi[j] - psi[i] - c_t[i] * (nf.powf(s - t) - 1.0);
                increment_margin = increment_margin.min(m);
            }
        }
    }
    Ok(GrowthCertificate {
        n0,
        defect,
        alpha: nf.ln(),
        t_grid: t_grid.to_vec(),
        psi,
        c_t,
        lower_bound_margin,
        increment_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::FourierSeries;
    use num_complex::Complex64;

    fn moebius_half() -> WeightFunction {
        WeightFunction::new(
            FourierSeries::from_modes([
                (0, Complex64::new(5.0 / 3.0, 0.0)),
                (1, Complex64::new(-2.0 / 3.0, 0.0)),
                (-1, Complex64::new(-2.0 / 3.0, 0.0)),
            ]),
            "moebius(0.5)",
        )
        .unwrap()
    }

    fn cos2() -> WeightFunction {
        normalize(&WeightFunction::cosine(0.5, 2).unwrap()).unwrap()
    }

    #[test]
    fn disk_traces_vanish() {
        let e = ZetaEngine::new(&WeightFunction::constant(1.0).unwrap(), 32).unwrap();
        assert_eq!(e.phi().active_radius(), 0);
        for s in [0.0, 0.5, 1.0, 2.5, 5.0] {
            for est in [Estimator::PhiTrace, Estimator::EigenPairing] {
                let v = e.trace(s, est).unwrap().value;
                assert!(v.abs() < 1e-9, "{s} {est} {v}");
            }
        }
    }

    #[test]
    fn moebius_traces_vanish() {
        let e = ZetaEngine::new(&moebius_half(), 64).unwrap();
        for s in [0.0, 1.0, 2.0, 3.0] {
            let v = e.trace(s, Estimator::PhiTrace).unwrap().value;
            assert!(v.abs() < 1e-7, "{s}: {v}");
        }
        assert!(conformal_defect(&moebius_half()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn psi_at_even_integers_matches_edward_value() {
        // for normalized ã = (2/√3)(1 + ½cos 2θ), ψ(2) = Z_1(ã) = (4/3)(1/4)
        let e = ZetaEngine::new(&cos2(), 64).unwrap();
        let p = e.psi(2.0).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-9, "{p}");
        let q = e.trace(2.0, Estimator::EigenPairing).unwrap().value;
        assert!((q - 1.0 / 3.0).abs() < 1e-9, "{q}");
        assert!(e.psi(0.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn not_normalized_rejected() {
        assert!(matches!(
            ZetaEngine::new(&WeightFunction::constant(2.0).unwrap(), 16),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn zeta_a_examples() {
        let one = WeightFunction::constant(1.0).unwrap();
        assert!(zeta_a(&one, -2.0, 32).unwrap().abs() < 1e-12);
        let z2 = zeta_a(&one, 2.0, 32).unwrap();
        assert!((z2 - PI * PI / 3.0).abs() < 1e-6);
        let two = WeightFunction::constant(2.0).unwrap();
        assert!((zeta_a(&two, -1.0, 32).unwrap() + 1.0 / 3.0).abs() < 1e-8);
        assert!(zeta_a(&one, 0.0, 16).unwrap() + 1.0 < 1e-12);
        assert!(matches!(zeta_a(&one, 0.5, 16), Err(Error::UnsupportedArgument(_))));
        // Z_1 of the unnormalized weight is 1/4
        let a = WeightFunction::cosine(0.5, 2).unwrap();
        assert!((zeta_a(&a, -2.0, 64).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn zeta_a_scaling() {
        let a = WeightFunction::cosine(0.5, 2).unwrap();
        for x in [-1.0, -2.5, 3.0] {
            let base = zeta_a(&a, x, 48).unwrap();
            let scaled = zeta_a(&a.scaled(1.7).unwrap(), x, 48).unwrap();
            assert!((scaled - 1.7f64.powf(-x) * base).abs() < 1e-8 * (1.0 + base.abs()));
        }
    }

    #[test]
    fn curve_for_cosine_weight() {
        let grid: Vec<f64> = (0..=8).map(|i| 0.5 * i as f64).collect();
        let c = psi_curve(&cos2(), &grid, 128).unwrap();
        assert!(c.nonneg_on_s_ge_1 && c.monotone && c.estimators_agree, "{c:?}");
        assert!(c.psi[2] > 0.0);
        assert!(c.psi.windows(2).skip(2).all(|w| w[1] > w[0]));
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 10);
        assert!(psi_curve(&cos2(), &[7.0], 16).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let e = ZetaEngine::new(&cos2(), 64).unwrap();
        let sw = sandwich_with(&e, 1.0, 3.0).unwrap();
        assert!(sw.ordered(1e-8));
        assert!(sw.upper > sw.middle && sw.middle > sw.lower, "{sw:?}");
        let eq = sandwich_with(&e, 2.0, 2.0).unwrap();
        assert!((eq.middle - eq.lower).abs() < 1e-10);
        let one = ZetaEngine::new(&WeightFunction::constant(1.0).unwrap(), 16).unwrap();
        let z = sandwich_with(&one, 1.0, 2.0).unwrap();
        assert!(z.lower.abs() < 1e-12 && z.middle.abs() < 1e-12 && z.upper.abs() < 1e-12);
        assert!(sandwich_with(&e, 0.5, 2.0).is_err());
    }

    #[test]
    fn growth_certificate_examples() {
        let grid = [1.0, 2.0, 3.0, 4.0];
        let g = growth_certificate(&cos2(), &grid, 64).unwrap();
        // a π-periodic weight restricted to even modes is the pullback of
        // 1 + ½cos θ by z², which is conformally trivial, so n₀ is odd
        assert_eq!(g.n0, 3);
        assert!(g.defect > 0.0);
        assert!(g.verified(1e-9, 1e-8), "{g:?}");
        assert!(matches!(
            growth_certificate(&moebius_half(), &grid, 32),
            Err(Error::NoWitness { .. })
        ));
    }

    #[test]
    fn conformal_defect_of_cosine_weight_is_positive() {
        assert!(conformal_defect(&cos2()).unwrap() > 1e-3);
        assert!(conformal_defect(&WeightFunction::constant(1.0).unwrap()).unwrap().abs() < 1e-14);
    }
}
