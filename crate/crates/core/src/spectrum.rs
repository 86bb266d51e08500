//! Steklov eigenvalues of `Λ_a`, Rayleigh quotients in the φ basis, and the
//! classical eigenvalue inequalities.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{boundary_length, WeightFunction};
use crate::operators::{
    assemble_fourier, mode_power, FourierOperator, HermitianEigen, OperatorMatrix, PhiBasis,
};

/// Default Galerkin order for spectral computations.
pub const DEFAULT_M_BIG: usize = 128;

/// `λ_n^0`, the `n`-th Steklov eigenvalue of the unit disk: `0, 1, 1, 2, 2, …`.
pub fn disk_eigenvalue(n: usize) -> f64 {
    n.div_ceil(2) as f64
}

/// Trusted window for a Galerkin order.
pub fn trusted_count(m_big: usize) -> usize {
    m_big / 2
}

#[derive(Debug, Clone, Serialize)]
pub struct SteklovSpectrum {
    values: Vec<f64>,
    k_trust: usize,
    length: f64,
    m_big: usize,
}

impl SteklovSpectrum {
    /// All Galerkin eigenvalues, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The first `k_trust` eigenvalues `λ_0 … λ_{k_trust−1}`.
    pub fn trusted(&self) -> &[f64] {
        &self.values[..self.k_trust.min(self.values.len())]
    }

    pub fn k_trust(&self) -> usize {
        self.k_trust
    }

    /// `L(a)`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn m_big(&self) -> usize {
        self.m_big
    }

    /// `2π/L`, the asymptotic scale of the spectrum.
    pub fn scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn reference(&self) -> Vec<f64> {
        (0..self.k_trust).map(disk_eigenvalue).collect()
    }

    /// CSV rows `n, lambda, reference, delta` over the trusted window, where
    /// `reference = (2π/L) λ_n^0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(["n", "lambda", "reference", "delta"]).map_err(io)?;
        for (n, &l) in self.trusted().iter().enumerate() {
            let r = self.scale() * disk_eigenvalue(n);
            w.write_record([n.to_string(), l.to_string(), r.to_string(), (l - r).to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Eigenvalues of the Fourier Galerkin matrix of `Λ_a` on `|n| ≤ M_big`.
pub fn steklov_spectrum(a: &WeightFunction, m_big: usize) -> Result<SteklovSpectrum> {
    let lambda = assemble_fourier(a, m_big, FourierOperator::LambdaA)?;
    let values = lambda.eigenvalues()?;
    Ok(SteklovSpectrum {
        values,
        k_trust: trusted_count(m_big),
        length: boundary_length(a)?,
        m_big,
    })
}

/// Entries of `Λ_a − |D_a|` in the φ basis below `DEFLATION_TOL·max(1, |m|, |n|)`
/// are at the rounding level of the assembly.
pub const DEFLATION_TOL: f64 = 1e-14;

/// `Λ_a` in the φ basis, for repeated Rayleigh quotients `(Λ_a^t φ_n, φ_n)`.
///
/// `Λ_a − |D_a|` is smoothing, so its φ-basis entries decay in both indices.
/// Only the central block `|n| ≤ r` outside of which they sit at rounding
/// level is diagonalized; modes beyond `r` are eigenvectors with eigenvalue
/// `|n|`. This keeps eigenvalue rounding, which `λ^{s−1}` amplifies, on the
/// scale of the block instead of the whole Galerkin space.
#[derive(Debug, Clone)]
pub struct PhiSpectralData {
    lambda: OperatorMatrix,
    radius: usize,
    eig: HermitianEigen,
}

fn active_radius(lambda: &OperatorMatrix) -> usize {
    let m = lambda.order() as i64;
    let mut radius = 0;
    for n in -m..=m {
        for k in -m..=m {
            let mut e = lambda.get(n, k);
            if n == k {
                e -= mode_power(n, 1.0);
            }
            let scale = n.abs().max(k.abs()).max(1) as f64;
            if e.norm() > DEFLATION_TOL * scale {
                radius = radius.max(n.unsigned_abs().max(k.unsigned_abs()) as usize);
            }
        }
    }
    radius
}

impl PhiSpectralData {
    pub fn new(a: &WeightFunction, order: usize) -> Result<Self> {
        let basis = PhiBasis::new(a, order)?;
        let lambda = basis.lambda_matrix();
        let radius = active_radius(&lambda);
        let eig = HermitianEigen::new(&lambda.central_block(radius))?;
        Ok(Self {
            lambda,
            radius,
            eig,
        })
    }

    pub fn order(&self) -> usize {
        self.lambda.order()
    }

    pub fn lambda(&self) -> &OperatorMatrix {
        &self.lambda
    }

    /// Radius of the diagonalized block.
    pub fn active_radius(&self) -> usize {
        self.radius
    }

    /// Eigendecomposition of the active block.
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    /// `(Λ_a φ_n, φ_n)`, read directly from the assembled matrix.
    pub fn rayleigh_one(&self, n: i64) -> f64 {
        self.lambda.get(n, n).re
    }

    /// `(Λ_a^t φ_n, φ_n) − |n|^t` for every mode, `−M` first.
    pub fn excess(&self, t: f64) -> Result<Vec<f64>> {
        let m = self.order() as i64;
        let r = self.radius as i64;
        if t == 1.0 {
            // outside the active block the deviation is below the assembly rounding
            return Ok((-m..=m)
                .map(|n| if n.abs() <= r { self.rayleigh_one(n) - mode_power(n, 1.0) } else { 0.0 })
                .collect());
        }
        let reference: Vec<f64> = (-r..=r).map(|n| mode_power(n, t)).collect();
        let block = self.eig.diagonal_excess(t, &reference)?;
        Ok((-m..=m)
            .map(|n| if n.abs() <= r { block[(n + r) as usize] } else { 0.0 })
            .collect())
    }

    /// `(Λ_a^t φ_n, φ_n)`.
    pub fn rayleigh(&self, n: i64, t: f64) -> Result<f64> {
        if n.unsigned_abs() as usize > self.order() {
            return Err(Error::InvalidInput(format!(
                "mode {n} outside the assembled range ±{}",
                self.order()
            )));
        }
        if t == 1.0 {
            return Ok(self.rayleigh_one(n));
        }
        Ok(mode_power(n, t) + self.excess(t)?[self.lambda.index(n)])
    }

    /// Per-mode terms `(Λ_a^t φ_n, φ_n) − |n|^t` for `|n| ≤ k`.
    pub fn trace_terms(&self, t: f64, k: usize) -> Result<Vec<(i64, f64)>> {
        let excess = self.excess(t)?;
        let k = k.min(self.order()) as i64;
        Ok((-k..=k).map(|n| (n, excess[self.lambda.index(n)])).collect())
    }
}

/// `(Λ_a^t φ_n, φ_n)` for a normalized weight and `t ≥ 1`.
///
/// For `t = 1` the entry is exact up to quadrature; other powers are taken
/// in the φ-basis Galerkin space of order `m_big`.
pub fn rayleigh_quotient(a: &WeightFunction, n: i64, t: f64, m_big: usize) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::UnsupportedArgument(t));
    }
    let order = if t == 1.0 {
        n.unsigned_abs() as usize
    } else {
        m_big.max(2 * n.unsigned_abs() as usize)
    };
    PhiSpectralData::new(a, order)?.rayleigh(n, t)
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticResiduals {
    /// `δ_n = λ_n − (2π/L) λ_n^0` for `n` in the trusted window.
    pub residuals: Vec<f64>,
    /// Least-squares slope of `ln|δ_n|` against `ln n`.
    pub log_log_slope: Option<f64>,
    /// Least-squares slope of `ln|δ_n|` against `n`.
    pub log_linear_slope: Option<f64>,
}

impl AsymptoticResiduals {
    pub fn max_abs_from(&self, n: usize) -> f64 {
        self.residuals
            .iter()
            .skip(n)
            .map(|d| d.abs())
            .fold(0.0, f64::max)
    }
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Residuals against the disk asymptotics `(2π/L) λ_n^0`, with decay fits
/// over the entries above the rounding floor.
pub fn asymptotic_residuals(sp: &SteklovSpectrum) -> AsymptoticResiduals {
    let scale = sp.scale();
    let residuals: Vec<f64> = sp
        .trusted()
        .iter()
        .enumerate()
        .map(|(n, &l)| l - scale * disk_eigenvalue(n))
        .collect();
    let floor = 1e-13 * sp.trusted().last().copied().unwrap_or(1.0).max(1.0);
    let pts: Vec<(usize, f64)> = residuals
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, d)| d.abs() > floor)
        .map(|(n, d)| (n, d.abs().ln()))
        .collect();
    let loglog: Vec<_> = pts.iter().map(|&(n, y)| ((n as f64).ln(), y)).collect();
    let loglin: Vec<_> = pts.iter().map(|&(n, y)| (n as f64, y)).collect();
    AsymptoticResiduals {
        residuals,
        log_log_slope: slope(&loglog),
        log_linear_slope: slope(&loglin),
    }
}

/// Margins (right side minus left side) of the classical upper bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    /// `2π/L − λ_1`.
    pub weinstock_margin: f64,
    /// `min_k (2πk/L − λ_k)` over the trusted window.
    pub hps_min_margin: f64,
    pub hps_worst_k: usize,
    /// `min (bound(k, ℓ) − λ_k λ_ℓ)` over `1 ≤ k ≤ ℓ`, `k + ℓ < K_trust`.
    pub product_min_margin: f64,
    pub product_worst_pair: (usize, usize),
}

impl ClassicalReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.weinstock_margin >= -tol && self.hps_min_margin >= -tol && self.product_min_margin >= -tol
    }
}

/// `(π/L)²(k+ℓ)²` for even `k+ℓ`, `(π/L)²(k+ℓ−1)²` for odd.
pub fn product_bound(k: usize, l: usize, length: f64) -> f64 {
    let s = k + l;
    let m = if s % 2 == 0 { s } else { s - 1 } as f64;
    (PI / length).powi(2) * m * m
}

pub fn classical_inequality_report(sp: &SteklovSpectrum) -> Result<ClassicalReport> {
    let lam = sp.trusted();
    if lam.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "trusted window has {} entries, need at least 10",
            lam.len()
        )));
    }
    let scale = sp.scale();
    let weinstock_margin = scale - lam[1];
    let (hps_worst_k, hps_min_margin) = (1..lam.len())
        .map(|k| (k, scale * k as f64 - lam[k]))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty window");
    let mut product_min_margin = f64::INFINITY;
    let mut product_worst_pair = (1, 1);
    for k in 1..lam.len() {
        for l in k..lam.len() - k {
            let margin = product_bound(k, l, sp.length()) - lam[k] * lam[l];
            if margin < product_min_margin {
                product_min_margin = margin;
                product_worst_pair = (k, l);
            }
        }
    }
    Ok(ClassicalReport {
        weinstock_margin,
        hps_min_margin,
        hps_worst_k,
        product_min_margin,
        product_worst_pair,
    })
}
