//! Finite Hermitian matrices of `Λ`, `D`, `Λ_a = a^{1/2}Λa^{1/2}`,
//! `D_a = a^{1/2}Da^{1/2}` and `|D_a|`.
//!
//! Two bases are used. The Fourier basis `e^{inθ}/√(2π)`, `|n| ≤ M`, where
//! multiplication by `a` is the Toeplitz matrix of its coefficients, and the
//! `φ` basis
//!
//! ```text
//! φ_n(θ) = (2π a(θ))^{-1/2} exp(i n b(θ)),   b(θ) = ∫_0^θ a^{-1},
//! ```
//!
//! which diagonalizes `D_a` (eigenvalue `n`) for a weight with mean of
//! `a^{-1}` equal to one. Powers follow the kernel convention
//! `A^s = (A + P₀)^s − P₀`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::fourier::{
    antiderivative_unchecked, min_grid, pointwise_map, FourierSeries, GridSampling, PointwiseFn,
    WeightFunction, MAX_GRID,
};

/// Eigenvalues at or below this are treated as the kernel.
pub const KERNEL_TOL: f64 = 1e-8;
/// Eigenvalues below `-NEGATIVE_FLOOR` signal an inconsistent assembly.
pub const NEGATIVE_FLOOR: f64 = 1e-9;
/// Allowed deviation of `mean(1/a)` from one for φ-basis routines.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Coefficient level treated as FFT noise when trimming φ spectra.
const BAND_FLOOR: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Fourier,
    Phi,
}

/// Operators available in the Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierOperator {
    /// `Λ = |D|`, diagonal `|n|`.
    Lambda,
    /// `D = −i d/dθ`, diagonal `n`.
    D,
    LambdaA,
    DA,
    /// `|D_a|`, from the eigendecomposition of the assembled `D_a`.
    AbsDA,
    /// `D_a²` from its differential-operator expansion
    /// `a²D² + 2a(Da)D + ½a(D²a) + ¼(Da)²`.
    DsqA,
    /// Multiplication by `a`.
    MultA,
}

/// Hermitian matrix of an operator on the modes `−M..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<Complex64>,
    basis: Basis,
    weight_id: String,
    order: usize,
}

impl OperatorMatrix {
    pub fn new(
        entries: DMatrix<Complex64>,
        basis: Basis,
        weight_id: impl Into<String>,
        order: usize,
    ) -> Result<Self> {
        let dim = 2 * order + 1;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "order {order} needs a {dim}x{dim} matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            entries,
            basis,
            weight_id: weight_id.into(),
            order,
        })
    }

    pub fn from_real_diagonal(
        diag: impl IntoIterator<Item = f64>,
        basis: Basis,
        weight_id: impl Into<String>,
    ) -> Result<Self> {
        let d: Vec<Complex64> = diag.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        if d.len() % 2 == 0 {
            return Err(Error::InvalidInput("diagonal length must be odd".into()));
        }
        let order = d.len() / 2;
        Self::new(
            DMatrix::from_diagonal(&DVector::from_vec(d)),
            basis,
            weight_id,
            order,
        )
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn weight_id(&self) -> &str {
        &self.weight_id
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        2 * self.order + 1
    }

    /// Row/column index of mode `n`.
    pub fn index(&self, n: i64) -> usize {
        (n + self.order as i64) as usize
    }

    /// Entry `(row m, column n)` in mode labels.
    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        self.entries[(self.index(m), self.index(n))]
    }

    /// Real part of the diagonal, mode `−M` first.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `‖A − A*‖_max / max(1, ‖A‖_max)`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst / scale
    }

    /// Central `(2K+1)`-block on modes `−K..=K`.
    pub fn central_block(&self, k: usize) -> DMatrix<Complex64> {
        let k = k.min(self.order);
        let start = self.order - k;
        self.entries.view((start, start), (2 * k + 1, 2 * k + 1)).into_owned()
    }

    pub fn decompose(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(&self.entries)
    }

    /// Sorted eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.decompose()?.values)
    }

    /// Debug dump `{basis, M, rows: [[[re, im], ...], ...]}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            basis: Basis,
            #[serde(rename = "M")]
            m: usize,
            weight: &'a str,
            rows: Vec<Vec<[f64; 2]>>,
        }
        let rows = (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.entries[(i, j)].re, self.entries[(i, j)].im])
                    .collect()
            })
            .collect();
        serde_json::to_string(&Dump {
            basis: self.basis,
            m: self.order,
            weight: &self.weight_id,
            rows,
        })
        .expect("matrix serialization")
    }
}

fn hermitian_part(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let adj = m.adjoint();
    (m + adj) * Complex64::new(0.5, 0.0)
}

/// Eigendecomposition `A = U diag(λ) U*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let sym = hermitian_part(a.clone());
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
            .ok_or_else(|| Error::EigenSolverFailure("QR iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    fn check_semidefinite(&self) -> Result<()> {
        let min = self.min_value();
        if min < -NEGATIVE_FLOOR {
            return Err(Error::NegativeEigenvalue { value: min });
        }
        Ok(())
    }

    fn spectral_weights(&self, s: f64) -> Vec<f64> {
        self.values.iter().map(|&l| kernel_power(l, s)).collect()
    }

    /// `U g(Λ) U*` with `g(λ) = λ^s` off the kernel and `0` on it.
    pub fn power(&self, s: f64) -> Result<DMatrix<Complex64>> {
        self.check_semidefinite()?;
        Ok(self.apply(&self.spectral_weights(s)))
    }

    /// `U diag(f(λ_i)) U*` for arbitrary real `f`.
    pub fn apply(&self, g: &[f64]) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &w) in scaled.column_iter_mut().zip(g) {
            col *= Complex64::new(w, 0.0);
        }
        hermitian_part(scaled * self.vectors.adjoint())
    }

    /// Diagonal of `A^s` without forming the full matrix.
    pub fn power_diagonal(&self, s: f64) -> Result<Vec<f64>> {
        self.check_semidefinite()?;
        let g = self.spectral_weights(s);
        Ok((0..self.vectors.nrows())
            .map(|r| {
                let mut acc = 0.0;
                for (c, &w) in g.iter().enumerate() {
                    if w != 0.0 {
                        acc += self.vectors[(r, c)].norm_sqr() * w;
                    }
                }
                acc
            })
            .collect())
    }
}

impl HermitianEigen {
    /// Rows of `U g(Λ) U* − diag(reference)` on the diagonal, each computed
    /// as `Σ_c |U_rc|² (g_c − reference_r) / Σ_c |U_rc|²`.
    ///
    /// Subtracting inside the sum keeps the rounding error proportional to
    /// the small excess instead of to `max g`.
    pub fn diagonal_excess(&self, s: f64, reference: &[f64]) -> Result<Vec<f64>> {
        self.check_semidefinite()?;
        let g = self.spectral_weights(s);
        Ok(reference
            .iter()
            .enumerate()
            .map(|(r, &base)| {
                let mut num = CompensatedSum::new();
                let mut den = CompensatedSum::new();
                for (c, &w) in g.iter().enumerate() {
                    let p = self.vectors[(r, c)].norm_sqr();
                    num.add(p * (w - base));
                    den.add(p);
                }
                num.value() / den.value()
            })
            .collect())
    }
}

/// `λ^s` with the convention `0 ↦ 0` on the kernel (also for `s = 0`).
pub fn kernel_power(lambda: f64, s: f64) -> f64 {
    if lambda <= KERNEL_TOL {
        0.0
    } else {
        lambda.powf(s)
    }
}

/// `|n|^s` with `0 ↦ 0`, the diagonal of `|D_a|^s` in the φ basis.
pub fn mode_power(n: i64, s: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n.unsigned_abs() as f64).powf(s)
    }
}

/// `A^s` under the kernel-projection convention.
pub fn matrix_power(a: &OperatorMatrix, s: f64) -> Result<OperatorMatrix> {
    let entries = a.decompose()?.power(s)?;
    OperatorMatrix::new(entries, a.basis, format!("({})^{s}", a.weight_id), a.order)
}

/// Rank-one projection `P₀` onto the normalized kernel vector `φ₀ ∝ a^{-1/2}`.
#[derive(Debug, Clone)]
pub struct KernelProjection {
    vector: DVector<Complex64>,
    basis: Basis,
}

impl KernelProjection {
    pub fn from_weight(a: &WeightFunction, order: usize, basis: Basis) -> Result<Self> {
        let dim = 2 * order + 1;
        let vector = match basis {
            Basis::Phi => {
                let mut v = DVector::from_element(dim, ZERO);
                v[order] = Complex64::new(1.0, 0.0);
                v
            }
            Basis::Fourier => {
                let root = pointwise_map(a, PointwiseFn::Power(-0.5))?;
                let m = order as i64;
                let v = DVector::from_iterator(dim, (-m..=m).map(|n| root.coeff(n)));
                let norm = v.norm();
                v / Complex64::new(norm, 0.0)
            }
        };
        Ok(Self { vector, basis })
    }

    /// Kernel eigenvector of an assembled matrix (eigenvalue closest to zero).
    pub fn from_matrix(a: &OperatorMatrix) -> Result<Self> {
        let eig = a.decompose()?;
        let idx = eig
            .values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(Self {
            vector: eig.vectors.column(idx).into_owned(),
            basis: a.basis,
        })
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.vector
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        &self.vector * self.vector.adjoint()
    }

    /// `‖P₀² − P₀‖_max`.
    pub fn idempotence_defect(&self) -> f64 {
        let p = self.matrix();
        (&p * &p - &p).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A v‖₂` for the kernel vector `v`.
    pub fn residual(&self, a: &OperatorMatrix) -> f64 {
        (a.entries() * &self.vector).norm()
    }
}

fn toeplitz_rect(
    series: &FourierSeries,
    rows: i64,
    cols: i64,
    col_weight: impl Fn(i64) -> f64,
) -> DMatrix<Complex64> {
    DMatrix::from_fn((2 * rows + 1) as usize, (2 * cols + 1) as usize, |r, c| {
        let m = r as i64 - rows;
        let k = c as i64 - cols;
        series.coeff(m - k) * col_weight(k)
    })
}

/// `Σ_k ŝ_{m−k} w(k) ŝ_{k−n}` on `|m|, |n| ≤ M`, with the inner sum over all
/// modes the product couples (`|k| ≤ M + W`), i.e. the exact compression of
/// `S diag(w) S` onto the window.
fn sandwich(root: &FourierSeries, order: usize, weight: impl Fn(i64) -> f64) -> DMatrix<Complex64> {
    let m = order as i64;
    let inner = m + root.order() as i64;
    let s = toeplitz_rect(root, m, inner, |_| 1.0);
    let sw = toeplitz_rect(root, m, inner, weight);
    hermitian_part(sw * s.adjoint())
}

/// Matrix of `f D^p` on modes `−M..=M`: entry `(m, n) = f̂_{m−n} n^p`.
fn multiplier_times_d(f: &FourierSeries, order: usize, p: i32) -> DMatrix<Complex64> {
    let m = order as i64;
    DMatrix::from_fn(2 * order + 1, 2 * order + 1, |r, c| {
        let row = r as i64 - m;
        let col = c as i64 - m;
        f.coeff(row - col) * (col as f64).powi(p)
    })
}

/// Assembles `which` for the weight `a` in the Fourier basis on `|n| ≤ M`.
pub fn assemble_fourier(
    a: &WeightFunction,
    order: usize,
    which: FourierOperator,
) -> Result<OperatorMatrix> {
    let m = order as i64;
    let entries = match which {
        FourierOperator::Lambda => {
            DMatrix::from_fn(2 * order + 1, 2 * order + 1, |r, c| {
                if r == c {
                    Complex64::new((r as i64 - m).abs() as f64, 0.0)
                } else {
                    ZERO
                }
            })
        }
        FourierOperator::D => DMatrix::from_fn(2 * order + 1, 2 * order + 1, |r, c| {
            if r == c {
                Complex64::new((r as i64 - m) as f64, 0.0)
            } else {
                ZERO
            }
        }),
        FourierOperator::MultA => multiplier_times_d(a.series(), order, 0),
        FourierOperator::LambdaA => {
            let root = pointwise_map(a, PointwiseFn::Sqrt)?;
            sandwich(root.series(), order, |k| k.abs() as f64)
        }
        FourierOperator::DA => {
            let root = pointwise_map(a, PointwiseFn::Sqrt)?;
            sandwich(root.series(), order, |k| k as f64)
        }
        FourierOperator::AbsDA => {
            let da = assemble_fourier(a, order, FourierOperator::DA)?;
            let eig = da.decompose()?;
            let g: Vec<f64> = eig.values.iter().map(|l| l.abs()).collect();
            eig.apply(&g)
        }
        FourierOperator::DsqA => {
            let s = a.series();
            let da = s.apply_d();
            let d2a = da.apply_d();
            let second = s.mul(s);
            let first = s.mul(&da).scaled(2.0);
            let zeroth = s.mul(&d2a).scaled(0.5).add(&da.mul(&da).scaled(0.25));
            hermitian_part(
                multiplier_times_d(&second, order, 2)
                    + multiplier_times_d(&first, order, 1)
                    + multiplier_times_d(&zeroth, order, 0),
            )
        }
    };
    OperatorMatrix::new(entries, Basis::Fourier, a.meta(), order)
}

fn check_normalized(a: &WeightFunction) -> Result<WeightFunction> {
    let recip = pointwise_map(a, PointwiseFn::Reciprocal)?;
    let mean = recip.coeff(0).re;
    if (mean - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { mean });
    }
    Ok(recip)
}

/// `φ_n(θ_j)` on a grid of `grid` points.
pub fn phi_basis_samples(a: &WeightFunction, n: i64, grid: usize) -> Result<GridSampling> {
    let recip = check_normalized(a)?;
    let b = antiderivative_unchecked(recip.series());
    let phase = b.samples(grid);
    let amp = a.real_samples(grid);
    GridSampling::new(
        phase
            .into_iter()
            .zip(amp)
            .map(|(p, w)| Complex64::from_polar((2.0 * PI * w).powf(-0.5), n as f64 * p))
            .collect(),
    )
}

/// Fourier data of `√(2π) a^{1/2} φ_m = e^{i m b(θ)}` for `|m| ≤ M`.
///
/// Column `m + M` of `coeffs` holds the Fourier coefficients `ĝ_m(k)` for
/// the wavenumbers in `wavenumbers`, so that
/// `(Λ_a φ_m, φ_n) = Σ_k |k| ĝ_m(k) conj(ĝ_n(k))`.
#[derive(Debug, Clone)]
pub struct PhiBasis {
    order: usize,
    grid: usize,
    wavenumbers: Vec<i64>,
    coeffs: DMatrix<Complex64>,
    weight_id: String,
}

impl PhiBasis {
    pub fn new(a: &WeightFunction, order: usize) -> Result<Self> {
        let recip = check_normalized(a)?;
        let b = antiderivative_unchecked(recip.series());
        let m = order as i64;
        let mut grid = (4 * (2 * order + 1))
            .max(4 * min_grid(recip.order()))
            .next_power_of_two();
        let mut last_tail = f64::INFINITY;
        loop {
            let phase = b.samples(grid);
            let analyze = |mode: i64| {
                FourierSeries::analyze(
                    phase
                        .iter()
                        .map(|&p| Complex64::from_polar(1.0, mode as f64 * p))
                        .collect(),
                )
            };
            // resolution is decided by the extreme modes
            let top = analyze(m);
            let bottom = analyze(-m);
            let quarter = (grid / 4) as i64;
            let tail: f64 = [&top, &bottom]
                .iter()
                .map(|s| {
                    (quarter..=s.order() as i64)
                        .map(|k| s.coeff(k).norm_sqr() + s.coeff(-k).norm_sqr())
                        .sum::<f64>()
                })
                .sum();
            // phase rounding grows with the mode, so a stalled tail is accepted
            let plateau = tail <= 1e-20 && tail > 0.1 * last_tail;
            last_tail = tail;
            if tail <= 1e-28 || plateau {
                let all: Vec<FourierSeries> = (-m..=m).map(analyze).collect();
                let half = all[0].order() as i64;
                // beyond the band every coefficient sits at the ~1e-15 FFT floor and
                // contributes below |k|·1e-28 to any entry
                let band = (0..=half)
                    .rev()
                    .find(|&k| {
                        all.iter()
                            .any(|s| s.coeff(k).norm().max(s.coeff(-k).norm()) > BAND_FLOOR)
                    })
                    .unwrap_or(0);
                let keep: Vec<i64> = (-band..=band).collect();
                let coeffs =
                    DMatrix::from_fn(keep.len(), all.len(), |r, c| all[c].coeff(keep[r]));
                return Ok(Self {
                    order,
                    grid,
                    wavenumbers: keep,
                    coeffs,
                    weight_id: a.meta().to_string(),
                });
            }
            grid *= 2;
            if grid > MAX_GRID {
                return Err(Error::BandwidthExceeded {
                    max_grid: MAX_GRID,
                    tail: tail.sqrt(),
                });
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn form(&self, weight: impl Fn(i64) -> f64) -> DMatrix<Complex64> {
        let mut weighted = self.coeffs.clone();
        for (mut row, &k) in weighted.row_iter_mut().zip(&self.wavenumbers) {
            row *= Complex64::new(weight(k), 0.0);
        }
        hermitian_part(self.coeffs.adjoint() * weighted)
    }

    /// `A_{nm} = (Λ(a^{1/2}φ_m), a^{1/2}φ_n)`.
    pub fn lambda_matrix(&self) -> OperatorMatrix {
        let mut sqrt_k = self.coeffs.clone();
        for (mut row, &k) in sqrt_k.row_iter_mut().zip(&self.wavenumbers) {
            row *= Complex64::new((k.abs() as f64).sqrt(), 0.0);
        }
        // real GEMMs are much faster than nalgebra's generic complex product
        let re = sqrt_k.map(|z| z.re);
        let im = sqrt_k.map(|z| z.im);
        let real = re.tr_mul(&re) + im.tr_mul(&im);
        let imag = re.tr_mul(&im) - im.tr_mul(&re);
        let product = real.zip_map(&imag, Complex64::new);
        OperatorMatrix {
            entries: hermitian_part(product),
            basis: Basis::Phi,
            weight_id: self.weight_id.clone(),
            order: self.order,
        }
    }

    /// `(D(a^{1/2}φ_m), a^{1/2}φ_n)`, diagonal `n` in exact arithmetic.
    pub fn d_matrix(&self) -> OperatorMatrix {
        OperatorMatrix {
            entries: self.form(|k| k as f64),
            basis: Basis::Phi,
            weight_id: self.weight_id.clone(),
            order: self.order,
        }
    }

    /// Largest off-diagonal modulus of [`Self::d_matrix`].
    pub fn d_offdiagonal_defect(&self) -> f64 {
        let d = self.d_matrix();
        let n = d.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(d.entries[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Quadrature Gram matrix `(φ_m, φ_n)` on `|m|, |n| ≤ M`.
pub fn phi_gram(a: &WeightFunction, order: usize, grid: usize) -> Result<DMatrix<Complex64>> {
    let m = order as i64;
    let samples = (-m..=m)
        .map(|n| phi_basis_samples(a, n, grid))
        .collect::<Result<Vec<_>>>()?;
    let phi = DMatrix::from_fn(grid, samples.len(), |r, c| samples[c].values()[r]);
    Ok(phi.adjoint() * phi * Complex64::new(2.0 * PI / grid as f64, 0.0))
}

/// `Λ_a^t` in the φ basis on `|n| ≤ M`; the `t = 1` assembly is exact up to
/// quadrature, other powers go through [`matrix_power`].
pub fn assemble_phi(a: &WeightFunction, order: usize, t: f64) -> Result<OperatorMatrix> {
    let base = PhiBasis::new(a, order)?.lambda_matrix();
    if t == 1.0 {
        Ok(base)
    } else {
        matrix_power(&base, t)
    }
}

/// `|D_a|^s` in the φ basis: `diag(|n|^s)` with the kernel mode set to zero.
pub fn abs_d_phi(order: usize, s: f64) -> OperatorMatrix {
    let m = order as i64;
    OperatorMatrix::from_real_diagonal((-m..=m).map(|n| mode_power(n, s)), Basis::Phi, "|D_a|")
        .expect("odd dimension")
}
