//! Smooth periodic functions on the unit circle.
//!
//! A function is stored as a truncated Fourier series
//! `u(θ) = Σ_{|n| ≤ M} û_n e^{inθ}`. Uniform samples live on the grid
//! `θ_j = 2πj/N` with `N` a power of two, and the two representations are
//! related by the FFT. Nonlinear pointwise maps (square root, reciprocal,
//! powers) are evaluated on an oversampled grid that is refined until the
//! upper half of the resolved band is negligible.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oversampling applied to the anti-aliasing floor before any pointwise map.
pub const OVERSAMPLING: usize = 4;
/// Largest grid tried by the adaptive analysis.
pub const MAX_GRID: usize = 1 << 16;
/// A series is resolved when its upper half band is below this fraction of its peak.
pub const RESOLVE_TOL: f64 = 1e-14;
/// Coefficients below this fraction of the peak are dropped after analysis.
pub const TRIM_TOL: f64 = 1e-16;
/// Tail ratio above which a weight is flagged as poorly resolved.
pub const TAIL_WARN: f64 = 1e-12;
/// Relative Hermitian asymmetry tolerated before symmetrizing a weight.
pub const HERMITIAN_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

fn check_grid(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::GridNotPowerOfTwo(n));
    }
    Ok(())
}

/// Smallest power of two `N` with `N ≥ 2(2M+1)`.
pub fn min_grid(order: usize) -> usize {
    (2 * (2 * order + 1)).next_power_of_two()
}

/// Grid used for positivity checks: at least `8M` points.
pub fn positivity_grid(order: usize) -> usize {
    (8 * order).max(min_grid(order)).max(64).next_power_of_two()
}

/// Angles of the uniform grid with `n` points.
pub fn grid_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Uniform samples `u(θ_j)`, `θ_j = 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSampling {
    values: Vec<Complex64>,
}

impl GridSampling {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        check_grid(values.len())?;
        Ok(Self { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(θ_j)` on a grid of `n` points.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(n)?;
        Ok(Self {
            values: grid_angles(n).into_iter().map(f).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Writes `theta,value` rows; a third `imag` column is added when the
    /// samples are not real.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let complex = self.values.iter().any(|z| z.im.abs() > 1e-14);
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        if complex {
            wtr.write_record(["theta", "re", "im"]).map_err(io)?;
        } else {
            wtr.write_record(["theta", "value"]).map_err(io)?;
        }
        for (j, z) in self.values.iter().enumerate() {
            let theta = self.theta(j).to_string();
            if complex {
                wtr.write_record([theta, z.re.to_string(), z.im.to_string()])
                    .map_err(io)?;
            } else {
                wtr.write_record([theta, z.re.to_string()]).map_err(io)?;
            }
        }
        wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Truncated Fourier series `Σ_{|n| ≤ M} û_n e^{inθ}` with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    /// `coeffs[n + order]` holds `û_n`.
    pub fn new(order: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * order + 1 {
            return Err(Error::InvalidInput(format!(
                "order {order} needs {} coefficients, got {}",
                2 * order + 1,
                coeffs.len()
            )));
        }
        Ok(Self { order, coeffs })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            order: 0,
            coeffs: vec![Complex64::new(c, 0.0)],
        }
    }

    /// Builds a series from `(n, û_n)` pairs; unspecified modes are zero.
    pub fn from_modes<I: IntoIterator<Item = (i64, Complex64)>>(modes: I) -> Self {
        let modes: Vec<_> = modes.into_iter().collect();
        let order = modes.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut s = Self::zeros(order);
        for (n, c) in modes {
            s.coeffs[(n + order as i64) as usize] += c;
        }
        s
    }

    /// Real trigonometric polynomial `c_0 + Σ_{n ≥ 1} (c_n e^{inθ} + conj(c_n) e^{-inθ})`.
    pub fn from_nonnegative_modes(c: &[Complex64]) -> Self {
        let order = c.len().saturating_sub(1);
        let mut s = Self::zeros(order);
        if c.is_empty() {
            return s;
        }
        s.coeffs[order] = Complex64::new(c[0].re, 0.0);
        for (n, &cn) in c.iter().enumerate().skip(1) {
            s.coeffs[order + n] = cn;
            s.coeffs[order - n] = cn.conj();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `û_n`, zero outside the stored range.
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.order {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.order as i64) as usize]
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.order as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - m, c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `|û_M| / max_n |û_n|`.
    pub fn tail_ratio(&self) -> f64 {
        let peak = self.max_abs_coeff();
        if peak == 0.0 {
            return 0.0;
        }
        let m = self.order as i64;
        self.coeff(m).norm().max(self.coeff(-m).norm()) / peak
    }

    /// Largest `|û_n − conj(û_{−n})|` relative to the peak coefficient.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let peak = self.max_abs_coeff();
        if peak == 0.0 {
            return 0.0;
        }
        let m = self.order as i64;
        (0..=m)
            .map(|n| (self.coeff(n) - self.coeff(-n).conj()).norm())
            .fold(0.0, f64::max)
            / peak
    }

    /// Replaces `û_n` by `(û_n + conj(û_{−n}))/2`.
    pub fn symmetrized(&self) -> Self {
        let m = self.order as i64;
        let coeffs = (-m..=m)
            .map(|n| 0.5 * (self.coeff(n) + self.coeff(-n).conj()))
            .collect();
        Self {
            order: self.order,
            coeffs,
        }
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes()
            .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }

    /// Synthesis on `n` grid points. Requires `n ≥ 2(2M+1)`.
    pub fn to_samples(&self, n: usize) -> Result<GridSampling> {
        check_grid(n)?;
        let required = 2 * (2 * self.order + 1);
        if n < required {
            return Err(Error::Aliasing {
                grid: n,
                order: self.order,
                required,
            });
        }
        Ok(GridSampling {
            values: self.synthesize(n),
        })
    }

    /// Synthesis on `n` points without the anti-aliasing floor; `n` must
    /// exceed `2M`.
    pub(crate) fn synthesize(&self, n: usize) -> Vec<Complex64> {
        debug_assert!(n > 2 * self.order);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(n as i64) as usize] += c;
        }
        fft_in_place(&mut buf, true);
        buf
    }

    /// Discrete Fourier analysis: `û_n = (1/N) Σ_j u_j e^{−inθ_j}` for `|n| ≤ N/2 − 1`.
    pub fn from_samples(g: &GridSampling) -> Self {
        Self::analyze(g.values.clone())
    }

    pub(crate) fn analyze(mut buf: Vec<Complex64>) -> Self {
        let n = buf.len();
        fft_in_place(&mut buf, false);
        let order = n / 2 - 1;
        let scale = 1.0 / n as f64;
        let coeffs = (-(order as i64)..=order as i64)
            .map(|k| buf[k.rem_euclid(n as i64) as usize] * scale)
            .collect();
        Self { order, coeffs }
    }

    /// Drops trailing modes whose magnitude is below `rel_tol` times the peak.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let cutoff = rel_tol * self.max_abs_coeff();
        let m = self.order as i64;
        let keep = (0..=m)
            .rev()
            .find(|&n| self.coeff(n).norm() > cutoff || self.coeff(-n).norm() > cutoff)
            .unwrap_or(0);
        self.truncated(keep as usize)
    }

    /// Restriction (or zero extension) to order `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let m = order as i64;
        Self {
            order,
            coeffs: (-m..=m).map(|n| self.coeff(n)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.max(other.order);
        let m = order as i64;
        Self {
            order,
            coeffs: (-m..=m).map(|n| self.coeff(n) + other.coeff(n)).collect(),
        }
    }

    /// Exact product of two trigonometric polynomials (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.order + other.order);
        let m = out.order as i64;
        for (i, a) in self.modes() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.modes() {
                out.coeffs[(i + j + m) as usize] += a * b;
            }
        }
        out
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `Du = −i du/dθ`, i.e. `û_n ↦ n û_n`.
    pub fn apply_d(&self) -> Self {
        Self {
            order: self.order,
            coeffs: self.modes().map(|(n, c)| c * n as f64).collect(),
        }
    }

    /// `θ ↦ u(θ + c)`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            order: self.order,
            coeffs: self
                .modes()
                .map(|(n, z)| z * Complex64::from_polar(1.0, n as f64 * c))
                .collect(),
        }
    }

    /// `θ ↦ u(−θ)`.
    pub fn reflected(&self) -> Self {
        let m = self.order as i64;
        Self {
            order: self.order,
            coeffs: (-m..=m).map(|n| self.coeff(-n)).collect(),
        }
    }
}

/// Analyzes a real function on grids of increasing size until the upper half
/// of the resolved band drops below [`RESOLVE_TOL`] of the peak, or stalls
/// at the rounding floor, then trims.
///
/// `sample` receives the grid angles and returns the function values.
pub(crate) fn resolve_real(
    start: usize,
    mut sample: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<FourierSeries> {
    let mut n = start.max(16).next_power_of_two();
    let mut last_tail = f64::INFINITY;
    while n <= MAX_GRID {
        let values = sample(&grid_angles(n))?;
        let buf = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let series = FourierSeries::analyze(buf).symmetrized();
        let peak = series.max_abs_coeff();
        let quarter = (n / 4) as i64;
        let tail = (quarter..=series.order as i64)
            .map(|k| series.coeff(k).norm())
            .fold(0.0, f64::max);
        let ratio = if peak > 0.0 { tail / peak } else { 0.0 };
        // a tail that stops shrinking under refinement is the rounding floor
        let plateau = ratio <= TAIL_WARN && ratio > 0.25 * last_tail;
        last_tail = ratio;
        if ratio <= RESOLVE_TOL || plateau {
            return Ok(series.trimmed(TRIM_TOL));
        }
        n *= 2;
    }
    Err(Error::BandwidthExceeded {
        max_grid: MAX_GRID,
        tail: last_tail,
    })
}

/// A positive real weight on the circle, stored with Hermitian-symmetric
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    series: FourierSeries,
    meta: String,
}

impl WeightFunction {
    /// Validates Hermitian symmetry (then re-imposes it exactly) and positivity
    /// on a grid of at least `8M` points.
    pub fn new(series: FourierSeries, meta: impl Into<String>) -> Result<Self> {
        let asymmetry = series.hermitian_asymmetry();
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NonRealWeight { asymmetry });
        }
        let w = Self {
            series: series.symmetrized(),
            meta: meta.into(),
        };
        let min = w.min_on_grid(positivity_grid(w.order()));
        if !(min > 0.0) {
            return Err(Error::NonPositiveWeight { min });
        }
        Ok(w)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(FourierSeries::constant(c), format!("constant({c})"))
    }

    /// `c_0 + Σ_{n≥1} 2 Re(c_n e^{inθ})`.
    pub fn from_nonnegative_modes(c: &[Complex64], meta: impl Into<String>) -> Result<Self> {
        Self::new(FourierSeries::from_nonnegative_modes(c), meta)
    }

    /// `1 + c cos(mθ)`.
    pub fn cosine(c: f64, m: usize) -> Result<Self> {
        let half = Complex64::new(0.5 * c, 0.0);
        let series = if m == 0 {
            FourierSeries::constant(1.0 + c)
        } else {
            FourierSeries::from_modes([
                (0, Complex64::new(1.0, 0.0)),
                (m as i64, half),
                (-(m as i64), half),
            ])
        };
        Self::new(series, format!("cosine({c}, {m})"))
    }

    pub fn series(&self) -> &FourierSeries {
        &self.series
    }

    pub fn order(&self) -> usize {
        self.series.order
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.series.coeff(n)
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }

    pub fn tail_ratio(&self) -> f64 {
        self.series.tail_ratio()
    }

    /// True when the stored truncation looks under-resolved.
    pub fn tail_warning(&self) -> bool {
        self.order() > 0 && self.tail_ratio() > TAIL_WARN
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.series.eval(theta).re
    }

    /// Real samples on `n` points (`n > 2M`).
    pub fn real_samples(&self, n: usize) -> Vec<f64> {
        self.series.synthesize(n).into_iter().map(|z| z.re).collect()
    }

    pub fn min_on_grid(&self, n: usize) -> f64 {
        self.real_samples(n.max(2 * self.order() + 2).next_power_of_two())
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_samples(&self, n: usize) -> Result<GridSampling> {
        self.series.to_samples(n)
    }

    /// `c·a` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::NonPositiveWeight { min: c });
        }
        Ok(Self {
            series: self.series.scaled(c),
            meta: format!("{}*{}", c, self.meta),
        })
    }

    /// `θ ↦ a(θ + c)`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            series: self.series.shifted(c).symmetrized(),
            meta: format!("shift({c}) {}", self.meta),
        }
    }

    /// `θ ↦ a(−θ)`.
    pub fn reflected(&self) -> Self {
        Self {
            series: self.series.reflected(),
            meta: format!("reflect {}", self.meta),
        }
    }

    pub fn to_json(&self) -> String {
        let file = WeightFile {
            m: self.order(),
            coeffs: (0..=self.order() as i64)
                .map(|n| {
                    let c = self.coeff(n);
                    (n, c.re, c.im)
                })
                .collect(),
            meta: Some(self.meta.clone()),
        };
        serde_json::to_string_pretty(&file).expect("weight serialization")
    }

    /// Parses `{"M": int, "coeffs": [[n, re, im], ...]}`. Negative modes that
    /// are not listed are filled in by Hermitian completion.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let m = file.m as i64;
        let mut given: Vec<Option<Complex64>> = vec![None; 2 * file.m + 1];
        for &(n, re, im) in &file.coeffs {
            if n.abs() > m {
                return Err(Error::InvalidInput(format!("mode {n} exceeds M = {m}")));
            }
            given[(n + m) as usize] = Some(Complex64::new(re, im));
        }
        let coeffs = (-m..=m)
            .map(|n| match (given[(n + m) as usize], given[(-n + m) as usize]) {
                (Some(c), _) => c,
                (None, Some(c)) => c.conj(),
                (None, None) => Complex64::new(0.0, 0.0),
            })
            .collect();
        let series = FourierSeries::new(file.m, coeffs)?;
        Self::new(series, file.meta.unwrap_or_else(|| "json".to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    #[serde(rename = "M")]
    m: usize,
    coeffs: Vec<(i64, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<String>,
}

/// Pointwise nonlinear maps supported by [`pointwise_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointwiseFn {
    Reciprocal,
    Sqrt,
    Power(f64),
}

impl PointwiseFn {
    fn apply(self, x: f64) -> f64 {
        match self {
            PointwiseFn::Reciprocal => 1.0 / x,
            PointwiseFn::Sqrt => x.sqrt(),
            PointwiseFn::Power(p) => x.powf(p),
        }
    }

    fn label(self) -> String {
        match self {
            PointwiseFn::Reciprocal => "recip".into(),
            PointwiseFn::Sqrt => "sqrt".into(),
            PointwiseFn::Power(p) => format!("pow({p})"),
        }
    }
}

/// Applies `f` pointwise on an oversampled grid and analyzes the result.
///
/// Starts at [`OVERSAMPLING`] times the anti-aliasing floor and doubles the
/// grid until the result is resolved; the returned order is the widened
/// bandwidth after trimming.
pub fn pointwise_map(a: &WeightFunction, f: PointwiseFn) -> Result<WeightFunction> {
    let start = OVERSAMPLING * min_grid(a.order());
    let series = resolve_real(start, |angles| {
        let values = a.real_samples(angles.len());
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NonPositiveWeight { min });
        }
        Ok(values.into_iter().map(|v| f.apply(v)).collect())
    })?;
    Ok(WeightFunction {
        series,
        meta: format!("{}({})", f.label(), a.meta),
    })
}

/// `L(a) = ∫ a^{-1} dθ`.
pub fn boundary_length(a: &WeightFunction) -> Result<f64> {
    let recip = pointwise_map(a, PointwiseFn::Reciprocal)?;
    Ok(2.0 * PI * recip.coeff(0).re)
}

/// Mean of `a^{-1}`; equals one for normalized weights.
pub fn reciprocal_mean(a: &WeightFunction) -> Result<f64> {
    Ok(pointwise_map(a, PointwiseFn::Reciprocal)?.coeff(0).re)
}

/// Returns `(L(a)/2π)·a`, the weight with `L = 2π`.
pub fn normalize(a: &WeightFunction) -> Result<WeightFunction> {
    let factor = reciprocal_mean(a)?;
    Ok(WeightFunction {
        series: a.series.scaled(factor),
        meta: format!("normalized[x{factor}]({})", a.meta),
    })
}

/// `b(θ) = ∫_0^θ c(s) ds` for a real `c` of mean one.
#[derive(Debug, Clone)]
pub struct Antiderivative {
    /// `p̂_k = ĉ_k/(ik)` for `k ≠ 0`, so that `b(θ) = θ + p(θ) − p(0)`.
    periodic: FourierSeries,
    offset: f64,
}

impl Antiderivative {
    fn from_series(c: &FourierSeries) -> Self {
        let periodic = FourierSeries {
            order: c.order,
            coeffs: c
                .modes()
                .map(|(k, z)| {
                    if k == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        z / Complex64::new(0.0, k as f64)
                    }
                })
                .collect(),
        };
        let offset = periodic.coeffs.iter().sum::<Complex64>().re;
        Self { periodic, offset }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        theta + self.periodic.eval(theta).re - self.offset
    }

    /// `b(θ_j)` on a grid of `n > 2M` points.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        self.periodic
            .synthesize(n)
            .into_iter()
            .zip(grid_angles(n))
            .map(|(p, theta)| theta + p.re - self.offset)
            .collect()
    }
}

/// Antiderivative of a mean-one function, `b(θ) = θ + Σ_{k≠0} ĉ_k (e^{ikθ}−1)/(ik)`.
pub fn antiderivative_mean_one(c: &FourierSeries) -> Result<Antiderivative> {
    let mean = c.coeff(0).re;
    if (c.coeff(0) - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::MeanNotOne { mean });
    }
    Ok(Antiderivative::from_series(c))
}

/// Same construction without the mean check; the constant mode is ignored.
pub(crate) fn antiderivative_unchecked(c: &FourierSeries) -> Antiderivative {
    Antiderivative::from_series(c)
}
