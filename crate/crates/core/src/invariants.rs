//! Zeta-invariants `Z_k(a) = ζ_a(−2k)` as finite lattice sums over Fourier
//! coefficients.
//!
//! `Z_k(a) = Σ_{j_1+…+j_{2k}=0} N_j â_{j_1}…â_{j_{2k}}`, where
//! `N_j = Σ_n (|f(n)| − f(n))` and `f(n) = Π_{i<2k} (n + S_i)` with partial
//! sums `S_0 = 0`, `S_i = j_1 + … + j_i`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, WeightFunction};
use crate::sum::CompensatedComplexSum;

/// Default cap on `k·(2M+1)^{2k−1}` tuple evaluations.
pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Hermitian asymmetry above which a coefficient vector is treated as complex.
pub const REALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexTuple {
    j: Vec<i64>,
}

impl IndexTuple {
    pub fn new(j: Vec<i64>) -> Result<Self> {
        if j.is_empty() || j.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "index tuple must have positive even length, got {}",
                j.len()
            )));
        }
        let total: i64 = j.iter().sum();
        if total != 0 {
            return Err(Error::NonZeroSum(total));
        }
        Ok(Self { j })
    }

    pub fn indices(&self) -> &[i64] {
        &self.j
    }

    pub fn k(&self) -> usize {
        self.j.len() / 2
    }

    /// `S_0, …, S_{2k−1}`; `S_{2k} = 0` repeats `S_0` and is omitted.
    pub fn partial_sums(&self) -> Vec<i64> {
        let mut acc = 0;
        let mut out = Vec::with_capacity(self.j.len());
        out.push(0);
        for &x in &self.j[..self.j.len() - 1] {
            acc += x;
            out.push(acc);
        }
        out
    }
}

/// `N` from a partial-sum profile, in `i128` while it fits.
fn n_from_sums_i128(sums: &[i64]) -> Option<i128> {
    let lo = -sums.iter().max()?;
    let hi = -sums.iter().min()?;
    let mut total: i128 = 0;
    for n in lo..=hi {
        let mut f: i128 = 1;
        for &s in sums {
            f = f.checked_mul((n + s) as i128)?;
        }
        if f < 0 {
            total = total.checked_add(f.checked_mul(-2)?)?;
        }
    }
    Some(total)
}

fn n_from_sums_big(sums: &[i64]) -> BigInt {
    let lo = -sums.iter().max().copied().unwrap_or(0);
    let hi = -sums.iter().min().copied().unwrap_or(0);
    let mut total = BigInt::zero();
    for n in lo..=hi {
        let f: BigInt = sums.iter().map(|&s| BigInt::from(n + s)).product();
        if f.is_negative() {
            total -= f * 2;
        }
    }
    total
}

/// `N_j`, exact. Outside `[−max S, −min S]` every factor has the same sign,
/// so `f ≥ 0` there (the degree is even).
pub fn n_coefficient(j: &IndexTuple) -> BigInt {
    let sums = j.partial_sums();
    match n_from_sums_i128(&sums) {
        Some(v) => BigInt::from(v),
        None => n_from_sums_big(&sums),
    }
}

/// Canonical memo key: sorted partial sums shifted to start at zero.
fn profile_key(sums: &[i64]) -> Vec<i64> {
    let mut key = sums.to_vec();
    key.sort_unstable();
    let base = key[0];
    for v in &mut key {
        *v -= base;
    }
    key
}

struct Memo {
    table: HashMap<Vec<i64>, f64>,
}

impl Memo {
    fn new() -> Self {
        Self {
            table: HashMap::new(),
        }
    }

    fn get(&mut self, sums: &[i64]) -> f64 {
        let key = profile_key(sums);
        if let Some(&v) = self.table.get(&key) {
            return v;
        }
        let v = match n_from_sums_i128(&key) {
            Some(v) => v as f64,
            None => n_from_sums_big(&key).to_f64().unwrap_or(f64::INFINITY),
        };
        self.table.insert(key, v);
        v
    }
}

/// `Z_k` together with the number of lattice points evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSum {
    pub value: Complex64,
    pub evaluated: u64,
}

pub fn lattice_budget(order: usize, k: usize) -> u64 {
    let side = (2 * order + 1) as u64;
    side.checked_pow(2 * k as u32 - 1)
        .and_then(|p| p.checked_mul(k as u64))
        .unwrap_or(u64::MAX)
}

/// Lattice sum over `(2k−1)` free indices in `[−M, M]`, skipping zero
/// coefficients. Parallel over the leading index with a fixed reduction order.
pub fn zeta_invariant_series(a: &FourierSeries, k: usize, budget: u64) -> Result<LatticeSum> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let m = a.order() as i64;
    let needed = lattice_budget(a.order(), k);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let support: Vec<(i64, Complex64)> = a.modes().filter(|(_, c)| *c != Complex64::zero()).collect();
    let per_lead: Vec<(CompensatedComplexSum, u64)> = support
        .par_iter()
        .map(|&(j1, c1)| {
            let mut memo = Memo::new();
            let mut acc = CompensatedComplexSum::new();
            let mut count = 0u64;
            let mut sums = vec![0i64; 2 * k];
            sums[1] = j1;
            walk(a, &support, m, k, 2, &mut sums, c1, &mut memo, &mut acc, &mut count);
            (acc, count)
        })
        .collect();
    let mut total = CompensatedComplexSum::new();
    let mut evaluated = 0;
    for (acc, count) in per_lead {
        total.add(acc.value());
        evaluated += count;
    }
    Ok(LatticeSum {
        value: total.value(),
        evaluated,
    })
}

/// Chooses `j_{depth}`; `sums[i] = S_{i}` for `i < depth`.
#[allow(clippy::too_many_arguments)]
fn walk(
    a: &FourierSeries,
    support: &[(i64, Complex64)],
    m: i64,
    k: usize,
    depth: usize,
    sums: &mut [i64],
    product: Complex64,
    memo: &mut Memo,
    acc: &mut CompensatedComplexSum,
    count: &mut u64,
) {
    let last = 2 * k;
    if depth == last {
        // j_{2k} closes the cycle
        let closing = -sums[last - 1];
        if closing.abs() > m {
            return;
        }
        let c = a.coeff(closing);
        if c == Complex64::zero() {
            return;
        }
        *count += 1;
        let n = memo.get(sums);
        if n != 0.0 {
            acc.add(product * c * n);
        }
        return;
    }
    for &(j, c) in support {
        sums[depth] = sums[depth - 1] + j;
        // the remaining indices can move the sum by at most (last − depth)·M
        if sums[depth].abs() > (last - depth) as i64 * m {
            continue;
        }
        walk(a, support, m, k, depth + 1, sums, product * c, memo, acc, count);
    }
}

/// `Z_k(a)` for a real weight.
pub fn zeta_invariant(a: &WeightFunction, k: usize) -> Result<Complex64> {
    Ok(zeta_invariant_series(a.series(), k, DEFAULT_BUDGET)?.value)
}

/// `Z_1 = (2/3) Σ_{n≥2} (n³ − n)|â_n|²`.
pub fn edward_z1(a: &FourierSeries) -> Result<f64> {
    let asym = a.hermitian_asymmetry();
    if asym > REALITY_TOL {
        return Err(Error::NonRealWeight { asymmetry: asym });
    }
    let sum: f64 = (2..=a.order() as i64)
        .map(|n| {
            let nf = n as f64;
            (nf * nf * nf - nf) * a.coeff(n).norm_sqr()
        })
        .sum();
    Ok(2.0 / 3.0 * sum)
}

/// Empirical ratios `Z_k / RHS` for the candidate lower bounds. `None` when
/// the right side vanishes.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRatios {
    /// `Σ_{n≥2} n³|â_n|²`, only for `k = 1`.
    pub cubic: Option<f64>,
    /// `Σ_{n≥2} n^{2k+1}|â_n|^{2k}`.
    pub power: Option<f64>,
    /// `Σ_{n≥2} n^{2k+1}|b̂_n|²` with `b = a^k`.
    pub power_of_weight: Option<f64>,
}

impl EstimateRatios {
    pub fn min(&self) -> Option<f64> {
        [self.cubic, self.power, self.power_of_weight]
            .into_iter()
            .flatten()
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Z_k")]
    pub z_k: f64,
    pub z_k_imag: f64,
    pub edward: Option<f64>,
    pub ratios: EstimateRatios,
    pub right_sides: [f64; 3],
    pub lattice_size: u64,
    pub budget_used: u64,
}

impl InvariantReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

fn ratio(z: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| z / rhs)
}

/// Computes `Z_k` and the right sides of the conjectured lower bounds.
/// `a^k` is formed by exact convolution of the coefficient vector.
pub fn estimate_residuals(a: &WeightFunction, k: usize, budget: u64) -> Result<InvariantReport> {
    let series = a.series();
    let lattice = zeta_invariant_series(series, k, budget)?;
    let m = series.order();
    let cubic: f64 = (2..=m as i64)
        .map(|n| (n as f64).powi(3) * series.coeff(n).norm_sqr())
        .sum();
    let power: f64 = (2..=m as i64)
        .map(|n| (n as f64).powi(2 * k as i32 + 1) * series.coeff(n).norm().powi(2 * k as i32))
        .sum();
    let b = series.powi(k as u32);
    let power_of_weight: f64 = (2..=b.order() as i64)
        .map(|n| (n as f64).powi(2 * k as i32 + 1) * b.coeff(n).norm_sqr())
        .sum();
    let z = lattice.value.re;
    Ok(InvariantReport {
        k,
        m,
        z_k: z,
        z_k_imag: lattice.value.im,
        edward: if k == 1 { Some(edward_z1(series)?) } else { None },
        ratios: EstimateRatios {
            cubic: if k == 1 { ratio(z, cubic) } else { None },
            power: ratio(z, power),
            power_of_weight: ratio(z, power_of_weight),
        },
        right_sides: [cubic, power, power_of_weight],
        lattice_size: lattice.evaluated,
        budget_used: lattice_budget(m, k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n_of(j: &[i64]) -> i64 {
        n_coefficient(&IndexTuple::new(j.to_vec()).unwrap()).to_i64().unwrap()
    }

    /// `N` straight from the definition, without the support bound.
    fn brute_n(j: &[i64]) -> i64 {
        let mut total = 0;
        for n in -200i64..=200 {
            let mut f = n;
            let mut s = 0;
            for &x in &j[..j.len() - 1] {
                s += x;
                f *= n + s;
            }
            total += f.abs() - f;
        }
        total
    }

    #[test]
    fn n_coefficient_examples() {
        assert_eq!(n_of(&[0, 0]), 0);
        assert_eq!(n_of(&[2, -2]), 2);
        for j in 1..=10i64 {
            assert_eq!(n_of(&[j, -j]), (j.pow(3) - j) / 3);
            assert_eq!(n_of(&[-j, j]), (j.pow(3) - j) / 3);
        }
        let tuples: [&[i64]; 4] = [&[3, -1, 2, -4], &[1, 1, -1, -1], &[5, -2, -2, -1], &[2, 2, -3, 1, -1, -1]];
        for j in tuples {
            assert_eq!(n_of(j), brute_n(j));
        }
    }

    #[test]
    fn n_coefficient_rejects_bad_tuples() {
        assert!(matches!(IndexTuple::new(vec![1, 2]), Err(Error::NonZeroSum(3))));
        assert!(IndexTuple::new(vec![1, -1, 0]).is_err());
    }

    #[test]
    fn n_coefficient_needs_big_integers_for_large_indices() {
        let mut idx = vec![4i64; 16];
        idx.extend([-4i64; 16]);
        let j = IndexTuple::new(idx).unwrap();
        let sums = j.partial_sums();
        assert!(n_from_sums_i128(&sums).is_none());
        assert!(n_coefficient(&j) > BigInt::from(i128::MAX));
        for t in [vec![3i64, -1, 2, -4], vec![5, -2, -2, -1]] {
            let sums = IndexTuple::new(t).unwrap().partial_sums();
            assert_eq!(BigInt::from(n_from_sums_i128(&sums).unwrap()), n_from_sums_big(&sums));
        }
    }

    #[test]
    fn n_depends_only_on_shifted_profile() {
        // cyclic re-rooting of the tuple shifts every partial sum by the same amount
        let j = [4i64, -1, -5, 2];
        let base = n_of(&j);
        for r in 1..4 {
            let rotated: Vec<i64> = (0..4).map(|i| j[(i + r) % 4]).collect();
            assert_eq!(n_of(&rotated), base);
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_and_null_space() {
        let one = WeightFunction::constant(1.0).unwrap();
        for k in 1..=3 {
            assert_eq!(zeta_invariant(&one, k).unwrap(), Complex64::zero());
        }
        let a = WeightFunction::cosine(0.3, 1).unwrap();
        for k in 1..=3 {
            assert!(zeta_invariant(&a, k).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn cosine_weight_z1() {
        let a = WeightFunction::cosine(0.5, 2).unwrap();
        let z = zeta_invariant(&a, 1).unwrap();
        assert!((z - c(0.25)).norm() < 1e-14);
        assert!((edward_z1(a.series()).unwrap() - 0.25).abs() < 1e-14);
        let r = estimate_residuals(&a, 1, DEFAULT_BUDGET).unwrap();
        assert!((r.ratios.cubic.unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cosine_weight_z2_matches_trace_value() {
        // ã = (2/√3)(1 + ½cos 2θ) has ψ(4) = Z_2(ã) = (16/9) Z_2(a) ≈ 2.1111111
        let a = WeightFunction::cosine(0.5, 2).unwrap();
        let z2 = zeta_invariant(&a, 2).unwrap();
        assert!(z2.im.abs() < 1e-12);
        assert!((16.0 / 9.0 * z2.re - 19.0 / 9.0).abs() < 1e-12, "{}", z2.re);
    }

    #[test]
    fn null_space_power_ratio_is_zero() {
        let a = WeightFunction::cosine(0.3, 1).unwrap();
        let r = estimate_residuals(&a, 2, DEFAULT_BUDGET).unwrap();
        assert!(r.ratios.power.is_none());
        assert!(r.right_sides[2] > 0.0);
        assert!(r.ratios.power_of_weight.unwrap().abs() < 1e-9);
    }

    #[test]
    fn complex_coefficients_are_accepted() {
        let a = FourierSeries::from_modes([(0, c(1.0)), (2, Complex64::new(0.1, 0.2)), (-3, c(0.05))]);
        let z = zeta_invariant_series(&a, 2, DEFAULT_BUDGET).unwrap();
        assert!(z.value.norm().is_finite());
        assert!(matches!(edward_z1(&a), Err(Error::NonRealWeight { .. })));
    }

    #[test]
    fn budget_guard() {
        let a = WeightFunction::cosine(0.2, 8).unwrap();
        assert!(matches!(
            zeta_invariant_series(a.series(), 3, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
        assert_eq!(lattice_budget(8, 3), 3 * 17u64.pow(5));
    }

    #[test]
    fn invariance_under_rotation_and_reflection() {
        let a = WeightFunction::from_nonnegative_modes(
            &[c(1.0), Complex64::new(0.1, 0.05), Complex64::new(-0.08, 0.02), c(0.04)],
            "t",
        )
        .unwrap();
        for k in 1..=2 {
            let z = zeta_invariant(&a, k).unwrap().re;
            let zs = zeta_invariant(&a.shifted(0.9), k).unwrap().re;
            let zr = zeta_invariant(&a.reflected(), k).unwrap().re;
            assert!((z - zs).abs() < 1e-12 && (z - zr).abs() < 1e-12);
        }
    }

    #[test]
    fn report_json_fields() {
        let a = WeightFunction::cosine(0.5, 2).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&estimate_residuals(&a, 1, DEFAULT_BUDGET).unwrap().to_json()).unwrap();
        for key in ["k", "M", "Z_k", "edward", "ratios", "budget_used"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
