//! Seeded random weights and disk automorphisms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conformal::{MoebiusMap, Orientation};
use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, WeightFunction};

/// Grid used to find the minimum of a random weight.
pub const REPAIR_GRID: usize = 4096;
/// A weight whose minimum is at or below this is repaired.
pub const REPAIR_THRESHOLD: f64 = 0.05;
/// Minimum after repair.
pub const REPAIR_TARGET: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct RandomWeight {
    pub weight: WeightFunction,
    /// Factor applied to the deviation `a − 1`, if the repair fired.
    pub repair: Option<f64>,
}

/// `â_0 = 1`, `â_n = σρ^n (g_n + i h_n)` for `1 ≤ n ≤ M` with standard normal
/// `g_n, h_n` drawn in that order, Hermitian completion for `n < 0`.
pub fn random_weight_detailed(seed: u64, m: usize, sigma: f64, rho: f64) -> Result<RandomWeight> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {rho}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut scale = sigma;
    for _ in 1..=m {
        scale *= rho;
        let g: f64 = rng.sample(StandardNormal);
        let h: f64 = rng.sample(StandardNormal);
        coeffs.push(Complex64::new(scale * g, scale * h));
    }
    let mut series = FourierSeries::from_nonnegative_modes(&coeffs);
    let min = series
        .synthesize(REPAIR_GRID)
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    let mut repair = None;
    if min <= REPAIR_THRESHOLD {
        let factor = (1.0 - REPAIR_TARGET) / (1.0 - min);
        let deviation = series.add(&FourierSeries::constant(-1.0)).scaled(factor);
        series = deviation.add(&FourierSeries::constant(1.0));
        repair = Some(factor);
    }
    let mut meta = format!("random(seed={seed}, M={m}, sigma={sigma}, rho={rho})");
    if let Some(f) = repair {
        meta.push_str(&format!(" repaired x{f}"));
    }
    Ok(RandomWeight {
        weight: WeightFunction::new(series, meta)?,
        repair,
    })
}

pub fn random_weight(seed: u64, m: usize, sigma: f64, rho: f64) -> Result<WeightFunction> {
    Ok(random_weight_detailed(seed, m, sigma, rho)?.weight)
}

/// Automorphism with `|w| ≤ max_radius`, uniform rotation, and either orientation.
pub fn random_moebius(seed: u64, max_radius: f64) -> Result<MoebiusMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = max_radius * rng.random::<f64>().sqrt();
    let arg = std::f64::consts::TAU * rng.random::<f64>();
    let alpha = std::f64::consts::TAU * rng.random::<f64>();
    let orientation = if rng.random::<bool>() {
        Orientation::Preserving
    } else {
        Orientation::Reversing
    };
    MoebiusMap::new(Complex64::from_polar(r, arg), alpha, orientation)
}
