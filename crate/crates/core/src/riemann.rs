//! The Riemann zeta function on the real line.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// `B_2, B_4, …, B_30`.
const BERNOULLI: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

const DIRECT_TERMS: usize = 16;

/// Euler–Maclaurin with `N` direct terms and the Bernoulli corrections up to `B_30`.
/// Valid for every real `x ≠ 1`; accurate while `x` is not far below zero.
fn euler_maclaurin(x: f64) -> f64 {
    let n = DIRECT_TERMS as f64;
    let mut sum: f64 = (1..DIRECT_TERMS).rev().map(|k| (k as f64).powf(-x)).sum();
    sum += n.powf(1.0 - x) / (x - 1.0) + 0.5 * n.powf(-x);
    // term_k = B_{2k}/(2k)! · x(x+1)…(x+2k−2) · N^{−x−2k+1}
    let mut rising = x;
    let mut fact = 2.0;
    let mut power = n.powf(-x - 1.0);
    for (k, b) in BERNOULLI.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            rising *= (x + j - 1.0) * (x + j);
            fact *= (j + 1.0) * (j + 2.0);
            power /= n * n;
        }
        sum += b / fact * rising * power;
    }
    sum
}

/// `ζ(x)` for real `x ≠ 1`, relative accuracy around `1e-13`.
pub fn riemann_zeta(x: f64) -> Result<f64> {
    if x == 1.0 {
        return Err(Error::PoleAtOne);
    }
    if x.is_nan() {
        return Err(Error::UnsupportedArgument(x));
    }
    if x > -1.0 {
        return Ok(euler_maclaurin(x));
    }
    // trivial zeros
    if x.fract() == 0.0 && (x as i64) % 2 == 0 {
        return Ok(0.0);
    }
    let y = 1.0 - x;
    Ok(2f64.powf(x) * PI.powf(x - 1.0) * (PI * x / 2.0).sin() * gamma(y) * euler_maclaurin(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn classical_values() {
        assert!((riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((riemann_zeta(-1.0).unwrap() + 1.0 / 12.0).abs() < 1e-12);
        assert!((riemann_zeta(0.0).unwrap() + 0.5).abs() < 1e-12);
        assert!((riemann_zeta(-3.0).unwrap() - 1.0 / 120.0).abs() < 1e-12);
        assert!((riemann_zeta(-5.0).unwrap() + 1.0 / 252.0).abs() < 1e-12);
        for k in 1..=3 {
            assert!(riemann_zeta(-2.0 * k as f64).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pole_rejected() {
        assert!(matches!(riemann_zeta(1.0), Err(Error::PoleAtOne)));
    }

    #[test]
    fn values_inside_the_strip_and_near_the_pole() {
        // ζ(1/2), ζ(3) (Apéry), ζ(-1/2)
        assert!(close(riemann_zeta(0.5).unwrap(), -1.460_354_508_809_586_8, 1e-13));
        assert!(close(riemann_zeta(3.0).unwrap(), 1.202_056_903_159_594_3, 1e-14));
        assert!(close(riemann_zeta(-0.5).unwrap(), -0.207_886_224_977_354_57, 1e-13));
        // Laurent expansion 1/(x−1) + γ
        let x = 1.0 + 1e-6;
        let gamma_e = 0.577_215_664_901_532_9;
        assert!(close(riemann_zeta(x).unwrap(), 1.0 / (x - 1.0) + gamma_e, 1e-12));
    }

    #[test]
    fn reflected_branch_reference_values() {
        for (x, expect) in [
            (-1.5, -0.025_485_201_889_833_036),
            (-3.7, 0.002_599_254_987_149_322_1),
        ] {
            assert!(close(riemann_zeta(x).unwrap(), expect, 1e-12));
        }
    }

    #[test]
    fn bernoulli_closed_forms_at_negative_odd_integers() {
        // ζ(1−2k) = −B_{2k}/(2k)
        for (k, b) in BERNOULLI.iter().enumerate().take(8) {
            let n = 2.0 * (k + 1) as f64;
            assert!(close(riemann_zeta(1.0 - n).unwrap(), -b / n, 1e-12));
        }
    }

    #[test]
    fn large_arguments_tend_to_one() {
        assert!((riemann_zeta(40.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(close(riemann_zeta(10.0).unwrap(), 1.000_994_575_127_818_1, 1e-14));
    }
}
