use num_complex::Complex64;
use proptest::prelude::*;
use steklov_core::{
    moebius_pullback, n_coefficient, normalize, random_weight, steklov_spectrum, zeta_invariant,
    Estimator, IndexTuple, MoebiusMap, Orientation, ZetaEngine,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn tuple() -> impl Strategy<Value = Vec<i64>> {
    (1usize..=3)
        .prop_flat_map(|k| prop::collection::vec(-4i64..=4, 2 * k - 1))
        .prop_map(|mut v| {
            let s: i64 = v.iter().sum();
            v.push(-s);
            v
        })
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn n_coefficient_is_invariant_under_cyclic_shift(j in tuple(), r in 0usize..6) {
        let mut rotated = j.clone();
        let len = rotated.len();
        rotated.rotate_left(r % len);
        prop_assert_eq!(
            n_coefficient(&IndexTuple::new(j).unwrap()),
            n_coefficient(&IndexTuple::new(rotated).unwrap())
        );
    }

    #[test]
    fn n_coefficient_is_nonnegative_and_even(j in tuple()) {
        let n = n_coefficient(&IndexTuple::new(j).unwrap());
        prop_assert!(n >= 0.into());
        prop_assert_eq!(n % 2, 0.into());
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn invariants_are_rotation_and_reflection_invariant(seed in 0u64..1000, alpha in 0.0..6.3f64) {
        let a = random_weight(seed, 5, 0.3, 0.6).unwrap();
        for k in 1..=2 {
            let z = zeta_invariant(&a, k).unwrap();
            let zr = zeta_invariant(&a.shifted(alpha), k).unwrap();
            let zf = zeta_invariant(&a.reflected(), k).unwrap();
            prop_assert!((z - zr).norm() <= 1e-12 * (1.0 + z.norm()));
            prop_assert!((z - zf).norm() <= 1e-12 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn invariants_scale_with_degree_2k(seed in 0u64..1000, c in 0.2..4.0f64) {
        let a = random_weight(seed, 4, 0.3, 0.6).unwrap();
        for k in 1..=2 {
            let z = zeta_invariant(&a, k).unwrap();
            let zc = zeta_invariant(&a.scaled(c).unwrap(), k).unwrap();
            prop_assert!((zc - z * c.powi(2 * k as i32)).norm() <= 1e-11 * (1.0 + zc.norm()));
        }
    }

    #[test]
    fn pullback_composition(seed in 0u64..1000, w1 in 0.0..0.4f64, w2 in 0.0..0.4f64, t in 0.0..6.3f64) {
        let a = random_weight(seed, 4, 0.2, 0.5).unwrap();
        let m1 = MoebiusMap::preserving(Complex64::from_polar(w1, t), 0.3).unwrap();
        let m2 = MoebiusMap::new(Complex64::from_polar(w2, -t), t, Orientation::Reversing).unwrap();
        let twice = moebius_pullback(&moebius_pullback(&a, &m1).unwrap(), &m2).unwrap();
        let once = moebius_pullback(&a, &m1.compose(&m2)).unwrap();
        let m = twice.order().max(once.order()) as i64;
        let diff = (-m..=m).map(|n| (twice.coeff(n) - once.coeff(n)).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "{}", diff);
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn spectrum_is_scale_equivariant(seed in 0u64..1000, c in 0.3..3.0f64) {
        let a = random_weight(seed, 4, 0.2, 0.5).unwrap();
        let sa = steklov_spectrum(&a, 32).unwrap();
        let sc = steklov_spectrum(&a.scaled(c).unwrap(), 32).unwrap();
        for (x, y) in sa.trusted().iter().zip(sc.trusted()) {
            prop_assert!((c * x - y).abs() <= 1e-11 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn psi_is_invariant_under_rotation(seed in 0u64..1000, alpha in 0.0..6.3f64) {
        let a = normalize(&random_weight(seed, 4, 0.2, 0.5).unwrap()).unwrap();
        let e = ZetaEngine::new(&a, 64).unwrap();
        let er = ZetaEngine::new(&a.shifted(alpha), 64).unwrap();
        for s in [1.0, 2.0, 3.0] {
            let p = e.trace(s, Estimator::PhiTrace).unwrap();
            let pr = er.trace(s, Estimator::PhiTrace).unwrap();
            let floor = e.edge_terms(s).unwrap().1 + er.edge_terms(s).unwrap().1;
            let tol = p.gap + pr.gap + floor;
            prop_assert!((p.value - pr.value).abs() <= tol, "s = {}: {} vs {}", s, p.value, pr.value);
        }
    }
}
