mod common;

use leafspace_core::symexpr::quad::{integrate_box, integrate_simplex, QuadConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exterior_calculus_identities(seed in any::<u64>()) {
        let g = common::symbolic_case(seed);
        prop_assert!(g.d_squared < 1e-9, "{g:?}");
        prop_assert!(g.leibniz < 1e-9, "{g:?}");
        prop_assert!(g.functoriality < 1e-9, "{g:?}");
        prop_assert!(g.pullback_d < 1e-9, "{g:?}");
        prop_assert!(g.finite_difference < 1e-6, "{g:?}");
    }

    #[test]
    fn box_quadrature_is_exact_on_monomials(a in 0u32..6, b in 0u32..6, lo in -2.0f64..0.0, hi in 0.5f64..2.0) {
        let mut f = |x: &[f64]| Ok(x[0].powi(a as i32) * x[1].powi(b as i32));
        let out = integrate_box(&mut f, &[lo, 0.0], &[hi, 1.0], &QuadConfig::with_tol(1e-12)).unwrap();
        let want = (hi.powi(a as i32 + 1) - lo.powi(a as i32 + 1)) / (a as f64 + 1.0) / (b as f64 + 1.0);
        prop_assert!((out.value - want).abs() < 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn simplex_quadrature_matches_dirichlet(a in 0u32..5, b in 0u32..5) {
        // ∫_{Δ^2} t1^a t2^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let mut f = |t: &[f64]| Ok(t[0].powi(a as i32) * t[1].powi(b as i32));
        let out = integrate_simplex(&mut f, 2, &QuadConfig::with_tol(1e-12)).unwrap();
        let want = fact(a) * fact(b) / fact(a + b + 2);
        prop_assert!((out.value - want).abs() < 1e-11);
    }
}
