use leafspace_core::basic::{invariance_residuals, invariant_forms};
use leafspace_core::category::CategoryPresentation;
use leafspace_core::scenario::{fixture_source, parse_scenario};
use proptest::prelude::*;

fn fixture(name: &str) -> CategoryPresentation {
    let s = parse_scenario(fixture_source(name).unwrap()).unwrap();
    s.presentation.category().unwrap().clone()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn reflection_invariants_are_even_or_odd_monomials(d in 0u32..9, ell in 0usize..2) {
        // f(-x) (-1)^ell = f(x): even monomials for functions, odd for 1-forms
        let want = if ell == 0 { d / 2 + 1 } else { d.div_ceil(2) };
        let basis = invariant_forms(&fixture("z2-reflection"), ell, d).unwrap();
        prop_assert_eq!(basis.dimension(), want as usize);
    }

    #[test]
    fn translation_invariants_are_constants(d in 0u32..5, ell in 0usize..2) {
        let basis = invariant_forms(&fixture("translations-q1"), ell, d).unwrap();
        prop_assert_eq!(basis.dimension(), 1);
    }

    #[test]
    fn basis_elements_have_zero_residual(which in 0usize..3, d in 0u32..5, ell in 0usize..2) {
        let p = fixture(["z2-reflection", "translations-q1", "single-chart"][which]);
        for w in invariant_forms(&p, ell, d).unwrap().basis {
            for r in invariance_residuals(&p, &w).unwrap() {
                prop_assert!(r.is_zero());
            }
        }
    }
}
