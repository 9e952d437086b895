use leafspace_core::chernweil::{
    bott_gv, cw_cocycle, gv, omega_h, residual_sweep, stokes_check, string_connection_forms,
    string_connection_forms_direct, u1, ArrowModel, CdrCochain, ConnectionAssignment, InvariantPolynomial,
};
use leafspace_core::collapse::OneObjectModel;
use leafspace_core::scenario::load_scenario;
use leafspace_core::symexpr::{parse_expr, Env, Expr, MatrixForm, SmoothMap, Var, VarContext};

fn elliptic() -> (leafspace_core::category::CategoryPresentation, ConnectionAssignment) {
    let s = load_scenario("mobius-elliptic3").unwrap();
    let c = s.connection.clone().unwrap();
    (s.presentation.category().unwrap().clone(), c)
}

fn planar(maps: &[(&str, &str, &str)]) -> OneObjectModel {
    let b = vec![(-1.0, 1.0), (-1.0, 1.0)];
    let ctx = VarContext::chart(2);
    OneObjectModel::new(
        b.clone(),
        maps.iter()
            .map(|(n, f, g)| {
                let comps = vec![parse_expr(f, &ctx).unwrap(), parse_expr(g, &ctx).unwrap()];
                (n.to_string(), SmoothMap::new(comps, b.clone(), b.clone()).unwrap())
            })
            .collect(),
    )
    .unwrap()
}

fn contractions() -> OneObjectModel {
    planar(&[
        ("f1", "x1/2+x2^2/10", "x2/2+x1*x2/10"),
        ("f2", "3*x1/5-x1^2/10", "2*x2/5+x1/5"),
        ("f3", "x1/2+x2/5", "x2/2+x1^2/10"),
    ])
}

#[test]
fn maurer_cartan_of_the_elliptic_map() {
    let (p, _) = elliptic();
    let s = p.strings(1);
    let link = s.iter().find(|s| s.links[0].label == "a01").unwrap();
    let w = omega_h(&link.links[0]).unwrap();
    for x in [0.5, 1.0, 1.7] {
        let v = w.entry(0, 0).coefficient(&[0]).eval(&Env::at_point(&[x])).unwrap();
        assert!((v - (-2.0 / (x + 1.0))).abs() < 1e-13);
    }
}

#[test]
fn transport_one_arrow_at_a_time_matches_composites() {
    let (p, conn) = elliptic();
    for k in 1..=3 {
        for s in p.strings(k) {
            let a = string_connection_forms(&s, &conn).unwrap();
            let b = string_connection_forms_direct(&p, &s, &conn).unwrap();
            for x in [0.6, 1.3, 1.9] {
                let src = p.chart_bounds(s.source);
                let x = src[0].0 + (src[0].1 - src[0].0) * (x - 0.5) / 1.5;
                for (fa, fb) in a.iter().zip(&b) {
                    let env = Env::at_point(&[x]);
                    let va = fa.entry(0, 0).coefficient(&[0]).eval(&env).unwrap();
                    let vb = fb.entry(0, 0).coefficient(&[0]).eval(&env).unwrap();
                    assert!((va - vb).abs() < 1e-10 * (1.0 + va.abs()), "{s}: {va} vs {vb}");
                }
            }
        }
    }
}

#[test]
fn stokes_and_closedness_with_a_nontrivial_connection() {
    let (p, conn) = elliptic();
    let c1 = InvariantPolynomial::c(1);
    let r = stokes_check(&p, &conn, &c1, 3, 10, 1e-8).unwrap();
    assert!(r.max_residual < 1e-6, "{r:?}");
    assert!(r.components_sampled > 0);
    let k = cw_cocycle("c1", &c1, &conn, 3, 1e-8);
    let r = residual_sweep(&p, &k.total_coboundary(), 3, 10).unwrap();
    assert!(r.max_residual < 1e-6, "{r:?}");
}

#[test]
fn transgression_of_c1_is_not_identically_zero() {
    let (p, _) = elliptic();
    let conn = ConnectionAssignment::trivial(3, 1);
    let k = cw_cocycle("c1", &InvariantPolynomial::c(1), &conn, 1, 1e-8);
    let r = residual_sweep(&p, &k, 1, 5).unwrap();
    assert!(r.max_residual > 0.1);
}

#[test]
fn product_with_one_is_identity_and_leibniz_holds() {
    let (p, conn) = elliptic();
    let a = cw_cocycle("c1", &InvariantPolynomial::c(1), &conn, 3, 1e-8);
    let b = u1(1);
    let one = CdrCochain::constant(1, Expr::one());
    let r = residual_sweep(&p, &one.product(&a).sub(&a), 3, 5).unwrap();
    assert!(r.max_residual < 1e-12, "{r:?}");
    let r = residual_sweep(&p, &a.product(&one).sub(&a), 3, 5).unwrap();
    assert!(r.max_residual < 1e-12, "{r:?}");
    // D(b·a) = D(b)·a + (-1)^{|b|} b·D(a), |b| = 1
    let lhs = b.product(&a).total_coboundary();
    let rhs = b.total_coboundary().product(&a).sub(&b.product(&a.total_coboundary()));
    let r = residual_sweep(&p, &lhs.sub(&rhs), 3, 5).unwrap();
    assert!(r.max_residual < 1e-8, "{r:?}");
}

#[test]
fn planar_gv_and_bott_classes_are_closed() {
    let m = contractions();
    for c in [gv(2), bott_gv(&[1, 1]), bott_gv(&[2])] {
        let r = residual_sweep(&m, &c.total_coboundary(), 4, 3).unwrap();
        assert!(r.components_sampled > 0);
        assert!(r.max_residual < 1e-8, "{}: {r:?}", c.name());
    }
    let r = residual_sweep(&m, &gv(2), 3, 3).unwrap();
    assert!(r.max_residual > 1e-6, "gv vanishes on the planar fixture");
}

#[test]
fn planar_products_reproduce_closed_formulas() {
    let m = contractions();
    let conn = ConnectionAssignment::trivial(1, 2);
    let c1 = cw_cocycle("C1", &InvariantPolynomial::c(1), &conn, 3, 1e-9);
    let c2 = cw_cocycle("C2", &InvariantPolynomial::c(2), &conn, 3, 1e-9);
    let r = residual_sweep(&m, &u1(2).product(&c1.power(2)).add(&gv(2)), 3, 3).unwrap();
    assert!(r.max_residual < 1e-8, "{r:?}");
    let r = residual_sweep(&m, &u1(2).product(&c2).add(&bott_gv(&[2])), 3, 3).unwrap();
    assert!(r.max_residual < 1e-8, "{r:?}");
}

#[test]
fn connection_assignment_checks_shape() {
    let vars = Var::chart_vars(1);
    let mut c = ConnectionAssignment::trivial(2, 1);
    assert!(c.set(0, MatrixForm::zero(1, &vars, 0)).is_err());
    assert!(c.set(0, MatrixForm::zero(2, &Var::chart_vars(2), 1)).is_err());
    assert!(c.set(1, MatrixForm::zero(1, &vars, 1)).is_ok());
}

mod random_connections {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

        #[test]
        fn stokes_and_closedness_hold(a in -3i64..4, b in -3i64..4, c in -2i64..3) {
            let (p, _) = elliptic();
            let f = Expr::add(&Expr::add(&Expr::int(a), &Expr::mul(&Expr::int(b), &Expr::x(1))), &Expr::mul(&Expr::ratio(c, 2), &Expr::powi(&Expr::x(1), 2)));
            let vars = Var::chart_vars(1);
            let one_form = leafspace_core::symexpr::DifferentialForm::from_terms(&vars, 1, [(vec![0], f)]).unwrap();
            let conn = ConnectionAssignment::uniform(3, MatrixForm::from_entries(1, vec![one_form]).unwrap()).unwrap();
            let c1 = InvariantPolynomial::c(1);
            let r = stokes_check(&p, &conn, &c1, 3, 4, 1e-8).unwrap();
            prop_assert!(r.max_residual < 1e-6, "{:?}", r);
            let k = cw_cocycle("c1", &c1, &conn, 3, 1e-8);
            let r = residual_sweep(&p, &k.total_coboundary(), 3, 4).unwrap();
            prop_assert!(r.max_residual < 1e-6, "{:?}", r);
        }

        #[test]
        fn degree_zero_cochains_commute(a in -3i64..4, b in 1i64..4) {
            // (0,l) parts: a·b = (-1)^{l l'} b·a
            let (p, _) = elliptic();
            let f = CdrCochain::constant(1, Expr::mul(&Expr::int(a), &Expr::x(1)));
            let g = CdrCochain::constant(1, Expr::add(&Expr::int(b), &Expr::powi(&Expr::x(1), 2)));
            let r = residual_sweep(&p, &f.product(&g).sub(&g.product(&f)), 0, 5).unwrap();
            prop_assert!(r.max_residual < 1e-12);
            let w = cw_cocycle("c1", &InvariantPolynomial::c(1), &ConnectionAssignment::trivial(3, 1), 1, 1e-8);
            let r = residual_sweep(&p, &f.product(&w).sub(&w.product(&f)), 1, 5).unwrap();
            prop_assert!(r.max_residual > 0.0 || a == 0, "Čech degree 1 should not commute");
        }
    }
}
