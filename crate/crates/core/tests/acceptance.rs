//! One line per acceptance criterion, with its measured value and runtime.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use leafspace_core::basic::invariant_forms;
use leafspace_core::category::CategoryPresentation;
use leafspace_core::cech::{betti, delta_squared_zero, duality_check, CoefficientSystem};
use leafspace_core::chernweil::{
    calibrate_sign, closed_formula_cocycle, connection_homotopy, cw_cocycle, gv, residual_sweep, stokes_check, u1,
    ArrowModel, CocycleDescriptor, ConnectionAssignment, InvariantPolynomial, SIGN_FLAG,
};
use leafspace_core::collapse::{cech_cocycle_check, collapse_cocycle, thurston_gv, OneObjectModel};
use leafspace_core::scenario::{fixture_names, load_scenario, Scenario};

const CATEGORY_FIXTURES: [&str; 5] = ["circle-cover", "z2-reflection", "single-chart", "translations-q1", "mobius-elliptic3"];

fn scenario(name: &str) -> Scenario {
    load_scenario(name).unwrap()
}

fn category(name: &str) -> CategoryPresentation {
    scenario(name).presentation.category().unwrap().clone()
}

fn rotations() -> OneObjectModel {
    scenario("mobius-rotations").presentation.one_object().unwrap().clone()
}

/// Möbius coefficients `(a, b, c, d)` of the rotation fixture, by id.
const MOBIUS: [(&str, [f64; 4]); 4] = [
    ("r1", [24.0, -7.0, 7.0, 24.0]),
    ("r2", [40.0, 9.0, -9.0, 40.0]),
    ("r4", [38.0, -25.0, 20.0, 58.0]),
    ("r5", [507.0, 110.0, -99.0, 573.0]),
];

/// Precomputed at 40 digits with an independent arbitrary-precision quadrature.
const REFERENCES: [([&str; 3], f64); 4] = [
    (["r1", "r2", "r4"], -0.00280436264948860700810925371153),
    (["r4", "r5", "r1"], -0.0338592339431153886116579919412),
    (["r2", "r4", "r1"], 0.0317629894986535422279760681701),
    (["r5", "r4", "r2"], -0.0170038269503864304456146794869),
];

fn coeffs(name: &str) -> [f64; 4] {
    MOBIUS.iter().find(|(n, _)| *n == name).unwrap().1
}

/// Thurston's integral for Möbius maps from closed-form derivatives:
/// `σ' = (ad-bc)/(cx+d)^2`, `σ''/σ' = -2c/(cx+d)`; composite Simpson rule.
fn mobius_oracle(s1: [f64; 4], s2: [f64; 4], s3: [f64; 4]) -> f64 {
    let end = s1[1] / s1[3];
    let f = |t: f64| {
        let [a, b, c, d] = s2;
        let d2 = (a * d - b * c) / (c * t + d).powi(2);
        let y = (a * t + b) / (c * t + d);
        d2.abs().ln() * (-2.0 * s3[2] / (s3[2] * y + s3[3])) * d2
    };
    let n = 4000;
    let h = end / n as f64;
    let mut acc = f(0.0) + f(end);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, Option<Duration>, Box<dyn Fn() -> Outcome>);

fn criteria() -> Vec<Criterion> {
    let secs = |s: u64| Some(Duration::from_secs(s));
    vec![
        (1, "exact coboundary squares vanish, degrees <= 8", secs(10), Box::new(|| {
            let mut worst = None;
            for name in CATEGORY_FIXTURES {
                let p = category(name);
                for c in [CoefficientSystem::Trivial, CoefficientSystem::Orientation] {
                    if let Some(k) = delta_squared_zero(&p, c, 8).unwrap() {
                        worst = Some(format!("{name}/{} fails at degree {k}", c.name()));
                    }
                }
            }
            match worst {
                None => check(true, "5 presentations x 2 coefficient systems"),
                Some(w) => check(false, w),
            }
        })),
        (2, "points foliations: circle-cover (1,1,0,..), single-chart (1,0,..)", secs(1), Box::new(|| {
            let a = betti(&category("circle-cover"), CoefficientSystem::Trivial, 6).unwrap().betti;
            let b = betti(&category("single-chart"), CoefficientSystem::Trivial, 6).unwrap().betti;
            check(a == [1, 1, 0, 0, 0, 0, 0] && b == [1, 0, 0, 0, 0, 0, 0], format!("{a:?} {b:?}"))
        })),
        (3, "z2-reflection trivial coefficients (1,0,..) to degree 8", secs(1), Box::new(|| {
            let b = betti(&category("z2-reflection"), CoefficientSystem::Trivial, 8).unwrap().betti;
            check(b == [1, 0, 0, 0, 0, 0, 0, 0, 0], format!("{b:?}"))
        })),
        (4, "duality dimensions agree, degrees <= 6", secs(5), Box::new(|| {
            let failed: Vec<&str> = CATEGORY_FIXTURES
                .iter()
                .filter(|n| !duality_check(&category(n), 6).unwrap().pass)
                .copied()
                .collect();
            check(failed.is_empty(), format!("failing: {failed:?}"))
        })),
        (5, "Chern-Simons Stokes identity on mobius-elliptic3", secs(60), Box::new(|| {
            let s = scenario("mobius-elliptic3");
            let p = s.presentation.model();
            let mut worst: f64 = 0.0;
            for conn in [ConnectionAssignment::trivial(3, 1), s.connection.clone().unwrap()] {
                let r = stokes_check(p, &conn, &InvariantPolynomial::c(1), 3, 10, 1e-8).unwrap();
                worst = worst.max(r.max_residual);
            }
            check(worst < 1e-6, format!("max residual {worst:.3e}"))
        })),
        (6, "D(cw(c1)) and D(gv) vanish on mobius-elliptic3", secs(60), Box::new(|| {
            let s = scenario("mobius-elliptic3");
            let p = s.presentation.model();
            let c1 = cw_cocycle("c1", &InvariantPolynomial::c(1), &s.connection.clone().unwrap(), 3, 1e-8);
            let a = residual_sweep(p, &c1.total_coboundary(), 3, 10).unwrap().max_residual;
            let c1t = closed_formula_cocycle(&CocycleDescriptor::parse("c1").unwrap(), 1, 3, 3, 1e-8).unwrap();
            let b = residual_sweep(p, &c1t.total_coboundary(), 3, 10).unwrap().max_residual;
            let c = residual_sweep(p, &gv(1).total_coboundary(), 3, 10).unwrap().max_residual;
            check(a.max(b).max(c) < 1e-6, format!("c1 {:.3e}, gv {c:.3e}", a.max(b)))
        })),
        (7, "c1^2 vanishes componentwise (q = 1)", secs(30), Box::new(|| {
            let mut worst: f64 = 0.0;
            let mut sampled = 0;
            for name in ["mobius-elliptic3", "translations-q1"] {
                let s = scenario(name);
                let p = s.presentation.model();
                let mut conns = vec![ConnectionAssignment::trivial(p.chart_count(), 1)];
                conns.extend(s.connection.clone());
                for conn in conns {
                    let c = cw_cocycle("c1^2", &InvariantPolynomial::word(&[1, 1]), &conn, 4, 1e-8);
                    let r = residual_sweep(p, &c, 4, 10).unwrap();
                    worst = worst.max(r.max_residual);
                    sampled += r.components_sampled;
                }
            }
            check(worst < 1e-10 && sampled > 0, format!("max |coefficient| {worst:.3e} over {sampled} evaluations"))
        })),
        (8, "connection homotopy D(H) = k(trivial) - k(x dx)", secs(120), Box::new(|| {
            let s = scenario("mobius-elliptic3");
            let p = s.presentation.model();
            let c1 = InvariantPolynomial::c(1);
            let (a, b) = (ConnectionAssignment::trivial(3, 1), s.connection.clone().unwrap());
            let h = connection_homotopy(&c1, &a, &b, 3, 1e-8);
            let target = h
                .total_coboundary()
                .sub(&cw_cocycle("k", &c1, &a, 3, 1e-8).sub(&cw_cocycle("k'", &c1, &b, 3, 1e-8)));
            let r = residual_sweep(p, &target, 3, 10).unwrap();
            check(r.max_residual < 1e-6 && r.components_sampled > 0, format!("max residual {:.3e}", r.max_residual))
        })),
        (9, "transgression calibration and U1.C1 = gv", None, Box::new(|| {
            let mut lines = Vec::new();
            let mut ok = true;
            for name in fixture_names() {
                let s = scenario(name);
                let p = s.presentation.model();
                let cal = calibrate_sign(p, 3, 10, 1e-8, 1e-6).unwrap();
                ok &= cal.delta_u1 < 1e-10 && cal.consistent_with_flag && cal.fitted == Some(SIGN_FLAG);
                let c1 = cw_cocycle("C1", &InvariantPolynomial::c(1), &ConnectionAssignment::trivial(p.chart_count(), 1), 3, 1e-8);
                let r = residual_sweep(p, &u1(1).product(&c1).sub(&gv(1)), 3, 10).unwrap();
                ok &= r.max_residual < 1e-6;
                lines.push(format!("{name}: s={:?} dU1={:.1e} prod={:.1e}", cal.fitted, cal.delta_u1, r.max_residual));
            }
            check(ok, format!("s = {SIGN_FLAG}; {}", lines.join("; ")))
        })),
        (10, "collapse agrees with Thurston's integral", secs(60), Box::new(|| {
            let m = rotations();
            let mut worst: f64 = 0.0;
            let mut nonzero = 0;
            for (names, reference) in REFERENCES {
                let s = m.string_by_names(&names).unwrap();
                let maps: Vec<_> = s.links.iter().map(|l| l.map.clone()).collect();
                let t = thurston_gv(&maps[0], &maps[1], &maps[2], 1e-10).unwrap();
                let c = collapse_cocycle(&m, &gv(1), 3, &s, 1e-10).unwrap().value;
                let oracle = mobius_oracle(coeffs(names[0]), coeffs(names[1]), coeffs(names[2]));
                worst = worst.max((c - t).abs()).max((t - reference).abs()).max((oracle - reference).abs());
                if reference.abs() > 1e-3 {
                    nonzero += 1;
                }
            }
            check(worst < 1e-5 && nonzero >= 1, format!("4 triples, {nonzero} nonzero references, max gap {worst:.3e}"))
        })),
        (11, "Thurston cocycle identity on 20 sampled 4-tuples", None, Box::new(|| {
            let m = rotations();
            let tuples = m.sample_tuples(4, 20, m.seed());
            let t = cech_cocycle_check(&m, |s| thurston_gv(&s.links[0].map, &s.links[1].map, &s.links[2].map, 1e-10), 3, &tuples)
                .unwrap();
            let c = cech_cocycle_check(&m, |s| Ok(collapse_cocycle(&m, &gv(1), 3, s, 1e-10)?.value), 3, &tuples).unwrap();
            let worst = t.max_residual.max(c.max_residual);
            check(worst < 1e-4 && t.tuples == 20, format!("max residual {worst:.3e}"))
        })),
        (12, "symbolic calculus suite, 100 randomized cases", secs(5), Box::new(|| {
            let mut worst = common::SymbolicGaps::default();
            for seed in 0..100 {
                let g = common::symbolic_case(seed);
                worst.d_squared = worst.d_squared.max(g.d_squared);
                worst.leibniz = worst.leibniz.max(g.leibniz);
                worst.functoriality = worst.functoriality.max(g.functoriality.max(g.pullback_d));
                worst.finite_difference = worst.finite_difference.max(g.finite_difference);
            }
            let ok = worst.d_squared < 1e-9 && worst.leibniz < 1e-9 && worst.functoriality < 1e-9 && worst.finite_difference < 1e-6;
            check(
                ok,
                format!(
                    "d^2 {:.1e}, Leibniz {:.1e}, pullback {:.1e}, finite differences {:.1e}",
                    worst.d_squared, worst.leibniz, worst.functoriality, worst.finite_difference
                ),
            )
        })),
        (13, "z2-reflection invariant forms: 2 at (0,2), 1 at (1,2)", None, Box::new(|| {
            let p = category("z2-reflection");
            let a = invariant_forms(&p, 0, 2).unwrap().dimension();
            let b = invariant_forms(&p, 1, 2).unwrap().dimension();
            check(a == 2 && b == 1, format!("dims {a}, {b}"))
        })),
    ]
}

#[test]
fn acceptance() {
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (n, title, limit, run) in criteria() {
        let t = Instant::now();
        let o = run();
        let dt = t.elapsed();
        let in_time = limit.is_none_or(|l| dt < l);
        let pass = o.pass && in_time;
        let budget = limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        writeln!(
            out,
            "criterion {n:>2} {}  {title}: {} [{:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            dt.as_secs_f64()
        )
        .unwrap();
        if !pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
