//! Seeded random expressions, forms and maps shared by the integration tests.
#![allow(dead_code)]

use leafspace_core::symexpr::{DifferentialForm, Env, Expr, SmoothMap, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth on all of R^q: no poles, logs only of positive quantities.
pub fn expr(r: &mut ChaCha8Rng, q: usize, depth: u32) -> Expr {
    let leaf = |r: &mut ChaCha8Rng| {
        if r.gen_bool(0.8) {
            Expr::x(r.gen_range(1..=q as u8))
        } else {
            Expr::ratio(r.gen_range(-5..=5), r.gen_range(1..=4))
        }
    };
    if depth == 0 {
        return leaf(r);
    }
    let a = expr(r, q, depth - 1);
    match r.gen_range(1..9) {
        1 | 2 => Expr::add(&a, &expr(r, q, depth - 1)),
        3 | 4 => Expr::mul(&a, &expr(r, q, depth - 1)),
        5 => Expr::sub(&a, &expr(r, q, depth - 1)),
        6 => a.sin(),
        7 => Expr::div(&a, &Expr::add(&Expr::int(2), &Expr::powi(&expr(r, q, depth - 1), 2))),
        _ => Expr::add(&Expr::int(1), &Expr::powi(&a, 2)).log(),
    }
}

pub fn form(r: &mut ChaCha8Rng, q: usize, degree: usize) -> DifferentialForm {
    let vars = Var::chart_vars(q);
    let mut terms = Vec::new();
    for idx in subsets(q, degree) {
        if r.gen_bool(0.7) {
            terms.push((idx, expr(r, q, 3)));
        }
    }
    DifferentialForm::from_terms(&vars, degree, terms).unwrap()
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Low-degree polynomial self-map of `[-1,1]^q` (not necessarily into).
pub fn poly_map(r: &mut ChaCha8Rng, q: usize) -> SmoothMap {
    let b = vec![(-1.0, 1.0); q];
    let comps = (1..=q)
        .map(|i| {
            let mut e = Expr::mul(&Expr::ratio(r.gen_range(1..=4), 4), &Expr::x(i as u8));
            for j in 1..=q {
                let c = Expr::ratio(r.gen_range(-3..=3), 10);
                let t = if r.gen_bool(0.5) { Expr::x(j as u8) } else { Expr::powi(&Expr::x(j as u8), 2) };
                e = Expr::add(&e, &Expr::mul(&c, &t));
            }
            e
        })
        .collect();
    SmoothMap::new(comps, b.clone(), b).unwrap()
}

pub fn point(r: &mut ChaCha8Rng, q: usize) -> Vec<f64> {
    (0..q).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Largest coefficient difference at `x`, relative to `1 + |a|`.
pub fn form_gap(a: &DifferentialForm, b: &DifferentialForm, x: &[f64]) -> f64 {
    let env = Env::at_point(x);
    let diff = a.sub(b).unwrap().max_abs(&env).unwrap();
    let scale = a.max_abs(&env).unwrap().max(b.max_abs(&env).unwrap());
    diff / (1.0 + scale)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SymbolicGaps {
    pub d_squared: f64,
    pub leibniz: f64,
    pub functoriality: f64,
    pub pullback_d: f64,
    pub finite_difference: f64,
}

impl SymbolicGaps {
    pub fn max(&self) -> f64 {
        [self.d_squared, self.leibniz, self.functoriality, self.pullback_d, self.finite_difference]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// One randomized case of the symbolic calculus checks.
pub fn symbolic_case(seed: u64) -> SymbolicGaps {
    let mut r = rng(seed);
    let q = r.gen_range(2..=4);
    let la = r.gen_range(0..q);
    let lb = r.gen_range(0..q - la);
    let a = form(&mut r, q, la);
    let b = form(&mut r, q, lb);
    let x = point(&mut r, q);
    let mut g = SymbolicGaps::default();

    let dd = a.exterior_d().unwrap().exterior_d().unwrap();
    g.d_squared = form_gap(&dd, &DifferentialForm::zero(dd.vars(), dd.degree()), &x);

    let lhs = a.wedge(&b).unwrap().exterior_d().unwrap();
    let t1 = a.exterior_d().unwrap().wedge(&b).unwrap();
    let t2 = a.wedge(&b.exterior_d().unwrap()).unwrap();
    let rhs = if la % 2 == 0 { t1.add(&t2) } else { t1.sub(&t2) }.unwrap();
    g.leibniz = form_gap(&lhs, &rhs, &x);

    let f = poly_map(&mut r, q);
    let h = poly_map(&mut r, q);
    let composite = SmoothMap::compose(&h, &f).unwrap();
    let one_step = composite.pullback(&a).unwrap();
    let two_steps = f.pullback(&h.pullback(&a).unwrap()).unwrap();
    g.functoriality = form_gap(&one_step, &two_steps, &x);
    let pd = f.pullback(&a.exterior_d().unwrap()).unwrap();
    let dp = f.pullback(&a).unwrap().exterior_d().unwrap();
    g.pullback_d = form_gap(&pd, &dp, &x);

    let e = expr(&mut r, q, 4);
    let i = r.gen_range(1..=q);
    let de = e.differentiate(Var::X(i as u8)).unwrap();
    let eps = 1e-5;
    let mut xp = x.clone();
    let mut xm = x.clone();
    xp[i - 1] += eps;
    xm[i - 1] -= eps;
    let fd = (e.eval(&Env::at_point(&xp)).unwrap() - e.eval(&Env::at_point(&xm)).unwrap()) / (2.0 * eps);
    let exact = de.eval(&Env::at_point(&x)).unwrap();
    g.finite_difference = (fd - exact).abs() / (1.0 + exact.abs());
    g
}
