use std::sync::Arc;

use rayon::prelude::*;

use super::cochain::{string_points, CdrCochain, Evaluator, ResidualReport};
use super::{chart_zero, ArrowModel, ChainString, ChernWeilError, ConnectionAssignment, InvariantPolynomial, Link};
use crate::symexpr::{fiber_integrate, DifferentialForm, Env, Expr, MatrixForm, Var};

/// `ω_h = J_h^{-1} dJ_h`.
pub fn omega_h(link: &Link) -> Result<MatrixForm, ChernWeilError> {
    let det = link.map.jacobian_det()?;
    if det.is_zero() {
        return Err(ChernWeilError::Domain(format!("Jacobian of {} is identically singular", link.label)));
    }
    Ok(link.map.maurer_cartan()?)
}

fn transport(link: &Link, a: &MatrixForm) -> Result<MatrixForm, ChernWeilError> {
    if a.is_zero() {
        omega_h(link)
    } else {
        Ok(link.map.transport_connection(a)?)
    }
}

/// `(∇_{U_0}, ∇_{h_1}, ∇_{h_2 h_1}, …)` as connection matrices on `U_0`,
/// each transported one arrow at a time.
pub fn string_connection_forms(s: &ChainString, conn: &ConnectionAssignment) -> Result<Vec<MatrixForm>, ChernWeilError> {
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(conn.get(s.source));
    for i in 1..=s.len() {
        let mut a = conn.get(s.chart(i));
        for link in s.links[..i].iter().rev() {
            a = transport(link, &a)?;
        }
        out.push(a);
    }
    Ok(out)
}

/// Same sequence, transporting along the composite maps in one step.
pub fn string_connection_forms_direct(
    model: &dyn ArrowModel,
    s: &ChainString,
    conn: &ConnectionAssignment,
) -> Result<Vec<MatrixForm>, ChernWeilError> {
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(conn.get(s.source));
    let mut composite: Option<Link> = None;
    for (i, link) in s.links.iter().enumerate() {
        composite = match composite {
            None => Some(link.clone()),
            Some(c) => model.compose(link, &c)?,
        };
        let a = conn.get(s.chart(i + 1));
        out.push(match &composite {
            Some(c) => transport(c, &a)?,
            None => a,
        });
    }
    Ok(out)
}

/// Fiber-first integral over `Δ^k` of `P(Ω(t))`, where
/// `ω(t) = ω_0 + Σ t_i (ω_i − ω_0)` on `Δ^k × U` and `Ω(t) = dω(t) + ω(t)∧ω(t)`
/// with the total differential. `P` must be homogeneous of degree `p`; the
/// result has degree `2p − k`.
pub fn cs_transgression(
    poly: &InvariantPolynomial,
    forms: &[MatrixForm],
    tol: f64,
) -> Result<DifferentialForm, ChernWeilError> {
    let degrees = poly.degrees();
    let p = match degrees.as_slice() {
        [] => return Ok(chart_zero(forms[0].size(), 0)),
        [p] => *p as usize,
        _ => return Err(ChernWeilError::Unsupported("transgression needs a homogeneous polynomial".into())),
    };
    let q = forms[0].size();
    let k = forms.len() - 1;
    if 2 * p < k {
        return Err(ChernWeilError::Unsupported(format!("degree-{p} polynomial on a {k}-simplex")));
    }
    let l = 2 * p - k;
    if l > q {
        return Ok(chart_zero(q, l));
    }
    let chart = Var::chart_vars(q);
    let simplex = Var::simplex_vars(k);
    let all: Vec<Var> = chart.iter().chain(simplex.iter()).copied().collect();
    let base = forms[0].embed(&all)?;
    let mut omega = base.clone();
    for (i, f) in forms.iter().enumerate().skip(1) {
        let diff = f.embed(&all)?.sub(&base)?;
        omega = omega.add(&diff.scale(&Expr::var(simplex[i - 1])))?;
    }
    let curvature = omega.exterior_d()?.add(&omega.mul(&omega)?)?;
    let top = poly.apply(&curvature)?;
    Ok(fiber_integrate(&top, &simplex, tol)?)
}

fn homogeneous_parts(poly: &InvariantPolynomial) -> Vec<(usize, InvariantPolynomial)> {
    poly.degrees()
        .into_iter()
        .map(|p| (p as usize, poly.homogeneous(p)))
        .collect()
}

/// The transversal Chern–Weil cochain of `poly`: component `(k, 2p − k)` on
/// a string is the transgression over its connection sequence.
pub fn cw_cocycle(
    name: &str,
    poly: &InvariantPolynomial,
    conn: &ConnectionAssignment,
    max_k: usize,
    tol: f64,
) -> CdrCochain {
    let q = conn.dim();
    let conn = Arc::new(conn.clone());
    let mut out = CdrCochain::zero(name, q);
    for (p, part) in homogeneous_parts(poly) {
        for k in 0..=max_k.min(2 * p) {
            let l = 2 * p - k;
            if l > q {
                continue;
            }
            let part = part.clone();
            let conn = conn.clone();
            let f: Evaluator = Arc::new(move |_m, s| {
                let forms = string_connection_forms(s, &conn)?;
                cs_transgression(&part, &forms, tol)
            });
            out = out.with_component(k, l, f);
        }
    }
    out
}

/// `H(h_1..h_k) = Σ_i (-1)^i F(∇'_0..∇'_i, ∇_i..∇_k)`, a cochain of total
/// degree `2p − 1` with `D(H) = k(∇) − k(∇')`.
pub fn connection_homotopy(
    poly: &InvariantPolynomial,
    conn: &ConnectionAssignment,
    conn_prime: &ConnectionAssignment,
    max_k: usize,
    tol: f64,
) -> CdrCochain {
    let q = conn.dim();
    let conn = Arc::new(conn.clone());
    let conn_prime = Arc::new(conn_prime.clone());
    let mut out = CdrCochain::zero(format!("H({poly})"), q);
    for (p, part) in homogeneous_parts(poly) {
        if p == 0 {
            continue;
        }
        for k in 0..=max_k.min(2 * p - 1) {
            let l = 2 * p - 1 - k;
            if l > q {
                continue;
            }
            let part = part.clone();
            let (conn, conn_prime) = (conn.clone(), conn_prime.clone());
            let f: Evaluator = Arc::new(move |_m, s| {
                let a = string_connection_forms(s, &conn)?;
                let b = string_connection_forms(s, &conn_prime)?;
                let mut acc = chart_zero(q, l);
                for i in 0..=s.len() {
                    let seq: Vec<MatrixForm> = b[..=i].iter().chain(a[i..].iter()).cloned().collect();
                    let v = cs_transgression(&part, &seq, tol)?;
                    acc = if i % 2 == 0 { acc.add(&v)? } else { acc.sub(&v)? };
                }
                Ok(acc)
            });
            out = out.with_component(k, l, f);
        }
    }
    out
}

/// Residual of `(-1)^k d F(∇_0..∇_k) + Σ_i (-1)^i F(∇_0..∇̂_i..∇_k)` over all
/// strings of length `<= max_k`, for every homogeneous part of `poly`.
pub fn stokes_check(
    model: &dyn ArrowModel,
    conn: &ConnectionAssignment,
    poly: &InvariantPolynomial,
    max_k: usize,
    points: usize,
    tol: f64,
) -> Result<ResidualReport, ChernWeilError> {
    let q = conn.dim();
    let mut jobs: Vec<(usize, InvariantPolynomial, ChainString)> = Vec::new();
    let mut strings = 0;
    for k in 0..=max_k {
        let ss = model.strings(k);
        strings += ss.len();
        for (p, part) in homogeneous_parts(poly) {
            if 2 * p < k || 2 * p - k + 1 > q {
                continue;
            }
            for s in &ss {
                jobs.push((p, part.clone(), s.clone()));
            }
        }
    }
    let seed = model.seed();
    let results: Vec<(usize, f64, String)> = jobs
        .par_iter()
        .map(|(p, part, s)| -> Result<(usize, f64, String), ChernWeilError> {
            let k = s.len();
            let l = 2 * p - k;
            let forms = string_connection_forms(s, conn)?;
            let mut acc = chart_zero(q, l + 1);
            let d = cs_transgression(part, &forms, tol)?.exterior_d()?;
            acc = if k % 2 == 0 { acc.add(&d)? } else { acc.sub(&d)? };
            if k > 0 {
                for i in 0..=k {
                    let seq: Vec<MatrixForm> =
                        forms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.clone()).collect();
                    let v = cs_transgression(part, &seq, tol)?;
                    acc = if i % 2 == 0 { acc.add(&v)? } else { acc.sub(&v)? };
                }
            }
            let pts = string_points(model, s, points, seed)?;
            if acc.is_zero() {
                return Ok((pts.len(), 0.0, String::new()));
            }
            let compiled = acc.compile();
            let mut worst = (0.0f64, String::new());
            for x in &pts {
                for (_, v) in compiled.evaluate(&Env::at_point(x))? {
                    if !(v.abs() <= worst.0) {
                        worst = (v.abs(), format!("degree {p} on {s} at x={x:?}"));
                    }
                }
            }
            Ok((pts.len(), worst.0, worst.1))
        })
        .collect::<Result<_, _>>()?;
    let mut report = ResidualReport {
        cochain: format!("stokes({poly})"),
        max_k,
        strings,
        points_per_chart: points,
        components_sampled: 0,
        max_residual: 0.0,
        worst: None,
    };
    for (n, v, w) in results {
        report.components_sampled += n;
        if !(v <= report.max_residual) {
            report.max_residual = v;
            report.worst = Some(w);
        }
    }
    Ok(report)
}
