use std::sync::Arc;

use serde::Serialize;

use super::cochain::{residual_sweep, CdrCochain, Evaluator};
use super::transgression::{cw_cocycle, omega_h};
use super::{ArrowModel, ChainString, ChernWeilError, CocycleDescriptor, ConnectionAssignment, InvariantPolynomial, Link};
use crate::symexpr::{DifferentialForm, Expr, MatrixForm, Var};

/// `s` in `D(U1) = s·C1` for `D = δ + (-1)^k d`.
pub const SIGN_FLAG: i8 = -1;

fn log_abs_det(link: &Link) -> Result<Expr, ChernWeilError> {
    let det = link.map.jacobian_det()?;
    if det.is_zero() {
        return Err(ChernWeilError::Domain(format!("log of zero determinant for {}", link.label)));
    }
    Ok(det.abs().log())
}

/// `U1^{(1,0)}(h) = log|det J_h|`, all other components zero.
pub fn u1(q: usize) -> CdrCochain {
    let f: Evaluator = Arc::new(move |_m, s| Ok(DifferentialForm::scalar(&Var::chart_vars(q), log_abs_det(&s.links[0])?)));
    CdrCochain::zero("U1", q).with_component(1, 0, f)
}

fn trace_omega(link: &Link) -> Result<DifferentialForm, ChernWeilError> {
    Ok(omega_h(link)?.trace()?)
}

/// `gv(h_1..h_{q+1}) = log|det J_{h_1}| · h_1^*Tr ω_{h_2} ∧ (h_2h_1)^*Tr ω_{h_3} ∧ ⋯`
/// in bidegree `(q+1, q)`.
pub fn gv(q: usize) -> CdrCochain {
    let f: Evaluator = Arc::new(move |_m, s| {
        let mut acc = DifferentialForm::scalar(&Var::chart_vars(q), Expr::one());
        for i in 1..=q {
            acc = acc.wedge(&s.pull_to_source(i, &trace_omega(&s.links[i])?)?)?;
        }
        Ok(acc.scale(&log_abs_det(&s.links[0])?))
    });
    CdrCochain::zero("gv", q).with_component(q + 1, q, f)
}

/// `gl_q`-valued form on `U_i` pulled back to `U_0` as a section of the
/// endomorphism bundle: `J^{-1} (h^* A) J` at each step.
fn pull_matrix_to_source(s: &ChainString, i: usize, a: &MatrixForm) -> Result<MatrixForm, ChernWeilError> {
    let q = a.size();
    let vars = Var::chart_vars(q);
    let mut acc = a.clone();
    for link in s.links[..i].iter().rev() {
        let jac = MatrixForm::scalars(q, &vars, &link.map.jacobian()?.concat())?;
        let inv = MatrixForm::scalars(q, &vars, &link.map.jacobian_inverse()?.concat())?;
        acc = inv.mul(&link.map.pullback_matrix(&acc)?)?.mul(&jac)?;
    }
    Ok(acc)
}

/// Bott's cocycle for a partition `α` of `q`: consecutive blocks of
/// `α_1, α_2, …` arrows after `h_1`, each contributing the trace of the
/// ordered product of its `ω`'s, every factor moved to the block's first
/// chart as an endomorphism-valued form.
pub fn bott_gv(alpha: &[usize]) -> CdrCochain {
    let q: usize = alpha.iter().sum();
    let alpha = alpha.to_vec();
    let name = format!(
        "gv:{}",
        alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    );
    let f: Evaluator = Arc::new(move |_m, s| {
        let mut acc = DifferentialForm::scalar(&Var::chart_vars(q), Expr::one());
        let mut start = 1;
        for &len in &alpha {
            let block = s.tail(start);
            let mut prod = omega_h(&block.links[0])?;
            for j in 1..len {
                prod = prod.mul(&pull_matrix_to_source(&block, j, &omega_h(&block.links[j])?)?)?;
            }
            acc = acc.wedge(&s.pull_to_source(start, &prod.trace()?)?)?;
            start += len;
        }
        Ok(acc.scale(&log_abs_det(&s.links[0])?))
    });
    CdrCochain::zero(name, q).with_component(q + 1, q, f)
}

/// Chern character `Σ_{n<=N} Tr(Ω^n)/n!` of the full simplex curvature,
/// transgressed string by string.
pub fn chern_character(order: u32, conn: &ConnectionAssignment, max_k: usize, tol: f64) -> CdrCochain {
    cw_cocycle(&format!("ch:{order}"), &InvariantPolynomial::chern_character(order), conn, max_k, tol)
}

/// Closed-formula cocycles for the trivial connection. Invariant
/// polynomials go through the transgression.
pub fn closed_formula_cocycle(
    d: &CocycleDescriptor,
    q: usize,
    charts: usize,
    max_k: usize,
    tol: f64,
) -> Result<CdrCochain, ChernWeilError> {
    d.validate(q)?;
    let conn = ConnectionAssignment::trivial(charts, q);
    Ok(match d {
        CocycleDescriptor::U1 => u1(q),
        CocycleDescriptor::Gv => gv(q),
        CocycleDescriptor::BottGv(a) => bott_gv(a),
        CocycleDescriptor::ChernCharacter(n) => chern_character(*n, &conn, max_k, tol),
        CocycleDescriptor::Invariant(p) => cw_cocycle(&d.name(), p, &conn, max_k, tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCalibration {
    /// `max |D(U1) − s·C1|` for `s = +1` and `s = −1`.
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// `max |δU1|`.
    pub delta_u1: f64,
    /// The sign that fits, if exactly one does or both do (vanishing `C1`).
    pub fitted: Option<i8>,
    pub consistent_with_flag: bool,
}

/// Fits `s` in `D(U1) = s·C1` on one presentation.
pub fn calibrate_sign(
    model: &dyn ArrowModel,
    max_k: usize,
    points: usize,
    tol: f64,
    threshold: f64,
) -> Result<SignCalibration, ChernWeilError> {
    let q = model.dim();
    let c1 = cw_cocycle("C1", &InvariantPolynomial::c(1), &ConnectionAssignment::trivial(model.chart_count(), q), max_k, tol);
    let du = u1(q).total_coboundary();
    let plus = residual_sweep(model, &du.sub(&c1), max_k, points)?.max_residual;
    let minus = residual_sweep(model, &du.add(&c1), max_k, points)?.max_residual;
    let delta_only = CdrCochain::zero("δU1", q).with_component(2, 0, {
        let du = du.clone();
        Arc::new(move |m, s| du.eval(m, 0, s))
    });
    let delta_u1 = residual_sweep(model, &delta_only, max_k, points)?.max_residual;
    let fitted = match (plus < threshold, minus < threshold) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        // C1 vanishes, both signs fit
        (true, true) => Some(SIGN_FLAG),
        (false, false) => None,
    };
    let consistent_with_flag = if SIGN_FLAG > 0 { plus < threshold } else { minus < threshold };
    Ok(SignCalibration {
        residual_plus: plus,
        residual_minus: minus,
        delta_u1,
        fitted,
        consistent_with_flag,
    })
}
