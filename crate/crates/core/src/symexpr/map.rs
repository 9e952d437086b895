use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use super::eval::{Env, Program};
use super::expr::{Expr, Var};
use super::form::{DifferentialForm, MatrixForm};
use super::SymError;

/// Closed axis-aligned box `Π [lo_i, hi_i]`.
pub type BoxBounds = Vec<(f64, f64)>;

/// Composes `e` with a chart map: every chart variable `x_i` of `e` is
/// replaced by `bindings[x_i]`. All chart variables of `e` must be bound.
pub fn compose_substitute(e: &Expr, bindings: &HashMap<Var, Expr>) -> Result<Expr, SymError> {
    for v in e.free_vars() {
        if matches!(v, Var::X(_)) && !bindings.contains_key(&v) {
            return Err(SymError::VariableMismatch(format!("no binding for {v}")));
        }
    }
    Ok(e.substitute(bindings))
}

#[derive(Debug)]
struct Derived {
    jacobian: Vec<Vec<Expr>>,
    det: Expr,
}

/// A smooth map `R^q ⊇ domain → codomain ⊆ R^q` given by component
/// expressions in `x1..xq`.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    components: Vec<Expr>,
    domain: BoxBounds,
    codomain: BoxBounds,
    derived: Arc<OnceLock<Result<Derived, SymError>>>,
    compiled: Arc<OnceLock<Vec<Program>>>,
}

impl PartialEq for SmoothMap {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.domain == other.domain && self.codomain == other.codomain
    }
}

/// Determinant by cofactor expansion.
fn det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor = minor(m, 0, j);
                let term = &m[0][j] * det(&minor);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

fn minor(m: &[Vec<Expr>], r: usize, c: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != c)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

impl SmoothMap {
    pub fn new(components: Vec<Expr>, domain: BoxBounds, codomain: BoxBounds) -> Result<Self, SymError> {
        let q = components.len();
        if domain.len() != q || codomain.len() != q {
            return Err(SymError::DimensionMismatch(format!(
                "{q} components for a {}-dimensional domain and {}-dimensional codomain",
                domain.len(),
                codomain.len()
            )));
        }
        for c in &components {
            for v in c.free_vars() {
                match v {
                    Var::X(i) if (i as usize) <= q => {}
                    other => {
                        return Err(SymError::VariableMismatch(format!(
                            "map component depends on {other}"
                        )))
                    }
                }
            }
        }
        Ok(SmoothMap {
            components,
            domain,
            codomain,
            derived: Arc::new(OnceLock::new()),
            compiled: Arc::new(OnceLock::new()),
        })
    }

    pub fn identity(domain: BoxBounds) -> Self {
        let q = domain.len();
        SmoothMap::new((1..=q as u8).map(Expr::x).collect(), domain.clone(), domain)
            .expect("identity is well formed")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &BoxBounds {
        &self.domain
    }

    pub fn codomain(&self) -> &BoxBounds {
        &self.codomain
    }

    pub fn is_identity(&self) -> bool {
        self.components
            .iter()
            .enumerate()
            .all(|(i, c)| *c == Expr::x(i as u8 + 1))
    }

    /// Bindings `x_i ↦ component_i`.
    pub fn images(&self) -> HashMap<Var, Expr> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| (Var::X(i as u8 + 1), c.clone()))
            .collect()
    }

    fn derived(&self) -> Result<&Derived, SymError> {
        self.derived
            .get_or_init(|| {
                let q = self.dim();
                let mut jac = Vec::with_capacity(q);
                for c in &self.components {
                    let mut row = Vec::with_capacity(q);
                    for j in 1..=q as u8 {
                        row.push(c.differentiate(Var::X(j))?);
                    }
                    jac.push(row);
                }
                let d = det(&jac);
                Ok(Derived { jacobian: jac, det: d })
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// `J[i][j] = ∂h_i/∂x_j`.
    pub fn jacobian(&self) -> Result<&Vec<Vec<Expr>>, SymError> {
        Ok(&self.derived()?.jacobian)
    }

    pub fn jacobian_det(&self) -> Result<&Expr, SymError> {
        Ok(&self.derived()?.det)
    }

    /// Symbolic inverse Jacobian `adj(J)/det J`.
    pub fn jacobian_inverse(&self) -> Result<Vec<Vec<Expr>>, SymError> {
        let d = self.derived()?;
        let q = self.dim();
        let mut inv = vec![vec![Expr::zero(); q]; q];
        if q == 1 {
            inv[0][0] = Expr::one() / &d.det;
            return Ok(inv);
        }
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                // inverse[i][j] = (-1)^{i+j} M_{ji} / det
                let cof = det(&minor(&d.jacobian, j, i));
                let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                *slot = cof / &d.det;
            }
        }
        Ok(inv)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SymError> {
        let progs = self
            .compiled
            .get_or_init(|| self.components.iter().map(Program::compile).collect());
        let env = Env::at_point(x);
        progs.iter().map(|p| p.eval(&env)).collect()
    }

    pub fn jacobian_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, SymError> {
        let env = Env::at_point(x);
        self.jacobian()?
            .iter()
            .map(|row| row.iter().map(|e| e.eval(&env)).collect())
            .collect()
    }

    pub fn det_at(&self, x: &[f64]) -> Result<f64, SymError> {
        self.jacobian_det()?.eval(&Env::at_point(x))
    }

    /// `g ∘ f`, defined on `f`'s domain with `g`'s codomain.
    pub fn compose(g: &SmoothMap, f: &SmoothMap) -> Result<SmoothMap, SymError> {
        if g.dim() != f.dim() {
            return Err(SymError::DimensionMismatch("composing maps of different dimension".into()));
        }
        let b = f.images();
        let comps = g
            .components
            .iter()
            .map(|c| compose_substitute(c, &b))
            .collect::<Result<Vec<_>, _>>()?;
        SmoothMap::new(comps, f.domain.clone(), g.codomain.clone())
    }

    /// Pullback of a chart form along this map.
    pub fn pullback(&self, form: &DifferentialForm) -> Result<DifferentialForm, SymError> {
        let vars = Var::chart_vars(self.dim());
        form.pullback(&self.images(), &vars)
    }

    pub fn pullback_matrix(&self, m: &MatrixForm) -> Result<MatrixForm, SymError> {
        let vars = Var::chart_vars(self.dim());
        m.pullback(&self.images(), &vars)
    }

    /// `J^{-1} dJ`, the connection form of the trivial flat connection
    /// transported along the map.
    pub fn maurer_cartan(&self) -> Result<MatrixForm, SymError> {
        let q = self.dim();
        let vars = Var::chart_vars(q);
        let jac = self.jacobian()?;
        let inv = self.jacobian_inverse()?;
        let mut dj = Vec::with_capacity(q * q);
        for row in jac {
            for e in row {
                dj.push(DifferentialForm::scalar(&vars, e.clone()).exterior_d()?);
            }
        }
        let dj = MatrixForm::from_entries(q, dj)?;
        let inv = MatrixForm::scalars(q, &vars, &inv.concat())?;
        inv.mul(&dj)
    }

    /// Transforms a connection matrix on the codomain chart to the domain:
    /// `J^{-1} (h^* A) J + J^{-1} dJ`.
    pub fn transport_connection(&self, a: &MatrixForm) -> Result<MatrixForm, SymError> {
        let q = self.dim();
        let vars = Var::chart_vars(q);
        let jac = MatrixForm::scalars(q, &vars, &self.jacobian()?.concat())?;
        let inv = MatrixForm::scalars(q, &vars, &self.jacobian_inverse()?.concat())?;
        let pulled = self.pullback_matrix(a)?;
        inv.mul(&pulled)?.mul(&jac)?.add(&self.maurer_cartan()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse_expr, VarContext};

    fn map2(a: &str, b: &str) -> SmoothMap {
        let ctx = VarContext::chart(2);
        SmoothMap::new(
            vec![parse_expr(a, &ctx).unwrap(), parse_expr(b, &ctx).unwrap()],
            vec![(0.0, 1.0); 2],
            vec![(-10.0, 10.0); 2],
        )
        .unwrap()
    }

    #[test]
    fn jacobian_and_inverse() {
        let m = map2("x1^2 + x2", "x1*x2");
        let x = [0.7, 0.2];
        let j = m.jacobian_at(&x).unwrap();
        assert!((j[0][0] - 1.4).abs() < 1e-14 && (j[1][1] - 0.7).abs() < 1e-14);
        let d = m.det_at(&x).unwrap();
        assert!((d - (1.4 * 0.7 - 0.2)).abs() < 1e-14);
        let env = Env::at_point(&x);
        let inv = m.jacobian_inverse().unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let s: f64 = (0..2).map(|l| inv[i][l].eval(&env).unwrap() * j[l][k]).sum();
                assert!((s - if i == k { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn maurer_cartan_chain_rule() {
        // ω_{g∘f} = J_f^{-1} (f^* ω_g) J_f + ω_f
        let f = map2("x1 + x2^2/4", "x2 + x1^3/5");
        let g = map2("exp(x1/3)", "x2 + x1*x2/7");
        let gf = SmoothMap::compose(&g, &f).unwrap();
        let lhs = gf.maurer_cartan().unwrap();
        let rhs = f.transport_connection(&g.maurer_cartan().unwrap()).unwrap();
        let env = Env::at_point(&[0.3, 0.6]);
        let diff = lhs.sub(&rhs).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(diff.entry(i, j).max_abs(&env).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_foreign_variables() {
        let e = Expr::t(1);
        assert!(SmoothMap::new(vec![e], vec![(0.0, 1.0)], vec![(0.0, 1.0)]).is_err());
        let b: HashMap<Var, Expr> = HashMap::new();
        assert!(compose_substitute(&Expr::x(1), &b).is_err());
    }
}
