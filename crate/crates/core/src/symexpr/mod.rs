//! Exact symbolic expressions, differential forms on charts and numerical
//! integration of lazy integral nodes.

mod eval;
mod expr;
mod form;
mod map;
mod parse;
pub mod poly;
pub mod quad;

use thiserror::Error;

pub use eval::{Env, Program};
pub use expr::{Expr, Func, Integral, Node, Region, Var, MAX_CHART_DIM, MAX_CUBE_PARAM, MAX_SIMPLEX_PARAM};
pub use form::{fiber_integrate, DifferentialForm, MatrixForm};
pub use map::{compose_substitute, BoxBounds, SmoothMap};
pub use parse::{parse_expr, VarContext};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("undeclared variable '{name}' at offset {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("non-finite value in subexpression `{expr}` at {at}")]
    NonFinite { expr: String, at: String },
    #[error("variable {0} has no value")]
    Unassigned(String),
    #[error("cannot differentiate in {0}: it is bound by an enclosing integral")]
    DiffUnderIntegral(String),
    #[error("quadrature budget exhausted after {evaluations} evaluations (error estimate {error:e}, tolerance {tol:e})")]
    QuadratureBudget { evaluations: usize, error: f64, tol: f64 },
    #[error("variable mismatch: {0}")]
    VariableMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
}
