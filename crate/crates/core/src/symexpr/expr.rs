use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::SymError;

/// Maximum chart dimension addressable by [`Var::X`].
pub const MAX_CHART_DIM: u8 = 8;
/// Maximum simplex parameter index addressable by [`Var::T`].
pub const MAX_SIMPLEX_PARAM: u8 = 15;
/// Maximum cube parameter index addressable by [`Var::S`].
pub const MAX_CUBE_PARAM: u8 = 16;

/// Number of evaluation slots an [`crate::symexpr::Env`] carries.
pub const N_SLOTS: usize = 8 + 16 + 16;

/// A coordinate variable.
///
/// `X(i)` are chart coordinates `x1..xq` (1-based), `T(i)` simplex parameters
/// `t0..tk` and `S(i)` cube parameters `s1..ss` (1-based). Cube parameters are
/// kept as a separate kind so that pulling an expression back along a cube
/// map never captures the bound variables of a simplex integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T(u8),
    X(u8),
    S(u8),
}

impl Var {
    pub fn slot(self) -> usize {
        match self {
            Var::X(i) => {
                debug_assert!((1..=MAX_CHART_DIM).contains(&i));
                (i - 1) as usize
            }
            Var::T(i) => {
                debug_assert!(i <= MAX_SIMPLEX_PARAM);
                8 + i as usize
            }
            Var::S(i) => {
                debug_assert!((1..=MAX_CUBE_PARAM).contains(&i));
                24 + (i - 1) as usize
            }
        }
    }

    /// Chart coordinates `x1..xq`.
    pub fn chart_vars(q: usize) -> Vec<Var> {
        (1..=q as u8).map(Var::X).collect()
    }

    /// Simplex parameters `t1..tk` (the eliminated `t0` is not included).
    pub fn simplex_vars(k: usize) -> Vec<Var> {
        (1..=k as u8).map(Var::T).collect()
    }

    pub fn cube_vars(s: usize) -> Vec<Var> {
        (1..=s as u8).map(Var::S).collect()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::T(i) => write!(f, "t{i}"),
            Var::S(i) => write!(f, "s{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Abs,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Integration domain of a definite-integral node.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Axis-aligned box, one interval per integration variable.
    Box(Vec<(f64, f64)>),
    /// Standard simplex `{t_i >= 0, sum t_i <= 1}` in the integration variables.
    Simplex,
    /// Unit cube `[0,1]^s`.
    Cube,
    /// Oriented interval `a -> b`; reversed orientation flips the sign.
    Interval(f64, f64),
}

/// A lazy definite integral. Evaluated by adaptive quadrature on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Integral {
    pub integrand: Expr,
    pub vars: Vec<Var>,
    pub region: Region,
    pub tol: f64,
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(BigRational),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Func(Func, Expr),
    Integral(Integral),
}

/// Immutable, cheaply clonable expression handle.
///
/// Constructors fold constants and absorb zeros and ones; there is no
/// canonical form, so two equal functions may have different trees.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    fn mk(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: BigRational) -> Expr {
        Expr::mk(Node::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(rat(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::constant(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr::mk(Node::Var(v))
    }

    pub fn x(i: u8) -> Expr {
        Expr::var(Var::X(i))
    }

    pub fn t(i: u8) -> Expr {
        Expr::var(Var::T(i))
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match &*self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => return Expr::constant(x + y),
            (Some(x), _) if x.is_zero() => return b.clone(),
            (_, Some(y)) if y.is_zero() => return a.clone(),
            _ => {}
        }
        if let Node::Neg(inner) = b.node() {
            return Expr::sub(a, inner);
        }
        Expr::mk(Node::Add(a.clone(), b.clone()))
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => return Expr::constant(x - y),
            (Some(x), _) if x.is_zero() => return Expr::neg(b),
            (_, Some(y)) if y.is_zero() => return a.clone(),
            _ => {}
        }
        if a == b {
            return Expr::zero();
        }
        Expr::mk(Node::Sub(a.clone(), b.clone()))
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => return Expr::constant(x * y),
            (Some(x), _) if x.is_zero() => return Expr::zero(),
            (_, Some(y)) if y.is_zero() => return Expr::zero(),
            (Some(x), _) if x.is_one() => return b.clone(),
            (_, Some(y)) if y.is_one() => return a.clone(),
            (Some(x), _) if (-x).is_one() => return Expr::neg(b),
            (_, Some(y)) if (-y).is_one() => return Expr::neg(a),
            _ => {}
        }
        Expr::mk(Node::Mul(a.clone(), b.clone()))
    }

    pub fn div(a: &Expr, b: &Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if !y.is_zero() => return Expr::constant(x / y),
            (Some(x), _) if x.is_zero() => return Expr::zero(),
            (_, Some(y)) if y.is_one() => return a.clone(),
            (_, Some(y)) if (-y).is_one() => return Expr::neg(a),
            _ => {}
        }
        Expr::mk(Node::Div(a.clone(), b.clone()))
    }

    pub fn neg(a: &Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::mk(Node::Neg(a.clone())),
        }
    }

    pub fn powi(a: &Expr, n: i32) -> Expr {
        match n {
            0 => return Expr::one(),
            1 => return a.clone(),
            _ => {}
        }
        if let Some(c) = a.as_const() {
            if !(c.is_zero() && n < 0) {
                let p = num_traits::pow::pow(c.clone(), n.unsigned_abs() as usize);
                return Expr::constant(if n < 0 { p.recip() } else { p });
            }
        }
        Expr::mk(Node::Pow(a.clone(), n))
    }

    pub fn func(f: Func, a: &Expr) -> Expr {
        if let Some(c) = a.as_const() {
            match f {
                Func::Exp if c.is_zero() => return Expr::one(),
                Func::Log if c.is_one() => return Expr::zero(),
                Func::Abs => return Expr::constant(c.abs()),
                Func::Sin if c.is_zero() => return Expr::zero(),
                Func::Cos if c.is_zero() => return Expr::one(),
                _ => {}
            }
        }
        Expr::mk(Node::Func(f, a.clone()))
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn log(&self) -> Expr {
        Expr::func(Func::Log, self)
    }

    pub fn abs(&self) -> Expr {
        Expr::func(Func::Abs, self)
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self)
    }

    pub fn pow(&self, n: i32) -> Expr {
        Expr::powi(self, n)
    }

    /// `∫_region integrand d(vars)`. Folds to zero when the integrand is zero.
    pub fn integral(integrand: Expr, vars: Vec<Var>, region: Region, tol: f64) -> Expr {
        if integrand.is_zero() {
            return Expr::zero();
        }
        Expr::mk(Node::Integral(Integral {
            integrand,
            vars,
            region,
            tol,
        }))
    }

    /// Variables the expression depends on. Integration variables are bound.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        self.collect_free(&mut out, &mut seen);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(self.ptr_key()) {
            return;
        }
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_free(out, seen);
                b.collect_free(out, seen);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.collect_free(out, seen),
            Node::Integral(int) => {
                for v in int.integrand.free_vars() {
                    if !int.vars.contains(&v) {
                        out.insert(v);
                    }
                }
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.free_vars().contains(&v)
    }

    pub fn contains_integral(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.contains_integral() || b.contains_integral()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.contains_integral(),
            Node::Integral(_) => true,
        }
    }

    /// Simultaneous substitution of free variables. Variables not bound are
    /// left in place; bound integration variables are never substituted.
    pub fn substitute(&self, bindings: &HashMap<Var, Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(bindings, &mut memo)
    }

    fn subst_memo(&self, b: &HashMap<Var, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr_key()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => b.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(x, y) => Expr::add(&x.subst_memo(b, memo), &y.subst_memo(b, memo)),
            Node::Sub(x, y) => Expr::sub(&x.subst_memo(b, memo), &y.subst_memo(b, memo)),
            Node::Mul(x, y) => Expr::mul(&x.subst_memo(b, memo), &y.subst_memo(b, memo)),
            Node::Div(x, y) => Expr::div(&x.subst_memo(b, memo), &y.subst_memo(b, memo)),
            Node::Neg(x) => Expr::neg(&x.subst_memo(b, memo)),
            Node::Pow(x, n) => Expr::powi(&x.subst_memo(b, memo), *n),
            Node::Func(f, x) => Expr::func(*f, &x.subst_memo(b, memo)),
            Node::Integral(int) => {
                let inner: HashMap<Var, Expr> = b
                    .iter()
                    .filter(|(v, _)| !int.vars.contains(v))
                    .map(|(v, e)| (*v, e.clone()))
                    .collect();
                debug_assert!(
                    inner
                        .values()
                        .all(|e| int.vars.iter().all(|bv| !e.depends_on(*bv))),
                    "substitution would capture an integration variable"
                );
                Expr::integral(
                    int.integrand.substitute(&inner),
                    int.vars.clone(),
                    int.region.clone(),
                    int.tol,
                )
            }
        };
        memo.insert(self.ptr_key(), out.clone());
        out
    }

    /// Exact partial derivative.
    ///
    /// Integral nodes over fixed regions are differentiated under the integral
    /// sign; differentiating in one of an integral's own bound variables is
    /// rejected.
    pub fn differentiate(&self, v: Var) -> Result<Expr, SymError> {
        let mut memo = HashMap::new();
        self.diff_memo(v, &mut memo)
    }

    fn diff_memo(&self, v: Var, memo: &mut HashMap<usize, Expr>) -> Result<Expr, SymError> {
        if let Some(hit) = memo.get(&self.ptr_key()) {
            return Ok(hit.clone());
        }
        let out = match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(&a.diff_memo(v, memo)?, &b.diff_memo(v, memo)?),
            Node::Sub(a, b) => Expr::sub(&a.diff_memo(v, memo)?, &b.diff_memo(v, memo)?),
            Node::Mul(a, b) => {
                let da = a.diff_memo(v, memo)?;
                let db = b.diff_memo(v, memo)?;
                Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db))
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(v, memo)?;
                let db = b.diff_memo(v, memo)?;
                if db.is_zero() {
                    Expr::div(&da, b)
                } else {
                    let num = Expr::sub(&Expr::mul(&da, b), &Expr::mul(a, &db));
                    Expr::div(&num, &Expr::powi(b, 2))
                }
            }
            Node::Neg(a) => Expr::neg(&a.diff_memo(v, memo)?),
            Node::Pow(a, n) => {
                let da = a.diff_memo(v, memo)?;
                let coeff = Expr::mul(&Expr::int(*n as i64), &Expr::powi(a, n - 1));
                Expr::mul(&coeff, &da)
            }
            Node::Func(f, a) => {
                let da = a.diff_memo(v, memo)?;
                if da.is_zero() {
                    Expr::zero()
                } else {
                    match f {
                        Func::Exp => Expr::mul(self, &da),
                        Func::Log => match a.node() {
                            // d log|u| = u'/u
                            Node::Func(Func::Abs, u) => {
                                let du = u.diff_memo(v, memo)?;
                                Expr::div(&du, u)
                            }
                            _ => Expr::div(&da, a),
                        },
                        Func::Abs => Expr::mul(&Expr::div(self, a), &da),
                        Func::Sin => Expr::mul(&a.cos(), &da),
                        Func::Cos => Expr::neg(&Expr::mul(&a.sin(), &da)),
                    }
                }
            }
            Node::Integral(int) => {
                if int.vars.contains(&v) {
                    return Err(SymError::DiffUnderIntegral(v.to_string()));
                }
                if !int.integrand.depends_on(v) {
                    Expr::zero()
                } else {
                    Expr::integral(
                        int.integrand.differentiate(v)?,
                        int.vars.clone(),
                        int.region.clone(),
                        int.tol,
                    )
                }
            }
        };
        memo.insert(self.ptr_key(), out.clone());
        Ok(out)
    }

    /// Number of distinct nodes in the expression DAG.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr_key()) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => stack.push(a.clone()),
                Node::Integral(int) => stack.push(int.integrand.clone()),
            }
        }
        seen.len()
    }

    /// Exact value when the expression is built from rational constants with
    /// field operations and integer powers only.
    pub fn eval_exact(&self, env: &HashMap<Var, BigRational>) -> Option<BigRational> {
        Some(match self.node() {
            Node::Const(c) => c.clone(),
            Node::Var(v) => env.get(v)?.clone(),
            Node::Add(a, b) => a.eval_exact(env)? + b.eval_exact(env)?,
            Node::Sub(a, b) => a.eval_exact(env)? - b.eval_exact(env)?,
            Node::Mul(a, b) => a.eval_exact(env)? * b.eval_exact(env)?,
            Node::Div(a, b) => {
                let d = b.eval_exact(env)?;
                if d.is_zero() {
                    return None;
                }
                a.eval_exact(env)? / d
            }
            Node::Neg(a) => -a.eval_exact(env)?,
            Node::Pow(a, n) => {
                let base = a.eval_exact(env)?;
                if base.is_zero() && *n < 0 {
                    return None;
                }
                let p = num_traits::pow::pow(base, n.unsigned_abs() as usize);
                if *n < 0 {
                    p.recip()
                } else {
                    p
                }
            }
            Node::Func(Func::Abs, a) => a.eval_exact(env)?.abs(),
            Node::Func(..) | Node::Integral(_) => return None,
        })
    }
}

pub(crate) fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

macro_rules! binop {
    ($tr:ident, $m:ident, $ctor:path) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $ctor(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $ctor(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $ctor(self, &rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<BigRational> for Expr {
    fn from(c: BigRational) -> Expr {
        Expr::constant(c)
    }
}

// Printing. Precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom.
fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) => {
            if c.is_negative() {
                3
            } else if c.is_integer() {
                5
            } else {
                // printed as p/q
                2
            }
        }
        Node::Var(_) | Node::Func(..) | Node::Integral(_) => 5,
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else if c.is_negative() {
                    write!(f, "-({}/{})", -c.numer(), c.denom())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) => {
                write_wrapped(f, a, 1)?;
                write!(f, " + ")?;
                write_wrapped(f, b, 2)
            }
            Node::Sub(a, b) => {
                write_wrapped(f, a, 1)?;
                write!(f, " - ")?;
                write_wrapped(f, b, 2)
            }
            Node::Mul(a, b) => {
                write_wrapped(f, a, 2)?;
                write!(f, "*")?;
                write_wrapped(f, b, 3)
            }
            Node::Div(a, b) => {
                write_wrapped(f, a, 2)?;
                write!(f, "/")?;
                write_wrapped(f, b, 4)
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                write_wrapped(f, a, 3)
            }
            Node::Pow(a, n) => {
                write_wrapped(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Integral(int) => {
                let vars: Vec<String> = int.vars.iter().map(|v| v.to_string()).collect();
                let region = match &int.region {
                    Region::Box(b) => format!("box{b:?}"),
                    Region::Simplex => "simplex".to_string(),
                    Region::Cube => "cube".to_string(),
                    Region::Interval(a, b) => format!("[{a},{b}]"),
                };
                write!(f, "int[{region}]({}; {})", vars.join(","), int.integrand)
            }
        }
    }
}
