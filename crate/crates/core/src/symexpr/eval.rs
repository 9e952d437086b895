use std::collections::HashMap;

use super::expr::{rational_to_f64, Expr, Func, Node, Region, Var, N_SLOTS};
use super::quad::{self, QuadConfig};
use super::SymError;

/// Numeric assignment of variables, stored in fixed slots.
#[derive(Clone, Debug)]
pub struct Env {
    vals: [f64; N_SLOTS],
    mask: u64,
}

impl Default for Env {
    fn default() -> Self {
        Env::new()
    }
}

impl Env {
    pub fn new() -> Self {
        Env {
            vals: [0.0; N_SLOTS],
            mask: 0,
        }
    }

    /// Assigns `x1..xq` from a chart point.
    pub fn at_point(point: &[f64]) -> Self {
        let mut env = Env::new();
        for (i, &v) in point.iter().enumerate() {
            env.set(Var::X(i as u8 + 1), v);
        }
        env
    }

    pub fn set(&mut self, v: Var, value: f64) {
        let s = v.slot();
        self.vals[s] = value;
        self.mask |= 1 << s;
    }

    pub fn with(mut self, v: Var, value: f64) -> Self {
        self.set(v, value);
        self
    }

    pub fn get(&self, v: Var) -> Option<f64> {
        let s = v.slot();
        (self.mask >> s & 1 == 1).then(|| self.vals[s])
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (kind, range) in [("x", 0..8usize), ("t", 8..24), ("s", 24..40)] {
            for s in range.clone() {
                if self.mask >> s & 1 == 1 {
                    let idx = match kind {
                        "t" => s - 8,
                        "x" => s + 1,
                        _ => s - 23,
                    };
                    parts.push(format!("{kind}{idx}={}", self.vals[s]));
                }
            }
        }
        format!("{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Pow(usize, i32),
    Func(Func, usize),
    Integral(Box<IntegralOp>),
}

#[derive(Clone, Debug)]
struct IntegralOp {
    body: Program,
    slots: Vec<usize>,
    region: Region,
    tol: f64,
}

/// An expression compiled to a flat instruction tape. Shared subtrees are
/// evaluated once.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    src: Vec<Expr>,
    needs: u64,
}

fn slot_name(s: usize) -> String {
    match s {
        0..=7 => format!("x{}", s + 1),
        8..=23 => format!("t{}", s - 8),
        _ => format!("s{}", s - 23),
    }
}

impl Program {
    pub fn compile(e: &Expr) -> Program {
        let mut p = Program {
            ops: Vec::new(),
            src: Vec::new(),
            needs: 0,
        };
        let mut memo = HashMap::new();
        p.emit(e, &mut memo);
        for v in e.free_vars() {
            p.needs |= 1 << v.slot();
        }
        p
    }

    fn emit(&mut self, e: &Expr, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&i) = memo.get(&e.ptr_key()) {
            return i;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(rational_to_f64(c)),
            Node::Var(v) => Op::Var(v.slot()),
            Node::Add(a, b) => Op::Add(self.emit(a, memo), self.emit(b, memo)),
            Node::Sub(a, b) => Op::Sub(self.emit(a, memo), self.emit(b, memo)),
            Node::Mul(a, b) => Op::Mul(self.emit(a, memo), self.emit(b, memo)),
            Node::Div(a, b) => Op::Div(self.emit(a, memo), self.emit(b, memo)),
            Node::Neg(a) => Op::Neg(self.emit(a, memo)),
            Node::Pow(a, n) => Op::Pow(self.emit(a, memo), *n),
            Node::Func(f, a) => Op::Func(*f, self.emit(a, memo)),
            Node::Integral(int) => Op::Integral(Box::new(IntegralOp {
                body: Program::compile(&int.integrand),
                slots: int.vars.iter().map(|v| v.slot()).collect(),
                region: int.region.clone(),
                tol: int.tol,
            })),
        };
        self.ops.push(op);
        self.src.push(e.clone());
        let i = self.ops.len() - 1;
        memo.insert(e.ptr_key(), i);
        i
    }

    pub fn eval(&self, env: &Env) -> Result<f64, SymError> {
        let mut regs = Vec::with_capacity(self.ops.len());
        self.eval_with(env, &mut regs)
    }

    /// Evaluates reusing a register buffer.
    pub fn eval_with(&self, env: &Env, regs: &mut Vec<f64>) -> Result<f64, SymError> {
        let missing = self.needs & !env.mask;
        if missing != 0 {
            let s = missing.trailing_zeros() as usize;
            return Err(SymError::Unassigned(slot_name(s)));
        }
        regs.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(s) => env.vals[*s],
                Op::Add(a, b) => regs[*a] + regs[*b],
                Op::Sub(a, b) => regs[*a] - regs[*b],
                Op::Mul(a, b) => regs[*a] * regs[*b],
                Op::Div(a, b) => regs[*a] / regs[*b],
                Op::Neg(a) => -regs[*a],
                Op::Pow(a, n) => regs[*a].powi(*n),
                Op::Func(f, a) => {
                    let x = regs[*a];
                    match f {
                        Func::Exp => x.exp(),
                        Func::Log => x.ln(),
                        Func::Abs => x.abs(),
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                    }
                }
                Op::Integral(int) => int.eval(env)?,
            };
            if !v.is_finite() {
                return Err(SymError::NonFinite {
                    expr: self.src[i].to_string(),
                    at: env.describe(),
                });
            }
            regs.push(v);
        }
        Ok(*regs.last().expect("program has at least one op"))
    }
}

impl IntegralOp {
    fn eval(&self, env: &Env) -> Result<f64, SymError> {
        let cfg = QuadConfig {
            tol: self.tol,
            budget: quad::default_budget(),
        };
        let mut inner = env.clone();
        for &s in &self.slots {
            inner.mask |= 1 << s;
        }
        let mut regs = Vec::with_capacity(self.body.ops.len());
        let slots = &self.slots;
        let body = &self.body;
        let mut f = |pt: &[f64]| -> Result<f64, SymError> {
            for (&s, &v) in slots.iter().zip(pt) {
                inner.vals[s] = v;
            }
            body.eval_with(&inner, &mut regs)
        };
        let k = slots.len();
        let out = match &self.region {
            Region::Box(b) => {
                let lo: Vec<f64> = b.iter().map(|p| p.0).collect();
                let hi: Vec<f64> = b.iter().map(|p| p.1).collect();
                quad::integrate_box(&mut f, &lo, &hi, &cfg)?
            }
            Region::Simplex => quad::integrate_simplex(&mut f, k, &cfg)?,
            Region::Cube => quad::integrate_cube(&mut f, k, &cfg)?,
            Region::Interval(a, b) => quad::integrate_interval(&mut f, *a, *b, &cfg)?,
        };
        Ok(out.value)
    }
}

impl Expr {
    /// Numeric value. Compiles on every call; use [`Program`] in loops.
    pub fn eval(&self, env: &Env) -> Result<f64, SymError> {
        Program::compile(self).eval(env)
    }
}
