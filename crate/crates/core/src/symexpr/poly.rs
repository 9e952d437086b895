//! Exact multivariate polynomials over the rationals in chart variables.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::{Expr, Node, Var};
use super::SymError;

/// Polynomial in `x1..xn` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    /// `x_i` with `i` zero-based.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, BigRational::one())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn accumulate(&mut self, exps: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.accumulate(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &BigRational) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.accumulate(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.accumulate(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, BigRational::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative in `x_{i+1}`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.accumulate(e2, c * BigRational::from_integer(BigInt::from(e[i])));
        }
        out
    }

    /// Substitutes `x_i ↦ images[i]`.
    pub fn compose(&self, images: &[Poly]) -> Poly {
        let n = images.first().map_or(self.nvars, |p| p.nvars);
        let mut out = Poly::zero(n);
        for (e, c) in &self.terms {
            let mut term = Poly::constant(n, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&images[i].pow(k));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Exact conversion; fails on anything but `+ - *`, division by
    /// constants and nonnegative integer powers of chart variables.
    pub fn from_expr(e: &Expr, nvars: usize) -> Result<Poly, SymError> {
        let bad = || SymError::NotPolynomial(e.to_string());
        Ok(match e.node() {
            Node::Const(c) => Poly::constant(nvars, c.clone()),
            Node::Var(Var::X(i)) if (*i as usize) <= nvars => Poly::var(nvars, *i as usize - 1),
            Node::Var(_) => return Err(bad()),
            Node::Add(a, b) => Self::from_expr(a, nvars)?.add(&Self::from_expr(b, nvars)?),
            Node::Sub(a, b) => Self::from_expr(a, nvars)?.sub(&Self::from_expr(b, nvars)?),
            Node::Mul(a, b) => Self::from_expr(a, nvars)?.mul(&Self::from_expr(b, nvars)?),
            Node::Div(a, b) => {
                let den = Self::from_expr(b, nvars)?;
                match (den.degree(), den.terms.values().next()) {
                    (Some(0), Some(c)) => Self::from_expr(a, nvars)?.scale(&c.recip()),
                    _ => return Err(bad()),
                }
            }
            Node::Neg(a) => Self::from_expr(a, nvars)?.neg(),
            Node::Pow(a, n) if *n >= 0 => Self::from_expr(a, nvars)?.pow(*n as u32),
            _ => return Err(bad()),
        })
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc = Expr::zero();
        for (e, c) in &self.terms {
            let mut term = Expr::constant(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term * Expr::x(i as u8 + 1).pow(k as i32);
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Exponent vectors of total degree at most `max_deg`, graded then
    /// lexicographic.
    pub fn monomials(nvars: usize, max_deg: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for d in 0..=max_deg {
            let mut cur = vec![0; nvars];
            fill(&mut out, &mut cur, 0, d);
        }
        out
    }
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, i: usize, left: u32) {
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if i == cur.len() - 1 {
        cur[i] = left;
        out.push(cur.clone());
        cur[i] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[i] = k;
        fill(out, cur, i + 1, left - k);
    }
    cur[i] = 0;
}
