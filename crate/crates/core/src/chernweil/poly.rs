use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ChernWeilError;
use crate::symexpr::{DifferentialForm, Expr, MatrixForm};

/// Linear combination of trace words `Tr(A^{i_1}) ⋯ Tr(A^{i_r})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantPolynomial {
    terms: Vec<(BigRational, Vec<u32>)>,
}

impl InvariantPolynomial {
    pub fn new(terms: Vec<(BigRational, Vec<u32>)>) -> Self {
        let mut terms: Vec<(BigRational, Vec<u32>)> = terms
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, mut w)| {
                w.sort_unstable();
                (c, w)
            })
            .collect();
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        InvariantPolynomial { terms }
    }

    /// `c_i = Tr(A^i)`.
    pub fn c(i: u32) -> Self {
        Self::new(vec![(BigRational::one(), vec![i])])
    }

    /// Word `c_{i_1} ⋯ c_{i_r}`.
    pub fn word(word: &[u32]) -> Self {
        Self::new(vec![(BigRational::one(), word.to_vec())])
    }

    /// `Σ_{n<=N} Tr(A^n)/n!`.
    pub fn chern_character(order: u32) -> Self {
        let mut fact = BigInt::one();
        let mut terms = Vec::new();
        for n in 0..=order {
            if n > 0 {
                fact *= n;
            }
            terms.push((BigRational::new(BigInt::one(), fact.clone()), vec![n]));
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(BigRational, Vec<u32>)] {
        &self.terms
    }

    /// Polynomial degrees present (`deg Tr(A^i) = i`).
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.iter().map(|(_, w)| w.iter().sum()).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn homogeneous(&self, p: u32) -> Self {
        InvariantPolynomial {
            terms: self.terms.iter().filter(|(_, w)| w.iter().sum::<u32>() == p).cloned().collect(),
        }
    }

    /// Evaluates on a matrix of even forms (a curvature).
    pub fn apply(&self, omega: &MatrixForm) -> Result<DifferentialForm, ChernWeilError> {
        let vars = omega.vars().to_vec();
        let max_pow = self.terms.iter().flat_map(|(_, w)| w.iter().copied()).max().unwrap_or(0);
        let mut traces: Vec<DifferentialForm> = Vec::with_capacity(max_pow as usize + 1);
        let q = omega.size();
        traces.push(DifferentialForm::scalar(&vars, Expr::int(q as i64)));
        let mut power = omega.clone();
        for i in 1..=max_pow {
            if i > 1 {
                power = power.mul(omega)?;
            }
            traces.push(power.trace()?);
        }
        let degree = self.degrees().first().map_or(0, |&p| 2 * p as usize);
        let mut out = DifferentialForm::zero(&vars, degree);
        for (c, w) in &self.terms {
            let mut acc = DifferentialForm::scalar(&vars, Expr::constant(c.clone()));
            for &i in w {
                acc = acc.wedge(&traces[i as usize])?;
            }
            if acc.degree() != out.degree() {
                return Err(ChernWeilError::Unsupported("apply needs a homogeneous polynomial".into()));
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }
}

impl fmt::Display for InvariantPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, w)| {
                let word: Vec<String> = w.iter().map(|i| format!("c{i}")).collect();
                if c.is_one() {
                    word.join("*")
                } else {
                    format!("({c})*{}", word.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A named characteristic cochain recipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CocycleDescriptor {
    Invariant(InvariantPolynomial),
    ChernCharacter(u32),
    U1,
    Gv,
    BottGv(Vec<usize>),
}

impl CocycleDescriptor {
    /// Parses `c1`, `c1^2`, `c1*c2`, `u1`, `gv`, `gv:1,1`, `ch:N`.
    pub fn parse(text: &str) -> Result<Self, ChernWeilError> {
        let t = text.trim();
        let bad = || ChernWeilError::Unsupported(format!("unknown class '{text}'"));
        match t {
            "u1" => return Ok(CocycleDescriptor::U1),
            "gv" => return Ok(CocycleDescriptor::Gv),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("ch:") {
            return rest.parse().map(CocycleDescriptor::ChernCharacter).map_err(|_| bad());
        }
        if let Some(rest) = t.strip_prefix("gv:") {
            let parts = rest
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(CocycleDescriptor::BottGv(parts));
        }
        let mut word = Vec::new();
        for factor in t.split('*') {
            let f = factor.trim().strip_prefix('c').ok_or_else(bad)?;
            let (i, k) = match f.split_once('^') {
                Some((i, k)) => (i, k.parse::<u32>().map_err(|_| bad())?),
                None => (f, 1),
            };
            let i: u32 = i.parse().map_err(|_| bad())?;
            if i == 0 {
                return Err(bad());
            }
            word.extend(std::iter::repeat_n(i, k as usize));
        }
        if word.is_empty() {
            return Err(bad());
        }
        Ok(CocycleDescriptor::Invariant(InvariantPolynomial::word(&word)))
    }

    /// Checks the descriptor against the codimension.
    pub fn validate(&self, q: usize) -> Result<(), ChernWeilError> {
        match self {
            CocycleDescriptor::BottGv(a) => {
                if a.is_empty() || a.contains(&0) || a.iter().sum::<usize>() != q {
                    return Err(ChernWeilError::Unsupported(format!(
                        "{a:?} is not a partition of q = {q}"
                    )));
                }
            }
            CocycleDescriptor::Invariant(p) => {
                if p.degrees().iter().any(|&d| d as usize > 2 * q + 2) {
                    return Err(ChernWeilError::Unsupported(format!(
                        "trace word degree above {} for q = {q}",
                        2 * q + 2
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            CocycleDescriptor::Invariant(p) => p.to_string(),
            CocycleDescriptor::ChernCharacter(n) => format!("ch:{n}"),
            CocycleDescriptor::U1 => "u1".into(),
            CocycleDescriptor::Gv => "gv".into(),
            CocycleDescriptor::BottGv(a) => {
                let s: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                format!("gv:{}", s.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_classes() {
        assert_eq!(CocycleDescriptor::parse("u1").unwrap(), CocycleDescriptor::U1);
        assert_eq!(CocycleDescriptor::parse("gv:1,2").unwrap(), CocycleDescriptor::BottGv(vec![1, 2]));
        assert_eq!(
            CocycleDescriptor::parse("c1^2").unwrap(),
            CocycleDescriptor::Invariant(InvariantPolynomial::word(&[1, 1]))
        );
        assert_eq!(
            CocycleDescriptor::parse("c2*c1").unwrap(),
            CocycleDescriptor::Invariant(InvariantPolynomial::word(&[1, 2]))
        );
        assert!(CocycleDescriptor::parse("c0").is_err());
        assert!(CocycleDescriptor::parse("gv:0,1").unwrap().validate(1).is_err());
        assert!(CocycleDescriptor::parse("gv:1,1").unwrap().validate(2).is_ok());
    }

    #[test]
    fn chern_character_terms() {
        let ch = InvariantPolynomial::chern_character(3);
        assert_eq!(ch.degrees(), vec![0, 1, 2, 3]);
        assert_eq!(ch.homogeneous(3).terms()[0].0, BigRational::new(1.into(), 6.into()));
    }
}
