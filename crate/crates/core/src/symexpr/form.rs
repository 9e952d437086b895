use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::eval::{Env, Program};
use super::expr::{Expr, Region, Var};
use super::SymError;

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats (the wedge vanishes).
fn sort_with_sign(idx: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && idx[j - 1] == idx[j] {
            return None;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(sign)
}

fn signed(e: Expr, sign: i32) -> Expr {
    if sign < 0 {
        -e
    } else {
        e
    }
}

/// A differential form `Σ f_I dv_I` over an ordered list of ambient variables.
///
/// Keys are strictly increasing positions into the ambient list. Terms with
/// a structurally zero coefficient are dropped.
#[derive(Clone, PartialEq)]
pub struct DifferentialForm {
    vars: Vec<Var>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for &i in idx {
                write!(f, " d{}", self.vars[i])?;
            }
        }
        Ok(())
    }
}

impl DifferentialForm {
    pub fn zero(vars: &[Var], degree: usize) -> Self {
        DifferentialForm {
            vars: vars.to_vec(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(vars: &[Var], f: Expr) -> Self {
        let mut out = Self::zero(vars, 0);
        if !f.is_zero() {
            out.terms.insert(Vec::new(), f);
        }
        out
    }

    /// `dv` for an ambient variable `v`.
    pub fn dvar(vars: &[Var], v: Var) -> Result<Self, SymError> {
        let pos = vars
            .iter()
            .position(|w| *w == v)
            .ok_or_else(|| SymError::VariableMismatch(format!("{v} is not an ambient variable")))?;
        let mut out = Self::zero(vars, 1);
        out.terms.insert(vec![pos], Expr::one());
        Ok(out)
    }

    /// Builds a form from (positions, coefficient) pairs. Positions need not
    /// be sorted; the permutation sign is applied.
    pub fn from_terms<I>(vars: &[Var], degree: usize, terms: I) -> Result<Self, SymError>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut out = Self::zero(vars, degree);
        for (mut idx, c) in terms {
            if idx.len() != degree {
                return Err(SymError::DimensionMismatch(format!(
                    "term of degree {} in a {degree}-form",
                    idx.len()
                )));
            }
            if idx.iter().any(|&i| i >= vars.len()) {
                return Err(SymError::DimensionMismatch("index out of range".into()));
            }
            if let Some(sign) = sort_with_sign(&mut idx) {
                out.accumulate(idx, signed(c, sign));
            }
        }
        Ok(out)
    }

    fn accumulate(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&idx) {
            Some(prev) => {
                let sum = prev + c;
                if !sum.is_zero() {
                    self.terms.insert(idx, sum);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient of `dv_1 ∧ … ∧ dv_l` named by variables (any order).
    pub fn coefficient_of(&self, vs: &[Var]) -> Result<Expr, SymError> {
        let mut idx = Vec::with_capacity(vs.len());
        for v in vs {
            idx.push(
                self.vars
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| SymError::VariableMismatch(format!("{v} is not ambient")))?,
            );
        }
        Ok(match sort_with_sign(&mut idx) {
            Some(sign) => signed(self.coefficient(&idx), sign),
            None => Expr::zero(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SymError> {
        if self.vars != other.vars {
            return Err(SymError::VariableMismatch(format!(
                "ambient {:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymError> {
        self.check_compatible(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if self.degree != other.degree {
            return Err(SymError::DimensionMismatch(format!(
                "adding forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.accumulate(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        DifferentialForm {
            vars: self.vars.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, f: &Expr) -> Self {
        let mut out = Self::zero(&self.vars, self.degree);
        if f.is_zero() {
            return out;
        }
        for (idx, c) in &self.terms {
            out.accumulate(idx.clone(), f * c);
        }
        out
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&Expr::int(n))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, SymError> {
        self.check_compatible(other)?;
        let mut out = Self::zero(&self.vars, self.degree + other.degree);
        for (i, f) in &self.terms {
            for (j, g) in &other.terms {
                let mut idx: Vec<usize> = i.iter().chain(j.iter()).copied().collect();
                if let Some(sign) = sort_with_sign(&mut idx) {
                    out.accumulate(idx, signed(f * g, sign));
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative in all ambient variables.
    pub fn exterior_d(&self) -> Result<Self, SymError> {
        let mut out = Self::zero(&self.vars, self.degree + 1);
        for (idx, f) in &self.terms {
            let free = f.free_vars();
            for (j, v) in self.vars.iter().enumerate() {
                if idx.contains(&j) || !free.contains(v) {
                    continue;
                }
                let df = f.differentiate(*v)?;
                if df.is_zero() {
                    continue;
                }
                let before = idx.iter().filter(|&&i| i < j).count();
                let mut new_idx = idx.clone();
                new_idx.insert(before, j);
                out.accumulate(new_idx, signed(df, if before % 2 == 1 { -1 } else { 1 }));
            }
        }
        Ok(out)
    }

    /// Pullback along `v ↦ images[v]` into a form over `source`. Ambient
    /// variables without an image must themselves be source variables.
    pub fn pullback(&self, images: &HashMap<Var, Expr>, source: &[Var]) -> Result<Self, SymError> {
        let mut one_forms: HashMap<usize, DifferentialForm> = HashMap::new();
        let mut out = Self::zero(source, self.degree);
        for (idx, f) in &self.terms {
            let mut acc = Self::scalar(source, f.substitute(images));
            for &i in idx {
                if !one_forms.contains_key(&i) {
                    let v = self.vars[i];
                    let df = match images.get(&v) {
                        Some(e) => {
                            let mut d = Self::zero(source, 1);
                            for (pos, s) in source.iter().enumerate() {
                                let c = e.differentiate(*s)?;
                                d.accumulate(vec![pos], c);
                            }
                            d
                        }
                        None => Self::dvar(source, v)?,
                    };
                    one_forms.insert(i, df);
                }
                acc = acc.wedge(&one_forms[&i])?;
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc)?;
        }
        for v in out.free_vars_of_coefficients() {
            if !source.contains(&v) {
                return Err(SymError::VariableMismatch(format!(
                    "pulled-back coefficient still depends on {v}"
                )));
            }
        }
        Ok(out)
    }

    fn free_vars_of_coefficients(&self) -> std::collections::BTreeSet<Var> {
        let mut s = std::collections::BTreeSet::new();
        for c in self.terms.values() {
            s.extend(c.free_vars());
        }
        s
    }

    /// Substitutes into coefficients only; differentials are untouched.
    pub fn substitute_coefficients(&self, bindings: &HashMap<Var, Expr>) -> Self {
        let mut out = Self::zero(&self.vars, self.degree);
        for (idx, c) in &self.terms {
            out.accumulate(idx.clone(), c.substitute(bindings));
        }
        out
    }

    /// Re-expresses the form over a larger ambient list containing `vars`.
    pub fn embed(&self, new_vars: &[Var]) -> Result<Self, SymError> {
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                new_vars
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| SymError::VariableMismatch(format!("{v} missing from new ambient")))
            })
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero(new_vars, self.degree);
        for (idx, c) in &self.terms {
            let mut new_idx: Vec<usize> = idx.iter().map(|&i| map[i]).collect();
            let sign = sort_with_sign(&mut new_idx).expect("injective reindexing");
            out.accumulate(new_idx, signed(c.clone(), sign));
        }
        Ok(out)
    }

    /// Drops ambient variables the form does not use. Fails if a dropped
    /// variable still appears in a coefficient or differential.
    pub fn restrict_ambient(&self, new_vars: &[Var]) -> Result<Self, SymError> {
        let mut out = Self::zero(new_vars, self.degree);
        for (idx, c) in &self.terms {
            let mut new_idx = Vec::with_capacity(idx.len());
            for &i in idx {
                let v = self.vars[i];
                new_idx.push(
                    new_vars
                        .iter()
                        .position(|w| *w == v)
                        .ok_or_else(|| SymError::VariableMismatch(format!("form has a d{v} term")))?,
                );
            }
            let sign = sort_with_sign(&mut new_idx).expect("injective reindexing");
            out.accumulate(new_idx, signed(c.clone(), sign));
        }
        for v in out.free_vars_of_coefficients() {
            if !new_vars.contains(&v) && !matches!(v, Var::S(_)) {
                return Err(SymError::VariableMismatch(format!("coefficient depends on {v}")));
            }
        }
        Ok(out)
    }

    /// Numeric coefficients at a point, keyed like [`Self::terms`].
    pub fn evaluate(&self, env: &Env) -> Result<Vec<(Vec<usize>, f64)>, SymError> {
        self.terms
            .iter()
            .map(|(idx, c)| Ok((idx.clone(), c.eval(env)?)))
            .collect()
    }

    /// Compiles every coefficient once for repeated evaluation.
    pub fn compile(&self) -> CompiledForm {
        CompiledForm {
            terms: self
                .terms
                .iter()
                .map(|(idx, c)| (idx.clone(), Program::compile(c)))
                .collect(),
        }
    }

    /// Largest absolute coefficient at a point.
    pub fn max_abs(&self, env: &Env) -> Result<f64, SymError> {
        Ok(self
            .evaluate(env)?
            .into_iter()
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max))
    }
}

/// A form with compiled coefficients.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    terms: Vec<(Vec<usize>, Program)>,
}

impl CompiledForm {
    pub fn evaluate(&self, env: &Env) -> Result<Vec<(Vec<usize>, f64)>, SymError> {
        self.terms
            .iter()
            .map(|(idx, p)| Ok((idx.clone(), p.eval(env)?)))
            .collect()
    }
}

/// Integration over the standard simplex fiber.
///
/// `form` lives on `[t_1..t_k] ++ rest`; the coefficient of
/// `dt_1 ∧ … ∧ dt_k ∧ dx_J` (simplex differentials moved to the front) is
/// integrated over `{t_i >= 0, Σ t_i <= 1}` and becomes the coefficient of
/// `dx_J`. Terms missing some `dt_i` vanish. Any occurrence of `t0` is
/// replaced by `1 - Σ t_i` first.
pub fn fiber_integrate(form: &DifferentialForm, simplex: &[Var], tol: f64) -> Result<DifferentialForm, SymError> {
    let k = simplex.len();
    let t_pos: Vec<usize> = simplex
        .iter()
        .map(|v| {
            form.vars
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| SymError::VariableMismatch(format!("{v} is not ambient")))
        })
        .collect::<Result<_, _>>()?;
    let rest: Vec<Var> = form.vars.iter().filter(|v| !simplex.contains(v)).copied().collect();
    let rest_pos: Vec<usize> = form
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| !simplex.contains(v))
        .map(|(i, _)| i)
        .collect();
    if form.degree < k {
        return Ok(DifferentialForm::zero(&rest, 0));
    }
    let mut t0 = Expr::one();
    for v in simplex {
        t0 = t0 - Expr::var(*v);
    }
    let elim: HashMap<Var, Expr> = [(Var::T(0), t0)].into_iter().collect();
    let mut out = DifferentialForm::zero(&rest, form.degree - k);
    for (idx, c) in &form.terms {
        if !t_pos.iter().all(|p| idx.contains(p)) {
            continue;
        }
        // order: simplex positions in the given order, then the rest
        let others: Vec<usize> = idx.iter().filter(|i| !t_pos.contains(i)).copied().collect();
        let mut perm: Vec<usize> = t_pos.iter().chain(others.iter()).copied().collect();
        let sign = sort_with_sign(&mut perm).expect("distinct positions");
        let new_idx: Vec<usize> = others
            .iter()
            .map(|i| rest_pos.iter().position(|r| r == i).expect("non-simplex position"))
            .collect();
        let integrand = c.substitute(&elim);
        let coeff = if k == 0 {
            integrand
        } else {
            Expr::integral(integrand, simplex.to_vec(), Region::Simplex, tol)
        };
        out.accumulate(new_idx, signed(coeff, sign));
    }
    Ok(out)
}

/// Square matrix of differential forms sharing one ambient and degree.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixForm {
    n: usize,
    vars: Vec<Var>,
    degree: usize,
    entries: Vec<DifferentialForm>,
}

impl MatrixForm {
    pub fn zero(n: usize, vars: &[Var], degree: usize) -> Self {
        MatrixForm {
            n,
            vars: vars.to_vec(),
            degree,
            entries: vec![DifferentialForm::zero(vars, degree); n * n],
        }
    }

    /// Row-major entries.
    pub fn from_entries(n: usize, entries: Vec<DifferentialForm>) -> Result<Self, SymError> {
        if entries.len() != n * n || n == 0 {
            return Err(SymError::DimensionMismatch(format!("{} entries for a {n}x{n} matrix", entries.len())));
        }
        let vars = entries[0].vars.clone();
        let degree = entries
            .iter()
            .find(|e| !e.is_zero())
            .map_or(entries[0].degree, |e| e.degree);
        for e in &entries {
            if e.vars != vars {
                return Err(SymError::VariableMismatch("matrix entries over different ambients".into()));
            }
            if !e.is_zero() && e.degree != degree {
                return Err(SymError::DimensionMismatch("matrix entries of different degrees".into()));
            }
        }
        let entries = entries
            .into_iter()
            .map(|mut e| {
                e.degree = degree;
                e
            })
            .collect();
        Ok(MatrixForm {
            n,
            vars,
            degree,
            entries,
        })
    }

    /// Degree-0 matrix from scalar expressions.
    pub fn scalars(n: usize, vars: &[Var], entries: &[Expr]) -> Result<Self, SymError> {
        Self::from_entries(n, entries.iter().map(|e| DifferentialForm::scalar(vars, e.clone())).collect())
    }

    pub fn identity(n: usize, vars: &[Var]) -> Self {
        let mut m = Self::zero(n, vars, 0);
        for i in 0..n {
            m.entries[i * n + i] = DifferentialForm::scalar(vars, Expr::one());
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn entry(&self, i: usize, j: usize) -> &DifferentialForm {
        &self.entries[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn map_entries(&self, f: impl Fn(&DifferentialForm) -> Result<DifferentialForm, SymError>) -> Result<Self, SymError> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        let vars = entries[0].vars.clone();
        let degree = entries[0].degree;
        Ok(MatrixForm {
            n: self.n,
            vars,
            degree,
            entries,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymError> {
        if self.n != other.n {
            return Err(SymError::DimensionMismatch("matrix sizes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MatrixForm {
            n: self.n,
            vars: self.vars.clone(),
            degree: if self.is_zero() { other.degree } else { self.degree },
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_entries(|e| Ok(e.neg())).expect("negation cannot fail")
    }

    pub fn scale(&self, f: &Expr) -> Self {
        self.map_entries(|e| Ok(e.scale(f))).expect("scaling cannot fail")
    }

    /// Matrix product with entrywise wedge.
    pub fn mul(&self, other: &Self) -> Result<Self, SymError> {
        if self.n != other.n {
            return Err(SymError::DimensionMismatch("matrix sizes differ".into()));
        }
        let n = self.n;
        let degree = self.degree + other.degree;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = DifferentialForm::zero(&self.vars, degree);
                for k in 0..n {
                    let term = self.entry(i, k).wedge(other.entry(k, j))?;
                    acc = acc.add(&term)?;
                }
                acc.degree = degree;
                entries.push(acc);
            }
        }
        Ok(MatrixForm {
            n,
            vars: self.vars.clone(),
            degree,
            entries,
        })
    }

    pub fn trace(&self) -> Result<DifferentialForm, SymError> {
        let mut acc = DifferentialForm::zero(&self.vars, self.degree);
        for i in 0..self.n {
            acc = acc.add(self.entry(i, i))?;
        }
        acc.degree = self.degree;
        Ok(acc)
    }

    pub fn exterior_d(&self) -> Result<Self, SymError> {
        let mut m = self.map_entries(|e| e.exterior_d())?;
        m.degree = self.degree + 1;
        for e in &mut m.entries {
            e.degree = m.degree;
        }
        Ok(m)
    }

    pub fn pullback(&self, images: &HashMap<Var, Expr>, source: &[Var]) -> Result<Self, SymError> {
        let mut m = self.map_entries(|e| e.pullback(images, source))?;
        m.vars = source.to_vec();
        m.degree = self.degree;
        for e in &mut m.entries {
            e.degree = self.degree;
        }
        Ok(m)
    }

    pub fn embed(&self, new_vars: &[Var]) -> Result<Self, SymError> {
        let mut m = self.map_entries(|e| e.embed(new_vars))?;
        m.degree = self.degree;
        Ok(m)
    }

    pub fn substitute_coefficients(&self, bindings: &HashMap<Var, Expr>) -> Self {
        self.map_entries(|e| Ok(e.substitute_coefficients(bindings)))
            .expect("substitution cannot fail")
    }
}
