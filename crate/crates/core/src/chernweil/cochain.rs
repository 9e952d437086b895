use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{chart_zero, ArrowModel, ChainString, ChernWeilError};
use crate::category::sample_box;
use crate::symexpr::{DifferentialForm, Env, Expr};

/// Lazy component: the form on the string's source chart.
pub type Evaluator =
    Arc<dyn Fn(&dyn ArrowModel, &ChainString) -> Result<DifferentialForm, ChernWeilError> + Send + Sync>;

/// A Čech–De Rham cochain, a finite sum of components of bidegree `(k, l)`.
/// Absent components are zero.
#[derive(Clone)]
pub struct CdrCochain {
    name: String,
    q: usize,
    components: BTreeMap<(usize, usize), Evaluator>,
}

impl std::fmt::Debug for CdrCochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CdrCochain")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("bidegrees", &self.bidegrees())
            .finish()
    }
}

impl CdrCochain {
    pub fn zero(name: impl Into<String>, q: usize) -> Self {
        CdrCochain {
            name: name.into(),
            q,
            components: BTreeMap::new(),
        }
    }

    /// Constant 0-form `c` at bidegree `(0, 0)`.
    pub fn constant(q: usize, c: Expr) -> Self {
        Self::zero(format!("{c}"), q).with_component(
            0,
            0,
            Arc::new(move |m: &dyn ArrowModel, _s: &ChainString| {
                Ok(DifferentialForm::scalar(&crate::symexpr::Var::chart_vars(m.dim()), c.clone()))
            }),
        )
    }

    /// Adds a component; ignored when `l > q`.
    pub fn with_component(mut self, k: usize, l: usize, f: Evaluator) -> Self {
        if l <= self.q {
            self.components.insert((k, l), f);
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        self.components.keys().copied().collect()
    }

    pub fn max_string_length(&self) -> usize {
        self.components.keys().map(|&(k, _)| k).max().unwrap_or(0)
    }

    /// Component `(k, l)` on a string of length `k`.
    pub fn eval(&self, model: &dyn ArrowModel, l: usize, s: &ChainString) -> Result<DifferentialForm, ChernWeilError> {
        match self.components.get(&(s.len(), l)) {
            Some(f) => f(model, s),
            None => Ok(chart_zero(self.q, l)),
        }
    }

    fn combine(&self, other: &CdrCochain, name: String, sign: i64) -> CdrCochain {
        let mut out = CdrCochain::zero(name, self.q);
        let keys: std::collections::BTreeSet<(usize, usize)> =
            self.components.keys().chain(other.components.keys()).copied().collect();
        for key in keys {
            let a = self.components.get(&key).cloned();
            let b = other.components.get(&key).cloned();
            let f: Evaluator = Arc::new(move |m, s| {
                let mut acc = match &a {
                    Some(f) => f(m, s)?,
                    None => chart_zero(m.dim(), key.1),
                };
                if let Some(g) = &b {
                    let v = g(m, s)?;
                    acc = if sign > 0 { acc.add(&v)? } else { acc.sub(&v)? };
                }
                Ok(acc)
            });
            out.components.insert(key, f);
        }
        out
    }

    pub fn add(&self, other: &CdrCochain) -> CdrCochain {
        self.combine(other, format!("{} + {}", self.name, other.name), 1)
    }

    pub fn sub(&self, other: &CdrCochain) -> CdrCochain {
        self.combine(other, format!("{} - {}", self.name, other.name), -1)
    }

    pub fn scale(&self, c: Expr) -> CdrCochain {
        let mut out = CdrCochain::zero(format!("({c})*{}", self.name), self.q);
        for (&key, f) in &self.components {
            let f = f.clone();
            let c = c.clone();
            out.components.insert(key, Arc::new(move |m, s| Ok(f(m, s)?.scale(&c))));
        }
        out
    }

    /// `D = δ + (-1)^k d`, built lazily per string.
    pub fn total_coboundary(&self) -> CdrCochain {
        let q = self.q;
        let mut targets: BTreeMap<(usize, usize), (Option<Evaluator>, Option<Evaluator>)> = BTreeMap::new();
        for (&(k, l), f) in &self.components {
            targets.entry((k + 1, l)).or_default().0 = Some(f.clone());
            if l < q {
                targets.entry((k, l + 1)).or_default().1 = Some(f.clone());
            }
        }
        let mut out = CdrCochain::zero(format!("D({})", self.name), q);
        for ((kk, ll), (delta_src, d_src)) in targets {
            let f: Evaluator = Arc::new(move |m, s| {
                let mut acc = chart_zero(m.dim(), ll);
                if let Some(c) = &delta_src {
                    for i in 0..=kk {
                        let Some(face) = s.face(m, i)? else { continue };
                        let mut v = c(m, &face)?;
                        if i == 0 {
                            v = s.links[0].map.pullback(&v)?;
                        }
                        acc = if i % 2 == 0 { acc.add(&v)? } else { acc.sub(&v)? };
                    }
                }
                if let Some(c) = &d_src {
                    let dv = c(m, s)?.exterior_d()?;
                    acc = if kk % 2 == 0 { acc.add(&dv)? } else { acc.sub(&dv)? };
                }
                Ok(acc)
            });
            out.components.insert((kk, ll), f);
        }
        out
    }

    /// `(a·b)(h_1..h_{k+k'}) = (-1)^{l k'} a(h_1..h_k) ∧ (h_k…h_1)^* b(h_{k+1}..)`
    /// for `a ∈ C^{k,l}`, `b ∈ C^{k',l'}`.
    pub fn product(&self, other: &CdrCochain) -> CdrCochain {
        let q = self.q;
        let mut targets: BTreeMap<(usize, usize), Vec<(usize, usize, usize, Evaluator, Evaluator)>> = BTreeMap::new();
        for (&(k, l), a) in &self.components {
            for (&(k2, l2), b) in &other.components {
                if l + l2 <= q {
                    targets
                        .entry((k + k2, l + l2))
                        .or_default()
                        .push((k, l, k2, a.clone(), b.clone()));
                }
            }
        }
        let mut out = CdrCochain::zero(format!("{}·{}", self.name, other.name), q);
        for ((kk, ll), parts) in targets {
            let f: Evaluator = Arc::new(move |m, s| {
                let mut acc = chart_zero(m.dim(), ll);
                for (k, l, k2, a, b) in &parts {
                    let left = a(m, &s.head(*k))?;
                    if left.is_zero() {
                        continue;
                    }
                    let right = s.pull_to_source(*k, &b(m, &s.tail(*k))?)?;
                    let w = left.wedge(&right)?;
                    acc = if (l * k2) % 2 == 0 { acc.add(&w)? } else { acc.sub(&w)? };
                }
                Ok(acc)
            });
            out.components.insert((kk, ll), f);
        }
        out
    }

    pub fn power(&self, n: usize) -> CdrCochain {
        let mut acc = CdrCochain::constant(self.q, Expr::one());
        for _ in 0..n {
            acc = acc.product(self);
        }
        acc.renamed(format!("({})^{n}", self.name))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub cochain: String,
    pub max_k: usize,
    pub strings: usize,
    pub points_per_chart: usize,
    /// Component-string-point evaluations performed.
    pub components_sampled: usize,
    pub max_residual: f64,
    pub worst: Option<String>,
}

/// Keeps sample points whose orbit along the string stays inside every chart.
pub(crate) fn string_points(model: &dyn ArrowModel, s: &ChainString, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, ChernWeilError> {
    let bounds = model.chart_bounds(s.source);
    let mut out = Vec::with_capacity(n);
    for x in sample_box(bounds, n * 8, seed) {
        if orbit_inside(model, s, &x)? {
            out.push(x);
            if out.len() == n {
                break;
            }
        }
    }
    Ok(out)
}

fn orbit_inside(model: &dyn ArrowModel, s: &ChainString, x: &[f64]) -> Result<bool, ChernWeilError> {
    let mut y = x.to_vec();
    for link in &s.links {
        y = match link.map.apply(&y) {
            Ok(v) => v,
            Err(_) => return Ok(false),
        };
        let b = model.chart_bounds(link.dst);
        if y.iter().zip(b).any(|(v, (lo, hi))| !(v > lo && v < hi)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Max absolute coefficient of every component on every string of length
/// `<= max_k`, at `points` sample points per string.
pub fn residual_sweep(
    model: &dyn ArrowModel,
    c: &CdrCochain,
    max_k: usize,
    points: usize,
) -> Result<ResidualReport, ChernWeilError> {
    let mut jobs: Vec<(usize, ChainString)> = Vec::new();
    let mut strings = 0;
    for k in 0..=max_k {
        let ls: Vec<usize> = c.components.keys().filter(|(kk, _)| *kk == k).map(|&(_, l)| l).collect();
        if ls.is_empty() {
            continue;
        }
        let ss = model.strings(k);
        strings += ss.len();
        for s in ss {
            for &l in &ls {
                jobs.push((l, s.clone()));
            }
        }
    }
    let seed = model.seed();
    let results: Vec<(usize, f64, String)> = jobs
        .par_iter()
        .map(|(l, s)| -> Result<(usize, f64, String), ChernWeilError> {
            let form = c.eval(model, *l, s)?;
            let pts = string_points(model, s, points, seed)?;
            if form.is_zero() {
                return Ok((pts.len(), 0.0, String::new()));
            }
            let compiled = form.compile();
            let mut worst = (0.0f64, String::new());
            for x in &pts {
                for (_, v) in compiled.evaluate(&Env::at_point(x))? {
                    if !(v.abs() <= worst.0) {
                        worst = (v.abs(), format!("({},{l}) on {s} at x={x:?}", s.len()));
                    }
                }
            }
            Ok((pts.len(), worst.0, worst.1))
        })
        .collect::<Result<_, _>>()?;
    let mut report = ResidualReport {
        cochain: c.name.clone(),
        max_k,
        strings,
        points_per_chart: points,
        components_sampled: 0,
        max_residual: 0.0,
        worst: None,
    };
    for (n, v, w) in results {
        report.components_sampled += n;
        if v > report.max_residual || (v.is_nan() && !report.max_residual.is_nan()) {
            report.max_residual = v;
            report.worst = Some(w);
        }
    }
    Ok(report)
}
