//! Chern–Weil and Chern–Simons cochains in the Čech–De Rham complex of an
//! embedding category: connections, simplex transgressions, closed formulas
//! and the total differential.

mod cochain;
mod formulas;
mod poly;
mod transgression;

use std::fmt;
use thiserror::Error;

use crate::category::{CategoryError, CategoryPresentation, Morphism};
use crate::symexpr::{BoxBounds, DifferentialForm, MatrixForm, SmoothMap, SymError, Var};

pub use cochain::{residual_sweep, CdrCochain, Evaluator, ResidualReport};
pub use formulas::{
    bott_gv, calibrate_sign, chern_character, closed_formula_cocycle, gv, u1, SignCalibration, SIGN_FLAG,
};
pub use poly::{CocycleDescriptor, InvariantPolynomial};
pub use transgression::{
    connection_homotopy, cs_transgression, cw_cocycle, omega_h, stokes_check, string_connection_forms,
    string_connection_forms_direct,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChernWeilError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// One embedding in a string, with its charts.
#[derive(Clone, Debug)]
pub struct Link {
    pub label: String,
    pub src: usize,
    pub dst: usize,
    pub map: SmoothMap,
    /// Set for arrows of a category presentation.
    pub morphism: Option<Morphism>,
}

/// `U_0 --h_1--> … --h_k--> U_k`.
#[derive(Clone, Debug)]
pub struct ChainString {
    pub source: usize,
    pub links: Vec<Link>,
}

impl ChainString {
    pub fn point(chart: usize) -> Self {
        ChainString {
            source: chart,
            links: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Chart reached after the first `i` arrows.
    pub fn chart(&self, i: usize) -> usize {
        if i == 0 {
            self.source
        } else {
            self.links[i - 1].dst
        }
    }

    /// `(h_{i+1}, …, h_k)` starting at `U_i`.
    pub fn tail(&self, i: usize) -> ChainString {
        ChainString {
            source: self.chart(i),
            links: self.links[i..].to_vec(),
        }
    }

    pub fn head(&self, i: usize) -> ChainString {
        ChainString {
            source: self.source,
            links: self.links[..i].to_vec(),
        }
    }

    /// `δ_i` for `0 <= i <= k`; `None` when an inner composite is an
    /// identity (a degenerate string).
    pub fn face(&self, model: &dyn ArrowModel, i: usize) -> Result<Option<ChainString>, ChernWeilError> {
        let k = self.len();
        if i == 0 {
            return Ok(Some(self.tail(1)));
        }
        if i == k {
            return Ok(Some(self.head(k - 1)));
        }
        let Some(c) = model.compose(&self.links[i], &self.links[i - 1])? else {
            return Ok(None);
        };
        let mut links = self.links[..i - 1].to_vec();
        links.push(c);
        links.extend_from_slice(&self.links[i + 1..]);
        Ok(Some(ChainString {
            source: self.source,
            links,
        }))
    }

    /// Pulls a form on `U_i` back to `U_0` along `h_i, …, h_1`.
    pub fn pull_to_source(&self, i: usize, form: &DifferentialForm) -> Result<DifferentialForm, SymError> {
        let mut acc = form.clone();
        for link in self.links[..i].iter().rev() {
            acc = link.map.pullback(&acc)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for ChainString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.links.iter().map(|l| l.label.as_str()).collect();
        write!(f, "({})", labels.join(","))
    }
}

/// What the cochain machinery needs from a presentation: charts, string
/// enumeration and composition of adjacent arrows.
pub trait ArrowModel: Send + Sync {
    fn dim(&self) -> usize;
    fn chart_count(&self) -> usize;
    fn chart_bounds(&self, chart: usize) -> &BoxBounds;
    /// `g ∘ f`, or `None` for an identity.
    fn compose(&self, g: &Link, f: &Link) -> Result<Option<Link>, ChernWeilError>;
    /// Strings of `k` arrows used by residual sweeps.
    fn strings(&self, k: usize) -> Vec<ChainString>;
    fn seed(&self) -> u64;
}

fn category_link(p: &CategoryPresentation, m: Morphism) -> Link {
    Link {
        label: p.morphism_id(m),
        src: p.src(m),
        dst: p.dst(m),
        map: p.map_of(m),
        morphism: Some(m),
    }
}

impl ArrowModel for CategoryPresentation {
    fn dim(&self) -> usize {
        CategoryPresentation::dim(self)
    }

    fn chart_count(&self) -> usize {
        self.charts().len()
    }

    fn chart_bounds(&self, chart: usize) -> &BoxBounds {
        &self.charts()[chart].bounds
    }

    fn compose(&self, g: &Link, f: &Link) -> Result<Option<Link>, ChernWeilError> {
        match (g.morphism, f.morphism) {
            (Some(gm), Some(fm)) => match CategoryPresentation::compose(self, gm, fm) {
                Some(Morphism::Identity(_)) => Ok(None),
                Some(h) => Ok(Some(category_link(self, h))),
                None => Err(ChernWeilError::Domain(format!("no composite {}.{}", g.label, f.label))),
            },
            _ => Ok(Some(Link {
                label: format!("{}.{}", g.label, f.label),
                src: f.src,
                dst: g.dst,
                map: SmoothMap::compose(&g.map, &f.map)?,
                morphism: None,
            })),
        }
    }

    fn strings(&self, k: usize) -> Vec<ChainString> {
        self.enumerate_nerve(k)
            .into_iter()
            .map(|s| ChainString {
                source: s.source,
                links: s.arrows.iter().map(|&a| category_link(self, Morphism::Arrow(a))).collect(),
            })
            .collect()
    }

    fn seed(&self) -> u64 {
        CategoryPresentation::seed(self)
    }
}

/// Local connection forms `∇_U`, one `q×q` matrix of 1-forms per chart.
/// Missing entries are the trivial connection.
#[derive(Clone, Debug)]
pub struct ConnectionAssignment {
    q: usize,
    per_chart: Vec<Option<MatrixForm>>,
}

impl ConnectionAssignment {
    pub fn trivial(charts: usize, q: usize) -> Self {
        ConnectionAssignment {
            q,
            per_chart: vec![None; charts],
        }
    }

    /// Same matrix on every chart.
    pub fn uniform(charts: usize, m: MatrixForm) -> Result<Self, ChernWeilError> {
        let mut c = Self::trivial(charts, m.size());
        for i in 0..charts {
            c.set(i, m.clone())?;
        }
        Ok(c)
    }

    pub fn set(&mut self, chart: usize, m: MatrixForm) -> Result<(), ChernWeilError> {
        if m.size() != self.q || m.degree() != 1 || m.vars() != Var::chart_vars(self.q).as_slice() {
            return Err(ChernWeilError::Unsupported(format!(
                "connection on chart {chart} must be a {q}x{q} matrix of 1-forms in x1..x{q}",
                q = self.q
            )));
        }
        self.per_chart[chart] = Some(m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn is_trivial(&self) -> bool {
        self.per_chart.iter().all(|m| m.as_ref().is_none_or(MatrixForm::is_zero))
    }

    pub fn get(&self, chart: usize) -> MatrixForm {
        self.per_chart
            .get(chart)
            .cloned()
            .flatten()
            .unwrap_or_else(|| MatrixForm::zero(self.q, &Var::chart_vars(self.q), 1))
    }
}

pub(crate) fn chart_zero(q: usize, l: usize) -> DifferentialForm {
    DifferentialForm::zero(&Var::chart_vars(q), l)
}
