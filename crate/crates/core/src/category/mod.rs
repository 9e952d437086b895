//! Finite presentations of embedding categories: charts, embeddings and an
//! explicit composition table.

pub mod sampling;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::symexpr::{BoxBounds, SmoothMap, SymError};

pub use sampling::{sample_box, seed_from_bytes};

/// Samples per box used by validation and orientation checks.
pub const VALIDATION_SAMPLES: usize = 25;
/// Tolerance for table entries against composed maps.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CategoryError {
    #[error("chart dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown id '{0}'")]
    UnknownId(String),
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("arrow '{arrow}' changes orientation inside its domain (det J = {a:e} and {b:e})")]
    InconsistentOrientation { arrow: String, a: f64, b: f64 },
    #[error("arrow '{arrow}': {source}")]
    Map { arrow: String, source: SymError },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: String,
    pub bounds: BoxBounds,
}

#[derive(Clone, Debug)]
pub struct Arrow {
    pub id: String,
    pub src: usize,
    pub dst: usize,
    pub map: SmoothMap,
}

/// An arrow or an implicit identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Morphism {
    Identity(usize),
    Arrow(usize),
}

/// `U_0 --h_1--> U_1 --> … --h_k--> U_k`, none of the `h_i` an identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NerveString {
    pub source: usize,
    pub arrows: Vec<usize>,
}

impl NerveString {
    pub fn degree(&self) -> usize {
        self.arrows.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    DuplicateId,
    BadBox,
    Embedding,
    MissingComposition,
    MalformedComposition,
    Associativity,
    IdentityLaw,
    NumericConsistency,
    Orientation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub samples_per_box: usize,
    pub seed: u64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, kind: IssueKind, message: String) {
        self.issues.push(ValidationIssue { kind, message });
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }
}

/// A finite category of chart embeddings with a user-supplied composition
/// table. Identity arrows are implicit and named `id_<chart>`.
#[derive(Clone, Debug)]
pub struct CategoryPresentation {
    dim: usize,
    charts: Vec<Chart>,
    arrows: Vec<Arrow>,
    table: HashMap<(Morphism, Morphism), Morphism>,
    by_id: Vec<usize>,
    seed: u64,
}

fn fmt_bounds(b: &BoxBounds) -> String {
    let parts: Vec<String> = b.iter().map(|(a, c)| format!("{a},{c}")).collect();
    format!("[{}]", parts.join(";"))
}

impl CategoryPresentation {
    /// Assembles a presentation. Structural problems (dimension, indices)
    /// are errors; semantic ones are left to [`Self::validate`].
    pub fn new(
        charts: Vec<Chart>,
        arrows: Vec<Arrow>,
        table: Vec<((Morphism, Morphism), Morphism)>,
    ) -> Result<Self, CategoryError> {
        let dim = charts
            .first()
            .map(|c| c.bounds.len())
            .ok_or_else(|| CategoryError::Dimension("no charts".into()))?;
        for c in &charts {
            if c.bounds.len() != dim {
                return Err(CategoryError::Dimension(format!(
                    "chart '{}' has dimension {}, expected {dim}",
                    c.id,
                    c.bounds.len()
                )));
            }
        }
        for a in &arrows {
            if a.src >= charts.len() || a.dst >= charts.len() {
                return Err(CategoryError::UnknownId(a.id.clone()));
            }
            if a.map.dim() != dim {
                return Err(CategoryError::Dimension(format!("arrow '{}' has dimension {}", a.id, a.map.dim())));
            }
        }
        let mut by_id: Vec<usize> = (0..arrows.len()).collect();
        by_id.sort_by(|&i, &j| arrows[i].id.cmp(&arrows[j].id));
        let mut canon = String::new();
        for c in &charts {
            canon.push_str(&format!("chart {} {}\n", c.id, fmt_bounds(&c.bounds)));
        }
        for a in &arrows {
            let comps: Vec<String> = a.map.components().iter().map(|e| e.to_string()).collect();
            canon.push_str(&format!("arrow {} {} {} {}\n", a.id, charts[a.src].id, charts[a.dst].id, comps.join(";")));
        }
        let mut rendered: Vec<String> = Vec::new();
        let mut map = HashMap::new();
        for ((g, f), h) in table {
            map.insert((g, f), h);
        }
        let mut p = CategoryPresentation {
            dim,
            charts,
            arrows,
            table: map,
            by_id,
            seed: 0,
        };
        for ((g, f), h) in &p.table {
            rendered.push(format!("{}.{}={}", p.morphism_id(*g), p.morphism_id(*f), p.morphism_id(*h)));
        }
        rendered.sort();
        canon.push_str(&rendered.join("\n"));
        p.seed = seed_from_bytes(canon.as_bytes());
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    /// Seed derived from a hash of the presentation.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chart_index(&self, id: &str) -> Option<usize> {
        self.charts.iter().position(|c| c.id == id)
    }

    pub fn arrow_index(&self, id: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.id == id)
    }

    /// Resolves an arrow id or `id_<chart>`.
    pub fn morphism(&self, id: &str) -> Option<Morphism> {
        if let Some(i) = self.arrow_index(id) {
            return Some(Morphism::Arrow(i));
        }
        id.strip_prefix("id_")
            .and_then(|c| self.chart_index(c))
            .map(Morphism::Identity)
    }

    pub fn morphism_id(&self, m: Morphism) -> String {
        match m {
            Morphism::Identity(c) => format!("id_{}", self.charts[c].id),
            Morphism::Arrow(a) => self.arrows[a].id.clone(),
        }
    }

    pub fn src(&self, m: Morphism) -> usize {
        match m {
            Morphism::Identity(c) => c,
            Morphism::Arrow(a) => self.arrows[a].src,
        }
    }

    pub fn dst(&self, m: Morphism) -> usize {
        match m {
            Morphism::Identity(c) => c,
            Morphism::Arrow(a) => self.arrows[a].dst,
        }
    }

    pub fn map_of(&self, m: Morphism) -> SmoothMap {
        match m {
            Morphism::Identity(c) => SmoothMap::identity(self.charts[c].bounds.clone()),
            Morphism::Arrow(a) => self.arrows[a].map.clone(),
        }
    }

    /// `g ∘ f`, with identities implicit. `None` when not composable or the
    /// table has no entry.
    pub fn compose(&self, g: Morphism, f: Morphism) -> Option<Morphism> {
        if self.dst(f) != self.src(g) {
            return None;
        }
        if let Some(h) = self.table.get(&(g, f)) {
            return Some(*h);
        }
        match (g, f) {
            (Morphism::Identity(_), _) => Some(f),
            (_, Morphism::Identity(_)) => Some(g),
            _ => None,
        }
    }

    /// All composable strings of `k` non-identity arrows, ordered
    /// lexicographically by arrow ids. Degree 0 lists the charts.
    pub fn enumerate_nerve(&self, k: usize) -> Vec<NerveString> {
        if k == 0 {
            return (0..self.charts.len())
                .map(|c| NerveString {
                    source: c,
                    arrows: Vec::new(),
                })
                .collect();
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        self.extend_strings(k, &mut cur, &mut out);
        out
    }

    fn extend_strings(&self, k: usize, cur: &mut Vec<usize>, out: &mut Vec<NerveString>) {
        if cur.len() == k {
            out.push(NerveString {
                source: self.arrows[cur[0]].src,
                arrows: cur.clone(),
            });
            return;
        }
        for &a in &self.by_id {
            if let Some(&last) = cur.last() {
                if self.arrows[last].dst != self.arrows[a].src {
                    continue;
                }
            }
            cur.push(a);
            self.extend_strings(k, cur, out);
            cur.pop();
        }
    }

    /// Constant sign of det J on the arrow's domain, checked at samples.
    pub fn orientation_sign(&self, m: Morphism) -> Result<i8, CategoryError> {
        let Morphism::Arrow(a) = m else {
            return Ok(1);
        };
        let arrow = &self.arrows[a];
        let pts = sample_box(&self.charts[arrow.src].bounds, VALIDATION_SAMPLES, self.seed ^ a as u64);
        let mut first: Option<f64> = None;
        for p in &pts {
            let d = arrow.map.det_at(p).map_err(|e| CategoryError::Map {
                arrow: arrow.id.clone(),
                source: e,
            })?;
            match first {
                None => first = Some(d),
                Some(d0) if d0.signum() != d.signum() || d == 0.0 => {
                    return Err(CategoryError::InconsistentOrientation {
                        arrow: arrow.id.clone(),
                        a: d0,
                        b: d,
                    })
                }
                _ => {}
            }
        }
        let d0 = first.unwrap_or(1.0);
        if d0 == 0.0 {
            return Err(CategoryError::InconsistentOrientation {
                arrow: arrow.id.clone(),
                a: 0.0,
                b: 0.0,
            });
        }
        Ok(if d0 > 0.0 { 1 } else { -1 })
    }

    /// Runs every presentation check with the hash-derived seed.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with_seed(self.seed)
    }

    pub fn validate_with_seed(&self, seed: u64) -> ValidationReport {
        let mut rep = ValidationReport {
            issues: Vec::new(),
            samples_per_box: VALIDATION_SAMPLES,
            seed,
        };
        self.check_ids(&mut rep);
        for c in &self.charts {
            if c.bounds.iter().any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                rep.push(IssueKind::BadBox, format!("chart '{}' has a degenerate box {}", c.id, fmt_bounds(&c.bounds)));
            }
        }
        if rep.has(IssueKind::BadBox) {
            return rep;
        }
        self.check_embeddings(seed, &mut rep);
        self.check_table(seed, &mut rep);
        rep
    }

    fn check_ids(&self, rep: &mut ValidationReport) {
        let mut seen = HashSet::new();
        for c in &self.charts {
            if !seen.insert(c.id.clone()) {
                rep.push(IssueKind::DuplicateId, format!("chart id '{}' repeated", c.id));
            }
        }
        let mut seen = HashSet::new();
        for a in &self.arrows {
            if !seen.insert(a.id.clone()) {
                rep.push(IssueKind::DuplicateId, format!("arrow id '{}' repeated", a.id));
            }
            if a.id.starts_with("id_") {
                rep.push(IssueKind::DuplicateId, format!("arrow id '{}' collides with implicit identities", a.id));
            }
        }
    }

    fn check_embeddings(&self, seed: u64, rep: &mut ValidationReport) {
        for (ai, a) in self.arrows.iter().enumerate() {
            let src = &self.charts[a.src];
            let dst = &self.charts[a.dst];
            let pts = sample_box(&src.bounds, VALIDATION_SAMPLES, seed ^ (ai as u64).wrapping_mul(0x9e37));
            let mut sign = 0.0f64;
            for p in &pts {
                match a.map.apply(p) {
                    Ok(y) => {
                        for (i, (&yi, &(lo, hi))) in y.iter().zip(&dst.bounds).enumerate() {
                            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                            if yi < lo - slack || yi > hi + slack {
                                rep.push(
                                    IssueKind::Embedding,
                                    format!(
                                        "arrow '{}': image of {p:?} has coordinate {} = {yi} outside [{lo},{hi}] of chart '{}'",
                                        a.id,
                                        i + 1,
                                        dst.id
                                    ),
                                );
                                break;
                            }
                        }
                    }
                    Err(e) => rep.push(IssueKind::Embedding, format!("arrow '{}' at {p:?}: {e}", a.id)),
                }
                match a.map.det_at(p) {
                    Ok(d) if d == 0.0 => {
                        rep.push(IssueKind::Embedding, format!("arrow '{}' has det J = 0 at {p:?}", a.id))
                    }
                    Ok(d) => {
                        if sign != 0.0 && d.signum() != sign {
                            rep.push(
                                IssueKind::Orientation,
                                format!("arrow '{}' changes orientation at {p:?}", a.id),
                            );
                        }
                        sign = d.signum();
                    }
                    Err(e) => rep.push(IssueKind::Embedding, format!("arrow '{}' Jacobian at {p:?}: {e}", a.id)),
                }
            }
        }
    }

    fn check_table(&self, seed: u64, rep: &mut ValidationReport) {
        // entries must be well formed
        for (&(g, f), &h) in &self.table {
            let (gi, fi, hi) = (self.morphism_id(g), self.morphism_id(f), self.morphism_id(h));
            if self.dst(f) != self.src(g) {
                rep.push(IssueKind::MalformedComposition, format!("{gi}.{fi}: '{fi}' does not end where '{gi}' starts"));
                continue;
            }
            if self.src(h) != self.src(f) || self.dst(h) != self.dst(g) {
                rep.push(
                    IssueKind::MalformedComposition,
                    format!("{gi}.{fi}={hi}: '{hi}' has the wrong source or target"),
                );
            }
            match (g, f) {
                (Morphism::Identity(_), _) if h != f => {
                    rep.push(IssueKind::IdentityLaw, format!("{gi}.{fi}={hi} but identity law requires {fi}"))
                }
                (_, Morphism::Identity(_)) if h != g => {
                    rep.push(IssueKind::IdentityLaw, format!("{gi}.{fi}={hi} but identity law requires {gi}"))
                }
                _ => {}
            }
        }
        // totality
        let n = self.arrows.len();
        for f in 0..n {
            for g in 0..n {
                if self.arrows[f].dst != self.arrows[g].src {
                    continue;
                }
                if self.compose(Morphism::Arrow(g), Morphism::Arrow(f)).is_none() {
                    rep.push(
                        IssueKind::MissingComposition,
                        format!("no table entry for {}.{}", self.arrows[g].id, self.arrows[f].id),
                    );
                }
            }
        }
        if rep.has(IssueKind::MissingComposition) || rep.has(IssueKind::MalformedComposition) {
            return;
        }
        // associativity on composable triples (h ∘ g) ∘ f = h ∘ (g ∘ f)
        for f in 0..n {
            for g in 0..n {
                if self.arrows[f].dst != self.arrows[g].src {
                    continue;
                }
                for h in 0..n {
                    if self.arrows[g].dst != self.arrows[h].src {
                        continue;
                    }
                    let (fm, gm, hm) = (Morphism::Arrow(f), Morphism::Arrow(g), Morphism::Arrow(h));
                    let left = self.compose(hm, gm).and_then(|hg| self.compose(hg, fm));
                    let right = self.compose(gm, fm).and_then(|gf| self.compose(hm, gf));
                    if left != right {
                        rep.push(
                            IssueKind::Associativity,
                            format!(
                                "({h}.{g}).{f} = {} but {h}.({g}.{f}) = {}",
                                left.map_or("undefined".into(), |m| self.morphism_id(m)),
                                right.map_or("undefined".into(), |m| self.morphism_id(m)),
                                h = self.arrows[h].id,
                                g = self.arrows[g].id,
                                f = self.arrows[f].id,
                            ),
                        );
                    }
                }
            }
        }
        // numeric consistency of every table entry
        let mut entries: Vec<_> = self.table.iter().collect();
        entries.sort_by_key(|(k, _)| **k);
        for (&(g, f), &h) in entries {
            let pts = sample_box(&self.charts[self.src(f)].bounds, VALIDATION_SAMPLES, seed.rotate_left(17));
            let (mg, mf, mh) = (self.map_of(g), self.map_of(f), self.map_of(h));
            for p in &pts {
                let composed = mf.apply(p).and_then(|y| mg.apply(&y));
                let direct = mh.apply(p);
                match (composed, direct) {
                    (Ok(a), Ok(b)) => {
                        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                        if err >= CONSISTENCY_TOL {
                            rep.push(
                                IssueKind::NumericConsistency,
                                format!(
                                    "{}.{}={}: composed map differs by {err:e} at {p:?}",
                                    self.morphism_id(g),
                                    self.morphism_id(f),
                                    self.morphism_id(h)
                                ),
                            );
                            break;
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        rep.push(IssueKind::NumericConsistency, format!("evaluation failed at {p:?}: {e}"));
                        break;
                    }
                }
            }
        }
    }

    /// Composition table rendered as `g.f=h` lines, sorted.
    pub fn table_lines(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .table
            .iter()
            .map(|((g, f), h)| format!("{}.{}={}", self.morphism_id(*g), self.morphism_id(*f), self.morphism_id(*h)))
            .collect();
        v.sort();
        v
    }

    /// Composite `h_k ∘ … ∘ h_1` of a string (identity of the source for k=0).
    pub fn composite(&self, s: &NerveString) -> Option<Morphism> {
        let mut acc = Morphism::Identity(s.source);
        for &a in &s.arrows {
            acc = self.compose(Morphism::Arrow(a), acc)?;
        }
        Some(acc)
    }

    /// Per-degree nerve sizes.
    pub fn nerve_sizes(&self, max_k: usize) -> BTreeMap<usize, usize> {
        (0..=max_k).map(|k| (k, self.enumerate_nerve(k).len())).collect()
    }
}

impl fmt::Display for CategoryPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.charts {
            writeln!(f, "chart {} {}", c.id, fmt_bounds(&c.bounds))?;
        }
        for a in &self.arrows {
            let comps: Vec<String> = a.map.components().iter().map(|e| e.to_string()).collect();
            writeln!(f, "arrow {}: {} -> {} ({})", a.id, self.charts[a.src].id, self.charts[a.dst].id, comps.join("; "))?;
        }
        for l in self.table_lines() {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse_expr, VarContext};

    fn arrow(id: &str, src: usize, dst: usize, e: &str, charts: &[Chart]) -> Arrow {
        let ctx = VarContext::chart(1);
        Arrow {
            id: id.into(),
            src,
            dst,
            map: SmoothMap::new(
                vec![parse_expr(e, &ctx).unwrap()],
                charts[src].bounds.clone(),
                charts[dst].bounds.clone(),
            )
            .unwrap(),
        }
    }

    fn z2(gg: Morphism) -> CategoryPresentation {
        let charts = vec![Chart {
            id: "U".into(),
            bounds: vec![(-2.0, 2.0)],
        }];
        let arrows = vec![arrow("g", 0, 0, "-x1", &charts)];
        let g = Morphism::Arrow(0);
        CategoryPresentation::new(charts, arrows, vec![((g, g), gg)]).unwrap()
    }

    #[test]
    fn z2_valid_and_nerve() {
        let p = z2(Morphism::Identity(0));
        assert!(p.validate().is_valid(), "{:?}", p.validate());
        assert_eq!(p.enumerate_nerve(2).len(), 1);
        assert_eq!(p.enumerate_nerve(0).len(), 1);
        assert_eq!(p.orientation_sign(Morphism::Arrow(0)).unwrap(), -1);
        assert_eq!(p.orientation_sign(Morphism::Identity(0)).unwrap(), 1);
    }

    #[test]
    fn z2_bad_table_reported() {
        let p = z2(Morphism::Arrow(0));
        let rep = p.validate();
        assert!(!rep.is_valid());
        assert!(rep.has(IssueKind::NumericConsistency));
        assert!(rep.issues.iter().any(|i| i.message.contains("g.g=g")));
    }

    #[test]
    fn escaping_image() {
        let charts = vec![Chart {
            id: "U".into(),
            bounds: vec![(-2.0, 2.0)],
        }];
        let arrows = vec![arrow("t", 0, 0, "3*x1", &charts)];
        let t = Morphism::Arrow(0);
        let p = CategoryPresentation::new(charts, arrows, vec![((t, t), t)]).unwrap();
        assert!(p.validate().has(IssueKind::Embedding));
    }

    #[test]
    fn missing_entry() {
        let charts = vec![Chart {
            id: "U".into(),
            bounds: vec![(-2.0, 2.0)],
        }];
        let arrows = vec![arrow("g", 0, 0, "-x1", &charts)];
        let p = CategoryPresentation::new(charts, arrows, vec![]).unwrap();
        assert!(p.validate().has(IssueKind::MissingComposition));
    }
}
