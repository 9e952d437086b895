//! Passage from Čech–De Rham cocycles of the one-object model to
//! constant-coefficient Čech cocycles by cube integrals, and Thurston's
//! Godbillon–Vey integral.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::category::seed_from_bytes;
use crate::chernweil::{ArrowModel, CdrCochain, ChainString, ChernWeilError, Link};
use crate::symexpr::quad::{integrate_cube, integrate_interval, QuadConfig};
use crate::symexpr::{compose_substitute, BoxBounds, Env, Expr, Program, SmoothMap, SymError, Var};

/// Grid points per axis for cube-path validation.
pub const PATH_SAMPLES: usize = 50;
/// Cap on grid points for cubes of dimension three and more.
pub const PATH_SAMPLE_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollapseError {
    #[error("cube path leaves the box at stage {stage} (t = {at:?})")]
    Domain { stage: usize, at: Vec<f64> },
    #[error("integrand has a pole on the path: {0}")]
    Pole(String),
    #[error("unknown map '{0}'")]
    UnknownMap(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("term s = {s}: {source}")]
    Term { s: usize, source: ChernWeilError },
    #[error(transparent)]
    ChernWeil(#[from] ChernWeilError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Named self-embeddings of one box containing 0. Strings are free: no
/// composition table is needed.
#[derive(Clone, Debug)]
pub struct OneObjectModel {
    bounds: BoxBounds,
    maps: Vec<(String, SmoothMap)>,
    seed: u64,
}

impl OneObjectModel {
    pub fn new(bounds: BoxBounds, maps: Vec<(String, SmoothMap)>) -> Result<Self, CollapseError> {
        if bounds.iter().any(|&(a, b)| !(a < 0.0 && 0.0 < b)) {
            return Err(CollapseError::Model("0 must be interior to the box".into()));
        }
        for (name, m) in &maps {
            if m.dim() != bounds.len() {
                return Err(CollapseError::Model(format!("map '{name}' has dimension {}", m.dim())));
            }
        }
        let mut text = format!("{bounds:?}\n");
        for (name, m) in &maps {
            let comps: Vec<String> = m.components().iter().map(|e| e.to_string()).collect();
            text.push_str(&format!("{name}:{}\n", comps.join(";")));
        }
        Ok(OneObjectModel {
            seed: seed_from_bytes(text.as_bytes()),
            bounds,
            maps,
        })
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn maps(&self) -> &[(String, SmoothMap)] {
        &self.maps
    }

    pub fn index(&self, name: &str) -> Result<usize, CollapseError> {
        self.maps
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| CollapseError::UnknownMap(name.into()))
    }

    pub fn link(&self, i: usize) -> Link {
        Link {
            label: self.maps[i].0.clone(),
            src: 0,
            dst: 0,
            map: self.maps[i].1.clone(),
            morphism: None,
        }
    }

    pub fn string(&self, idx: &[usize]) -> ChainString {
        ChainString {
            source: 0,
            links: idx.iter().map(|&i| self.link(i)).collect(),
        }
    }

    pub fn string_by_names(&self, names: &[&str]) -> Result<ChainString, CollapseError> {
        let idx = names.iter().map(|n| self.index(n)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.string(&idx))
    }

    /// `count` distinct index tuples of length `len`, deterministic in `seed`.
    pub fn sample_tuples(&self, len: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
        let n = self.maps.len();
        let total = (n as u128).pow(len as u32);
        let all = |mut c: u128| {
            let mut t = vec![0; len];
            for slot in t.iter_mut().rev() {
                *slot = (c % n as u128) as usize;
                c /= n as u128;
            }
            t
        };
        if total <= count as u128 {
            return (0..total).map(all).collect();
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(count);
        let mut i = 0u64;
        while out.len() < count {
            let mut bytes = seed.to_le_bytes().to_vec();
            bytes.extend_from_slice(&i.to_le_bytes());
            let c = seed_from_bytes(&bytes) as u128 % total;
            if seen.insert(c) {
                out.push(all(c));
            }
            i += 1;
        }
        out
    }
}

impl ArrowModel for OneObjectModel {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn chart_count(&self) -> usize {
        1
    }

    fn chart_bounds(&self, _chart: usize) -> &BoxBounds {
        &self.bounds
    }

    fn compose(&self, g: &Link, f: &Link) -> Result<Option<Link>, ChernWeilError> {
        Ok(Some(Link {
            label: format!("{}.{}", g.label, f.label),
            src: 0,
            dst: 0,
            map: SmoothMap::compose(&g.map, &f.map)?,
            morphism: None,
        }))
    }

    fn strings(&self, k: usize) -> Vec<ChainString> {
        let n = self.maps.len();
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|t: Vec<usize>| {
                    (0..n).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        out.iter().map(|t| self.string(t)).collect()
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// `I(s_1..s_n) = σ_n(σ_{n-1}(… σ_2(σ_1(0) s_1) s_2 …) s_{n-1}) s_n` on `[0,1]^n`.
#[derive(Clone, Debug)]
pub struct CubeMap {
    pub s: usize,
    /// Components in the cube variables `s1..sn`.
    pub components: Vec<Expr>,
}

/// Builds the cube map and checks on a grid that every stage output stays in
/// the box and every stage is finite with nonzero Jacobian.
pub fn cube_map(sigmas: &[SmoothMap], bounds: &BoxBounds) -> Result<CubeMap, CollapseError> {
    let q = bounds.len();
    let s = sigmas.len();
    let mut point: Vec<Expr> = vec![Expr::zero(); q];
    for (j, sigma) in sigmas.iter().enumerate() {
        let b: HashMap<Var, Expr> = Var::chart_vars(q).into_iter().zip(point.iter().cloned()).collect();
        let scale = Expr::var(Var::S(j as u8 + 1));
        point = sigma
            .components()
            .iter()
            .map(|c| Ok(compose_substitute(c, &b)? * scale.clone()))
            .collect::<Result<_, SymError>>()?;
    }
    validate_path(sigmas, bounds)?;
    Ok(CubeMap { s, components: point })
}

fn validate_path(sigmas: &[SmoothMap], bounds: &BoxBounds) -> Result<(), CollapseError> {
    let s = sigmas.len();
    if s == 0 {
        return Ok(());
    }
    let per_axis = if s <= 2 {
        PATH_SAMPLES
    } else {
        ((PATH_SAMPLE_CAP as f64).powf(1.0 / s as f64).floor() as usize).max(2)
    };
    let grid: Vec<f64> = (0..per_axis).map(|i| i as f64 / (per_axis - 1) as f64).collect();
    let total = per_axis.pow(s as u32);
    let inside = |y: &[f64]| y.iter().zip(bounds).all(|(v, (lo, hi))| v >= lo && v <= hi);
    for c in 0..total {
        let mut t = vec![0.0; s];
        let mut r = c;
        for v in t.iter_mut() {
            *v = grid[r % per_axis];
            r /= per_axis;
        }
        let mut y = vec![0.0; bounds.len()];
        for (j, sigma) in sigmas.iter().enumerate() {
            let bad = || CollapseError::Domain { stage: j + 1, at: t.clone() };
            let det = sigma.det_at(&y).map_err(|_| bad())?;
            if det == 0.0 || !det.is_finite() {
                return Err(bad());
            }
            y = sigma.apply(&y).map_err(|_| bad())?.into_iter().map(|v| v * t[j]).collect();
            if !inside(&y) {
                return Err(bad());
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseTerm {
    pub s: usize,
    pub sign: i8,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseValue {
    pub value: f64,
    pub terms: Vec<CollapseTerm>,
}

/// `(-1)^{n(s-1) + s(s-1)/2}`.
pub fn collapse_sign(n: usize, s: usize) -> i8 {
    let e = (n as i64) * (s as i64 - 1) + (s as i64) * (s as i64 - 1) / 2;
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// `ũ(σ_1..σ_n) = Σ_s (-1)^{n(s-1)+s(s-1)/2} ∫_{I_{σ_1..σ_s}} u_{n-s}(σ_{s+1}..σ_n)`
/// for a cochain `u` of total degree `n`.
pub fn collapse_cocycle(
    model: &OneObjectModel,
    u: &CdrCochain,
    n: usize,
    sigmas: &ChainString,
    tol: f64,
) -> Result<CollapseValue, CollapseError> {
    if sigmas.len() != n {
        return Err(CollapseError::Model(format!("need {n} maps, got {}", sigmas.len())));
    }
    let q = model.dim();
    let present = u.bidegrees();
    let mut terms = Vec::new();
    for s in 0..=n.min(q) {
        if !present.contains(&(n - s, s)) {
            continue;
        }
        let term_err = |e: ChernWeilError| CollapseError::Term { s, source: e };
        let form = u.eval(model, s, &sigmas.tail(s)).map_err(term_err)?;
        let sign = collapse_sign(n, s);
        if form.is_zero() {
            terms.push(CollapseTerm { s, sign, value: 0.0, error: 0.0 });
            continue;
        }
        let maps: Vec<SmoothMap> = sigmas.links[..s].iter().map(|l| l.map.clone()).collect();
        let cube = cube_map(&maps, model.bounds())?;
        let images: HashMap<Var, Expr> = Var::chart_vars(q).into_iter().zip(cube.components.iter().cloned()).collect();
        let cube_vars = Var::cube_vars(s);
        let pulled = form.pullback(&images, &cube_vars).map_err(|e| term_err(e.into()))?;
        let coeff = pulled.coefficient(&(0..s).collect::<Vec<_>>());
        let prog = Program::compile(&coeff);
        let mut f = |t: &[f64]| {
            let mut env = Env::new();
            for (v, x) in cube_vars.iter().zip(t) {
                env.set(*v, *x);
            }
            prog.eval(&env)
        };
        let out = integrate_cube(&mut f, s, &QuadConfig::with_tol(tol)).map_err(|e| term_err(e.into()))?;
        terms.push(CollapseTerm {
            s,
            sign,
            value: out.value,
            error: out.error,
        });
    }
    Ok(CollapseValue {
        value: terms.iter().map(|t| t.sign as f64 * t.value).sum(),
        terms,
    })
}

/// `∫_0^{σ_1(0)} log|σ_2'(t)| σ_3''(σ_2 t)/σ_3'(σ_2 t) σ_2'(t) dt`.
pub fn thurston_gv(s1: &SmoothMap, s2: &SmoothMap, s3: &SmoothMap, tol: f64) -> Result<f64, CollapseError> {
    if s1.dim() != 1 || s2.dim() != 1 || s3.dim() != 1 {
        return Err(CollapseError::Model("Thurston's formula needs q = 1".into()));
    }
    let x = Var::X(1);
    let end = s1.apply(&[0.0])?[0];
    let f2 = &s2.components()[0];
    let d2 = f2.differentiate(x)?;
    let d3 = s3.components()[0].differentiate(x)?;
    let dd3 = d3.differentiate(x)?;
    let at2: HashMap<Var, Expr> = [(x, f2.clone())].into_iter().collect();
    let integrand = d2.abs().log() * compose_substitute(&dd3, &at2)? / compose_substitute(&d3, &at2)? * d2.clone();
    let prog = Program::compile(&integrand);
    for i in 0..=PATH_SAMPLES {
        let t = end * i as f64 / PATH_SAMPLES as f64;
        if let Err(e) = prog.eval(&Env::at_point(&[t])) {
            return Err(CollapseError::Pole(format!("at t = {t}: {e}")));
        }
    }
    let mut f = |t: &[f64]| prog.eval(&Env::at_point(t));
    Ok(integrate_interval(&mut f, 0.0, end, &QuadConfig::with_tol(tol))?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CechResidual {
    pub degree: usize,
    pub tuples: usize,
    pub max_residual: f64,
    pub worst: Option<String>,
}

/// `max |Σ_i (-1)^i ũ(δ_i σ)|` over the given `(n+1)`-tuples, constant
/// coefficients (`δ_0` drops `σ_1` with no action).
pub fn cech_cocycle_check<F>(
    model: &OneObjectModel,
    u: F,
    n: usize,
    tuples: &[Vec<usize>],
) -> Result<CechResidual, CollapseError>
where
    F: Fn(&ChainString) -> Result<f64, CollapseError> + Sync,
{
    let results: Vec<(f64, String)> = tuples
        .par_iter()
        .map(|t| -> Result<(f64, String), CollapseError> {
            if t.len() != n + 1 {
                return Err(CollapseError::Model(format!("tuple of length {} for degree {n}", t.len())));
            }
            let s = model.string(t);
            let mut acc = 0.0;
            for i in 0..=n + 1 {
                let face = s.face(model, i)?.expect("free strings have no identities");
                let v = u(&face)?;
                acc += if i % 2 == 0 { v } else { -v };
            }
            Ok((acc.abs(), s.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = CechResidual {
        degree: n,
        tuples: tuples.len(),
        max_residual: 0.0,
        worst: None,
    };
    for (v, label) in results {
        if !(v <= out.max_residual) {
            out.max_residual = v;
            out.worst = Some(label);
        }
    }
    Ok(out)
}
