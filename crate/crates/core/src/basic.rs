//! Holonomy-invariant forms, basic cohomology and the coinvariant model of
//! compactly supported basic forms, inside a polynomial ansatz.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::category::CategoryPresentation;
use crate::cech::{dense_rank, nullspace};
use crate::symexpr::poly::Poly;
use crate::symexpr::{DifferentialForm, Expr, SymError, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasicError {
    #[error("arrow '{arrow}' is outside the polynomial ansatz: {source}")]
    UnsupportedAnsatz { arrow: String, source: SymError },
}

/// Polynomial-coefficient form `Σ p_I dx_I` in `x1..xq`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyForm {
    nvars: usize,
    terms: BTreeMap<Vec<usize>, Poly>,
}

impl PolyForm {
    pub fn zero(nvars: usize) -> Self {
        PolyForm {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn term(nvars: usize, idx: Vec<usize>, p: Poly) -> Self {
        let mut f = Self::zero(nvars);
        f.accumulate(idx, p);
        f
    }

    fn accumulate(&mut self, idx: Vec<usize>, p: Poly) {
        if p.is_zero() {
            return;
        }
        let slot = self.terms.entry(idx.clone()).or_insert_with(|| Poly::zero(self.nvars));
        *slot = slot.add(&p);
        if slot.is_zero() {
            self.terms.remove(&idx);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Poly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn exterior_d(&self) -> PolyForm {
        let mut out = Self::zero(self.nvars);
        for (idx, p) in &self.terms {
            for j in 0..self.nvars {
                if idx.contains(&j) {
                    continue;
                }
                let pos = idx.iter().filter(|&&i| i < j).count();
                let mut nidx = idx.clone();
                nidx.insert(pos, j);
                let mut dp = p.derivative(j);
                if pos % 2 == 1 {
                    dp = dp.neg();
                }
                out.accumulate(nidx, dp);
            }
        }
        out
    }

    /// Pullback along the polynomial map with components `h`.
    pub fn pullback(&self, h: &[Poly]) -> PolyForm {
        let n = self.nvars;
        let jac: Vec<Vec<Poly>> = h.iter().map(|c| (0..n).map(|j| c.derivative(j)).collect()).collect();
        let mut out = Self::zero(n);
        for (idx, p) in &self.terms {
            let ph = p.compose(h);
            for cols in combinations(n, idx.len()) {
                let minor = det(&idx.iter().map(|&r| cols.iter().map(|&c| jac[r][c].clone()).collect()).collect::<Vec<_>>(), n);
                out.accumulate(cols, ph.mul(&minor));
            }
        }
        out
    }

    pub fn to_form(&self) -> Result<DifferentialForm, SymError> {
        let vars = Var::chart_vars(self.nvars);
        let degree = self.terms.keys().next().map_or(0, |k| k.len());
        DifferentialForm::from_terms(&vars, degree, self.terms.iter().map(|(k, p)| (k.clone(), p.to_expr())))
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Laplace expansion along the first row.
fn det(m: &[Vec<Poly>], nvars: usize) -> Poly {
    match m.len() {
        0 => Poly::constant(nvars, BigRational::one()),
        1 => m[0][0].clone(),
        k => {
            let mut acc = Poly::zero(nvars);
            for c in 0..k {
                if m[0][c].is_zero() {
                    continue;
                }
                let sub: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, p)| p.clone()).collect())
                    .collect();
                let t = m[0][c].mul(&det(&sub, nvars));
                acc = if c % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
            }
            acc
        }
    }
}

/// Monomial basis `x^α dx_I` with `|I| = ℓ` and `|α| <= D` on every chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialFormAnsatz {
    pub charts: usize,
    pub nvars: usize,
    pub form_degree: usize,
    pub poly_degree: Option<u32>,
    /// Per-chart basis elements `(I, α)`.
    pub basis: Vec<(Vec<usize>, Vec<u32>)>,
}

impl PolynomialFormAnsatz {
    /// `poly_degree = None` stands for a negative bound, i.e. the zero space.
    pub fn new(charts: usize, nvars: usize, form_degree: usize, poly_degree: Option<u32>) -> Self {
        let basis = match poly_degree {
            Some(d) if form_degree <= nvars => {
                let mons = Poly::monomials(nvars, d);
                combinations(nvars, form_degree)
                    .into_iter()
                    .flat_map(|i| mons.iter().map(move |a| (i.clone(), a.clone())))
                    .collect()
            }
            _ => Vec::new(),
        };
        PolynomialFormAnsatz {
            charts,
            nvars,
            form_degree,
            poly_degree,
            basis,
        }
    }

    pub fn per_chart(&self) -> usize {
        self.basis.len()
    }

    pub fn dimension(&self) -> usize {
        self.charts * self.basis.len()
    }

    fn element(&self, i: usize) -> PolyForm {
        let (idx, a) = &self.basis[i];
        PolyForm::term(self.nvars, idx.clone(), Poly::monomial(self.nvars, a.clone(), BigRational::one()))
    }

    /// Coordinates of a per-chart form list, or `None` if some term leaves
    /// the ansatz.
    fn coordinates(&self, forms: &[PolyForm]) -> Option<Vec<BigRational>> {
        let lookup: BTreeMap<(&Vec<usize>, &Vec<u32>), usize> =
            self.basis.iter().enumerate().map(|(i, (k, a))| ((k, a), i)).collect();
        let mut v = vec![BigRational::zero(); self.dimension()];
        for (c, f) in forms.iter().enumerate() {
            for (idx, p) in f.terms() {
                for (a, coef) in p.terms() {
                    let i = lookup.get(&(idx, a))?;
                    v[c * self.per_chart() + i] = coef.clone();
                }
            }
        }
        Some(v)
    }

    fn forms_of(&self, v: &[BigRational]) -> Vec<PolyForm> {
        (0..self.charts)
            .map(|c| {
                let mut f = PolyForm::zero(self.nvars);
                for i in 0..self.per_chart() {
                    let x = &v[c * self.per_chart() + i];
                    if !x.is_zero() {
                        let (idx, a) = &self.basis[i];
                        f.accumulate(idx.clone(), Poly::monomial(self.nvars, a.clone(), x.clone()));
                    }
                }
                f
            })
            .collect()
    }
}

/// A form on every chart, compatible with all arrows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantForm {
    pub per_chart: Vec<PolyForm>,
}

impl InvariantForm {
    /// Chart forms as symbolic differential forms, for use as the only
    /// nonzero component of a `(0, ℓ)` cochain.
    pub fn to_forms(&self) -> Result<Vec<DifferentialForm>, SymError> {
        self.per_chart.iter().map(PolyForm::to_form).collect()
    }
}

#[derive(Clone, Debug)]
pub struct InvariantBasis {
    pub ansatz: PolynomialFormAnsatz,
    pub basis: Vec<InvariantForm>,
    coords: Vec<Vec<BigRational>>,
}

impl InvariantBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

struct PolyArrow {
    src: usize,
    dst: usize,
    map: Vec<Poly>,
}

fn polynomial_arrows(p: &CategoryPresentation) -> Result<Vec<PolyArrow>, BasicError> {
    let q = p.dim();
    p.arrows()
        .iter()
        .map(|a| {
            let map = a
                .map
                .components()
                .iter()
                .map(|e| Poly::from_expr(e, q))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| BasicError::UnsupportedAnsatz {
                    arrow: a.id.clone(),
                    source,
                })?;
            Ok(PolyArrow {
                src: a.src,
                dst: a.dst,
                map,
            })
        })
        .collect()
}

/// Sparse coordinates over `(chart, I, α)` of arbitrary degree.
type Coords = BTreeMap<(usize, Vec<usize>, Vec<u32>), BigRational>;

fn add_form(acc: &mut Coords, chart: usize, f: &PolyForm, sign: &BigRational) {
    for (idx, p) in f.terms() {
        for (a, c) in p.terms() {
            let e = acc.entry((chart, idx.clone(), a.clone())).or_insert_with(BigRational::zero);
            *e += c * sign;
        }
    }
}

/// Exact kernel of `ω ↦ (h*ω_dst − ω_src)_h` on the ansatz with
/// coefficient degree at most `d` (`None` for the zero space).
fn invariants_in(p: &CategoryPresentation, arrows: &[PolyArrow], ell: usize, d: Option<u32>) -> InvariantBasis {
    let ansatz = PolynomialFormAnsatz::new(p.charts().len(), p.dim(), ell, d);
    let n = ansatz.dimension();
    let per = ansatz.per_chart();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let one = BigRational::one();
    for a in arrows {
        // column j holds the residual coordinates of basis element j
        let mut cols: Vec<Coords> = vec![Coords::new(); n];
        for i in 0..per {
            let e = ansatz.element(i);
            add_form(&mut cols[a.dst * per + i], a.src, &e.pullback(&a.map), &one);
            add_form(&mut cols[a.src * per + i], a.src, &e, &-one.clone());
        }
        let mut keyed: BTreeMap<&(usize, Vec<usize>, Vec<u32>), Vec<BigRational>> = BTreeMap::new();
        for (j, col) in cols.iter().enumerate() {
            for (k, v) in col {
                keyed.entry(k).or_insert_with(|| vec![BigRational::zero(); n])[j] += v;
            }
        }
        rows.extend(keyed.into_values().filter(|r| r.iter().any(|x| !x.is_zero())));
    }
    let coords = nullspace(&rows, n);
    let basis = coords
        .iter()
        .map(|v| InvariantForm {
            per_chart: ansatz.forms_of(v),
        })
        .collect();
    InvariantBasis { ansatz, basis, coords }
}

/// Invariant `ℓ`-forms with polynomial coefficients of degree at most `d`.
pub fn invariant_forms(p: &CategoryPresentation, ell: usize, d: u32) -> Result<InvariantBasis, BasicError> {
    let arrows = polynomial_arrows(p)?;
    Ok(invariants_in(p, &arrows, ell, Some(d)))
}

/// `h*ω_dst − ω_src` for every arrow, all identically zero for an invariant form.
pub fn invariance_residuals(p: &CategoryPresentation, w: &InvariantForm) -> Result<Vec<PolyForm>, BasicError> {
    let arrows = polynomial_arrows(p)?;
    Ok(arrows
        .iter()
        .map(|a| {
            let pulled = w.per_chart[a.dst].clone().pullback(&a.map);
            let mut r = pulled;
            for (idx, q) in w.per_chart[a.src].terms() {
                r.accumulate(idx.clone(), q.neg());
            }
            r
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasicCohomology {
    pub poly_degree: u32,
    /// `dim V^ℓ`, invariant `ℓ`-forms with coefficient degree at most `D − ℓ`.
    pub dims: Vec<usize>,
    /// `rank d: V^ℓ → V^{ℓ+1}`.
    pub ranks: Vec<usize>,
    pub betti: Vec<usize>,
    /// Whether `d` maps each `V^ℓ` into `V^{ℓ+1}`.
    pub closed: bool,
}

/// Cohomology of the invariant forms under `d`, degrees `0..=n`, with the
/// filtration `D, D−1, …` on coefficient degrees.
pub fn basic_cohomology(p: &CategoryPresentation, d: u32, n: usize) -> Result<BasicCohomology, BasicError> {
    let arrows = polynomial_arrows(p)?;
    let bound = |ell: usize| (d as i64 - ell as i64 >= 0).then(|| d - ell as u32);
    let spaces: Vec<InvariantBasis> = (0..=n + 1).map(|ell| invariants_in(p, &arrows, ell, bound(ell))).collect();
    let mut ranks = Vec::with_capacity(n + 1);
    let mut closed = true;
    for ell in 0..=n {
        let next = &spaces[ell + 1];
        let images: Vec<Vec<BigRational>> = spaces[ell]
            .basis
            .iter()
            .map(|w| {
                let dw: Vec<PolyForm> = w.per_chart.iter().map(PolyForm::exterior_d).collect();
                next.ansatz.coordinates(&dw).unwrap_or_default()
            })
            .collect();
        if images.iter().any(|v| v.len() != next.ansatz.dimension()) {
            // d left the ansatz; cannot happen for polynomial coefficients
            closed = false;
            ranks.push(0);
            continue;
        }
        let r = dense_rank(&images, next.ansatz.dimension());
        let mut joint = next.coords.clone();
        joint.extend(images);
        if dense_rank(&joint, next.ansatz.dimension()) != next.dimension() {
            closed = false;
        }
        ranks.push(r);
    }
    let dims: Vec<usize> = spaces[..=n].iter().map(InvariantBasis::dimension).collect();
    let betti = (0..=n).map(|l| dims[l] - ranks[l] - if l == 0 { 0 } else { ranks[l - 1] }).collect();
    Ok(BasicCohomology {
        poly_degree: d,
        dims,
        ranks,
        betti,
        closed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coinvariants {
    pub form_degree: usize,
    pub poly_degree: u32,
    pub ansatz_dim: usize,
    /// `dim (span{ω − h*ω} ∩ ansatz)`.
    pub relations_dim: usize,
    pub dimension: usize,
}

/// `dim (⊕_U ansatz) / (span{ω − h*ω} ∩ ansatz)`, exact.
pub fn compact_basic_coinvariants(p: &CategoryPresentation, ell: usize, d: u32) -> Result<Coinvariants, BasicError> {
    let arrows = polynomial_arrows(p)?;
    let ansatz = PolynomialFormAnsatz::new(p.charts().len(), p.dim(), ell, Some(d));
    let per = ansatz.per_chart();
    let one = BigRational::one();
    let mut relations: Vec<Coords> = Vec::new();
    for a in &arrows {
        for i in 0..per {
            let e = ansatz.element(i);
            let mut r = Coords::new();
            add_form(&mut r, a.dst, &e, &one);
            add_form(&mut r, a.src, &e.pullback(&a.map), &-one.clone());
            r.retain(|_, v| !v.is_zero());
            if !r.is_empty() {
                relations.push(r);
            }
        }
    }
    let inside: BTreeMap<(usize, Vec<usize>, Vec<u32>), usize> = (0..ansatz.charts)
        .flat_map(|c| ansatz.basis.iter().enumerate().map(move |(i, (k, a))| ((c, k.clone(), a.clone()), c * per + i)))
        .collect();
    // combinations of relations whose coordinates outside the ansatz cancel
    let mut outside: BTreeMap<&(usize, Vec<usize>, Vec<u32>), Vec<BigRational>> = BTreeMap::new();
    for (j, r) in relations.iter().enumerate() {
        for (k, v) in r {
            if !inside.contains_key(k) {
                outside.entry(k).or_insert_with(|| vec![BigRational::zero(); relations.len()])[j] += v;
            }
        }
    }
    let combos = nullspace(&outside.into_values().collect::<Vec<_>>(), relations.len());
    let n = ansatz.dimension();
    let vectors: Vec<Vec<BigRational>> = combos
        .iter()
        .map(|c| {
            let mut v = vec![BigRational::zero(); n];
            for (cj, r) in c.iter().zip(&relations) {
                if cj.is_zero() {
                    continue;
                }
                for (k, x) in r {
                    if let Some(&i) = inside.get(k) {
                        v[i] += cj * x;
                    }
                }
            }
            v
        })
        .collect();
    let relations_dim = dense_rank(&vectors, n);
    Ok(Coinvariants {
        form_degree: ell,
        poly_degree: d,
        ansatz_dim: n,
        relations_dim,
        dimension: n - relations_dim,
    })
}

/// Polynomial form from a symbolic expression of a scalar, for tests and
/// reports.
pub fn scalar_poly(e: &Expr, nvars: usize) -> Result<PolyForm, SymError> {
    Ok(PolyForm::term(nvars, Vec::new(), Poly::from_expr(e, nvars)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{Arrow, Chart, Morphism};
    use crate::symexpr::{parse_expr, SmoothMap, VarContext};

    fn one_chart(maps: &[(&str, &str)], table: Vec<((usize, usize), Option<usize>)>, bounds: (f64, f64)) -> CategoryPresentation {
        let charts = vec![Chart {
            id: "U".into(),
            bounds: vec![bounds],
        }];
        let arrows = maps
            .iter()
            .map(|(id, e)| Arrow {
                id: (*id).into(),
                src: 0,
                dst: 0,
                map: SmoothMap::new(vec![parse_expr(e, &VarContext::chart(1)).unwrap()], vec![bounds], vec![bounds]).unwrap(),
            })
            .collect();
        let table = table
            .into_iter()
            .map(|((g, f), h)| {
                (
                    (Morphism::Arrow(g), Morphism::Arrow(f)),
                    h.map_or(Morphism::Identity(0), Morphism::Arrow),
                )
            })
            .collect();
        CategoryPresentation::new(charts, arrows, table).unwrap()
    }

    fn z2() -> CategoryPresentation {
        one_chart(&[("g", "-x1")], vec![((0, 0), None)], (-2.0, 2.0))
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn z2_invariant_functions() {
        let b = invariant_forms(&z2(), 0, 2).unwrap();
        assert_eq!(b.dimension(), 2);
        // the span is {1, x²}: no odd coefficients anywhere
        for w in &b.basis {
            for (_, p) in w.per_chart[0].terms() {
                assert!(p.coefficient(&[1]).is_zero());
            }
        }
    }

    #[test]
    fn z2_invariant_one_forms() {
        let b = invariant_forms(&z2(), 1, 2).unwrap();
        assert_eq!(b.dimension(), 1);
        let f = &b.basis[0].per_chart[0];
        let p = f.terms().next().unwrap().1;
        assert!(p.coefficient(&[0]).is_zero() && p.coefficient(&[2]).is_zero());
        assert!(!p.coefficient(&[1]).is_zero());
        for r in invariance_residuals(&z2(), &b.basis[0]).unwrap() {
            assert!(r.is_zero());
        }
    }

    #[test]
    fn no_arrows_is_full_ansatz() {
        let p = one_chart(&[], vec![], (0.0, 1.0));
        assert_eq!(invariant_forms(&p, 0, 1).unwrap().dimension(), 2);
        assert_eq!(invariant_forms(&p, 2, 3).unwrap().dimension(), 0);
        let c = compact_basic_coinvariants(&p, 0, 4).unwrap();
        assert_eq!(c.dimension, 5);
    }

    #[test]
    fn basic_cohomology_examples() {
        let h = basic_cohomology(&z2(), 2, 1).unwrap();
        assert_eq!(h.dims, vec![2, 1]);
        assert_eq!(h.betti, vec![1, 0]);
        assert!(h.closed);
        let single = one_chart(&[], vec![], (0.0, 1.0));
        let h = basic_cohomology(&single, 3, 2).unwrap();
        assert_eq!(h.betti, vec![1, 0, 0]);
        assert!(h.closed);
    }

    #[test]
    fn z2_coinvariants() {
        assert_eq!(compact_basic_coinvariants(&z2(), 0, 2).unwrap().dimension, 2);
        assert_eq!(compact_basic_coinvariants(&z2(), 1, 0).unwrap().dimension, 0);
        // involution: invariants and relations split the ansatz
        for (ell, d) in [(0, 2), (0, 5), (1, 3)] {
            let inv = invariant_forms(&z2(), ell, d).unwrap().dimension();
            let c = compact_basic_coinvariants(&z2(), ell, d).unwrap();
            assert_eq!(inv + c.relations_dim, c.ansatz_dim);
        }
    }

    #[test]
    fn non_polynomial_arrow_is_rejected() {
        let p = one_chart(&[("g", "exp(x1)/10")], vec![], (0.0, 1.0));
        assert!(matches!(invariant_forms(&p, 0, 1), Err(BasicError::UnsupportedAnsatz { .. })));
    }

    #[test]
    fn quadratic_map_leaves_and_intersects_ansatz() {
        // x ↦ x²/4 on [0,1]: pullback raises degree; only constants are invariant
        let p = one_chart(&[("g", "x1^2/4")], vec![], (0.0, 1.0));
        assert_eq!(invariant_forms(&p, 0, 3).unwrap().dimension(), 1);
        let c = compact_basic_coinvariants(&p, 0, 2).unwrap();
        assert_eq!(c.ansatz_dim, 3);
        // 1 − 1 = 0, x − x²/4 and x² − x⁴/16 ∉ ansatz: relation span is {x − x²/4}
        assert_eq!(c.relations_dim, 1);
    }

    #[test]
    fn pullback_of_dx_dy_is_jacobian() {
        let h = vec![Poly::var(2, 1), Poly::var(2, 0).scale(&rat(3))];
        let f = PolyForm::term(2, vec![0, 1], Poly::constant(2, rat(1)));
        let g = f.pullback(&h);
        assert_eq!(g, PolyForm::term(2, vec![0, 1], Poly::constant(2, rat(-3))));
        assert!(f.exterior_d().is_zero());
        let x = scalar_poly(&parse_expr("x1^2*x2", &VarContext::chart(2)).unwrap(), 2).unwrap();
        assert!(x.exterior_d().exterior_d().is_zero());
    }
}
