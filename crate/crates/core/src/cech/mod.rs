//! Exact Čech cohomology and homology of a category presentation with
//! constant or orientation-twisted rational coefficients.

mod matrix;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::category::{CategoryError, CategoryPresentation, Morphism, NerveString};

pub use matrix::{dense_rank, nullspace, rref, SparseRationalMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientSystem {
    Trivial,
    Orientation,
}

impl CoefficientSystem {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientSystem::Trivial => "trivial",
            CoefficientSystem::Orientation => "orientation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Cohomology,
    Homology,
}

/// One face of a nerve string with its coefficient.
struct Face {
    target: NerveString,
    coeff: i64,
}

fn signs(p: &CategoryPresentation, c: CoefficientSystem) -> Result<Vec<i64>, CategoryError> {
    (0..p.arrows().len())
        .map(|a| match c {
            CoefficientSystem::Trivial => Ok(1),
            CoefficientSystem::Orientation => p.orientation_sign(Morphism::Arrow(a)).map(i64::from),
        })
        .collect()
}

/// Nondegenerate faces `Σ (-1)^i δ_i` of a string of length `k+1 >= 1`.
fn faces(p: &CategoryPresentation, s: &NerveString, sign: &[i64]) -> Vec<Face> {
    let n = s.arrows.len();
    let mut out = Vec::with_capacity(n + 1);
    // δ_0 drops h_1 and applies its coefficient action
    out.push(Face {
        target: NerveString {
            source: p.arrows()[s.arrows[0]].dst,
            arrows: s.arrows[1..].to_vec(),
        },
        coeff: sign[s.arrows[0]],
    });
    for i in 1..n {
        let f = Morphism::Arrow(s.arrows[i - 1]);
        let g = Morphism::Arrow(s.arrows[i]);
        match p.compose(g, f) {
            Some(Morphism::Arrow(h)) => {
                let mut arrows = s.arrows[..i - 1].to_vec();
                arrows.push(h);
                arrows.extend_from_slice(&s.arrows[i + 1..]);
                out.push(Face {
                    target: NerveString {
                        source: s.source,
                        arrows,
                    },
                    coeff: if i % 2 == 0 { 1 } else { -1 },
                });
            }
            // degenerate: identity composites are zero in the normalized complex
            Some(Morphism::Identity(_)) | None => {}
        }
    }
    out.push(Face {
        target: NerveString {
            source: s.source,
            arrows: s.arrows[..n - 1].to_vec(),
        },
        coeff: if n % 2 == 0 { 1 } else { -1 },
    });
    out
}

fn index(strings: &[NerveString]) -> HashMap<&NerveString, usize> {
    strings.iter().enumerate().map(|(i, s)| (s, i)).collect()
}

/// Matrix of `δ: C^k → C^{k+1}` (cohomology), or of `∂: C_{k+1} → C_k`
/// (homology) built from the same faces.
pub fn coboundary_matrix(
    p: &CategoryPresentation,
    k: usize,
    c: CoefficientSystem,
    direction: Direction,
) -> Result<SparseRationalMatrix, CategoryError> {
    let sign = signs(p, c)?;
    let lo = p.enumerate_nerve(k);
    let hi = p.enumerate_nerve(k + 1);
    let lo_idx = index(&lo);
    let triplets: Vec<(usize, usize, i64)> = hi
        .par_iter()
        .enumerate()
        .flat_map_iter(|(row, s)| {
            faces(p, s, &sign)
                .into_iter()
                .map(|f| (row, lo_idx[&f.target], f.coeff))
                .collect::<Vec<_>>()
        })
        .collect();
    let to_rat = |v: i64| BigRational::from_integer(BigInt::from(v));
    Ok(match direction {
        Direction::Cohomology => {
            SparseRationalMatrix::from_triplets(hi.len(), lo.len(), triplets.into_iter().map(|(r, c, v)| (r, c, to_rat(v))))
        }
        Direction::Homology => {
            SparseRationalMatrix::from_triplets(lo.len(), hi.len(), triplets.into_iter().map(|(r, c, v)| (c, r, to_rat(v))))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BettiTable {
    pub coefficient: CoefficientSystem,
    /// `dim C^k`, degrees `0..=N`.
    pub cochain_dims: Vec<usize>,
    /// `rank δ^k`, degrees `0..=N`.
    pub ranks: Vec<usize>,
    pub betti: Vec<usize>,
}

/// Betti numbers in degrees `0..=n` by exact ranks.
pub fn betti(p: &CategoryPresentation, c: CoefficientSystem, n: usize) -> Result<BettiTable, CategoryError> {
    betti_in(p, c, n, Direction::Cohomology)
}

/// Homology Betti numbers `dim H_k`, from the boundary matrices.
pub fn homology_betti(p: &CategoryPresentation, c: CoefficientSystem, n: usize) -> Result<BettiTable, CategoryError> {
    betti_in(p, c, n, Direction::Homology)
}

fn betti_in(p: &CategoryPresentation, c: CoefficientSystem, n: usize, dir: Direction) -> Result<BettiTable, CategoryError> {
    let dims: Vec<usize> = (0..=n).map(|k| p.enumerate_nerve(k).len()).collect();
    let ranks: Vec<usize> = (0..=n)
        .map(|k| coboundary_matrix(p, k, c, dir).map(|m| m.rank()))
        .collect::<Result<_, _>>()?;
    let betti = (0..=n)
        .map(|k| {
            let prev = if k == 0 { 0 } else { ranks[k - 1] };
            dims[k] - ranks[k] - prev
        })
        .collect();
    Ok(BettiTable {
        coefficient: c,
        cochain_dims: dims,
        ranks,
        betti,
    })
}

/// Checks `δ^{k+1} δ^k = 0` exactly for `k < n`. Returns the first degree
/// where it fails.
pub fn delta_squared_zero(p: &CategoryPresentation, c: CoefficientSystem, n: usize) -> Result<Option<usize>, CategoryError> {
    for k in 0..n {
        let a = coboundary_matrix(p, k, c, Direction::Cohomology)?;
        let b = coboundary_matrix(p, k + 1, c, Direction::Cohomology)?;
        if !b.mul(&a).is_zero() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualityPair {
    pub n: usize,
    /// `dim H^n` with orientation coefficients.
    pub cohomology: usize,
    /// `dim H_c^{q-n}`, modelled as `dim H_n` with orientation coefficients.
    pub compact: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualityReport {
    pub q: usize,
    pub pairs: Vec<DualityPair>,
    pub pass: bool,
}

/// Compares `H^n(O)` with `H_c^{q-n}` for `0 <= n <= max_n`.
pub fn duality_check(p: &CategoryPresentation, max_n: usize) -> Result<DualityReport, CategoryError> {
    let q = p.dim();
    let co = betti(p, CoefficientSystem::Orientation, max_n)?;
    let ho = homology_betti(p, CoefficientSystem::Orientation, max_n)?;
    let pairs: Vec<DualityPair> = (0..=max_n)
        .map(|n| DualityPair {
            n,
            cohomology: co.betti[n],
            compact: ho.betti[n],
        })
        .collect();
    let pass = pairs.iter().all(|r| r.cohomology == r.compact);
    Ok(DualityReport { q, pairs, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{Arrow, Chart};
    use crate::symexpr::{parse_expr, SmoothMap, VarContext};

    fn arrow(id: &str, src: usize, dst: usize, e: &str, charts: &[Chart]) -> Arrow {
        Arrow {
            id: id.into(),
            src,
            dst,
            map: SmoothMap::new(
                vec![parse_expr(e, &VarContext::chart(1)).unwrap()],
                charts[src].bounds.clone(),
                charts[dst].bounds.clone(),
            )
            .unwrap(),
        }
    }

    fn z2() -> CategoryPresentation {
        let charts = vec![Chart {
            id: "U".into(),
            bounds: vec![(-2.0, 2.0)],
        }];
        let arrows = vec![arrow("g", 0, 0, "-x1", &charts)];
        let g = Morphism::Arrow(0);
        CategoryPresentation::new(charts, arrows, vec![((g, g), Morphism::Identity(0))]).unwrap()
    }

    #[test]
    fn z2_matrices() {
        let p = z2();
        let t = coboundary_matrix(&p, 1, CoefficientSystem::Trivial, Direction::Cohomology).unwrap();
        assert_eq!(t, SparseRationalMatrix::from_dense_i64(&[vec![2]]));
        let o = coboundary_matrix(&p, 1, CoefficientSystem::Orientation, Direction::Cohomology).unwrap();
        assert!(o.is_zero() && o.rows() == 1 && o.cols() == 1);
        let o0 = coboundary_matrix(&p, 0, CoefficientSystem::Orientation, Direction::Cohomology).unwrap();
        assert_eq!(o0, SparseRationalMatrix::from_dense_i64(&[vec![-2]]));
        assert_eq!(betti(&p, CoefficientSystem::Trivial, 6).unwrap().betti, vec![1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(betti(&p, CoefficientSystem::Orientation, 6).unwrap().betti, vec![0; 7]);
        assert!(duality_check(&p, 6).unwrap().pass);
    }
}
