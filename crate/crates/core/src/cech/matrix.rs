use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact sparse matrix over the rationals. Stored entries are nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseRationalMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), BigRational>,
}

impl SparseRationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseRationalMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    /// Builds from triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, BigRational)>,
    {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triplets {
            m.add_to(r, c, v);
        }
        m
    }

    pub fn from_dense_i64(rows: &[Vec<i64>]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        Self::from_triplets(
            nr,
            nc,
            rows.iter().enumerate().flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, &v)| (i, j, BigRational::from_integer(BigInt::from(v))))
            }),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> BigRational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: BigRational) {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) outside {}x{}", self.rows, self.cols);
        if v.is_zero() {
            return;
        }
        let slot = self.entries.entry((r, c)).or_insert_with(BigRational::zero);
        *slot += v;
        if slot.is_zero() {
            self.entries.remove(&(r, c));
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn transpose(&self) -> Self {
        SparseRationalMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|(&(r, c), v)| ((c, r), v.clone())).collect(),
        }
    }

    /// Exact product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut by_row: HashMap<usize, Vec<(usize, &BigRational)>> = HashMap::new();
        for (&(r, c), v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (&(i, k), a) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for &(j, b) in row {
                    out.add_to(i, j, a * b);
                }
            }
        }
        out
    }

    /// Dense rows as strings, for reports.
    pub fn to_dense_strings(&self) -> Vec<Vec<String>> {
        let mut out = vec![vec!["0".to_string(); self.cols]; self.rows];
        for (&(r, c), v) in &self.entries {
            out[r][c] = v.to_string();
        }
        out
    }

    /// Exact rank by fraction-free integer elimination with Markowitz-style
    /// pivot choice (sparsest column, then sparsest row).
    pub fn rank(&self) -> usize {
        let mut rows: Vec<BTreeMap<usize, BigInt>> = vec![BTreeMap::new(); self.rows];
        let mut den_lcm = vec![BigInt::one(); self.rows];
        for (&(r, _), v) in &self.entries {
            den_lcm[r] = den_lcm[r].lcm(v.denom());
        }
        for (&(r, c), v) in &self.entries {
            let scaled = v * BigRational::from_integer(den_lcm[r].clone());
            rows[r].insert(c, scaled.to_integer());
        }
        let mut active: Vec<BTreeMap<usize, BigInt>> = rows.into_iter().filter(|r| !r.is_empty()).collect();
        for r in &mut active {
            normalize(r);
        }
        let mut rank = 0;
        while !active.is_empty() {
            let mut col_count: HashMap<usize, usize> = HashMap::new();
            for r in &active {
                for &c in r.keys() {
                    *col_count.entry(c).or_insert(0) += 1;
                }
            }
            let (&pc, _) = col_count
                .iter()
                .min_by_key(|(&c, &n)| (n, c))
                .expect("active rows are nonempty");
            let pr = active
                .iter()
                .enumerate()
                .filter(|(_, r)| r.contains_key(&pc))
                .min_by_key(|(i, r)| (r.len(), *i))
                .map(|(i, _)| i)
                .expect("column has a nonzero");
            let pivot = active.swap_remove(pr);
            rank += 1;
            let pv = pivot[&pc].clone();
            let mut next = Vec::with_capacity(active.len());
            for mut r in active.into_iter() {
                if let Some(rv) = r.get(&pc).cloned() {
                    // r <- pv*r - rv*pivot
                    for v in r.values_mut() {
                        *v *= &pv;
                    }
                    for (c, v) in &pivot {
                        let e = r.entry(*c).or_insert_with(BigInt::zero);
                        *e -= &rv * v;
                    }
                    r.retain(|_, v| !v.is_zero());
                    normalize(&mut r);
                }
                if !r.is_empty() {
                    next.push(r);
                }
            }
            active = next;
        }
        rank
    }
}

/// Reduced row echelon form of dense rational rows; returns pivot columns.
pub fn rref(rows: &mut Vec<Vec<BigRational>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Basis of `{x : A x = 0}` for dense rational rows with `ncols` columns.
pub fn nullspace(rows: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (row, &pc) in m.iter().zip(&pivots) {
                v[pc] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Rank of dense rational rows.
pub fn dense_rank(rows: &[Vec<BigRational>], ncols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, ncols).len()
}

fn normalize(r: &mut BTreeMap<usize, BigInt>) {
    let mut g = BigInt::zero();
    for v in r.values() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if !g.is_zero() && !g.is_one() {
        let g = g.abs();
        for v in r.values_mut() {
            *v = &*v / &g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_rank(m: &[Vec<i64>]) -> usize {
        // independent oracle: floating Gaussian elimination on small integers
        let mut a: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let (nr, nc) = (a.len(), a.first().map_or(0, |r| r.len()));
        let mut rank = 0;
        for c in 0..nc {
            let Some(p) = (rank..nr).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
                break;
            };
            if a[p][c].abs() < 1e-9 {
                continue;
            }
            a.swap(rank, p);
            for i in 0..nr {
                if i != rank {
                    let f = a[i][c] / a[rank][c];
                    for j in 0..nc {
                        a[i][j] -= f * a[rank][j];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn nullspace_of_small_system() {
        let r = |v: i64| BigRational::from_integer(v.into());
        let rows = vec![vec![r(1), r(2), r(3)], vec![r(2), r(4), r(6)]];
        let ns = nullspace(&rows, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let dot: BigRational = rows[0].iter().zip(v).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
        assert_eq!(super::dense_rank(&rows, 3), 1);
    }

    #[test]
    fn small_ranks() {
        let m = SparseRationalMatrix::from_dense_i64(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        assert_eq!(SparseRationalMatrix::zeros(0, 5).rank(), 0);
        assert_eq!(SparseRationalMatrix::from_dense_i64(&[vec![2]]).rank(), 1);
    }

    #[test]
    fn rational_entries() {
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        let m = SparseRationalMatrix::from_triplets(
            2,
            2,
            [(0, 0, half.clone()), (0, 1, third.clone()), (1, 0, half * BigRational::from_integer(2.into())), (1, 1, third * BigRational::from_integer(2.into()))],
        );
        assert_eq!(m.rank(), 1);
    }

    proptest! {
        #[test]
        fn rank_matches_float_oracle(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 1..7)) {
            let m = SparseRationalMatrix::from_dense_i64(&rows);
            prop_assert_eq!(m.rank(), dense_rank(&rows));
            prop_assert_eq!(m.transpose().rank(), m.rank());
        }

        #[test]
        fn product_is_exact(a in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 3),
                            b in prop::collection::vec(prop::collection::vec(-4i64..=4, 2), 3)) {
            let p = SparseRationalMatrix::from_dense_i64(&a).mul(&SparseRationalMatrix::from_dense_i64(&b));
            for i in 0..3 {
                for j in 0..2 {
                    let want: i64 = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                    prop_assert_eq!(p.get(i, j), BigRational::from_integer(want.into()));
                }
            }
        }
    }
}
