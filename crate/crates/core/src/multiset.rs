//! Feature vectors and bounded multisets of them.

use crate::error::{Error, Result};

/// A d-dimensional real feature vector. All entries are finite; the dimension
/// is fixed at construction and is at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatVec {
    entries: Vec<f64>,
}

impl FeatVec {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature vector",
            });
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// L-infinity distance to another vector of the same dimension.
    pub fn linf(&self, other: &FeatVec) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Total order on entries (entries are finite, so this is a strict
    /// lexicographic order). Used wherever summation order must be canonical.
    pub fn lex_cmp(&self, other: &FeatVec) -> std::cmp::Ordering {
        lex_cmp_slices(&self.entries, &other.entries)
    }
}

impl std::ops::Index<usize> for FeatVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

pub fn lex_cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// An unordered finite collection of [`FeatVec`]s (repeats allowed) with a
/// capacity bound. All elements share one dimension.
#[derive(Debug, Clone)]
pub struct Multiset {
    elements: Vec<FeatVec>,
    dim: usize,
    cap: usize,
}

impl Multiset {
    /// Builds a multiset from elements. `dim` disambiguates the empty case.
    pub fn new(elements: Vec<FeatVec>, dim: usize, cap: usize) -> Result<Self> {
        if elements.len() > cap {
            return Err(Error::CapacityExceeded {
                len: elements.len(),
                cap,
            });
        }
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                });
            }
        }
        Ok(Self { elements, dim, cap })
    }

    pub fn from_rows(rows: &[Vec<f64>], cap: usize) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(1);
        let elements = rows
            .iter()
            .map(|r| FeatVec::new(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, dim, cap)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn elements(&self) -> &[FeatVec] {
        &self.elements
    }

    /// Elements sorted lexicographically. Summations over a multiset walk
    /// this order so that reorderings of the input cannot change the result
    /// even at the bit level.
    pub fn canonical_order(&self) -> Vec<&FeatVec> {
        let mut refs: Vec<&FeatVec> = self.elements.iter().collect();
        refs.sort_by(|a, b| a.lex_cmp(b));
        refs
    }
}

/// Permutation-insensitive equality up to a per-entry tolerance.
///
/// True iff the two multisets have the same size and some pairing matches
/// every element of `a` with an element of `b` at L-infinity distance at most
/// `tol`. The pairing is found by minimum-cost assignment, then every matched
/// pair is checked against `tol`. `tol = 0` degenerates to exact multiset
/// identity.
pub fn multiset_equal(a: &Multiset, b: &Multiset, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.len() != b.len() {
        return Ok(false);
    }
    let n = a.len();
    if n == 0 {
        return Ok(true);
    }
    let cost: Vec<Vec<f64>> = a
        .elements()
        .iter()
        .map(|x| b.elements().iter().map(|y| x.linf(y)).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    Ok(assignment
        .iter()
        .enumerate()
        .all(|(i, &j)| cost[i][j] <= tol))
}

/// Hungarian algorithm with potentials, O(n^3). `cost` is square. Returns
/// for each row the column it is assigned to.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    debug_assert!(cost.iter().all(|r| r.len() == n));
    const INF: f64 = f64::INFINITY;

    // 1-based arrays; p[j] = row matched to column j (0 = none).
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(rows: &[&[f64]]) -> Multiset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Multiset::from_rows(&rows, rows.len().max(1)).unwrap()
    }

    #[test]
    fn equal_under_permutation() {
        let a = ms(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = ms(&[&[3.0, 4.0], &[1.0, 2.0]]);
        assert!(multiset_equal(&a, &b, 0.0).unwrap());
    }

    #[test]
    fn cardinality_mismatch_is_unequal() {
        let a = ms(&[&[1.0, 2.0]]);
        let b = Multiset::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], 2).unwrap();
        assert!(!multiset_equal(&a, &b, 0.0).unwrap());
    }

    #[test]
    fn tolerance_absorbs_small_perturbation() {
        let a = ms(&[&[1.0, 2.0]]);
        let b = ms(&[&[1.0 + 1e-9, 2.0]]);
        assert!(multiset_equal(&a, &b, 1e-6).unwrap());
        assert!(!multiset_equal(&a, &b, 0.0).unwrap());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let a = ms(&[&[1.0, 2.0]]);
        let b = ms(&[&[1.0]]);
        assert!(matches!(
            multiset_equal(&a, &b, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn repeats_must_match_multiplicity() {
        let a = ms(&[&[1.0], &[1.0], &[2.0]]);
        let b = ms(&[&[1.0], &[2.0], &[2.0]]);
        assert!(!multiset_equal(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn capacity_enforced() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            Multiset::from_rows(&rows, 2),
            Err(Error::CapacityExceeded { len: 3, cap: 2 })
        ));
    }

    #[test]
    fn featvec_rejects_nan() {
        assert!(FeatVec::new(vec![f64::NAN]).is_err());
        assert!(FeatVec::new(vec![]).is_err());
    }

    /// Brute-force assignment oracle for small n.
    fn brute_min_cost(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == cost.len() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = crate::Rng::seed_from(11);
        for n in 1..=6 {
            for _ in 0..40 {
                let cost: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.uniform_in(0.0, 10.0)).collect())
                    .collect();
                let assign = min_cost_assignment(&cost);
                let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                let expected = brute_min_cost(&cost);
                assert!(
                    (total - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
                    "n={n}: hungarian {total} vs brute {expected}"
                );
                // assignment must be a permutation
                let mut seen = vec![false; n];
                for &j in &assign {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
        }
    }
}
