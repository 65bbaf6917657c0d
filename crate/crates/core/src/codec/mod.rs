//! Injective multiset encoding and its constructive decoder.
//!
//! A multiset X of d-dimensional vectors with |X| ≤ M is encoded as the sum
//! over elements of a fixed monomial map Φ_M into ℝ^(dM+1): the first block
//! carries powers 1, x[1], …, x[1]^M of the first coordinate, and one block
//! per remaining coordinate j carries x[1]^q·x[j] for q = 0..M−1. The
//! decoder inverts this sum exactly when the first coordinates are pairwise
//! distinct: power sums become elementary symmetric polynomials
//! (Newton–Girard), the first coordinates are the roots of the resulting
//! polynomial, and the remaining coordinates solve dual Vandermonde systems.
//! Tied first coordinates shrink the Vandermonde to distinct values and only
//! per-group coordinate sums are identified; a random orthogonal premix
//! removes such ties almost surely and keeps the encoding injective.

pub mod newton;
pub mod roots;
pub mod vandermonde;

pub use newton::newton_girard;
pub use roots::poly_roots_real;
pub use vandermonde::vandermonde_solve;

use crate::error::{Error, Result};
use crate::multiset::{lex_cmp_slices, FeatVec, Multiset};
use crate::rng::Rng;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Output width of Φ_M on d-dimensional input.
pub fn phi_width(d: usize, m: usize) -> usize {
    d * m + 1
}

/// Writes Φ_M(x) into `out` (no allocation, no finiteness checks).
pub(crate) fn phi_into(x: &[f64], m: usize, out: &mut [f64]) {
    let d = x.len();
    debug_assert_eq!(out.len(), phi_width(d, m));
    let x1 = x[0];
    out[0] = 1.0;
    let mut p = 1.0;
    for q in 1..=m {
        p *= x1;
        out[q] = p;
    }
    for j in 2..=d {
        let base = m + 1 + (j - 2) * m;
        let xj = x[j - 1];
        let mut p = 1.0;
        for q in 0..m {
            out[base + q] = p * xj;
            p *= x1;
        }
    }
}

/// The monomial map Φ_M: entry 0 is the constant 1, entries 1..=M are powers
/// of x[1], and each later coordinate j contributes x[1]^q·x[j], q < M.
pub fn phi_fixed(x: &FeatVec, m: usize) -> Result<Vec<f64>> {
    assert!(m >= 1, "M must be positive");
    let mut out = vec![0.0; phi_width(x.dim(), m)];
    phi_into(x.as_slice(), m, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "power encoding",
        });
    }
    Ok(out)
}

/// Accumulates ∂Φ_M/∂x^T · upstream into a gradient with respect to x.
pub(crate) fn phi_backward(x: &[f64], m: usize, upstream: &[f64]) -> Vec<f64> {
    let d = x.len();
    debug_assert_eq!(upstream.len(), phi_width(d, m));
    let x1 = x[0];
    // pow[q] = x1^q
    let mut pow = vec![1.0; m + 1];
    for q in 1..=m {
        pow[q] = pow[q - 1] * x1;
    }
    let mut grad = vec![0.0; d];
    for q in 1..=m {
        grad[0] += upstream[q] * q as f64 * pow[q - 1];
    }
    for j in 2..=d {
        let base = m + 1 + (j - 2) * m;
        let xj = x[j - 1];
        for q in 0..m {
            let up = upstream[base + q];
            grad[j - 1] += up * pow[q];
            if q >= 1 {
                grad[0] += up * q as f64 * pow[q - 1] * xj;
            }
        }
    }
    grad
}

/// Sign-preserving M-th root of a scalar.
pub(crate) fn mth_root(v: f64, m: usize) -> f64 {
    let mag = match m {
        1 => return v,
        2 => v.abs().sqrt(),
        3 => v.abs().cbrt(),
        _ => v.abs().powf(1.0 / m as f64),
    };
    if v < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Power normalization: replaces the first entry by its sign-preserving M-th
/// root and leaves the rest untouched. Strictly monotone in x[1], hence an
/// injective continuous reshaping that tames x[1]^M in the encoding.
pub fn normalize_g(x: &FeatVec, m: usize) -> FeatVec {
    let mut v = x.as_slice().to_vec();
    v[0] = mth_root(v[0], m);
    FeatVec::new(v).expect("roots of finite values are finite")
}

/// Inverse of [`normalize_g`]: raises the first entry back to the M-th power.
pub fn denormalize_g(x: &FeatVec, m: usize) -> FeatVec {
    let mut v = x.as_slice().to_vec();
    v[0] = denorm_first(v[0], m);
    FeatVec::new(v).expect("finite powers")
}

pub(crate) fn denorm_first(y: f64, m: usize) -> f64 {
    if m == 1 {
        return y;
    }
    let mag = y.abs().powi(m as i32);
    if y < 0.0 {
        -mag
    } else {
        mag
    }
}

/// d/dx of the sign-preserving M-th root. The root has an infinite slope at
/// zero; the subgradient convention there is 0 so training never sees an
/// infinity.
pub(crate) fn normalize_deriv(x1: f64, m: usize) -> f64 {
    if m == 1 {
        return 1.0;
    }
    if x1 == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    x1.abs().powf(1.0 / mf - 1.0) / mf
}

/// The (dM+1)-dimensional image of a multiset under summed Φ_M, together
/// with the layout parameters needed to read it back.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerEncoding {
    d: usize,
    m: usize,
    values: Vec<f64>,
}

impl PowerEncoding {
    pub fn new(d: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if d < 1 || m < 1 || values.len() != phi_width(d, m) {
            return Err(Error::ShapeMismatch {
                context: "encoding length",
                expected: phi_width(d.max(1), m.max(1)),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "power encoding",
            });
        }
        Ok(Self { d, m, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries 0..=M: cardinality then power sums of the first coordinate.
    pub fn first_block(&self) -> &[f64] {
        &self.values[..=self.m]
    }

    /// Block of coordinate j (2 ≤ j ≤ d): sums of x[1]^q·x[j], q = 0..M−1.
    pub fn coord_block(&self, j: usize) -> &[f64] {
        assert!((2..=self.d).contains(&j), "coordinate out of range");
        let base = self.m + 1 + (j - 2) * self.m;
        &self.values[base..base + self.m]
    }

    /// One self-describing CSV row: `d,M,value,value,…`.
    pub fn to_csv_row(&self) -> String {
        let mut s = format!("{},{}", self.d, self.m);
        for v in &self.values {
            s.push(',');
            s.push_str(&format!("{v}"));
        }
        s
    }

    pub fn from_csv_row(row: &str, file: &str, line: usize) -> Result<Self> {
        let parse_err = |msg: String| Error::Parse {
            file: file.to_string(),
            line,
            msg,
        };
        let mut it = row.split(',').map(str::trim);
        let d: usize = it
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| parse_err("missing element dimension".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad element dimension: {e}")))?;
        let m: usize = it
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| parse_err("missing capacity".into()))?
            .parse()
            .map_err(|e| parse_err(format!("bad capacity: {e}")))?;
        let values = it
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| parse_err(format!("bad value {t:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if d < 1 || m < 1 || values.len() != phi_width(d, m) {
            return Err(parse_err(format!(
                "expected {} values for d={d}, M={m}, found {}",
                phi_width(d.max(1), m.max(1)),
                values.len()
            )));
        }
        Self::new(d, m, values)
    }
}

/// An invertible linear map applied to every element before encoding.
/// A random orthogonal choice makes the first coordinates of any fixed
/// finite multiset pairwise distinct with probability 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Premix {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Premix {
    /// Wraps an arbitrary invertible matrix; rejects condition numbers
    /// at or above 1e8 where decoding accuracy degrades past usefulness.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                context: "premix matrix",
                expected: matrix.nrows().max(1),
                got: matrix.ncols(),
            });
        }
        let sv = matrix.clone().svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
        let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !cond.is_finite() || cond >= 1e8 {
            return Err(Error::SingularPremix { cond });
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularPremix { cond })?;
        Ok(Self { matrix, inverse })
    }

    fn orthogonal(q: DMatrix<f64>) -> Self {
        let inverse = q.transpose();
        Self { matrix: q, inverse }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.matrix, x)
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, x)
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    debug_assert_eq!(x.len(), d);
    let mut out = vec![0.0; d];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *o = acc;
    }
    out
}

/// Haar-random orthogonal matrix: QR of a Gaussian matrix with the signs
/// fixed so diag(R) > 0, which also makes the draw a pure function of the
/// generator state.
pub fn random_premix(d: usize, rng: &mut Rng) -> Premix {
    assert!(d >= 1);
    let g = DMatrix::from_fn(d, d, |_, _| rng.normal());
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..d {
        if r[(i, i)] < 0.0 {
            for k in 0..d {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    Premix::orthogonal(q)
}

/// Sum of Φ_M over the multiset, optionally premixing and normalizing each
/// element first. Elements are summed in lexicographic order of their
/// premixed values, so any reordering of the input and the composition
/// identity encode(X with premix) = encode({premix·x}) are both bit-exact.
pub fn encode_multiset(
    x: &Multiset,
    m: usize,
    normalize: bool,
    premix: Option<&Premix>,
) -> Result<PowerEncoding> {
    assert!(m >= 1, "M must be positive");
    if x.len() > m {
        return Err(Error::CapacityExceeded { len: x.len(), cap: m });
    }
    let d = x.dim();
    if let Some(p) = premix {
        if p.dim() != d {
            return Err(Error::ShapeMismatch {
                context: "premix dimension",
                expected: d,
                got: p.dim(),
            });
        }
    }
    let mut transformed: Vec<Vec<f64>> = x
        .elements()
        .iter()
        .map(|el| match premix {
            Some(p) => p.apply(el.as_slice()),
            None => el.as_slice().to_vec(),
        })
        .collect();
    transformed.sort_by(|a, b| lex_cmp_slices(a, b));
    if normalize {
        for el in &mut transformed {
            el[0] = mth_root(el[0], m);
        }
    }
    let mut acc = vec![0.0; phi_width(d, m)];
    let mut scratch = vec![0.0; phi_width(d, m)];
    for el in &transformed {
        phi_into(el, m, &mut scratch);
        for (a, s) in acc.iter_mut().zip(&scratch) {
            *a += s;
        }
    }
    if x.is_empty() {
        acc[0] = 0.0;
    }
    PowerEncoding::new(d, m, acc)
}

/// One group of elements sharing a first coordinate that the fixed encoding
/// cannot split further: only the per-coordinate sums over the group are
/// determined.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// The shared first coordinate.
    pub value: f64,
    /// Number of elements in the group.
    pub multiplicity: usize,
    /// Σ over the group of x[j] for j = 2..=d (empty when d = 1).
    pub coord_sums: Vec<f64>,
}

/// Decoder outcome. `Full` is only ever returned when re-encoding the
/// recovered multiset reproduces the input within tolerance, so a `Full`
/// answer is a verified preimage, never a guess.
#[derive(Debug, Clone)]
pub enum DecodeResult {
    Full { elements: Multiset, residual: f64 },
    PartialGroups { groups: Vec<Group>, residual: f64 },
    Failed { reason: String },
}

impl DecodeResult {
    pub fn is_full(&self) -> bool {
        matches!(self, DecodeResult::Full { .. })
    }

    pub fn is_partial(&self) -> bool {
        matches!(self, DecodeResult::PartialGroups { .. })
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, DecodeResult::Failed { .. })
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Constructive inverse of [`encode_multiset`] without premix/normalization:
/// recovers the cardinality from entry 0, the first coordinates as
/// polynomial roots polished against the power sums, and the remaining
/// coordinates from Vandermonde systems. Tied first coordinates yield
/// `PartialGroups` with exact group sums when d ≥ 2 (in one dimension the
/// tied value and its multiplicity already pin down the element, so ties
/// still decode to `Full`); any numeric inconsistency yields `Failed` rather
/// than a fabricated multiset.
pub fn decode_multiset(v: &PowerEncoding, tol: f64) -> DecodeResult {
    assert!(tol > 0.0, "tolerance must be positive");
    match decode_inner(v, tol) {
        Ok(r) => r,
        Err(e) => DecodeResult::Failed {
            reason: e.to_string(),
        },
    }
}

fn decode_inner(v: &PowerEncoding, tol: f64) -> Result<DecodeResult> {
    let (d, m) = (v.d(), v.m());
    let values = v.values();
    let accept = tol * (1.0 + linf(values));

    let n_raw = values[0];
    let n_round = n_raw.round();
    if (n_raw - n_round).abs() > tol || n_round < 0.0 || n_round > m as f64 {
        return Err(Error::BadCardinality {
            value: n_raw,
            max: m,
            tol,
        });
    }
    let n = n_round as usize;

    if n == 0 {
        let residual = linf(values);
        if residual > accept {
            return Err(Error::InconsistentSystem {
                residual,
                tol: accept,
            });
        }
        return Ok(DecodeResult::Full {
            elements: Multiset::new(Vec::new(), d, m)?,
            residual,
        });
    }

    let e = newton_girard(&values[1..=n], n);
    // Companion eigenvalues of a k-fold root split by ~eps^(1/k); a cube-root
    // scale accepts triple roots while still rejecting genuinely complex pairs.
    let tol_imag = f64::EPSILON.cbrt() * linf(&e).max(1.0);
    let roots = poly_roots_real(&e, tol_imag)?;

    // cluster tied roots (sorted ascending already)
    let mut clusters: Vec<(f64, usize)> = Vec::new(); // (sum, count)
    let mut last = f64::NEG_INFINITY;
    for &r in &roots {
        if clusters.is_empty() || r - last > vandermonde::node_separation(last, r) {
            clusters.push((r, 1));
        } else {
            let c = clusters.last_mut().unwrap();
            c.0 += r;
            c.1 += 1;
        }
        last = r;
    }
    let counts: Vec<usize> = clusters.iter().map(|&(_, k)| k).collect();
    let means: Vec<f64> = clusters.iter().map(|(s, k)| s / *k as f64).collect();
    let centers = refine_centers(&means, &counts, &values[1..=counts.len()]);

    if d == 1 {
        // a tied first coordinate IS the whole element, so repeats are fully
        // recoverable here
        let mut elements = Vec::with_capacity(n);
        for (&value, &k) in centers.iter().zip(&counts) {
            for _ in 0..k {
                elements.push(FeatVec::new(vec![value])?);
            }
        }
        let recovered = Multiset::new(elements, d, m)?;
        return finish_full(v, recovered, accept);
    }

    if counts.len() == n {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
        for j in 2..=d {
            let (y, _) = vandermonde_solve(&centers, v.coord_block(j))?;
            cols.push(y);
        }
        let elements: Vec<FeatVec> = (0..n)
            .map(|i| {
                let mut el = Vec::with_capacity(d);
                el.push(centers[i]);
                for col in &cols {
                    el.push(col[i]);
                }
                FeatVec::new(el)
            })
            .collect::<Result<_>>()?;
        let recovered = Multiset::new(elements, d, m)?;
        return finish_full(v, recovered, accept);
    }

    // tied first coordinates: shrink to distinct cluster centers and solve
    // for per-group sums
    let mut sums: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for j in 2..=d {
        let (y, _) = vandermonde_solve(&centers, v.coord_block(j))?;
        sums.push(y);
    }
    let groups: Vec<Group> = centers
        .iter()
        .enumerate()
        .map(|(g, &value)| Group {
            value,
            multiplicity: counts[g],
            coord_sums: sums.iter().map(|col| col[g]).collect(),
        })
        .collect();
    let residual = linf(
        &groups_encoding(&groups, d, m)
            .iter()
            .zip(values)
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>(),
    );
    if residual > accept {
        return Err(Error::InconsistentSystem {
            residual,
            tol: accept,
        });
    }
    Ok(DecodeResult::PartialGroups { groups, residual })
}

/// Polishes the distinct first-coordinate values against the power sums once
/// the multiplicity pattern is known. Companion eigenvalues of a k-fold root
/// are only ~eps^(1/k) accurate and their cluster mean inherits that error,
/// but the square system Σ_g counts[g]·x_g^q = p[q−1] (q = 1..=c) folds the
/// multiplicities into the equations and has a nonsingular Jacobian at
/// distinct values, so Newton steps from the cluster means recover the values
/// to solver precision. Falls back to the unpolished means if the iteration
/// stalls, the Jacobian degenerates, or an iterate leaves the clustering
/// radius of its starting mean.
fn refine_centers(means: &[f64], counts: &[usize], p: &[f64]) -> Vec<f64> {
    let c = means.len();
    let weights: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let eval = |x: &[f64]| -> (Vec<f64>, f64) {
        let mut f = vec![0.0; c];
        let mut pw: Vec<f64> = x.to_vec();
        for q in 0..c {
            f[q] = pw.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() - p[q];
            if q + 1 < c {
                for (v, x0) in pw.iter_mut().zip(x) {
                    *v *= x0;
                }
            }
        }
        let norm = linf(&f);
        (f, norm)
    };
    let mut x = means.to_vec();
    let (mut f, mut fnorm) = eval(&x);
    for _ in 0..8 {
        if fnorm == 0.0 {
            break;
        }
        let jac = DMatrix::from_fn(c, c, |q, g| {
            (q + 1) as f64 * weights[g] * x[g].powi(q as i32)
        });
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&f)) else {
            return means.to_vec();
        };
        let next: Vec<f64> = x.iter().zip(step.iter()).map(|(v, s)| v - s).collect();
        let (f_next, norm_next) = eval(&next);
        if !norm_next.is_finite() || norm_next >= fnorm {
            break;
        }
        x = next;
        f = f_next;
        fnorm = norm_next;
    }
    for (r, &m0) in x.iter().zip(means) {
        if (r - m0).abs() > vandermonde::node_separation(m0, *r) {
            return means.to_vec();
        }
    }
    x
}

fn finish_full(v: &PowerEncoding, recovered: Multiset, accept: f64) -> Result<DecodeResult> {
    let re = encode_multiset(&recovered, v.m(), false, None)?;
    let residual = linf(
        &re.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>(),
    );
    if residual > accept {
        return Err(Error::InconsistentSystem {
            residual,
            tol: accept,
        });
    }
    Ok(DecodeResult::Full {
        elements: recovered,
        residual,
    })
}

/// Encoding determined by group data alone: the summed monomials depend on
/// tied elements only through their group sums.
fn groups_encoding(groups: &[Group], d: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; phi_width(d, m)];
    for g in groups {
        out[0] += g.multiplicity as f64;
        let mut p = 1.0;
        for q in 1..=m {
            p *= g.value;
            out[q] += g.multiplicity as f64 * p;
        }
        for j in 2..=d {
            let base = m + 1 + (j - 2) * m;
            let s = g.coord_sums[j - 2];
            let mut p = 1.0;
            for q in 0..m {
                out[base + q] += p * s;
                p *= g.value;
            }
        }
    }
    out
}

/// Per-coordinate affine map onto [−1, 1], fitted to a multiset. Constant
/// coordinates are only shifted (slope 1) so the map stays invertible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineScale {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AffineScale {
    pub fn fit(x: &Multiset) -> Self {
        let d = x.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for el in x.elements() {
            for (j, &v) in el.as_slice().iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        if x.is_empty() {
            lo = vec![0.0; d];
            hi = vec![0.0; d];
        }
        Self { lo, hi }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let (lo, hi) = (self.lo[j], self.hi[j]);
                if hi > lo {
                    (2.0 * v - lo - hi) / (hi - lo)
                } else {
                    v - lo
                }
            })
            .collect()
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(j, &v)| self.inverse_coord(j, v))
            .collect()
    }

    pub fn inverse_coord(&self, j: usize, y: f64) -> f64 {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if hi > lo {
            (y * (hi - lo) + lo + hi) / 2.0
        } else {
            y + lo
        }
    }

    /// Inverse image of a sum of k scaled values (affine maps distribute
    /// over sums given the count).
    pub fn inverse_sum(&self, j: usize, s: f64, k: usize) -> f64 {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if hi > lo {
            (s * (hi - lo) + k as f64 * (lo + hi)) / 2.0
        } else {
            s + k as f64 * lo
        }
    }
}

/// A full encode/decode configuration: capacity, optional power
/// normalization, optional premix, and the affine input scaling that guards
/// x[1]^M against overflow for large M. Serializable so a decoder can be
/// reconstructed next to stored encodings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Codec {
    d: usize,
    m: usize,
    normalize: bool,
    premix: Option<Premix>,
    scale: Option<AffineScale>,
}

/// Capacities above this get affine input scaling; below it, raw inputs in a
/// sane range cannot overflow.
pub const SCALE_THRESHOLD_M: usize = 8;

impl Codec {
    pub fn new(d: usize, m: usize, normalize: bool) -> Self {
        assert!(d >= 1 && m >= 1);
        Self {
            d,
            m,
            normalize,
            premix: None,
            scale: None,
        }
    }

    pub fn with_premix(mut self, premix: Premix) -> Result<Self> {
        if premix.dim() != self.d {
            return Err(Error::ShapeMismatch {
                context: "premix dimension",
                expected: self.d,
                got: premix.dim(),
            });
        }
        self.premix = Some(premix);
        Ok(self)
    }

    pub fn with_random_premix(self, seed: u64) -> Self {
        let mut rng = Rng::seed_from(seed);
        let p = random_premix(self.d, &mut rng);
        self.with_premix(p).expect("matching dimension")
    }

    /// Fits the affine input scaling to a multiset when M is large enough to
    /// need it; a no-op otherwise.
    pub fn fit_scale(&mut self, x: &Multiset) {
        if self.m > SCALE_THRESHOLD_M {
            self.scale = Some(AffineScale::fit(x));
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn premix(&self) -> Option<&Premix> {
        self.premix.as_ref()
    }

    pub fn scale(&self) -> Option<&AffineScale> {
        self.scale.as_ref()
    }

    pub fn encode(&self, x: &Multiset) -> Result<PowerEncoding> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.dim(),
            });
        }
        let scaled = match &self.scale {
            Some(s) => {
                let rows: Vec<Vec<f64>> = x
                    .elements()
                    .iter()
                    .map(|el| s.forward(el.as_slice()))
                    .collect();
                Multiset::from_rows(&rows, self.m.max(x.len()))?
            }
            None => x.clone(),
        };
        encode_multiset(&scaled, self.m, self.normalize, self.premix.as_ref())
    }

    /// Decodes and maps the result back through the inverse normalization,
    /// premix and scaling. With a premix configured, `PartialGroups` sums
    /// are reported in the premixed basis (group structure only exists
    /// there); without one they are mapped back to input coordinates.
    pub fn decode(&self, v: &PowerEncoding, tol: f64) -> DecodeResult {
        if v.d() != self.d || v.m() != self.m {
            return DecodeResult::Failed {
                reason: format!(
                    "encoding layout (d={}, M={}) does not match codec (d={}, M={})",
                    v.d(),
                    v.m(),
                    self.d,
                    self.m
                ),
            };
        }
        match decode_multiset(v, tol) {
            DecodeResult::Full { elements, residual } => {
                let rows: Vec<Vec<f64>> = elements
                    .elements()
                    .iter()
                    .map(|el| {
                        let mut row = el.as_slice().to_vec();
                        if self.normalize {
                            row[0] = denorm_first(row[0], self.m);
                        }
                        if let Some(p) = &self.premix {
                            row = p.apply_inverse(&row);
                        }
                        if let Some(s) = &self.scale {
                            row = s.inverse(&row);
                        }
                        row
                    })
                    .collect();
                match Multiset::from_rows(&rows, self.m) {
                    Ok(elements) => DecodeResult::Full { elements, residual },
                    Err(e) => DecodeResult::Failed {
                        reason: e.to_string(),
                    },
                }
            }
            DecodeResult::PartialGroups {
                mut groups,
                residual,
            } => {
                for g in &mut groups {
                    if self.normalize {
                        g.value = denorm_first(g.value, self.m);
                    }
                }
                if self.premix.is_none() {
                    if let Some(s) = &self.scale {
                        for g in &mut groups {
                            g.value = s.inverse_coord(0, g.value);
                            for (j, sum) in g.coord_sums.iter_mut().enumerate() {
                                *sum = s.inverse_sum(j + 1, *sum, g.multiplicity);
                            }
                        }
                    }
                }
                DecodeResult::PartialGroups { groups, residual }
            }
            failed => failed,
        }
    }
}
