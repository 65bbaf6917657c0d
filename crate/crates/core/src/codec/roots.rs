//! Real roots of monic polynomials given by elementary symmetric polynomials.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, Schur};

/// Roots (with multiplicity) of tⁿ − e_1·tⁿ⁻¹ + e_2·tⁿ⁻² − … ± e_n, sorted
/// ascending, computed as eigenvalues of the companion matrix. No local
/// polishing happens here: Newton steps on the polynomial are noise-driven
/// near a multiple root and can migrate a root copy onto a neighbour, so any
/// sharpening is left to the caller, which knows the multiplicity structure.
///
/// Every eigenvalue must be real up to `tol_imag`; a larger imaginary part
/// means the coefficient vector is not the image of a real multiset and is
/// reported as [`Error::NonRealRoots`].
pub fn poly_roots_real(e: &[f64], tol_imag: f64) -> Result<Vec<f64>> {
    let n = e.len();
    assert!(n >= 1, "empty coefficient vector");
    // coeffs[i] = coefficient of t^i of the monic polynomial (leading 1 implicit)
    let coeffs: Vec<f64> = (0..n)
        .map(|i| {
            let k = n - i;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * e[k - 1]
        })
        .collect();

    if n == 1 {
        return Ok(vec![e[0]]);
    }
    // tⁿ exactly; the nilpotent companion matrix is a pathological input for
    // QR iteration, and the answer is exact anyway
    if coeffs.iter().all(|&c| c == 0.0) {
        return Ok(vec![0.0; n]);
    }

    let companion = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeffs[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    // Unbounded QR iteration can cycle forever on crafted coefficient
    // vectors (e.g. tⁿ − 1, a cyclic permutation matrix), so give it a
    // finite budget and fail honestly.
    let budget = 100 * n;
    let schur = Schur::try_new(companion, f64::EPSILON, budget)
        .ok_or(Error::NoConvergence { iters: budget })?;
    let eigen = schur.complex_eigenvalues();

    let mut roots = Vec::with_capacity(n);
    for ev in eigen.iter() {
        if ev.im.abs() > tol_imag {
            return Err(Error::NonRealRoots {
                imag: ev.im.abs(),
                tol: tol_imag,
            });
        }
        roots.push(ev.re);
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}
