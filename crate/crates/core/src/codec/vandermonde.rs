//! Dual Vandermonde (moment) systems: Σ_i nodes[i]^q · y_i = rhs[q].

use crate::error::{Error, Result};

/// Minimum separation below which two nodes count as coincident.
pub fn node_separation(a: f64, b: f64) -> f64 {
    1e-5 * (1.0 + a.abs().max(b.abs()))
}

const RESIDUAL_TOL: f64 = 1e-6;

/// Solves the n×n leading subsystem V·y = rhs[0..n], V[q][i] = nodes[i]^q,
/// by transforming moments into the Newton polynomial basis (O(n²)) and
/// back-substituting against the triangular matrix φ_q(nodes[i]).
///
/// The remaining rhs[n..] rows are not used by the solve; their residual is
/// returned, and a residual above 1e−6·(1+|rhs|∞) is an
/// [`Error::InconsistentSystem`]: the moment vector is not generated by any
/// weights on these nodes.
pub fn vandermonde_solve(nodes: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = nodes.len();
    assert!(n >= 1, "empty node vector");
    if rhs.len() < n {
        return Err(Error::ShapeMismatch {
            context: "vandermonde rhs",
            expected: n,
            got: rhs.len(),
        });
    }
    // pairwise-distinct check on a sorted view, reported in input positions
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        let gap = (nodes[j] - nodes[i]).abs();
        if gap <= node_separation(nodes[i], nodes[j]) {
            return Err(Error::DegenerateNodes { i, j, gap });
        }
    }

    // Newton-basis moments: with φ_0 = 1, φ_{q+1}(t) = (t − nodes[q])·φ_q(t),
    // track B_r = Σ_i φ_q(nodes[i]) · nodes[i]^r · y_i. From raw moments
    // B_r = rhs[r]; each basis step maps B_r ← B_{r+1} − nodes[q]·B_r.
    let mut work: Vec<f64> = rhs[..n].to_vec();
    let mut beta = vec![0.0; n];
    beta[0] = work[0];
    for q in 0..n - 1 {
        for r in 0..n - 1 - q {
            work[r] = work[r + 1] - nodes[q] * work[r];
        }
        beta[q + 1] = work[0];
    }

    // phi[q][i] = φ_q(nodes[i]) = Π_{r<q}(nodes[i] − nodes[r]); zero for i < q,
    // so the system phi·y = beta is upper triangular.
    let mut phi = vec![vec![0.0; n]; n];
    for i in 0..n {
        phi[0][i] = 1.0;
        for q in 0..i.min(n - 1) {
            phi[q + 1][i] = phi[q][i] * (nodes[i] - nodes[q]);
        }
        for q in i + 1..n {
            phi[q][i] = 0.0;
        }
    }
    let mut y = vec![0.0; n];
    for q in (0..n).rev() {
        let mut acc = beta[q];
        for i in q + 1..n {
            acc -= phi[q][i] * y[i];
        }
        y[q] = acc / phi[q][q];
    }

    // residual of the unused rows q = n..rhs.len()
    let mut powers: Vec<f64> = nodes.iter().map(|x| x.powi(n as i32 - 1)).collect();
    let mut residual: f64 = 0.0;
    for q in n..rhs.len() {
        for (p, x) in powers.iter_mut().zip(nodes) {
            *p *= x;
        }
        let lhs: f64 = powers.iter().zip(&y).map(|(p, w)| p * w).sum();
        residual = residual.max((lhs - rhs[q]).abs());
    }
    let rhs_norm = rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = RESIDUAL_TOL * (1.0 + rhs_norm);
    if residual > tol {
        return Err(Error::InconsistentSystem { residual, tol });
    }
    Ok((y, residual))
}
