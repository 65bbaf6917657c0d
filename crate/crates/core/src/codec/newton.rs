//! Power sums to elementary symmetric polynomials.

/// Converts power sums p_1..p_n of an (unknown) multiset of reals into its
/// elementary symmetric polynomials e_1..e_n via the recurrence
/// k·e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i with e_0 = 1.
pub fn newton_girard(power_sums: &[f64], n: usize) -> Vec<f64> {
    debug_assert!(n >= 1 && power_sums.len() >= n);
    // e[k] holds e_k; e[0] = 1.
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        let mut sign = 1.0;
        for i in 1..=k {
            acc += sign * e[k - i] * power_sums[i - 1];
            sign = -sign;
        }
        e[k] = acc / k as f64;
    }
    e.remove(0);
    e
}
