//! Arithmetic connecting second-order (variance-scaled) bounds to the
//! first-order (value-scaled) bounds they imply. Returns lie in `[0, 1]`, so
//! variance is dominated by the first moment and a variance-scaled bound can
//! always be converted at the price of a universal constant.

/// Right-hand side of an online second-order bound with constant `c`:
/// `sqrt(c * sum_k Var(Z^{pi_k})) + c`.
pub fn online_second_order(c: f64, sum_var: f64) -> f64 {
    (c * sum_var).sqrt() + c
}

/// First-order bound implied by an online second-order bound with constant
/// `c`: `sqrt(2 c * sum_k V*(x_1k)) + 3 c`.
pub fn online_first_order(c: f64, sum_v_star: f64) -> f64 {
    (2.0 * c * sum_v_star).sqrt() + 3.0 * c
}

/// Right-hand side of an offline second-order bound with constant `c`:
/// `sqrt(c * Var(Z^{comparator}) / N) + c / N`.
pub fn offline_second_order(c: f64, var_comparator: f64, n: usize) -> f64 {
    let n = n as f64;
    (c * var_comparator / n).sqrt() + c / n
}

/// First-order bound implied by an offline second-order bound:
/// `sqrt(c * V^{comparator} / N) + c / N`.
pub fn offline_first_order(c: f64, v_comparator: f64, n: usize) -> f64 {
    let n = n as f64;
    (c * v_comparator / n).sqrt() + c / n
}
