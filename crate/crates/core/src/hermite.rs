//! Orthonormal Hermite functions (harmonic eigenbasis on the line).

use ndarray::{Array1, Array2, ArrayView1};

/// Evaluates the first `count` orthonormal Hermite functions at the points
/// `u`; row m holds h_m(u).  These satisfy int h_m h_n du = delta_mn and the
/// stable recurrence
///   h_{m+1}(u) = sqrt(2/(m+1)) u h_m(u) - sqrt(m/(m+1)) h_{m-1}(u),
/// seeded by h_0(u) = pi^{-1/4} exp(-u^2/2).
pub fn hermite_functions(count: usize, u: ArrayView1<f64>) -> Array2<f64> {
    let n = u.len();
    let mut out = Array2::zeros((count, n));
    if count == 0 {
        return out;
    }
    let norm0 = std::f64::consts::PI.powf(-0.25);
    for (j, &x) in u.iter().enumerate() {
        out[(0, j)] = norm0 * (-0.5 * x * x).exp();
    }
    if count == 1 {
        return out;
    }
    for (j, &x) in u.iter().enumerate() {
        out[(1, j)] = std::f64::consts::SQRT_2 * x * out[(0, j)];
    }
    for m in 1..count - 1 {
        let c1 = (2.0 / (m as f64 + 1.0)).sqrt();
        let c2 = (m as f64 / (m as f64 + 1.0)).sqrt();
        for (j, &x) in u.iter().enumerate() {
            out[(m + 1, j)] = c1 * x * out[(m, j)] - c2 * out[(m - 1, j)];
        }
    }
    out
}

/// Single Hermite function h_m sampled at `u`.
pub fn hermite_function(m: usize, u: ArrayView1<f64>) -> Array1<f64> {
    hermite_functions(m + 1, u).row(m).to_owned()
}
