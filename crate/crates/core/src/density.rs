//! Phase-space densities: the nonnegative density carried by the averaged
//! amplitude, and a Wigner quasidistribution for comparison.
//!
//! The density is computed through the factorized form
//! rho(q,p) = 2 |mode_{-1}(q,p)|^2, which is nonnegative by construction;
//! the equivalent double position integral is kept as a test oracle.  The
//! Wigner transform of the same state is generally signed; smoothing it
//! with a Gaussian of variances (h a / 4 pi b, h b / 4 pi a) reproduces the
//! nonnegative density, and `smoothing_check` measures that identity.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ModelError, Result};
use crate::fourier::{fft2_in_place, fft_in_place};
use crate::grid::PhaseGrid;
use crate::params::ModelParams;
use crate::transform::{synthesize, AveragedAmplitude, WaveFunction};

/// Nonnegative phase-space density samples with their grid quadrature.
#[derive(Debug, Clone)]
pub struct PhaseSpaceDensity {
    grid: PhaseGrid,
    values: Array2<f64>,
    /// Quadrature of the density over the grid; equals the squared state
    /// norm for adequately resolved states.
    norm: f64,
}

impl PhaseSpaceDensity {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Momentum-integrated marginal, one value per position sample.
    pub fn position_marginal(&self) -> Array1<f64> {
        let dp = self.grid.p.step;
        Array1::from_iter(self.values.rows().into_iter().map(|r| r.sum() * dp))
    }
}

/// Signed Wigner samples with their grid quadrature.
#[derive(Debug, Clone)]
pub struct WignerDensity {
    grid: PhaseGrid,
    values: Array2<f64>,
    norm: f64,
}

impl WignerDensity {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn quadrature(values: &Array2<f64>, grid: &PhaseGrid) -> f64 {
    values.sum() * grid.cell_area()
}

/// Density carried by an already-synthesized amplitude: 2 |mode_{-1}|^2.
pub fn density_from_amplitude(amp: &AveragedAmplitude) -> PhaseSpaceDensity {
    let grid = amp.grid().clone();
    let values = amp.mode_minus_one().mapv(|v| 2.0 * v.norm_sqr());
    let norm = quadrature(&values, &grid);
    PhaseSpaceDensity { grid, values, norm }
}

/// Phase-space probability density of a wave function.  Nonnegative by
/// construction; its grid quadrature equals ||psi||^2 on adequate grids.
pub fn density_from_wavefunction(
    psi: &WaveFunction,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<PhaseSpaceDensity> {
    let amp = synthesize(psi, params, grid)?;
    Ok(density_from_amplitude(&amp))
}

/// Wigner transform W(q,p) = (2/h) int psi(q+y) conj(psi)(q-y)
/// exp(-j 4 pi p y / h) dy, sampled on the conjugate grid.
///
/// The y quadrature runs on the half-step lattice (the state is spectrally
/// upsampled by 2).  On the conjugate momentum lattice the oscillatory
/// factor depends only on the half-step index modulo the grid size, so the
/// correlation folds exactly into one length-N FFT per position row.
pub fn wigner(
    psi: &WaveFunction,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<WignerDensity> {
    // Same grid preconditions as synthesis, but there is no smoothing
    // window here: the state only has to die off before the domain edge so
    // the periodic position correlation does not wrap around.
    crate::transform::check_adequacy(psi.axis(), None, params, grid)?;
    if let Some((lo, hi)) = psi.support_bounds(1e-10) {
        let margin = (lo - grid.q.min()).min(grid.q.max() - hi);
        if margin < grid.q.step {
            return Err(ModelError::Coverage {
                reason: format!(
                    "state support within {margin:.3} of the domain edge; the position \
                     correlation would wrap around"
                ),
            });
        }
    }
    let n = grid.q.len;
    let fine = crate::fourier::upsample2(psi.values().view());
    let dx = grid.q.step;
    let scale = dx / params.h;
    let rows: Vec<Array1<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut folded = vec![Complex64::ZERO; n];
            let center = 2 * i as isize;
            let fine_len = 2 * n as isize;
            for m in -(fine_len - 1)..fine_len {
                let a = center + m;
                let b = center - m;
                if a < 0 || b < 0 || a >= fine_len || b >= fine_len {
                    continue;
                }
                let c = fine[a as usize] * fine[b as usize].conj();
                // Centered momentum origin contributes (-1)^m; even grid
                // size keeps the sign consistent across the fold.
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                folded[m.rem_euclid(n as isize) as usize] += c * sign;
            }
            let mut spectrum = folded;
            fft_in_place(&mut spectrum, false);
            Array1::from_iter(spectrum.iter().map(|v| v.re * scale))
        })
        .collect();
    let mut values = Array2::<f64>::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        values.row_mut(i).assign(&row);
    }
    let norm = quadrature(&values, grid);
    Ok(WignerDensity { grid: grid.clone(), values, norm })
}

/// Mass-normalized Gaussian smoothing kernel with variances
/// (h a / 4 pi b) in position and (h b / 4 pi a) in momentum, sampled in
/// circular layout for FFT convolution.
fn smoothing_kernel(grid: &PhaseGrid, params: &ModelParams) -> Array2<f64> {
    let n_q = grid.q.len;
    let n_p = grid.p.len;
    let rate_u = 2.0 * std::f64::consts::PI * params.b[0] / (params.h * params.a[0]);
    let rate_w = 2.0 * std::f64::consts::PI * params.a[0] / (params.h * params.b[0]);
    let amp = 2.0 / params.h;
    Array2::from_shape_fn((n_q, n_p), |(i, j)| {
        let wrap_i = if i <= n_q / 2 { i as f64 } else { i as f64 - n_q as f64 };
        let wrap_j = if j <= n_p / 2 { j as f64 } else { j as f64 - n_p as f64 };
        let u = wrap_i * grid.q.step;
        let w = wrap_j * grid.p.step;
        amp * (-rate_u * u * u - rate_w * w * w).exp()
    })
}

/// Convolves the Wigner transform with the Gaussian smoothing kernel and
/// returns the relative L2 distance to the nonnegative density.  Zero
/// input yields residual 0.
pub fn smoothing_check(
    psi: &WaveFunction,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<f64> {
    let rho = density_from_wavefunction(psi, params, grid)?;
    let w = wigner(psi, params, grid)?;
    let rho_l2 = rho.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho_l2 == 0.0 {
        return Ok(0.0);
    }
    let kernel = smoothing_kernel(grid, params);
    let shape = (grid.q.len, grid.p.len);
    let mut w_hat = Array2::from_shape_fn(shape, |idx| Complex64::new(w.values[idx], 0.0));
    let mut k_hat = Array2::from_shape_fn(shape, |idx| Complex64::new(kernel[idx], 0.0));
    fft2_in_place(&mut w_hat, false);
    fft2_in_place(&mut k_hat, false);
    let cells = (shape.0 * shape.1) as f64;
    let cell_area = grid.cell_area();
    for (a, b) in w_hat.iter_mut().zip(k_hat.iter()) {
        *a = *a * *b * (cell_area / cells);
    }
    fft2_in_place(&mut w_hat, true);
    let mut diff_sq = 0.0;
    for (s, r) in w_hat.iter().zip(rho.values.iter()) {
        let d = s.re - r;
        diff_sq += d * d;
    }
    Ok(diff_sq.sqrt() / rho_l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn setup(n: usize) -> (ModelParams, Axis, PhaseGrid) {
        let params = ModelParams::unit();
        let axis = Axis::centered(8.0, n).unwrap();
        let grid = PhaseGrid::conjugate(axis, params.h).unwrap();
        (params, axis, grid)
    }

    fn matched_gaussian(axis: &Axis) -> WaveFunction {
        let values = Array1::from_iter((0..axis.len).map(|j| {
            let x = axis.value(j);
            Complex64::new(2f64.powf(0.25) * (-std::f64::consts::PI * x * x).exp(), 0.0)
        }));
        WaveFunction::new(*axis, values).unwrap()
    }

    /// First excited oscillator state at the matched width: x Gaussian
    /// (normalized), odd parity.
    fn first_excited(axis: &Axis) -> WaveFunction {
        let norm = (2.0f64).powf(0.25) * 2.0 * std::f64::consts::PI.sqrt();
        let values = Array1::from_iter((0..axis.len).map(|j| {
            let x = axis.value(j);
            Complex64::new(norm * x * (-std::f64::consts::PI * x * x).exp(), 0.0)
        }));
        WaveFunction::new(*axis, values).unwrap()
    }

    #[test]
    fn matched_gaussian_density_closed_form() {
        let (params, axis, grid) = setup(128);
        let psi = matched_gaussian(&axis);
        let rho = density_from_wavefunction(&psi, &params, &grid).unwrap();
        assert!((rho.norm() - 1.0).abs() < 1e-9, "norm {}", rho.norm());
        let pi = std::f64::consts::PI;
        for i in (0..128).step_by(9) {
            for j in (0..128).step_by(9) {
                let q = grid.q.value(i);
                let p = grid.p.value(j);
                let expect = (-pi * (q * q + p * p)).exp();
                assert!((rho.values()[(i, j)] - expect).abs() < 1e-10);
            }
        }
        assert!((rho.values()[(64, 64)] - 1.0).abs() < 1e-10);
        assert!(rho.min_value() >= -1e-12);
    }

    #[test]
    fn matched_gaussian_wigner_closed_form() {
        let (params, axis, grid) = setup(128);
        let psi = matched_gaussian(&axis);
        let w = wigner(&psi, &params, &grid).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-9);
        let pi = std::f64::consts::PI;
        for i in (0..128).step_by(9) {
            for j in (0..128).step_by(9) {
                let q = grid.q.value(i);
                let p = grid.p.value(j);
                let expect = 2.0 * (-2.0 * pi * (q * q + p * p)).exp();
                assert!(
                    (w.values()[(i, j)] - expect).abs() < 1e-9,
                    "W({q},{p}) = {} vs {expect}",
                    w.values()[(i, j)]
                );
            }
        }
        // A Gaussian has a nonnegative Wigner transform.
        assert!(w.min_value() >= -1e-12);
    }

    #[test]
    fn wigner_matches_direct_sum_oracle() {
        let (params, axis, grid) = setup(64);
        // Complex-valued test state.
        let values = Array1::from_iter((0..axis.len).map(|j| {
            let x = axis.value(j);
            let env = (-0.8 * x * x).exp();
            Complex64::new(env * (1.1 * x).cos(), env * 0.5 * (0.7 * x).sin())
        }));
        let psi = WaveFunction::new(axis, values).unwrap();
        let w = wigner(&psi, &params, &grid).unwrap();
        // Direct evaluation on the same half-step lattice, no FFT and no
        // folding: W = (2/h) sum_m (dx/2) fine(2i+m) conj(fine(2i-m))
        // exp(-j 4 pi p m dx / (2h)).
        let fine = crate::fourier::upsample2(psi.values().view());
        let n = 64usize;
        let dx = grid.q.step;
        for &i in &[10usize, 25, 32, 47] {
            for &j in &[0usize, 16, 32, 50] {
                let p = grid.p.value(j);
                let mut acc = Complex64::ZERO;
                for m in -(2 * n as isize - 1)..(2 * n as isize) {
                    let a = 2 * i as isize + m;
                    let b = 2 * i as isize - m;
                    if a < 0 || b < 0 || a >= 2 * n as isize || b >= 2 * n as isize {
                        continue;
                    }
                    let y = m as f64 * dx / 2.0;
                    let phase = Complex64::from_polar(
                        1.0,
                        -4.0 * std::f64::consts::PI * p * y / params.h,
                    );
                    acc += fine[a as usize] * fine[b as usize].conj() * phase;
                }
                let direct = (2.0 / params.h) * (dx / 2.0) * acc.re;
                assert!(
                    (w.values()[(i, j)] - direct).abs() < 1e-10,
                    "row {i} col {j}: {} vs {direct}",
                    w.values()[(i, j)]
                );
            }
        }
    }

    #[test]
    fn first_excited_contrast() {
        let (params, axis, grid) = setup(128);
        let psi = first_excited(&axis);
        assert!((psi.norm_sq() - 1.0).abs() < 1e-10);
        let rho = density_from_wavefunction(&psi, &params, &grid).unwrap();
        let w = wigner(&psi, &params, &grid).unwrap();
        assert!(rho.min_value() >= -1e-12, "density min {}", rho.min_value());
        // Odd state: W(0,0) = -(2/h) ||psi||^2, far below the threshold.
        assert!(w.min_value() < -1e-3, "wigner min {}", w.min_value());
        assert!((rho.norm() - 1.0).abs() < 1e-6);
        assert!((w.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn smoothing_residuals() {
        let (params, axis, grid) = setup(128);
        let res_gauss = smoothing_check(&matched_gaussian(&axis), &params, &grid).unwrap();
        assert!(res_gauss < 1e-6, "matched Gaussian residual {res_gauss}");
        let res_excited = smoothing_check(&first_excited(&axis), &params, &grid).unwrap();
        assert!(res_excited < 1e-4, "first excited residual {res_excited}");
        let zero = WaveFunction::zeros(axis);
        assert_eq!(smoothing_check(&zero, &params, &grid).unwrap(), 0.0);
    }

    #[test]
    fn zero_state_densities_vanish() {
        let (params, axis, grid) = setup(64);
        let zero = WaveFunction::zeros(axis);
        let rho = density_from_wavefunction(&zero, &params, &grid).unwrap();
        let w = wigner(&zero, &params, &grid).unwrap();
        assert_eq!(rho.norm(), 0.0);
        assert!(w.values().iter().all(|v| v.abs() < 1e-300));
    }

    #[test]
    fn matched_gaussian_marginal_closed_form() {
        let (params, axis, grid) = setup(128);
        let psi = matched_gaussian(&axis);
        let rho = density_from_wavefunction(&psi, &params, &grid).unwrap();
        let marg = rho.position_marginal();
        // Integrating the density over p leaves exp(-pi q^2): the position
        // distribution widened by the window variance.
        for i in (0..128).step_by(5) {
            let q = grid.q.value(i);
            let expect = (-std::f64::consts::PI * q * q).exp();
            assert!((marg[i] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn wigner_smoothing_variances_match_window() {
        // Nontrivial parameters: smoothing kernel mass stays 1.
        let params = ModelParams::new(0.8, vec![1.7], vec![0.6]).unwrap();
        let axis = Axis::centered(9.0, 128).unwrap();
        let grid = PhaseGrid::conjugate(axis, params.h).unwrap();
        let kernel = smoothing_kernel(&grid, &params);
        let mass = kernel.sum() * grid.cell_area();
        assert!((mass - 1.0).abs() < 1e-9, "kernel mass {mass}");
        // Second moments match the stated variances.
        let mut var_u = 0.0;
        let mut var_w = 0.0;
        for i in 0..grid.q.len {
            let wrap_i = if i <= grid.q.len / 2 { i as f64 } else { i as f64 - grid.q.len as f64 };
            let u = wrap_i * grid.q.step;
            for j in 0..grid.p.len {
                let wrap_j =
                    if j <= grid.p.len / 2 { j as f64 } else { j as f64 - grid.p.len as f64 };
                let w = wrap_j * grid.p.step;
                var_u += u * u * kernel[(i, j)];
                var_w += w * w * kernel[(i, j)];
            }
        }
        var_u *= grid.cell_area();
        var_w *= grid.cell_area();
        assert!((var_u - params.sigma_q_sq(0)).abs() < 1e-9 * params.sigma_q_sq(0));
        assert!((var_w - params.sigma_p_sq(0)).abs() < 1e-9 * params.sigma_p_sq(0));
    }
}
