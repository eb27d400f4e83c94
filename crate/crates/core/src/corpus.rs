//! Reference states for tests, demonstrations, and the command line:
//! matched Gaussians, Hermite levels, coherent states, seeded random
//! band-limited superpositions, and single fiber-mode amplitudes.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{mode_length_scale, mode_position_axis, mode_to_momentum_rep};
use crate::error::{ModelError, Result};
use crate::fiber::ExtendedAmplitude;
use crate::grid::{Axis, PhaseGrid};
use crate::hermite::hermite_functions;
use crate::params::ModelParams;
use crate::transform::WaveFunction;

/// The Gaussian whose width matches the averaging window:
/// psi(x) = (2 b / (h a))^{1/4} exp(-(pi b / (h a)) x^2), unit norm.
pub fn matched_gaussian_state(axis: &Axis, params: &ModelParams) -> WaveFunction {
    let rate = std::f64::consts::PI * params.b[0] / (params.h * params.a[0]);
    let amp = (2.0 * params.b[0] / (params.h * params.a[0])).powf(0.25);
    let values = Array1::from_iter(
        axis.values().iter().map(|&x| Complex64::new(amp * (-rate * x * x).exp(), 0.0)),
    );
    WaveFunction::new(*axis, values).expect("axis validated by caller")
}

/// Level-m Hermite function of the matched width
/// ell = sqrt(h a / (2 pi b)); level 0 equals the matched Gaussian.
pub fn hermite_state(axis: &Axis, params: &ModelParams, m: usize) -> WaveFunction {
    let ell = (params.h * params.a[0] / (2.0 * std::f64::consts::PI * params.b[0])).sqrt();
    let us = Array1::from_iter(axis.values().iter().map(|&x| x / ell));
    let h = hermite_functions(m + 1, us.view());
    let scale = 1.0 / ell.sqrt();
    let values =
        Array1::from_iter(h.row(m).iter().map(|&v| Complex64::new(v * scale, 0.0)));
    WaveFunction::new(*axis, values).expect("axis validated by caller")
}

/// Matched Gaussian displaced to (q0, p0): the position shift is literal,
/// the momentum boost is the phase exp(+j 2 pi p0 x / h).
pub fn coherent_state(axis: &Axis, params: &ModelParams, q0: f64, p0: f64) -> WaveFunction {
    let rate = std::f64::consts::PI * params.b[0] / (params.h * params.a[0]);
    let amp = (2.0 * params.b[0] / (params.h * params.a[0])).powf(0.25);
    let omega = 2.0 * std::f64::consts::PI * p0 / params.h;
    let values = Array1::from_iter(axis.values().iter().map(|&x| {
        let d = x - q0;
        Complex64::from_polar(amp * (-rate * d * d).exp(), omega * x)
    }));
    WaveFunction::new(*axis, values).expect("axis validated by caller")
}

/// Seeded random superposition of the first nine Hermite levels at a width
/// slightly above matched, normalized.  The same seed always reproduces the
/// same state.
pub fn random_band_limited(axis: &Axis, params: &ModelParams, seed: u64) -> WaveFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 0.55 * (params.h * params.a[0] / params.b[0]).sqrt();
    let us = Array1::from_iter(axis.values().iter().map(|&x| x / s));
    let table = hermite_functions(9, us.view());
    let mut values = Array1::<Complex64>::zeros(axis.len);
    for m in 0..9 {
        let c = Complex64::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        for (v, &hv) in values.iter_mut().zip(table.row(m).iter()) {
            *v += c * hv;
        }
    }
    values.mapv_inplace(|v| v / s.sqrt());
    WaveFunction::new(*axis, values)
        .expect("axis validated by caller")
        .normalized()
        .expect("random superposition is nonzero")
}

/// An extended amplitude carrying a single fiber mode k != 0 whose
/// conjugate-variable profile is Hermite level m at the mode's length
/// scale, under a Gaussian envelope of the given width (in the scaled
/// conjugate units).  Approximately unit norm.
pub fn k_mode_state(
    grid: &PhaseGrid,
    params: &ModelParams,
    k: i32,
    m: usize,
    envelope_width: f64,
) -> Result<ExtendedAmplitude> {
    params.require_1d()?;
    if k == 0 {
        return Err(ModelError::InvalidParameter {
            name: "k".into(),
            reason: "the fiber-mean mode has no Hermite profile; pick k != 0".into(),
        });
    }
    if !(envelope_width > 0.0) || !envelope_width.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "envelope_width".into(),
            reason: "must be positive and finite".into(),
        });
    }
    let n = grid.q.len;
    let ell = mode_length_scale(params, k);
    let xaxis = mode_position_axis(&grid.q, k);
    let w = envelope_width;
    let env_amp = (std::f64::consts::PI * w * w).powf(-0.25);
    let scale = 1.0 / ell.sqrt();
    let mut xs = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let x = xaxis.value(j);
        let env = env_amp * (-x * x / (2.0 * w * w)).exp();
        let us = Array1::from_iter((0..n).map(|i| (grid.q.value(i) - x) / ell));
        let h = hermite_functions(m + 1, us.view());
        for i in 0..n {
            xs[(i, j)] = Complex64::new(env * h[(m, i)] * scale, 0.0);
        }
    }
    let field = mode_to_momentum_rep(&xs, grid, params.h, k)?;
    let mut amp = ExtendedAmplitude::new(grid.clone(), params.h, k.unsigned_abs() as usize)?;
    amp.set_mode(k, field)?;
    Ok(amp)
}
