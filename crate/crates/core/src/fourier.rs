//! FFT plumbing: oscillatory-kernel transforms between conjugate axes,
//! periodic spectral shifts, and band-limited upsampling.

use ndarray::{Array1, Array2, ArrayView1, Axis as NdAxis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{ModelError, Result};
use crate::grid::Axis;

/// In-place FFT; forward uses the kernel exp(-j 2 pi j k / N), inverse uses
/// exp(+j 2 pi j k / N).  Neither direction normalizes.
pub fn fft_in_place(values: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(values.len())
    } else {
        planner.plan_fft_forward(values.len())
    };
    fft.process(values);
}

/// FFT-ordered frequencies in cycles per unit for an `len`-point axis with
/// spacing `step`: l/(N step) for l < N/2, (l - N)/(N step) above.
pub fn frequencies(len: usize, step: f64) -> Array1<f64> {
    let n = len as f64;
    Array1::from_iter((0..len).map(|l| {
        let l = l as f64;
        let signed = if l < n / 2.0 { l } else { l - n };
        signed / (n * step)
    }))
}

/// Replaces `field` by its periodic translate along one array axis:
/// new(x) = old(x + shift), via multiplication in the spectrum.  The
/// unpaired Nyquist bin (even lengths) gets the real part of its phase so
/// the shift commutes with complex conjugation; fields with spectral mass
/// there lose that mass instead of gaining a spurious imaginary component.
pub fn shift_periodic(
    field: &mut Array2<Complex64>,
    array_axis: usize,
    axis: &Axis,
    shift: f64,
) {
    if shift == 0.0 {
        return;
    }
    let n = field.shape()[array_axis];
    debug_assert_eq!(n, axis.len);
    let freqs = frequencies(n, axis.step);
    let mut phases: Vec<Complex64> = freqs
        .iter()
        .map(|nu| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * nu * shift))
        .collect();
    if n % 2 == 0 {
        phases[n / 2] = Complex64::new(phases[n / 2].re, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut scratch = vec![Complex64::ZERO; n];
    for mut lane in field.lanes_mut(NdAxis(array_axis)) {
        for (s, v) in scratch.iter_mut().zip(lane.iter()) {
            *s = *v;
        }
        fwd.process(&mut scratch);
        for (s, ph) in scratch.iter_mut().zip(&phases) {
            *s *= ph;
        }
        inv.process(&mut scratch);
        let scale = 1.0 / n as f64;
        for (v, s) in lane.iter_mut().zip(&scratch) {
            *v = s * scale;
        }
    }
}

/// Oscillatory-kernel transform between conjugate axes:
///
///   out_m = step_from * sum_j values_j * exp(sign * j * 2 pi t_m s_j / h_eff)
///
/// where s runs over `from` and t over `to`.  Requires the conjugacy
/// relation step_to * step_from * len = h_eff, which reduces the kernel to
/// an FFT with boundary twiddles.
pub fn phase_transform(
    values: ArrayView1<Complex64>,
    from: &Axis,
    to: &Axis,
    h_eff: f64,
    sign: i8,
) -> Result<Array1<Complex64>> {
    let n = from.len;
    if values.len() != n {
        return Err(ModelError::GridMismatch {
            context: format!("phase transform input has {} samples, axis has {n}", values.len()),
        });
    }
    if to.len != n {
        return Err(ModelError::GridMismatch {
            context: format!("phase transform output axis has {} points, input {n}", to.len),
        });
    }
    let prod = from.step * to.step * n as f64;
    if (prod - h_eff).abs() > 1e-9 * h_eff.abs() {
        return Err(ModelError::Grid {
            reason: format!(
                "axes are not conjugate for h_eff = {h_eff:.6e}: step product * len = {prod:.6e}"
            ),
        });
    }
    let sgn = f64::from(sign.signum());
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let s = from.value(j);
            values[j] * Complex64::from_polar(1.0, sgn * two_pi * to.start * s / h_eff)
        })
        .collect();
    fft_in_place(&mut buf, sign > 0);
    let out = Array1::from_iter((0..n).map(|m| {
        let post = Complex64::from_polar(
            1.0,
            sgn * two_pi * (m as f64 * to.step) * from.start / h_eff,
        );
        buf[m] * post * from.step
    }));
    Ok(out)
}

/// Band-limited doubling: 2N samples on the same span with half the step.
/// Exact on the original sample points; spectral interpolation between them.
pub fn upsample2(values: ArrayView1<Complex64>) -> Array1<Complex64> {
    let n = values.len();
    assert!(n % 2 == 0, "upsample2 needs an even point count");
    let mut spectrum: Vec<Complex64> = values.to_vec();
    fft_in_place(&mut spectrum, false);
    let mut padded = vec![Complex64::ZERO; 2 * n];
    for l in 0..n / 2 {
        padded[l] = spectrum[l];
    }
    for l in n / 2 + 1..n {
        padded[n + l] = spectrum[l];
    }
    // Split the Nyquist bin so real inputs stay real.
    padded[n / 2] = spectrum[n / 2] * 0.5;
    padded[2 * n - n / 2] = spectrum[n / 2] * 0.5;
    fft_in_place(&mut padded, true);
    let scale = 1.0 / n as f64;
    Array1::from_iter(padded.into_iter().map(|v| v * scale))
}

/// 2D FFT over both indices of a field; unnormalized like `fft_in_place`.
pub fn fft2_in_place(field: &mut Array2<Complex64>, inverse: bool) {
    let (rows, cols) = (field.shape()[0], field.shape()[1]);
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(cols)
    } else {
        planner.plan_fft_forward(cols)
    };
    for mut row in field.rows_mut() {
        let slice = row.as_slice_mut().expect("row-major layout");
        row_fft.process(slice);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(rows)
    } else {
        planner.plan_fft_forward(rows)
    };
    let mut scratch = vec![Complex64::ZERO; rows];
    for mut col in field.columns_mut() {
        for (s, v) in scratch.iter_mut().zip(col.iter()) {
            *s = *v;
        }
        col_fft.process(&mut scratch);
        for (v, s) in col.iter_mut().zip(&scratch) {
            *v = *s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phase_transform_matches_direct_sum() {
        let from = Axis::centered(4.0, 16).unwrap();
        let h = 1.3;
        let to = from.conjugate(h).unwrap();
        let vals = Array1::from_iter((0..16).map(|j| {
            let x = from.value(j);
            c((-x * x).exp(), 0.3 * x * (-x * x).exp())
        }));
        let out = phase_transform(vals.view(), &from, &to, h, -1).unwrap();
        for m in 0..16 {
            let t = to.value(m);
            let mut direct = Complex64::ZERO;
            for j in 0..16 {
                let s = from.value(j);
                direct += vals[j]
                    * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * t * s / h);
            }
            direct *= from.step;
            assert!((out[m] - direct).norm() < 1e-12, "mismatch at m = {m}");
        }
    }

    #[test]
    fn phase_transform_pair_is_unitary() {
        let from = Axis::centered(4.0, 32).unwrap();
        let h = 0.7;
        let to = from.conjugate(h).unwrap();
        let vals = Array1::from_iter((0..32).map(|j| {
            let x = from.value(j);
            c((-1.1 * x * x).exp() * (2.0 * x).cos(), (-x * x).exp() * x)
        }));
        let fwd = phase_transform(vals.view(), &from, &to, h, -1).unwrap();
        // Inverse carries the reciprocal measure factor 1/h to undo dp dq.
        let back = phase_transform(fwd.view(), &to, &from, h, 1).unwrap();
        for j in 0..32 {
            assert!((back[j] / h - vals[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_band_limited_samples() {
        let ax = Axis::centered(8.0, 64).unwrap();
        let f = |x: f64| c((2.0 * std::f64::consts::PI * x / 16.0 * 3.0).cos(), 0.0);
        let mut field = Array2::from_shape_fn((1, 64), |(_, j)| f(ax.value(j)));
        shift_periodic(&mut field, 1, &ax, 2.5);
        for j in 0..64 {
            let expect = f(ax.value(j) + 2.5);
            assert!((field[(0, j)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn upsample_preserves_original_samples() {
        let vals = array![c(1.0, 0.0), c(0.5, -0.25), c(-0.75, 0.1), c(0.0, 0.9)];
        let up = upsample2(vals.view());
        assert_eq!(up.len(), 8);
        for j in 0..4 {
            assert!((up[2 * j] - vals[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn frequencies_are_fft_ordered() {
        let f = frequencies(8, 0.5);
        assert!((f[0] - 0.0).abs() < 1e-15);
        assert!((f[1] - 0.25).abs() < 1e-15);
        assert!((f[4] + 1.0).abs() < 1e-15);
        assert!((f[7] + 0.25).abs() < 1e-15);
    }
}
