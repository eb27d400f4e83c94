//! Coherent transforms between wave functions and averaged amplitudes.
//!
//! `synthesize` maps a wave function to the averaged amplitude it
//! parametrizes: a Gaussian-windowed, oscillatory integral over position
//! placed in the fiber modes k = -1 and k = +1 (conjugate pair).
//! `extract` inverts it.  On a conjugate phase grid the composition
//! extract(synthesize(psi)) reproduces psi to machine precision because the
//! discrete momentum sum collapses to an exact lattice delta.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ModelError, Result};
use crate::fiber::ExtendedAmplitude;
use crate::fourier::phase_transform;
use crate::grid::{Axis, PhaseGrid, PositionGrid};
use crate::params::ModelParams;

/// Complex samples of a wave function on a one-dimensional position grid.
/// The represented object carries fiber equivariance index k = -1: under a
/// fiber rotation by t it picks up the factor exp(-j 2 pi t / h); stored
/// values are the t = 0 slice.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: PositionGrid,
    values: Array1<Complex64>,
}

impl WaveFunction {
    pub fn new(axis: Axis, values: Array1<Complex64>) -> Result<Self> {
        if values.len() != axis.len {
            return Err(ModelError::GridMismatch {
                context: format!("{} samples on a {}-point axis", values.len(), axis.len),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "values".into(),
                reason: "wave function samples must be finite".into(),
            });
        }
        Ok(Self { grid: PositionGrid::single(axis), values })
    }

    pub fn zeros(axis: Axis) -> Self {
        let n = axis.len;
        Self { grid: PositionGrid::single(axis), values: Array1::zeros(n) }
    }

    pub fn axis(&self) -> &Axis {
        &self.grid.axes[0]
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array1<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<Complex64> {
        &mut self.values
    }

    /// Grid quadrature of |psi|^2 (plain L2 over dx).
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.axis().step
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "psi".into(),
                reason: "cannot normalize the zero state".into(),
            });
        }
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v / n);
        Ok(out)
    }

    /// Complex pairing <psi1, psi2> = int psi1 conj(psi2) dx.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(ModelError::GridMismatch {
                context: "wave functions live on different grids".into(),
            });
        }
        let mut acc = Complex64::ZERO;
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a * b.conj();
        }
        Ok(acc * self.axis().step)
    }

    /// Real pairing h * Re <psi1, psi2>, the physical inner product paired
    /// with the extended-amplitude norm.
    pub fn inner_re_h(&self, other: &Self, params: &ModelParams) -> Result<f64> {
        Ok(params.h * self.inner(other)?.re)
    }

    /// Sample values at fiber time t: psi * exp(-j 2 pi t / h).
    pub fn at_fiber_time(&self, t: f64, h: f64) -> Array1<Complex64> {
        let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * t / h);
        self.values.mapv(|v| w * v)
    }

    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) -> Result<()> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(ModelError::GridMismatch {
                context: "wave functions live on different grids".into(),
            });
        }
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Relative L2 distance ||self - other|| / ||self||.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let mut diff = self.clone();
        diff.add_scaled(other, Complex64::new(-1.0, 0.0))?;
        let base = self.norm();
        if base == 0.0 {
            return Ok(diff.norm());
        }
        Ok(diff.norm() / base)
    }

    /// Index range where |psi| exceeds `rel_threshold * max|psi|`; None for
    /// the zero state.
    pub fn support_bounds(&self, rel_threshold: f64) -> Option<(f64, f64)> {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        let cut = rel_threshold * max;
        let mut lo = None;
        let mut hi = None;
        for (j, v) in self.values.iter().enumerate() {
            if v.norm() > cut {
                if lo.is_none() {
                    lo = Some(j);
                }
                hi = Some(j);
            }
        }
        Some((self.axis().value(lo?), self.axis().value(hi?)))
    }
}

/// An extended amplitude in the image of `synthesize`: only the fiber modes
/// k = -1 and k = +1 = conj are populated, and re-applying the averaging
/// projector (extract then synthesize) reproduces it.
#[derive(Debug, Clone)]
pub struct AveragedAmplitude {
    inner: ExtendedAmplitude,
}

impl AveragedAmplitude {
    pub fn as_extended(&self) -> &ExtendedAmplitude {
        &self.inner
    }

    pub fn into_extended(self) -> ExtendedAmplitude {
        self.inner
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.inner.grid()
    }

    pub fn mode_minus_one(&self) -> &Array2<Complex64> {
        self.inner.mode(-1).expect("synthesized amplitude stores mode -1")
    }
}

/// Gaussian window exponent rate (pi/h)(b/a) for one coordinate.
fn window_rate(params: &ModelParams) -> f64 {
    std::f64::consts::PI / params.h * (params.b[0] / params.a[0])
}

/// Window values on the index-difference lattice: g[d + (n-1)] =
/// exp(-rate * (d * dx)^2) for d in -(n-1)..=(n-1).
fn window_table(axis: &Axis, rate: f64) -> Vec<f64> {
    let n = axis.len;
    (0..2 * n - 1)
        .map(|idx| {
            let d = idx as isize - (n as isize - 1);
            let u = d as f64 * axis.step;
            (-rate * u * u).exp()
        })
        .collect()
}

/// Shared preconditions for the coherent transforms and densities: one
/// coordinate, matching position axes, conjugate momentum axis, momentum
/// coverage, and (when a support interval is given) window decay below
/// 1e-12 between the state's support and the domain edge.
pub(crate) fn check_adequacy(
    psi_axis: &Axis,
    support: Option<(f64, f64)>,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<()> {
    params.require_1d()?;
    if !grid.q.approx_eq(psi_axis) {
        return Err(ModelError::GridMismatch {
            context: "phase grid position axis differs from the state's axis (resampling is not implicit)".into(),
        });
    }
    grid.require_conjugate(params.h)?;
    grid.check_momentum_coverage(params)?;
    if let Some((lo, hi)) = support {
        let rate = window_rate(params);
        // Window must fall below 1e-12 before the domain edge.
        let needed = (1e12f64.ln() / rate).sqrt();
        let margin = (lo - grid.q.min()).min(grid.q.max() - hi);
        if margin < needed {
            return Err(ModelError::Coverage {
                reason: format!(
                    "state support within {margin:.3} of the domain edge; the Gaussian window \
                     needs {needed:.3} to decay below 1e-12"
                ),
            });
        }
    }
    Ok(())
}

/// Synthesis constant (1/sqrt(2)) (2/h^3)^{n/4} prod (b_i/a_i)^{1/4}.
fn synthesis_constant(params: &ModelParams) -> f64 {
    let n = params.dim() as f64;
    let mut c = (2.0 / params.h.powi(3)).powf(n / 4.0) / 2f64.sqrt();
    for i in 0..params.dim() {
        c *= (params.b[i] / params.a[i]).powf(0.25);
    }
    c
}

/// Extraction constant sqrt(2) (2/h^3)^{n/4} prod (b_i/a_i)^{1/4}.  The
/// printed reciprocal-h prefactor of the inversion formula cancels against
/// the fiber integral (which contributes a factor h when projecting onto
/// mode -1), so it does not appear here; the round-trip identity pins the
/// product of the two constants to 1.
fn extraction_constant(params: &ModelParams) -> f64 {
    2.0 * synthesis_constant(params)
}

/// Maps a wave function to its averaged amplitude:
///
///   mode_{-1}(q, p) = C int exp(-(pi/h)(b/a)(q - x)^2) psi(x)
///                       exp(-j 2 pi p x / h) dx,
///
/// with C = (1/sqrt 2)(2/h^3)^{1/4}(b/a)^{1/4}, and mode_{+1} its complex
/// conjugate.  Requires the conjugate phase grid built on the state's axis.
pub fn synthesize(
    psi: &WaveFunction,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<AveragedAmplitude> {
    check_adequacy(psi.axis(), psi.support_bounds(1e-10), params, grid)?;
    let n = grid.q.len;
    let axis = *psi.axis();
    let rate = window_rate(params);
    let table = window_table(&axis, rate);
    let c = synthesis_constant(params);
    let rows: Vec<Array1<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let windowed = Array1::from_iter((0..n).map(|j| {
                let g = table[(i + n - 1 - j) as usize];
                psi.values()[j] * g
            }));
            let mut row = phase_transform(windowed.view(), &axis, &grid.p, params.h, -1)
                .expect("conjugacy checked above");
            row.mapv_inplace(|v| v * c);
            row
        })
        .collect();
    let mut field = Array2::<Complex64>::zeros((n, grid.p.len));
    for (i, row) in rows.into_iter().enumerate() {
        field.row_mut(i).assign(&row);
    }
    let mut out = ExtendedAmplitude::new(grid.clone(), params.h, 1)?;
    out.set_conjugate_pair(-1, field)?;
    Ok(AveragedAmplitude { inner: out })
}

/// Recovers the wave function from an extended amplitude:
///
///   psi(x) = C' int int exp(-(pi/h)(b/a)(q - x)^2) mode_{-1}(q, p)
///              exp(+j 2 pi p x / h) dq dp,
///
/// with C' = sqrt(2)(2/h^3)^{1/4}(b/a)^{1/4}.  The fiber projection onto
/// k = -1 is implicit in reading mode_{-1}.  The output grid must equal the
/// amplitude's position axis; no resampling is performed.  An amplitude
/// whose truncation cannot even hold k = -1 is rejected; a representable
/// but absent mode reads as zero (fiber orthogonality).
pub fn extract(
    phi: &ExtendedAmplitude,
    params: &ModelParams,
    out_grid: &PositionGrid,
) -> Result<WaveFunction> {
    params.require_1d()?;
    if (phi.h() - params.h).abs() > 1e-12 * params.h {
        return Err(ModelError::InvalidParameter {
            name: "h".into(),
            reason: format!("amplitude fiber circumference {} differs from params h {}", phi.h(), params.h),
        });
    }
    let axis = *out_grid.only_axis()?;
    if phi.k_trunc() < 1 {
        return Err(ModelError::MissingMode { k: -1 });
    }
    let grid = phi.grid().clone();
    let zero_mode;
    let mode = match phi.mode(-1) {
        Some(m) => m,
        None => {
            zero_mode = Array2::<Complex64>::zeros((grid.q.len, grid.p.len));
            &zero_mode
        }
    };
    check_adequacy(&axis, None, params, &grid)?;
    // The window integral only restricts to the grid faithfully when the
    // amplitude itself dies off before the q edge; a clipped field would
    // silently lose window mass.  (Synthesized amplitudes satisfy this by
    // the margin enforced at synthesis time.)
    let row_norms: Vec<f64> = mode
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let max_row = row_norms.iter().cloned().fold(0.0, f64::max);
    if max_row > 0.0 {
        let lo = row_norms.iter().position(|&v| v > 1e-10 * max_row).unwrap();
        let hi = row_norms.iter().rposition(|&v| v > 1e-10 * max_row).unwrap();
        let margin = (grid.q.value(lo) - grid.q.min()).min(grid.q.max() - grid.q.value(hi));
        if margin < grid.q.step {
            return Err(ModelError::Coverage {
                reason: format!(
                    "amplitude support within {margin:.3} of the position edge; the \
                     windowed extraction integral would be clipped"
                ),
            });
        }
    }
    let n = axis.len;
    let rate = window_rate(params);
    let table = window_table(&axis, rate);
    let cp = extraction_constant(params);
    let partials: Vec<Array1<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            // Momentum sum for this q row, evaluated on the x lattice.
            let inner = phase_transform(mode.row(i), &grid.p, &axis, params.h, 1)
                .expect("conjugacy checked above");
            Array1::from_iter((0..n).map(|j| {
                let g = table[(i + n - 1 - j) as usize];
                inner[j] * g
            }))
        })
        .collect();
    let mut values = Array1::<Complex64>::zeros(n);
    for partial in partials {
        for (v, w) in values.iter_mut().zip(partial.iter()) {
            *v += w;
        }
    }
    let scale = cp * grid.q.step;
    values.mapv_inplace(|v| v * scale);
    WaveFunction::new(axis, values)
}

/// The averaging projector: extract then synthesize.  Idempotent on any
/// extended amplitude with a k = -1 sector.
pub fn averaging_projector(
    phi: &ExtendedAmplitude,
    params: &ModelParams,
) -> Result<AveragedAmplitude> {
    let psi = extract(phi, params, &PositionGrid::single(phi.grid().q))?;
    synthesize(&psi, params, phi.grid())
}
