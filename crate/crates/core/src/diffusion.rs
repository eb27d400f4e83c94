//! Diffusion of extended amplitudes: the averaging process driven by
//! Gaussian shift noise on phase space.
//!
//! Each fiber mode k evolves independently.  For k != 0 the mode equation
//! in the momentum representation,
//!
//!   d(phi_k)/d tau = a^2 d^2/dq^2 phi_k + b^2 (d/dp - j 2 pi k q / h)^2 phi_k,
//!
//! becomes, after the unitary change to the conjugate x variable,
//!
//!   d/d tau = a^2 d^2/dq^2 - (2 pi k b / h)^2 (q - x)^2,
//!
//! a damped harmonic problem whose eigenfunctions are Hermite functions of
//! width ell_k = sqrt(h a / (2 pi |k| b)) centered at q = x, with
//! eigenvalues lambda_{k,m} = -(2 pi |k| a b / h)(2 m + 1).  The k = 0
//! mode undergoes plain heat flow.  Two integrators are provided: a
//! spectral one that projects onto the Hermite eigenbasis and applies
//! exact exponential damping, and a finite-difference one (Strang split
//! potential / RK4 diffusion, Dirichlet edges) used as an independent
//! cross-check.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeSet;

use crate::error::{ModelError, Result};
use crate::fiber::ExtendedAmplitude;
use crate::fourier::{fft2_in_place, frequencies, phase_transform};
use crate::grid::{Axis, PhaseGrid};
use crate::hermite::hermite_functions;
use crate::params::ModelParams;
use crate::transform::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorKind {
    SpectralHermite,
    FiniteDifference,
}

/// Configuration of one diffusion run.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    pub params: ModelParams,
    pub integrator: IntegratorKind,
    pub delta_tau: f64,
    pub tau_end: f64,
    /// Hermite functions retained per mode by the spectral integrator.  The
    /// position lattice must resolve the highest one: evolution measures the
    /// orthonormality of the sampled basis and rejects a grid that cannot
    /// carry it, suggesting a finer length.
    pub hermite_count: usize,
    /// Reject initial data whose fiber-mean mode is nonzero; required when
    /// long-time conclusions are asserted.
    pub require_zero_mean: bool,
}

impl DiffusionSpec {
    pub fn new(
        params: ModelParams,
        integrator: IntegratorKind,
        delta_tau: f64,
        tau_end: f64,
    ) -> Result<Self> {
        if !(delta_tau > 0.0) || !delta_tau.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "delta_tau".into(),
                reason: "time step must be positive and finite".into(),
            });
        }
        if !(tau_end >= 0.0) || !tau_end.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "tau_end".into(),
                reason: "horizon must be nonnegative and finite".into(),
            });
        }
        Ok(Self {
            params,
            integrator,
            delta_tau,
            tau_end,
            hermite_count: 32,
            require_zero_mean: false,
        })
    }

    pub fn with_hermite_count(mut self, count: usize) -> Result<Self> {
        if !(4..=256).contains(&count) {
            return Err(ModelError::InvalidParameter {
                name: "hermite_count".into(),
                reason: "supported range is 4..=256".into(),
            });
        }
        self.hermite_count = count;
        Ok(self)
    }

    pub fn with_zero_mean_required(mut self) -> Self {
        self.require_zero_mean = true;
        self
    }

    /// Second moments (per unit axis) of the shift kernel over one step:
    /// (2 a^2 dtau, 2 b^2 dtau).
    pub fn kernel_moments(&self) -> (f64, f64) {
        (
            2.0 * self.params.a[0] * self.params.a[0] * self.delta_tau,
            2.0 * self.params.b[0] * self.params.b[0] * self.delta_tau,
        )
    }

    /// Largest stable finite-difference step for the given grid.
    pub fn stability_bound(&self, grid: &PhaseGrid) -> f64 {
        let dq2 = grid.q.step * grid.q.step;
        let dp2 = grid.p.step * grid.p.step;
        let coeff = self
            .params
            .a
            .iter()
            .chain(self.params.b.iter())
            .fold(0.0f64, |m, &v| m.max(v * v));
        dq2.min(dp2) / (4.0 * coeff)
    }
}

/// Evolved states at the achieved sample times (finite differences snap
/// requested times to step multiples).
#[derive(Debug, Clone)]
pub struct DiffusionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ExtendedAmplitude>,
}

impl DiffusionTrajectory {
    pub fn mode_norms(&self, k: i32) -> Vec<f64> {
        self.states.iter().map(|s| s.mode_norm(k)).collect()
    }
}

/// Least-squares exponential decay rate of one mode's norm.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub k: i32,
    pub rate: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Gaussian width of the mode-k eigenbasis.
pub fn mode_length_scale(params: &ModelParams, k: i32) -> f64 {
    let ka = k.unsigned_abs() as f64;
    (params.h * params.a[0] / (2.0 * std::f64::consts::PI * ka * params.b[0])).sqrt()
}

/// Decay eigenvalue of Hermite level m in fiber mode k:
/// -(2 pi |k| a b / h)(2 m + 1).
pub fn mode_eigenvalue(params: &ModelParams, k: i32, m: usize) -> Result<f64> {
    if k == 0 {
        return Err(ModelError::InvalidParameter {
            name: "k".into(),
            reason: "the fiber-mean mode has a continuous spectrum, not the Hermite ladder"
                .into(),
        });
    }
    let ka = k.unsigned_abs() as f64;
    Ok(-(2.0 * std::f64::consts::PI * ka * params.a[0] * params.b[0] / params.h)
        * (2.0 * m as f64 + 1.0))
}

/// The conjugate x axis of mode k: the position axis scaled by 1/|k|,
/// so that the lattice pairing with the momentum axis matches the mode's
/// effective circumference h/|k|.
pub fn mode_position_axis(q: &Axis, k: i32) -> Axis {
    let ka = k.unsigned_abs() as f64;
    Axis::new(q.start / ka, q.step / ka, q.len).expect("scaled axis stays valid")
}

fn mode_transform(
    field: &Array2<Complex64>,
    from: &Axis,
    to: &Axis,
    h: f64,
    k: i32,
    sign_for_forward: i8,
) -> Result<Array2<Complex64>> {
    let ka = k.unsigned_abs() as f64;
    let h_eff = h / ka;
    let scale = (ka / h).sqrt();
    let n = field.nrows();
    let rows: Result<Vec<Array1<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = phase_transform(field.row(i), from, to, h_eff, sign_for_forward)?;
            row.mapv_inplace(|v| v * scale);
            Ok(row)
        })
        .collect();
    let rows = rows?;
    let mut out = Array2::zeros((n, to.len));
    for (i, row) in rows.into_iter().enumerate() {
        out.row_mut(i).assign(&row);
    }
    Ok(out)
}

/// Momentum representation (q, p) to the conjugate representation (q, x)
/// of fiber mode k != 0.
pub fn mode_to_position_rep(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    h: f64,
    k: i32,
) -> Result<Array2<Complex64>> {
    let xaxis = mode_position_axis(&grid.q, k);
    let sign = if k > 0 { -1 } else { 1 };
    mode_transform(field, &grid.p, &xaxis, h, k, sign)
}

/// Inverse of `mode_to_position_rep`.
pub fn mode_to_momentum_rep(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    h: f64,
    k: i32,
) -> Result<Array2<Complex64>> {
    let xaxis = mode_position_axis(&grid.q, k);
    let sign = if k > 0 { 1 } else { -1 };
    mode_transform(field, &xaxis, &grid.p, h, k, sign)
}

/// Hermite eigenbasis values tabulated over the 1D lattice of the
/// argument (q_i - x_j) / ell, which for the scaled x axis depends only on
/// the integer t = i |k| - j - (len/2)(|k| - 1).
struct ModeBasis {
    /// rows m, columns t - t_min
    table: Array2<f64>,
    t_min: isize,
    k_abs: isize,
    half_shift: isize,
    inv_sqrt_ell: f64,
}

/// Largest tolerated deviation of the tabulated basis from discrete
/// orthonormality.  Matches the truncation budget: a defect below this
/// cannot move the monitored residuals above theirs.
const GRAM_TOL: f64 = 1e-8;

impl ModeBasis {
    fn build(params: &ModelParams, q: &Axis, k: i32, count: usize) -> Result<Self> {
        let ell = mode_length_scale(params, k);
        let ka = k.unsigned_abs() as isize;
        let n = q.len as isize;
        let half_shift = (n / 2) * (ka - 1);
        let t_min = -half_shift - (n - 1);
        let t_max = (n - 1) * ka - half_shift;
        let us = Array1::from_iter(
            (t_min..=t_max).map(|t| t as f64 * q.step / (ka as f64 * ell)),
        );
        let table = hermite_functions(count, us.view());
        let basis =
            Self { table, t_min, k_abs: ka, half_shift, inv_sqrt_ell: 1.0 / ell.sqrt() };
        // The highest retained function oscillates with wavenumber
        // sqrt(2 count - 1) per length scale.  Once the lattice stops
        // resolving it the Gram matrix of the sampled functions drifts off
        // the identity and projections bleed between levels, well before any
        // pointwise symptom appears.  Measure the drift on the center column
        // (the only one whose support is never clipped) and refuse to run on
        // a lattice that cannot carry the basis.
        let len = q.len;
        let offset = basis.column_offset(len / 2);
        let mut defect = 0.0f64;
        for m1 in 0..count {
            for m2 in m1..count {
                let mut acc = 0.0;
                for i in 0..len {
                    acc += basis.value(m1, i, offset) * basis.value(m2, i, offset);
                }
                let g = acc * q.step - if m1 == m2 { 1.0 } else { 0.0 };
                defect = defect.max(g.abs());
            }
        }
        if defect > GRAM_TOL {
            // The defect decays like exp(-gap^2) in the spectral gap
            // 2 pi / du - 2 sqrt(2 count - 1), with du the lattice step in
            // units of the mode length scale; a gap of five is clean.
            let band = 2.0 * (2.0 * count as f64 - 1.0).sqrt();
            let du_need = 2.0 * std::f64::consts::PI / (band + 5.0);
            let du = q.step / ell;
            let mut suggested = (len as f64 * du / du_need).ceil() as usize;
            suggested += suggested % 2;
            return Err(ModelError::Resolution {
                reason: format!(
                    "sampled Hermite basis loses orthonormality (Gram defect \
                     {defect:.2e}) on this lattice: step {:.4} against length \
                     scale {ell:.4} at mode {k} with {count} levels; refine \
                     the position grid or lower hermite_count",
                    q.step
                ),
                suggested_len: suggested,
            });
        }
        Ok(basis)
    }

    #[inline]
    fn column_offset(&self, j: usize) -> isize {
        -(j as isize) - self.half_shift - self.t_min
    }

    /// e_m(q_i; x_j) for precomputed column offset.
    #[inline]
    fn value(&self, m: usize, i: usize, offset: isize) -> f64 {
        let t = i as isize * self.k_abs + offset;
        self.table[(m, t as usize)] * self.inv_sqrt_ell
    }
}

/// Spectral evolution of one k != 0 mode; returns the field at each time.
fn evolve_mode_spectral(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    params: &ModelParams,
    k: i32,
    count: usize,
    times: &[f64],
) -> Result<Vec<Array2<Complex64>>> {
    let n = grid.q.len;
    let checked = mode_to_position_rep(field, grid, params.h, k)?;
    let basis = ModeBasis::build(params, &grid.q, k, count)?;
    let lambda: Vec<f64> = (0..count)
        .map(|m| mode_eigenvalue(params, k, m).expect("k != 0"))
        .collect();
    let dq = grid.q.step;
    // Per column: project, record truncation diagnostics, damp, resum.  The
    // truncation budget is enforced on the field as a whole afterwards:
    // columns near the domain edge clip the widest basis functions and would
    // trip any pointwise test, yet their total weight is negligible.
    struct ColumnEvolution {
        per_time: Vec<Array1<Complex64>>,
        top_sq: f64,
        resid_sq: f64,
        norm_sq: f64,
    }
    let columns: Result<Vec<ColumnEvolution>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let offset = basis.column_offset(j);
            let mut coeff = vec![Complex64::ZERO; count];
            for (m, c) in coeff.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for i in 0..n {
                    acc += checked[(i, j)] * basis.value(m, i, offset);
                }
                *c = acc * dq;
            }
            let norm_sq = (0..n).map(|i| checked[(i, j)].norm_sqr()).sum::<f64>() * dq;
            // Energy the expansion fails to reproduce, and the weight of the
            // highest retained coefficient.
            let top_sq = coeff[count - 1].norm_sqr();
            let mut resid_sq = 0.0;
            for i in 0..n {
                let mut rec = Complex64::ZERO;
                for (m, c) in coeff.iter().enumerate() {
                    rec += *c * basis.value(m, i, offset);
                }
                resid_sq += (checked[(i, j)] - rec).norm_sqr();
            }
            resid_sq *= dq;
            let per_time: Vec<Array1<Complex64>> = times
                .iter()
                .map(|&tau| {
                    let mut col = Array1::<Complex64>::zeros(n);
                    for (m, c) in coeff.iter().enumerate() {
                        let damped = *c * (lambda[m] * tau).exp();
                        if damped.norm() == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            col[i] += damped * basis.value(m, i, offset);
                        }
                    }
                    col
                })
                .collect();
            Ok(ColumnEvolution { per_time, top_sq, resid_sq, norm_sq })
        })
        .collect();
    let columns = columns?;
    let total = columns.iter().map(|c| c.norm_sq).sum::<f64>().sqrt();
    let top = columns.iter().map(|c| c.top_sq).sum::<f64>().sqrt();
    let resid = columns.iter().map(|c| c.resid_sq).sum::<f64>().sqrt();
    if top > 1e-8 * total {
        return Err(ModelError::Truncation {
            detail: format!(
                "Hermite coefficient {} carries {:.2e} of the field norm {:.2e}; \
                 raise hermite_count",
                count - 1,
                top,
                total
            ),
        });
    }
    if resid > 1e-8 * total {
        return Err(ModelError::Truncation {
            detail: format!(
                "the retained Hermite span misses {:.2e} of the field norm {:.2e}; \
                 raise hermite_count or enlarge the position domain",
                resid, total
            ),
        });
    }
    let mut out = Vec::with_capacity(times.len());
    for (ti, _) in times.iter().enumerate() {
        let mut xs = Array2::<Complex64>::zeros((n, n));
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                xs[(i, j)] = col.per_time[ti][i];
            }
        }
        out.push(mode_to_momentum_rep(&xs, grid, params.h, k)?);
    }
    Ok(out)
}

/// Heat flow of the fiber-mean mode: exact Fourier multiplier jumps.
fn evolve_mode_heat(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    params: &ModelParams,
    times: &[f64],
) -> Vec<Array2<Complex64>> {
    let (nq, np) = (grid.q.len, grid.p.len);
    let mut spec = field.clone();
    fft2_in_place(&mut spec, false);
    let fq = frequencies(nq, grid.q.step);
    let fp = frequencies(np, grid.p.step);
    let two_pi = 2.0 * std::f64::consts::PI;
    let (a2, b2) = (params.a[0] * params.a[0], params.b[0] * params.b[0]);
    times
        .iter()
        .map(|&tau| {
            let mut out = spec.clone();
            for i in 0..nq {
                for j in 0..np {
                    let rate = a2 * (two_pi * fq[i]).powi(2) + b2 * (two_pi * fp[j]).powi(2);
                    out[(i, j)] *= (-rate * tau).exp() / (nq * np) as f64;
                }
            }
            fft2_in_place(&mut out, true);
            out
        })
        .collect()
}

/// 5-point Laplacian with Dirichlet (zero) edges, scaled by `coeff`.
fn laplacian_into(src: &[Complex64], coeff_over_12dx2: f64, dst: &mut [Complex64]) {
    let n = src.len();
    let at = |i: isize| -> Complex64 {
        if i < 0 || i >= n as isize {
            Complex64::ZERO
        } else {
            src[i as usize]
        }
    };
    for i in 0..n {
        let ii = i as isize;
        let num = -at(ii - 2) + at(ii - 1) * 16.0 - src[i] * 30.0 + at(ii + 1) * 16.0
            - at(ii + 2);
        dst[i] = num * coeff_over_12dx2;
    }
}

fn rk4_step(y: &mut [Complex64], coeff_over_12dx2: f64, dt: f64) {
    let n = y.len();
    let mut k1 = vec![Complex64::ZERO; n];
    let mut k2 = vec![Complex64::ZERO; n];
    let mut k3 = vec![Complex64::ZERO; n];
    let mut k4 = vec![Complex64::ZERO; n];
    let mut tmp = vec![Complex64::ZERO; n];
    laplacian_into(y, coeff_over_12dx2, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (dt / 2.0);
    }
    laplacian_into(&tmp, coeff_over_12dx2, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (dt / 2.0);
    }
    laplacian_into(&tmp, coeff_over_12dx2, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * dt;
    }
    laplacian_into(&tmp, coeff_over_12dx2, &mut k4);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Finite-difference evolution of one k != 0 mode with snapshots at the
/// given step counts (ascending).
fn evolve_mode_fd(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    params: &ModelParams,
    k: i32,
    dtau: f64,
    step_targets: &[usize],
) -> Result<Vec<Array2<Complex64>>> {
    let n = grid.q.len;
    let checked = mode_to_position_rep(field, grid, params.h, k)?;
    let xaxis = mode_position_axis(&grid.q, k);
    let dq = grid.q.step;
    let coeff = params.a[0] * params.a[0] / (12.0 * dq * dq);
    let vrate = {
        let ka = k.unsigned_abs() as f64;
        (2.0 * std::f64::consts::PI * ka * params.b[0] / params.h).powi(2)
    };
    // Per x column: exact potential half steps around an RK4 diffusion
    // step (Strang splitting).
    let columns: Vec<Vec<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = xaxis.value(j);
            let half: Vec<f64> = (0..n)
                .map(|i| {
                    let d = grid.q.value(i) - x;
                    (-vrate * d * d * dtau / 2.0).exp()
                })
                .collect();
            let mut y: Vec<Complex64> = (0..n).map(|i| checked[(i, j)]).collect();
            let mut snaps = Vec::with_capacity(step_targets.len());
            let mut done = 0usize;
            for &target in step_targets {
                while done < target {
                    for (v, &hf) in y.iter_mut().zip(half.iter()) {
                        *v *= hf;
                    }
                    rk4_step(&mut y, coeff, dtau);
                    for (v, &hf) in y.iter_mut().zip(half.iter()) {
                        *v *= hf;
                    }
                    done += 1;
                }
                snaps.push(y.clone());
            }
            snaps
        })
        .collect();
    let mut out = Vec::with_capacity(step_targets.len());
    for ti in 0..step_targets.len() {
        let mut xs = Array2::<Complex64>::zeros((n, n));
        for (j, snaps) in columns.iter().enumerate() {
            for i in 0..n {
                xs[(i, j)] = snaps[ti][i];
            }
        }
        out.push(mode_to_momentum_rep(&xs, grid, params.h, k)?);
    }
    Ok(out)
}

/// Finite-difference heat flow of the fiber-mean mode (RK4 on both axes,
/// Dirichlet edges).
fn evolve_mode_heat_fd(
    field: &Array2<Complex64>,
    grid: &PhaseGrid,
    params: &ModelParams,
    dtau: f64,
    step_targets: &[usize],
) -> Vec<Array2<Complex64>> {
    let (nq, np) = (grid.q.len, grid.p.len);
    let ca = params.a[0] * params.a[0] / (12.0 * grid.q.step * grid.q.step);
    let cb = params.b[0] * params.b[0] / (12.0 * grid.p.step * grid.p.step);
    let lap2 = |f: &Array2<Complex64>| -> Array2<Complex64> {
        let mut out = Array2::<Complex64>::zeros((nq, np));
        let at = |i: isize, j: isize| -> Complex64 {
            if i < 0 || j < 0 || i >= nq as isize || j >= np as isize {
                Complex64::ZERO
            } else {
                f[(i as usize, j as usize)]
            }
        };
        for i in 0..nq {
            for j in 0..np {
                let (ii, jj) = (i as isize, j as isize);
                let along_q = -at(ii - 2, jj) + at(ii - 1, jj) * 16.0 - f[(i, j)] * 30.0
                    + at(ii + 1, jj) * 16.0
                    - at(ii + 2, jj);
                let along_p = -at(ii, jj - 2) + at(ii, jj - 1) * 16.0 - f[(i, j)] * 30.0
                    + at(ii, jj + 1) * 16.0
                    - at(ii, jj + 2);
                out[(i, j)] = along_q * ca + along_p * cb;
            }
        }
        out
    };
    let mut y = field.clone();
    let mut out = Vec::with_capacity(step_targets.len());
    let mut done = 0usize;
    for &target in step_targets {
        while done < target {
            let k1 = lap2(&y);
            let mut tmp = &y + &k1.mapv(|v| v * (dtau / 2.0));
            let k2 = lap2(&tmp);
            tmp = &y + &k2.mapv(|v| v * (dtau / 2.0));
            let k3 = lap2(&tmp);
            tmp = &y + &k3.mapv(|v| v * dtau);
            let k4 = lap2(&tmp);
            for i in 0..nq {
                for j in 0..np {
                    y[(i, j)] += (k1[(i, j)]
                        + (k2[(i, j)] + k3[(i, j)]) * 2.0
                        + k4[(i, j)])
                        * (dtau / 6.0);
                }
            }
            done += 1;
        }
        out.push(y.clone());
    }
    out
}

fn validate_times(times: &[f64], tau_end: f64) -> Result<()> {
    if times.is_empty() {
        return Err(ModelError::InvalidParameter {
            name: "times".into(),
            reason: "at least one sample time is required".into(),
        });
    }
    let mut prev = -1.0;
    for &t in times {
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "times".into(),
                reason: "sample times must be finite and nonnegative".into(),
            });
        }
        if t <= prev {
            return Err(ModelError::InvalidParameter {
                name: "times".into(),
                reason: "sample times must be strictly increasing".into(),
            });
        }
        if t > tau_end * (1.0 + 1e-12) + 1e-300 {
            return Err(ModelError::InvalidParameter {
                name: "times".into(),
                reason: format!("sample time {t} exceeds the horizon {tau_end}"),
            });
        }
        prev = t;
    }
    Ok(())
}

/// Evolves an extended amplitude under the diffusion semigroup, sampling
/// at the requested times.
pub fn evolve(
    phi0: &ExtendedAmplitude,
    spec: &DiffusionSpec,
    times: &[f64],
) -> Result<DiffusionTrajectory> {
    spec.params.require_1d()?;
    validate_times(times, spec.tau_end)?;
    if (phi0.h() - spec.params.h).abs() > 1e-12 * spec.params.h {
        return Err(ModelError::InvalidParameter {
            name: "h".into(),
            reason: "amplitude and parameters disagree on the fiber circumference".into(),
        });
    }
    phi0.grid().require_conjugate(spec.params.h)?;
    if spec.require_zero_mean {
        let mean = phi0.mean_mode_relative_norm();
        if mean > 1e-12 {
            return Err(ModelError::NonzeroMean { norm: mean });
        }
    }
    let grid = phi0.grid().clone();
    let modes: Vec<i32> = phi0.mode_indices().collect();
    match spec.integrator {
        IntegratorKind::SpectralHermite => {
            let mut per_mode = Vec::new();
            for &k in &modes {
                let field = phi0.mode(k).expect("listed mode exists");
                let slices = if k == 0 {
                    evolve_mode_heat(field, &grid, &spec.params, times)
                } else {
                    evolve_mode_spectral(
                        field,
                        &grid,
                        &spec.params,
                        k,
                        spec.hermite_count,
                        times,
                    )?
                };
                per_mode.push((k, slices));
            }
            assemble(phi0, &grid, spec, times.to_vec(), per_mode)
        }
        IntegratorKind::FiniteDifference => {
            let bound = spec.stability_bound(&grid);
            if spec.delta_tau > bound * (1.0 + 1e-12) {
                return Err(ModelError::Stability { step: spec.delta_tau, bound });
            }
            let step_targets: Vec<usize> = times
                .iter()
                .map(|&t| (t / spec.delta_tau).round() as usize)
                .collect();
            let achieved: Vec<f64> =
                step_targets.iter().map(|&s| s as f64 * spec.delta_tau).collect();
            let mut per_mode = Vec::new();
            for &k in &modes {
                let field = phi0.mode(k).expect("listed mode exists");
                let slices = if k == 0 {
                    evolve_mode_heat_fd(field, &grid, &spec.params, spec.delta_tau, &step_targets)
                } else {
                    evolve_mode_fd(
                        field,
                        &grid,
                        &spec.params,
                        k,
                        spec.delta_tau,
                        &step_targets,
                    )?
                };
                per_mode.push((k, slices));
            }
            assemble(phi0, &grid, spec, achieved, per_mode)
        }
    }
}

fn assemble(
    phi0: &ExtendedAmplitude,
    grid: &PhaseGrid,
    spec: &DiffusionSpec,
    times: Vec<f64>,
    per_mode: Vec<(i32, Vec<Array2<Complex64>>)>,
) -> Result<DiffusionTrajectory> {
    let mut states = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let mut state = ExtendedAmplitude::new(grid.clone(), spec.params.h, phi0.k_trunc())?;
        for (k, slices) in &per_mode {
            state.set_mode(*k, slices[ti].clone())?;
        }
        states.push(state);
    }
    Ok(DiffusionTrajectory { times, states })
}

/// Fits exponential decay rates per fiber mode from a trajectory's norms.
pub fn measure_decay(traj: &DiffusionTrajectory) -> Result<Vec<DecayFit>> {
    let mut ks: BTreeSet<i32> = BTreeSet::new();
    for s in &traj.states {
        ks.extend(s.mode_indices());
    }
    let mut fits = Vec::new();
    for &k in &ks {
        let pairs: Vec<(f64, f64)> = traj
            .times
            .iter()
            .zip(traj.mode_norms(k).iter())
            .filter(|(_, &n)| n > 1e-12)
            .map(|(&t, &n)| (t, n.ln()))
            .collect();
        if pairs.len() < 5 {
            continue;
        }
        let n = pairs.len() as f64;
        let tbar = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let ybar = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pairs.iter().map(|p| (p.0 - tbar) * (p.0 - tbar)).sum();
        let sxy: f64 = pairs.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
        if sxx == 0.0 {
            continue;
        }
        let slope = sxy / sxx;
        let intercept = ybar - slope * tbar;
        let ss: f64 = pairs
            .iter()
            .map(|p| {
                let r = p.1 - (intercept + slope * p.0);
                r * r
            })
            .sum();
        fits.push(DecayFit {
            k,
            rate: -slope,
            residual: (ss / n).sqrt(),
            samples: pairs.len(),
        });
    }
    if fits.is_empty() {
        return Err(ModelError::InsufficientSignal {
            reason: "no mode keeps at least 5 samples above 1e-12".into(),
        });
    }
    Ok(fits)
}

/// Projects the initial amplitude onto the surviving sector: the ground
/// Hermite level of the k = -1 mode.  Returns the wave function that the
/// renormalized long-time evolution converges to, together with the norm
/// decay factor exp(-tau_end sum_i 2 pi a_i b_i / h).
pub fn asymptotic_state(
    phi0: &ExtendedAmplitude,
    spec: &DiffusionSpec,
) -> Result<(WaveFunction, f64)> {
    spec.params.require_1d()?;
    if (phi0.h() - spec.params.h).abs() > 1e-12 * spec.params.h {
        return Err(ModelError::InvalidParameter {
            name: "h".into(),
            reason: "amplitude and parameters disagree on the fiber circumference".into(),
        });
    }
    phi0.grid().require_conjugate(spec.params.h)?;
    let mean = phi0.mean_mode_relative_norm();
    if mean > 1e-10 {
        return Err(ModelError::NonzeroMean { norm: mean });
    }
    if phi0.k_trunc() < 1 {
        return Err(ModelError::MissingMode { k: -1 });
    }
    let grid = phi0.grid().clone();
    let n = grid.q.len;
    let zero;
    let field = match phi0.mode(-1) {
        Some(f) => f,
        None => {
            zero = Array2::<Complex64>::zeros((n, n));
            &zero
        }
    };
    let checked = mode_to_position_rep(field, &grid, spec.params.h, -1)?;
    let basis = ModeBasis::build(&spec.params, &grid.q, -1, 1)?;
    let dq = grid.q.step;
    let sqrt2 = 2f64.sqrt();
    let values = Array1::from_iter((0..n).map(|j| {
        let offset = basis.column_offset(j);
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            acc += checked[(i, j)] * basis.value(0, i, offset);
        }
        acc * dq * sqrt2
    }));
    let xaxis = mode_position_axis(&grid.q, -1);
    let psi = WaveFunction::new(xaxis, values)?;
    let decay = (-spec.tau_end
        * spec
            .params
            .a
            .iter()
            .zip(spec.params.b.iter())
            .map(|(&a, &b)| 2.0 * std::f64::consts::PI * a * b / spec.params.h)
            .sum::<f64>())
    .exp();
    Ok((psi, decay))
}
