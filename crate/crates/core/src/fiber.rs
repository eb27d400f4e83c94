//! Amplitudes on extended phase space and the phase-space translation group.
//!
//! An extended amplitude lives on (q, p) times a circle fiber of
//! circumference h, stored as a truncated Fourier series in the fiber
//! coordinate: mode k carries the equivariance factor exp(j 2 pi k t / h).
//! Real amplitudes satisfy mode(-k) = conj(mode(k)).

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::fourier::shift_periodic;
use crate::grid::PhaseGrid;

/// Fiber-mode decomposition of an amplitude on extended phase space.
#[derive(Debug, Clone)]
pub struct ExtendedAmplitude {
    grid: PhaseGrid,
    h: f64,
    k_trunc: usize,
    modes: BTreeMap<i32, Array2<Complex64>>,
}

/// Default Fourier truncation order of the fiber.
pub const DEFAULT_K_TRUNC: usize = 3;

impl ExtendedAmplitude {
    pub fn new(grid: PhaseGrid, h: f64, k_trunc: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "h".into(),
                reason: format!("fiber circumference must be positive, got {h}"),
            });
        }
        Ok(Self { grid, h, k_trunc, modes: BTreeMap::new() })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k_trunc(&self) -> usize {
        self.k_trunc
    }

    /// Re-wraps the amplitude with a different truncation order, keeping the
    /// stored modes (which must all fit under the new order).
    pub fn with_k_trunc(mut self, k_trunc: usize) -> Result<Self> {
        if let Some(k) = self.modes.keys().find(|k| k.unsigned_abs() as usize > k_trunc) {
            return Err(ModelError::InvalidParameter {
                name: "k_trunc".into(),
                reason: format!("stored mode k = {k} exceeds new truncation {k_trunc}"),
            });
        }
        self.k_trunc = k_trunc;
        Ok(self)
    }

    fn field_shape(&self) -> (usize, usize) {
        (self.grid.q.len, self.grid.p.len)
    }

    /// Stores mode k.  Field layout: rows index q, columns index p.
    pub fn set_mode(&mut self, k: i32, field: Array2<Complex64>) -> Result<()> {
        if k.unsigned_abs() as usize > self.k_trunc {
            return Err(ModelError::InvalidParameter {
                name: "k".into(),
                reason: format!("|k| = {} exceeds truncation {}", k.unsigned_abs(), self.k_trunc),
            });
        }
        let want = self.field_shape();
        if field.dim() != want {
            return Err(ModelError::GridMismatch {
                context: format!("mode field has shape {:?}, grid needs {:?}", field.dim(), want),
            });
        }
        self.modes.insert(k, field);
        Ok(())
    }

    /// Stores mode k together with mode -k = conj(mode k), the pairing that
    /// represents a real amplitude.
    pub fn set_conjugate_pair(&mut self, k: i32, field: Array2<Complex64>) -> Result<()> {
        let conj = field.mapv(|v| v.conj());
        self.set_mode(k, field)?;
        self.set_mode(-k, conj)
    }

    pub fn mode(&self, k: i32) -> Option<&Array2<Complex64>> {
        self.modes.get(&k)
    }

    /// Mode k or a `MissingMode` error; a stored all-zero field is present.
    pub fn require_mode(&self, k: i32) -> Result<&Array2<Complex64>> {
        self.modes.get(&k).ok_or(ModelError::MissingMode { k })
    }

    pub fn mode_indices(&self) -> impl Iterator<Item = i32> + '_ {
        self.modes.keys().copied()
    }

    /// L2 norm of one mode over (q, p); missing modes count as zero.
    pub fn mode_norm(&self, k: i32) -> f64 {
        match self.modes.get(&k) {
            None => 0.0,
            Some(f) => {
                (f.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()).sqrt()
            }
        }
    }

    /// Squared norm on extended phase space: the fiber integral contributes
    /// a factor h per mode, so |phi|^2 = h * sum_k |phi_k|^2_{L2(q,p)}.
    pub fn norm_sq(&self) -> f64 {
        self.h
            * self
                .modes
                .values()
                .map(|f| f.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area())
                .sum::<f64>()
    }

    /// Inner product on extended phase space, antilinear in `other`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let mut acc = Complex64::ZERO;
        for (k, f) in &self.modes {
            if let Some(g) = other.modes.get(k) {
                let mut dot = Complex64::ZERO;
                for (a, b) in f.iter().zip(g.iter()) {
                    dot += a * b.conj();
                }
                acc += dot * self.grid.cell_area();
            }
        }
        Ok(acc * self.h)
    }

    /// self += factor * other, mode by mode (missing modes are created).
    pub fn add_scaled(&mut self, other: &Self, factor: Complex64) -> Result<()> {
        self.check_compatible(other)?;
        for (k, g) in &other.modes {
            match self.modes.get_mut(k) {
                Some(f) => {
                    for (a, b) in f.iter_mut().zip(g.iter()) {
                        *a += factor * b;
                    }
                }
                None => {
                    if k.unsigned_abs() as usize > self.k_trunc {
                        return Err(ModelError::InvalidParameter {
                            name: "k".into(),
                            reason: format!(
                                "mode k = {k} from the other amplitude exceeds truncation {}",
                                self.k_trunc
                            ),
                        });
                    }
                    self.modes.insert(*k, g.mapv(|v| factor * v));
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for f in out.modes.values_mut() {
            f.mapv_inplace(|v| factor * v);
        }
        out
    }

    /// Whether the stored modes represent a real amplitude:
    /// mode(-k) = conj(mode(k)) within `tol` relative, missing modes read
    /// as zero.
    pub fn is_real_representation(&self, tol: f64) -> bool {
        let keys: Vec<i32> = self.modes.keys().copied().collect();
        for k in keys {
            if k < 0 {
                continue;
            }
            let zero = Array2::zeros(self.field_shape());
            let plus = self.modes.get(&k).unwrap_or(&zero);
            let minus = self.modes.get(&-k).unwrap_or(&zero);
            let mut diff = 0.0;
            let mut scale = 0.0;
            for (a, b) in plus.iter().zip(minus.iter()) {
                diff += (a.conj() - b).norm_sqr();
                scale += a.norm_sqr();
            }
            if diff.sqrt() > tol * scale.sqrt().max(1e-300) && diff.sqrt() > tol {
                return false;
            }
        }
        true
    }

    /// Relative L2 norm of the fiber-mean mode (k = 0); zero when absent.
    pub fn mean_mode_relative_norm(&self) -> f64 {
        let total = self.norm_sq().sqrt();
        if total == 0.0 {
            return 0.0;
        }
        self.mode_norm(0) * self.h.sqrt() / total
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(ModelError::GridMismatch {
                context: "extended amplitudes live on different phase grids".into(),
            });
        }
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(ModelError::GridMismatch {
                context: format!("fiber circumferences differ: {} vs {}", self.h, other.h),
            });
        }
        Ok(())
    }

    /// Relative L2 distance between two amplitudes (missing modes are zero),
    /// normalized by the norm of `self`.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let mut diff = self.clone();
        diff.add_scaled(other, Complex64::new(-1.0, 0.0))?;
        let base = self.norm_sq().sqrt();
        if base == 0.0 {
            return Ok(diff.norm_sq().sqrt());
        }
        Ok(diff.norm_sq().sqrt() / base)
    }
}

/// One-parameter phase-space translation: position shift rate x, momentum
/// shift rate y, duration t, energy constant c.  The generator is
/// H = x p - y q + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylElement {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub c: f64,
}

impl WeylElement {
    pub fn new(x: f64, y: f64, t: f64, c: f64) -> Self {
        Self { x, y, t, c }
    }

    pub fn identity() -> Self {
        Self { x: 0.0, y: 0.0, t: 0.0, c: 0.0 }
    }

    /// Flowing for t1 then t2 along the same (x, y, c) adds the durations.
    pub fn compose_duration(&self, other: &WeylElement) -> Result<WeylElement> {
        if self.x != other.x || self.y != other.y || self.c != other.c {
            return Err(ModelError::InvalidParameter {
                name: "weyl".into(),
                reason: "durations add only for elements sharing (x, y, c)".into(),
            });
        }
        Ok(WeylElement { t: self.t + other.t, ..*self })
    }
}

/// Translation action on an extended amplitude:
///
///   mode_k(q, p) -> mode_k(q + t x, p + t y) * exp(j 2 pi k t (c - y q) / h)
///
/// with the phase evaluated at the output point q.  Shifts use periodic
/// spectral interpolation, so the L2 norm of every mode is preserved and the
/// shift must stay well inside the grid (a quarter of the span per axis).
pub fn apply_weyl(w: &WeylElement, phi: &ExtendedAmplitude) -> Result<ExtendedAmplitude> {
    let grid = phi.grid().clone();
    let dq_shift = w.t * w.x;
    let dp_shift = w.t * w.y;
    let q_margin = grid.q.span() / 4.0;
    let p_margin = grid.p.span() / 4.0;
    if dq_shift.abs() > q_margin {
        return Err(ModelError::OutOfDomain {
            axis: "q".into(),
            shift: dq_shift,
            margin: q_margin,
        });
    }
    if dp_shift.abs() > p_margin {
        return Err(ModelError::OutOfDomain {
            axis: "p".into(),
            shift: dp_shift,
            margin: p_margin,
        });
    }
    let h = phi.h();
    let mut out = ExtendedAmplitude::new(grid.clone(), h, phi.k_trunc())?;
    let two_pi = 2.0 * std::f64::consts::PI;
    for k in phi.mode_indices() {
        let mut field = phi.mode(k).expect("listed mode").clone();
        // Rows index q, columns index p.
        shift_periodic(&mut field, 0, &grid.q, dq_shift);
        shift_periodic(&mut field, 1, &grid.p, dp_shift);
        let kf = f64::from(k);
        for (i, mut row) in field.rows_mut().into_iter().enumerate() {
            let q = grid.q.value(i);
            let phase =
                Complex64::from_polar(1.0, two_pi * kf * w.t * (w.c - w.y * q) / h);
            for v in row.iter_mut() {
                *v *= phase;
            }
        }
        out.set_mode(k, field)?;
    }
    Ok(out)
}

/// An amplitude sampled at explicit fiber points t in [0, h).
#[derive(Debug, Clone)]
pub struct FiberSamples {
    pub grid: PhaseGrid,
    pub h: f64,
    pub times: Vec<f64>,
    pub fields: Vec<Array2<Complex64>>,
}

impl FiberSamples {
    fn check_uniform(&self) -> Result<f64> {
        let m = self.times.len();
        if m == 0 || m != self.fields.len() {
            return Err(ModelError::NonuniformFiber {
                reason: format!("{m} sample times for {} fields", self.fields.len()),
            });
        }
        let dt = self.h / m as f64;
        for (j, &t) in self.times.iter().enumerate() {
            if (t - j as f64 * dt).abs() > 1e-9 * self.h {
                return Err(ModelError::NonuniformFiber {
                    reason: format!(
                        "sample {j} at t = {t:.6e}, expected uniform spacing h/{m} = {dt:.6e}"
                    ),
                });
            }
        }
        Ok(dt)
    }
}

/// Fourier coefficient of one fiber mode from uniform samples:
///
///   mode_k = (1/h) int_0^h phi(t) exp(-j 2 pi k t / h) dt
///          ~ (1/M) sum_j phi(t_j) exp(-j 2 pi k t_j / h).
///
/// Alias-free for trigonometric content of degree < M - |k|; the sampling
/// precondition M >= 4 |k| keeps the default truncation safe.
pub fn fiber_project(samples: &FiberSamples, k: i32) -> Result<Array2<Complex64>> {
    let _dt = samples.check_uniform()?;
    let m = samples.times.len();
    if m < 4 * k.unsigned_abs() as usize {
        return Err(ModelError::NonuniformFiber {
            reason: format!("{m} fiber samples cannot resolve mode k = {k} (need >= {})", 4 * k.unsigned_abs()),
        });
    }
    let shape = samples.fields[0].dim();
    let mut out = Array2::<Complex64>::zeros(shape);
    let two_pi = 2.0 * std::f64::consts::PI;
    for (t, field) in samples.times.iter().zip(&samples.fields) {
        if field.dim() != shape {
            return Err(ModelError::GridMismatch {
                context: "fiber samples have inconsistent field shapes".into(),
            });
        }
        let w = Complex64::from_polar(1.0, -two_pi * f64::from(k) * t / samples.h);
        for (o, v) in out.iter_mut().zip(field.iter()) {
            *o += w * v;
        }
    }
    let scale = 1.0 / m as f64;
    out.mapv_inplace(|v| v * scale);
    Ok(out)
}

/// Evaluates the truncated fiber series at the given fiber times:
/// phi(t) = sum_k mode_k exp(j 2 pi k t / h).
pub fn fiber_resynthesize(phi: &ExtendedAmplitude, times: &[f64]) -> Vec<Array2<Complex64>> {
    let shape = (phi.grid().q.len, phi.grid().p.len);
    let two_pi = 2.0 * std::f64::consts::PI;
    times
        .iter()
        .map(|&t| {
            let mut field = Array2::<Complex64>::zeros(shape);
            for k in phi.mode_indices() {
                let w = Complex64::from_polar(1.0, two_pi * f64::from(k) * t / phi.h());
                for (o, v) in field.iter_mut().zip(phi.mode(k).expect("listed mode")) {
                    *o += w * v;
                }
            }
            field
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn test_grid(n: usize) -> PhaseGrid {
        PhaseGrid::conjugate(Axis::centered(8.0, n).unwrap(), 1.0).unwrap()
    }

    fn gaussian_field(grid: &PhaseGrid) -> Array2<Complex64> {
        Array2::from_shape_fn((grid.q.len, grid.p.len), |(i, j)| {
            let q = grid.q.value(i);
            let p = grid.p.value(j);
            Complex64::new((-q * q - p * p).exp(), 0.3 * (-q * q - p * p).exp())
        })
    }

    #[test]
    fn identity_element_returns_input() {
        let grid = test_grid(32);
        let mut phi = ExtendedAmplitude::new(grid.clone(), 1.0, 1).unwrap();
        phi.set_conjugate_pair(1, gaussian_field(&grid)).unwrap();
        let out = apply_weyl(&WeylElement::identity(), &phi).unwrap();
        assert!(phi.relative_distance(&out).unwrap() < 1e-14);
    }

    #[test]
    fn pure_position_shift_translates_without_phase() {
        let grid = test_grid(64);
        let mut phi = ExtendedAmplitude::new(grid.clone(), 1.0, 1).unwrap();
        phi.set_mode(1, gaussian_field(&grid)).unwrap();
        let w = WeylElement::new(0.5, 0.0, 1.0, 0.0);
        let out = apply_weyl(&w, &phi).unwrap();
        // Compare against the band-limited translate along q.
        let mut expect = gaussian_field(&grid);
        shift_periodic(&mut expect, 0, &grid.q, 0.5);
        let got = out.mode(1).unwrap();
        let err: f64 = got
            .iter()
            .zip(expect.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "translation mismatch {err}");
    }

    #[test]
    fn weyl_preserves_mode_norms_and_reality() {
        let grid = test_grid(64);
        let mut phi = ExtendedAmplitude::new(grid.clone(), 1.0, 2).unwrap();
        phi.set_conjugate_pair(1, gaussian_field(&grid)).unwrap();
        phi.set_conjugate_pair(2, gaussian_field(&grid).mapv(|v| 0.3 * v)).unwrap();
        assert!(phi.is_real_representation(1e-12));
        let w = WeylElement::new(0.7, -0.4, 1.3, 0.9);
        let out = apply_weyl(&w, &phi).unwrap();
        for k in [-2, -1, 1, 2] {
            let rel = (out.mode_norm(k) - phi.mode_norm(k)).abs() / phi.mode_norm(k);
            assert!(rel < 1e-6, "mode {k} norm drifted by {rel}");
        }
        assert!(out.is_real_representation(1e-10));
    }

    #[test]
    fn order_of_shifts_differs_by_constant_phase() {
        // q-then-p versus p-then-q: the two results differ by a constant
        // phase, the group cocycle (evaluated here for k = 1, t = 1).
        let grid = test_grid(64);
        let mut phi = ExtendedAmplitude::new(grid.clone(), 1.0, 1).unwrap();
        phi.set_mode(1, gaussian_field(&grid)).unwrap();
        let (x, y) = (0.375, 0.25);
        let wq = WeylElement::new(x, 0.0, 1.0, 0.0);
        let wp = WeylElement::new(0.0, y, 1.0, 0.0);
        let qp = apply_weyl(&wq, &apply_weyl(&wp, &phi).unwrap()).unwrap();
        let pq = apply_weyl(&wp, &apply_weyl(&wq, &phi).unwrap()).unwrap();
        let a = qp.mode(1).unwrap();
        let b = pq.mode(1).unwrap();
        let mut ratios = Vec::new();
        for (va, vb) in a.iter().zip(b.iter()) {
            if va.norm() > 1e-6 {
                ratios.push(vb / va);
            }
        }
        assert!(ratios.len() > 100);
        let first = ratios[0];
        assert!((first.norm() - 1.0).abs() < 1e-8);
        for r in &ratios {
            assert!((r - first).norm() < 1e-8, "cocycle is not constant");
        }
        // Direct formula for the constant: pq/qp = exp(+j 2 pi k x y / h).
        let expect = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x * y / 1.0);
        assert!((first - expect).norm() < 1e-8, "got {first}, expected {expect}");
    }

    #[test]
    fn shift_beyond_margin_is_rejected() {
        let grid = test_grid(32);
        let mut phi = ExtendedAmplitude::new(grid.clone(), 1.0, 1).unwrap();
        phi.set_mode(1, gaussian_field(&grid)).unwrap();
        let w = WeylElement::new(5.0, 0.0, 1.0, 0.0);
        match apply_weyl(&w, &phi) {
            Err(ModelError::OutOfDomain { axis, .. }) => assert_eq!(axis, "q"),
            other => panic!("expected out-of-domain on q, got {other:?}"),
        }
        let w = WeylElement::new(0.0, 3.0, 1.0, 0.0);
        match apply_weyl(&w, &phi) {
            Err(ModelError::OutOfDomain { axis, .. }) => assert_eq!(axis, "p"),
            other => panic!("expected out-of-domain on p, got {other:?}"),
        }
    }

    #[test]
    fn fiber_projection_recovers_cosine_mode() {
        let grid = test_grid(16);
        let g = gaussian_field(&grid);
        let h = 1.0;
        let m = 16;
        let times: Vec<f64> = (0..m).map(|j| j as f64 * h / m as f64).collect();
        let fields: Vec<Array2<Complex64>> = times
            .iter()
            .map(|&t| g.mapv(|v| v * (2.0 * std::f64::consts::PI * t / h).cos()))
            .collect();
        let samples = FiberSamples { grid: grid.clone(), h, times, fields };
        let m1 = fiber_project(&samples, 1).unwrap();
        let m0 = fiber_project(&samples, 0).unwrap();
        for (a, b) in m1.iter().zip(g.iter()) {
            assert!((a - 0.5 * b).norm() < 1e-12);
        }
        for a in m0.iter() {
            assert!(a.norm() < 1e-12);
        }
    }

    #[test]
    fn constant_fiber_field_is_pure_mean() {
        let grid = test_grid(16);
        let g = gaussian_field(&grid);
        let times: Vec<f64> = (0..8).map(|j| j as f64 / 8.0).collect();
        let fields = vec![g.clone(); 8];
        let samples = FiberSamples { grid, h: 1.0, times, fields };
        let m0 = fiber_project(&samples, 0).unwrap();
        let m1 = fiber_project(&samples, 1).unwrap();
        for (a, b) in m0.iter().zip(g.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
        for a in m1.iter() {
            assert!(a.norm() < 1e-13);
        }
    }

    #[test]
    fn nonuniform_sampling_is_rejected() {
        let grid = test_grid(16);
        let g = gaussian_field(&grid);
        let samples = FiberSamples {
            grid,
            h: 1.0,
            times: vec![0.0, 0.3, 0.5, 0.75],
            fields: vec![g.clone(), g.clone(), g.clone(), g],
        };
        assert!(matches!(
            fiber_project(&samples, 1),
            Err(ModelError::NonuniformFiber { .. })
        ));
    }

    #[test]
    fn projection_resynthesis_roundtrip() {
        // Trigonometric polynomial of degree 3 with 16 uniform samples:
        // projection then resynthesis reproduces the samples.
        let grid = test_grid(16);
        let g = gaussian_field(&grid);
        let h = 1.0;
        let m = 16;
        let times: Vec<f64> = (0..m).map(|j| j as f64 * h / m as f64).collect();
        let coeff = [(0, 0.0), (1, 0.8), (-1, 0.8), (2, -0.35), (3, 0.1), (-3, 0.21)];
        let fields: Vec<Array2<Complex64>> = times
            .iter()
            .map(|&t| {
                let mut f = Array2::<Complex64>::zeros(g.dim());
                for &(k, c) in &coeff {
                    let w = Complex64::from_polar(
                        c,
                        2.0 * std::f64::consts::PI * f64::from(k as i32) * t / h,
                    );
                    for (o, v) in f.iter_mut().zip(g.iter()) {
                        *o += w * v;
                    }
                }
                f
            })
            .collect();
        let samples = FiberSamples { grid: grid.clone(), h, times: times.clone(), fields };
        let mut phi = ExtendedAmplitude::new(grid, h, 3).unwrap();
        for k in -3..=3 {
            phi.set_mode(k, fiber_project(&samples, k).unwrap()).unwrap();
        }
        let back = fiber_resynthesize(&phi, &times);
        for (f, orig) in back.iter().zip(&samples.fields) {
            let err: f64 = f
                .iter()
                .zip(orig.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale: f64 = orig.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-10 * scale, "roundtrip error {err}");
        }
    }
}
