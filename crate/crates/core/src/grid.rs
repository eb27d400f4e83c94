//! Uniform grids for position and phase space.
//!
//! Phase-space work relies on conjugate axis pairs: a momentum axis with
//! `dp = h / (len * dq)` and symmetric centering.  On such a pair the
//! discrete sum `sum_p dp exp(j 2 pi p (x - x') / h)` is an exact lattice
//! delta, which is what makes the round-trip and quadratic-form identities
//! hold to machine precision instead of quadrature accuracy.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::ModelParams;

/// One uniform axis: samples `start + i * step` for `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len < 8 {
            return Err(ModelError::Grid {
                reason: format!("axis needs at least 8 points, got {len}"),
            });
        }
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(ModelError::Grid {
                reason: format!("axis needs finite start and positive step, got start {start}, step {step}"),
            });
        }
        Ok(Self { start, step, len })
    }

    /// Symmetric axis on [-half_width, half_width) with `len` points.
    pub fn centered(half_width: f64, len: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(ModelError::Grid {
                reason: format!("half width must be positive, got {half_width}"),
            });
        }
        let step = 2.0 * half_width / len as f64;
        Self::new(-half_width, step, len)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> Array1<f64> {
        Array1::from_iter((0..self.len).map(|i| self.value(i)))
    }

    pub fn min(&self) -> f64 {
        self.start
    }

    pub fn max(&self) -> f64 {
        self.value(self.len - 1)
    }

    /// Full span `len * step` (the period of the implied lattice).
    pub fn span(&self) -> f64 {
        self.len as f64 * self.step
    }

    /// The conjugate axis under the oscillatory kernel exp(j 2 pi t s / h):
    /// same point count, step `h / (len * step)`, centered on zero.
    pub fn conjugate(&self, h: f64) -> Result<Axis> {
        if self.len % 2 != 0 {
            return Err(ModelError::Grid {
                reason: format!("conjugate axis needs an even point count, got {}", self.len),
            });
        }
        if !(h > 0.0) {
            return Err(ModelError::Grid { reason: format!("action scale must be positive, got {h}") });
        }
        let step = h / (self.len as f64 * self.step);
        Axis::new(-(self.len as f64 / 2.0) * step, step, self.len)
    }

    pub fn is_conjugate_of(&self, other: &Axis, h: f64) -> bool {
        if self.len != other.len || self.len % 2 != 0 {
            return false;
        }
        let prod = self.step * other.step * self.len as f64;
        let centered = (self.start + (self.len as f64 / 2.0) * self.step).abs()
            <= 1e-9 * self.step.abs() * self.len as f64;
        centered && (prod - h).abs() <= 1e-9 * h
    }

    pub fn approx_eq(&self, other: &Axis) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-9 * self.step.abs().max(1e-300)
            && (self.step - other.step).abs() <= 1e-9 * self.step.abs()
    }
}

/// Product of uniform axes in configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub axes: Vec<Axis>,
}

impl PositionGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(ModelError::Grid { reason: "position grid needs at least one axis".into() });
        }
        Ok(Self { axes })
    }

    pub fn single(axis: Axis) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// The unique axis of a one-dimensional grid.
    pub fn only_axis(&self) -> Result<&Axis> {
        if self.axes.len() != 1 {
            return Err(ModelError::Grid {
                reason: format!("operation supports one axis, grid has {}", self.axes.len()),
            });
        }
        Ok(&self.axes[0])
    }

    pub fn approx_eq(&self, other: &PositionGrid) -> bool {
        self.axes.len() == other.axes.len()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| a.approx_eq(b))
    }
}

/// A (q, p) grid: position axis times momentum axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q: Axis,
    pub p: Axis,
}

impl PhaseGrid {
    /// Momentum axis conjugate to the given position axis.  This is the
    /// blessed constructor: every transform in the toolkit requires it.
    pub fn conjugate(q: Axis, h: f64) -> Result<Self> {
        let p = q.conjugate(h)?;
        Ok(Self { q, p })
    }

    /// Arbitrary axis pair; transforms will reject non-conjugate pairs.
    pub fn explicit(q: Axis, p: Axis) -> Self {
        Self { q, p }
    }

    pub fn is_conjugate(&self, h: f64) -> bool {
        self.p.is_conjugate_of(&self.q, h)
    }

    pub fn require_conjugate(&self, h: f64) -> Result<()> {
        if !self.is_conjugate(h) {
            return Err(ModelError::Grid {
                reason: format!(
                    "momentum axis is not conjugate to the position axis for h = {h} \
                     (need dp = h/(len*dq) and symmetric centering)"
                ),
            });
        }
        Ok(())
    }

    pub fn cell_area(&self) -> f64 {
        self.q.step * self.p.step
    }

    pub fn approx_eq(&self, other: &PhaseGrid) -> bool {
        self.q.approx_eq(&other.q) && self.p.approx_eq(&other.p)
    }

    /// The momentum range must cover at least 6 standard deviations of the
    /// model's momentum Gaussian, width sqrt(h b / (4 pi a)).
    pub fn check_momentum_coverage(&self, params: &ModelParams) -> Result<()> {
        params.require_1d()?;
        let sigma_p = params.sigma_p_sq(0).sqrt();
        let half_range = self.p.max().abs().min(self.p.min().abs());
        if half_range < 6.0 * sigma_p {
            return Err(ModelError::Coverage {
                reason: format!(
                    "momentum range +-{half_range:.4e} covers less than 6 sigma_p = {:.4e}",
                    6.0 * sigma_p
                ),
            });
        }
        Ok(())
    }
}
