//! Observable operators built from classical phase-space symbols.
//!
//! Two independent construction routes are provided and cross-checked in
//! tests.  `kernel_by_quadrature` evaluates the defining double integral
//! over (q, p) by grid quadrature: a Gaussian position window pair around
//! the two kernel arguments times an oscillatory momentum factor.  On the
//! conjugate momentum lattice the oscillatory sum is exact (it collapses
//! to lattice deltas for polynomial symbols), so position-only observables
//! come out as exact multiplication operators.  `kernel_by_symbol` goes
//! through the symbol's Fourier representation: the (q, p) integrals are
//! carried out analytically, leaving the midpoint form
//!
//!   A(x, x') = (1/h) int s((x + x')/2, p) exp(+j 2 pi p (x - x') / h) dp,
//!
//! where s is the symbol smoothed by the Gaussian of variances
//! (h a / 4 pi b, h b / 4 pi a) in the exact order, or the raw symbol at
//! order 0 (the conventional operator).  Their difference for fixed f is
//! proportional to h, which is the asymptotic statement tested in the
//! acceptance suite.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::fourier::{fft_in_place, frequencies, upsample2};
use crate::grid::{PhaseGrid, PositionGrid};
use crate::params::ModelParams;
use crate::transform::WaveFunction;

/// Real polynomial in (q, p): a sum of coeff * q^alpha * p^beta terms.
#[derive(Debug, Clone)]
pub struct PhasePolynomial {
    terms: Vec<(f64, u32, u32)>,
}

impl PhasePolynomial {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(ModelError::InvalidParameter {
                name: "terms".into(),
                reason: "polynomial needs at least one term".into(),
            });
        }
        for &(c, alpha, beta) in &terms {
            if !c.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name: "terms".into(),
                    reason: "coefficients must be finite".into(),
                });
            }
            if alpha > 8 || beta > 8 {
                return Err(ModelError::InvalidParameter {
                    name: "terms".into(),
                    reason: "powers above 8 are not supported".into(),
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, u32, u32)] {
        &self.terms
    }

    pub fn evaluate(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, alpha, beta)| c * q.powi(alpha as i32) * p.powi(beta as i32))
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(_, a, b)| a + b).max().unwrap_or(0)
    }
}

/// A classical observable f(q, p).
#[derive(Debug, Clone)]
pub enum ObservableSymbol {
    /// Real polynomial in q and p.
    Polynomial(PhasePolynomial),
    /// Oscillator energy p^2 / 2m + m omega^2 q^2 / 2.
    Harmonic { mass: f64, omega: f64 },
    /// Attractive Coulomb potential -e^2 / r in three dimensions; only
    /// meaningful through the position-observable smoothing route.
    CoulombRadial { e_sq: f64 },
    /// Real samples on a conjugate phase grid.
    Sampled { grid: PhaseGrid, values: Array2<f64> },
}

impl ObservableSymbol {
    pub fn polynomial(terms: Vec<(f64, u32, u32)>) -> Result<Self> {
        Ok(Self::Polynomial(PhasePolynomial::new(terms)?))
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        if mass <= 0.0 || !mass.is_finite() || omega < 0.0 || !omega.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "harmonic".into(),
                reason: "need mass > 0 and omega >= 0".into(),
            });
        }
        Ok(Self::Harmonic { mass, omega })
    }

    pub fn coulomb(e_sq: f64) -> Result<Self> {
        if e_sq <= 0.0 || !e_sq.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "e_sq".into(),
                reason: "squared charge must be positive".into(),
            });
        }
        Ok(Self::CoulombRadial { e_sq })
    }

    pub fn sampled(grid: PhaseGrid, values: Array2<f64>) -> Result<Self> {
        if values.shape() != [grid.q.len, grid.p.len] {
            return Err(ModelError::GridMismatch {
                context: "sample array shape differs from the phase grid".into(),
            });
        }
        Ok(Self::Sampled { grid, values })
    }

    /// Polynomial view where one exists (harmonic symbols expand).
    fn as_polynomial(&self) -> Option<PhasePolynomial> {
        match self {
            Self::Polynomial(p) => Some(p.clone()),
            Self::Harmonic { mass, omega } => Some(
                PhasePolynomial::new(vec![
                    (0.5 / mass, 0, 2),
                    (0.5 * mass * omega * omega, 2, 0),
                ])
                .expect("fixed harmonic terms are valid"),
            ),
            _ => None,
        }
    }
}

/// Which term of the small-h expansion of the smoothed symbol to keep.
/// `Exact` uses the full Gaussian smoothing; `ZeroOrder` drops it,
/// reproducing the conventional quantum operator of the observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolOrder {
    ZeroOrder,
    Exact,
}

/// Closed differential form of a kernel when one exists:
/// (multiplier field) + coeff * d^2/dx^2 + constant shift.
#[derive(Debug, Clone)]
pub struct ClosedFormTag {
    pub multiplier: Array1<f64>,
    pub second_derivative_coeff: f64,
    pub constant_shift: f64,
}

/// Dense operator matrix with the grid quadrature weight folded in, so
/// `apply` is a plain matrix-vector product and Hermiticity is matrix
/// conjugate symmetry.
#[derive(Debug, Clone)]
pub struct OperatorKernel {
    grid: PositionGrid,
    matrix: Array2<Complex64>,
    closed_form: Option<ClosedFormTag>,
}

impl OperatorKernel {
    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn closed_form(&self) -> Option<&ClosedFormTag> {
        self.closed_form.as_ref()
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if !self.grid.approx_eq(psi.grid()) {
            return Err(ModelError::GridMismatch {
                context: "operator and state grids differ".into(),
            });
        }
        let out = self.matrix.dot(psi.values());
        WaveFunction::new(*psi.axis(), out)
    }

    /// <psi, A psi> with the complex pairing; real up to roundoff for
    /// Hermitian kernels.
    pub fn expectation(&self, psi: &WaveFunction) -> Result<Complex64> {
        let apsi = self.apply(psi)?;
        apsi.inner(psi)
    }

    /// Frobenius distance to the adjoint, relative to the matrix norm.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut diff = 0.0;
        let mut base = 0.0;
        let n = self.matrix.nrows();
        for i in 0..n {
            for j in 0..n {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                diff += d.norm_sqr();
                base += self.matrix[(i, j)].norm_sqr();
            }
        }
        if base == 0.0 {
            0.0
        } else {
            (diff / base).sqrt()
        }
    }

    /// Wraps an explicit dense matrix (quadrature weight already folded
    /// in, as everywhere else) with no closed-form tag.
    pub fn from_matrix(grid: PositionGrid, matrix: Array2<Complex64>) -> Result<Self> {
        let axis = grid.only_axis()?;
        if matrix.nrows() != axis.len || matrix.ncols() != axis.len {
            return Err(ModelError::GridMismatch {
                context: "matrix shape differs from the grid".into(),
            });
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ModelError::Divergence {
                reason: "matrix entries must be finite".into(),
            });
        }
        Ok(Self { grid, matrix, closed_form: None })
    }

    /// The same operator with its recorded constant shift subtracted, for
    /// comparisons against conventional spectra.  Requires a closed form.
    pub fn with_shift_removed(&self) -> Option<Self> {
        let tag = self.closed_form.as_ref()?;
        let shift = tag.constant_shift;
        let mut out = self.clone();
        let n = out.matrix.nrows();
        for i in 0..n {
            out.matrix[(i, i)] -= Complex64::new(shift, 0.0);
        }
        if let Some(t) = out.closed_form.as_mut() {
            t.constant_shift = 0.0;
        }
        Some(out)
    }
}

/// Multiplication operator from a real field on the grid.
pub fn diagonal_kernel(field: Array1<f64>, grid: &PositionGrid) -> Result<OperatorKernel> {
    let axis = grid.only_axis()?;
    if field.len() != axis.len {
        return Err(ModelError::GridMismatch {
            context: "multiplication field length differs from the grid".into(),
        });
    }
    let n = axis.len;
    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        matrix[(i, i)] = Complex64::new(field[i], 0.0);
    }
    Ok(OperatorKernel {
        grid: grid.clone(),
        matrix,
        closed_form: Some(ClosedFormTag {
            multiplier: field,
            second_derivative_coeff: 0.0,
            constant_shift: 0.0,
        }),
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn double_factorial(n: i64) -> f64 {
    if n <= 0 {
        return 1.0;
    }
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Gaussian-smoothed monomial: E[(m + Z)^power] with Z ~ N(0, sigma_sq).
fn smoothed_monomial(power: u32, m: f64, sigma_sq: f64) -> f64 {
    let mut acc = 0.0;
    let mut t = 0u32;
    while t <= power {
        acc += binomial(power, t)
            * double_factorial(t as i64 - 1)
            * sigma_sq.powi((t / 2) as i32)
            * m.powi((power - t) as i32);
        t += 2;
    }
    acc
}

/// Exponent rate of the kernel's Gaussian position window.
fn kernel_window_rate(params: &ModelParams) -> f64 {
    std::f64::consts::PI / params.h * (params.b[0] / params.a[0])
}

/// Overall kernel constant (2/h^3)^{n/2} prod (b_i/a_i)^{1/2}.
fn kernel_constant(params: &ModelParams) -> f64 {
    let mut c = (2.0 / params.h.powi(3)).powf(params.dim() as f64 / 2.0);
    for i in 0..params.dim() {
        c *= (params.b[i] / params.a[i]).sqrt();
    }
    c
}

/// Momentum oscillation factors for a stored index difference d in 0..n:
/// exp(+j 2 pi p_0 d dx / h), the non-FFT part of the momentum lattice sum.
fn momentum_twiddles(grid: &PhaseGrid, h: f64) -> Vec<Complex64> {
    let n = grid.p.len;
    (0..n)
        .map(|d| {
            let phase =
                2.0 * std::f64::consts::PI * grid.p.start * (d as f64 * grid.q.step) / h;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Builds the operator kernel by direct quadrature of the defining double
/// integral over the conjugate phase grid erected on `grid`'s axis.
/// Hermitian by construction for the real symbols supported here.
pub fn kernel_by_quadrature(
    f: &ObservableSymbol,
    params: &ModelParams,
    grid: &PositionGrid,
) -> Result<OperatorKernel> {
    params.require_1d()?;
    let axis = *grid.only_axis()?;
    let pgrid = match f {
        ObservableSymbol::CoulombRadial { .. } => {
            return Err(ModelError::UnsupportedSymbol {
                reason: "radial Coulomb potential is position-only; use position_observable"
                    .into(),
            })
        }
        ObservableSymbol::Sampled { grid: g, .. } => {
            if !g.q.approx_eq(&axis) {
                return Err(ModelError::GridMismatch {
                    context: "sampled symbol position axis differs from the operator grid"
                        .into(),
                });
            }
            g.require_conjugate(params.h)?;
            g.clone()
        }
        _ => PhaseGrid::conjugate(axis, params.h)?,
    };
    let n = axis.len;
    // Symbol samples on the quadrature lattice.
    let fvals: Array2<f64> = match f {
        ObservableSymbol::Sampled { values, .. } => values.clone(),
        _ => {
            let poly = f.as_polynomial().expect("remaining symbols are polynomial");
            Array2::from_shape_fn((n, n), |(i, j)| {
                poly.evaluate(pgrid.q.value(i), pgrid.p.value(j))
            })
        }
    };
    if fvals.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Divergence {
            reason: "symbol takes non-finite values on the quadrature grid".into(),
        });
    }
    // Momentum lattice sums per q row: F(q, d) = dp * twiddle(d) *
    // sum_l f(q, p_l) exp(+j 2 pi l d / n).
    let twiddles = momentum_twiddles(&pgrid, params.h);
    let mut osc = Array2::<Complex64>::zeros((n, n));
    for (m, row) in fvals.rows().into_iter().enumerate() {
        let mut spec: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&mut spec, true);
        for d in 0..n {
            osc[(m, d)] = spec[d] * twiddles[d] * pgrid.p.step;
        }
    }
    // Gaussian window table over index differences and its pruning width.
    let rate = kernel_window_rate(params);
    let wtab: Vec<f64> = (0..n)
        .map(|d| (-rate * (d as f64 * axis.step).powi(2)).exp())
        .collect();
    let width = ((22.5 / rate).sqrt() / axis.step).ceil() as usize;
    let mut matrix = Array2::<Complex64>::zeros((n, n));
    for m in 0..n {
        let lo = m.saturating_sub(width);
        let hi = (m + width).min(n - 1);
        for i in lo..=hi {
            let ei = wtab[m.abs_diff(i)];
            for j in i..=hi {
                let w = ei * wtab[m.abs_diff(j)];
                if w < 1e-45 {
                    continue;
                }
                let d = (i as isize - j as isize).rem_euclid(n as isize) as usize;
                matrix[(i, j)] += osc[(m, d)] * w;
            }
        }
    }
    let scale = kernel_constant(params) * pgrid.q.step * axis.step;
    for i in 0..n {
        matrix[(i, i)] = Complex64::new(matrix[(i, i)].re * scale, 0.0);
        for j in i + 1..n {
            matrix[(i, j)] *= scale;
            matrix[(j, i)] = matrix[(i, j)].conj();
        }
    }
    let closed_form = f
        .as_polynomial()
        .and_then(|poly| closed_form_tag(&poly, params, &axis, SymbolOrder::Exact));
    Ok(OperatorKernel { grid: PositionGrid::single(axis), matrix, closed_form })
}

/// Differential closed form of a polynomial symbol's operator, when the
/// polynomial stays within multiplication + second derivative + constant.
fn closed_form_tag(
    poly: &PhasePolynomial,
    params: &ModelParams,
    axis: &crate::grid::Axis,
    order: SymbolOrder,
) -> Option<ClosedFormTag> {
    let (sq, sp) = match order {
        SymbolOrder::Exact => (params.sigma_q_sq(0), params.sigma_p_sq(0)),
        SymbolOrder::ZeroOrder => (0.0, 0.0),
    };
    let h = params.h;
    let mut second = 0.0;
    let mut shift = 0.0;
    let mut mult_terms: Vec<(f64, u32)> = Vec::new();
    for &(c, alpha, beta) in poly.terms() {
        match (alpha, beta) {
            (_, 0) => {
                let mut t = 0u32;
                while t <= alpha {
                    let coeff = c
                        * binomial(alpha, t)
                        * double_factorial(t as i64 - 1)
                        * sq.powi((t / 2) as i32);
                    if alpha == t {
                        shift += coeff;
                    } else {
                        mult_terms.push((coeff, alpha - t));
                    }
                    t += 2;
                }
            }
            (0, 2) => {
                second += -c * h * h / (4.0 * std::f64::consts::PI.powi(2));
                shift += c * sp;
            }
            _ => return None,
        }
    }
    let multiplier = Array1::from_iter((0..axis.len).map(|i| {
        let x = axis.value(i);
        mult_terms.iter().map(|&(c, pw)| c * x.powi(pw as i32)).sum::<f64>()
    }));
    Some(ClosedFormTag { multiplier, second_derivative_coeff: second, constant_shift: shift })
}

/// Builds the operator kernel through the symbol route.  Polynomial and
/// harmonic symbols use closed-form Gaussian moments (the momentum lattice
/// sum remains exact); sampled symbols are smoothed spectrally and
/// interpolated to midpoints.  `ZeroOrder` skips the smoothing and yields
/// the conventional operator of the observable.
pub fn kernel_by_symbol(
    f: &ObservableSymbol,
    params: &ModelParams,
    grid: &PositionGrid,
    order: SymbolOrder,
) -> Result<OperatorKernel> {
    params.require_1d()?;
    let axis = *grid.only_axis()?;
    match f {
        ObservableSymbol::CoulombRadial { .. } => Err(ModelError::UnsupportedSymbol {
            reason: "radial Coulomb potential is position-only; use position_observable".into(),
        }),
        ObservableSymbol::Sampled { grid: g, values } => {
            kernel_by_symbol_sampled(g, values, params, &axis, order)
        }
        _ => {
            let poly = f.as_polynomial().expect("remaining symbols are polynomial");
            kernel_by_symbol_polynomial(&poly, params, &axis, order)
        }
    }
}

fn kernel_by_symbol_polynomial(
    poly: &PhasePolynomial,
    params: &ModelParams,
    axis: &crate::grid::Axis,
    order: SymbolOrder,
) -> Result<OperatorKernel> {
    let pgrid = PhaseGrid::conjugate(*axis, params.h)?;
    let n = axis.len;
    let (sq, sp) = match order {
        SymbolOrder::Exact => (params.sigma_q_sq(0), params.sigma_p_sq(0)),
        SymbolOrder::ZeroOrder => (0.0, 0.0),
    };
    let twiddles = momentum_twiddles(&pgrid, params.h);
    // Momentum factors per p power: s_beta(d) = dp * twiddle(d) *
    // sum_l smoothed_monomial(beta, p_l, sp) exp(+j 2 pi l d / n).
    let mut factors: std::collections::BTreeMap<u32, Array1<Complex64>> =
        std::collections::BTreeMap::new();
    for &(_, _, beta) in poly.terms() {
        factors.entry(beta).or_insert_with(|| {
            let mut spec: Vec<Complex64> = (0..n)
                .map(|l| Complex64::new(smoothed_monomial(beta, pgrid.p.value(l), sp), 0.0))
                .collect();
            fft_in_place(&mut spec, true);
            Array1::from_iter((0..n).map(|d| spec[d] * twiddles[d] * pgrid.p.step))
        });
    }
    let scale = axis.step / params.h;
    let mut matrix = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let mid = 0.5 * (axis.value(i) + axis.value(j));
            let d = (i as isize - j as isize).rem_euclid(n as isize) as usize;
            let mut acc = Complex64::ZERO;
            for &(c, alpha, beta) in poly.terms() {
                acc += factors[&beta][d] * (c * smoothed_monomial(alpha, mid, sq));
            }
            matrix[(i, j)] = acc * scale;
            if j > i {
                matrix[(j, i)] = matrix[(i, j)].conj();
            } else {
                matrix[(i, i)] = Complex64::new(matrix[(i, i)].re, 0.0);
            }
        }
    }
    let closed_form = closed_form_tag(poly, params, axis, order);
    Ok(OperatorKernel { grid: PositionGrid::single(*axis), matrix, closed_form })
}

fn kernel_by_symbol_sampled(
    sgrid: &PhaseGrid,
    values: &Array2<f64>,
    params: &ModelParams,
    axis: &crate::grid::Axis,
    order: SymbolOrder,
) -> Result<OperatorKernel> {
    if !sgrid.q.approx_eq(axis) {
        return Err(ModelError::GridMismatch {
            context: "sampled symbol position axis differs from the operator grid".into(),
        });
    }
    sgrid.require_conjugate(params.h)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Divergence {
            reason: "symbol takes non-finite values on its grid".into(),
        });
    }
    let n = axis.len;
    let mut field = values.mapv(|v| Complex64::new(v, 0.0));
    if order == SymbolOrder::Exact {
        // Spectral Gaussian smoothing with the window variances.
        crate::fourier::fft2_in_place(&mut field, false);
        let fq = frequencies(n, sgrid.q.step);
        let fp = frequencies(n, sgrid.p.step);
        let sq = params.sigma_q_sq(0);
        let sp = params.sigma_p_sq(0);
        let two_pi_sq = 2.0 * std::f64::consts::PI.powi(2);
        for i in 0..n {
            for j in 0..n {
                let t = (-two_pi_sq * (sq * fq[i] * fq[i] + sp * fp[j] * fp[j])).exp();
                field[(i, j)] *= t / (n * n) as f64;
            }
        }
        crate::fourier::fft2_in_place(&mut field, true);
    }
    // Midpoints (x_i + x_j)/2 live on the half-step lattice; interpolate
    // the symbol there spectrally, column by column.
    let mut fine = Array2::<Complex64>::zeros((2 * n, n));
    for j in 0..n {
        let col = field.column(j).to_owned();
        let up = upsample2(col.view());
        for i in 0..2 * n {
            fine[(i, j)] = up[i];
        }
    }
    // Momentum lattice sum per fine row.
    let twiddles = momentum_twiddles(sgrid, params.h);
    let mut osc = Array2::<Complex64>::zeros((2 * n, n));
    for m in 0..2 * n {
        let mut spec: Vec<Complex64> = fine.row(m).iter().cloned().collect();
        fft_in_place(&mut spec, true);
        for d in 0..n {
            osc[(m, d)] = spec[d] * twiddles[d] * sgrid.p.step;
        }
    }
    let scale = axis.step / params.h;
    let mut matrix = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let d = (i as isize - j as isize).rem_euclid(n as isize) as usize;
            matrix[(i, j)] = osc[(i + j, d)] * scale;
            if j > i {
                matrix[(j, i)] = matrix[(i, j)].conj();
            } else {
                matrix[(i, i)] = Complex64::new(matrix[(i, i)].re, 0.0);
            }
        }
    }
    Ok(OperatorKernel { grid: PositionGrid::single(*axis), matrix, closed_form: None })
}

/// Gaussian-convolves a position-only observable, returning the
/// multiplication field of its operator: Vbar(x) = E[V(x - Z)] with
/// Z ~ N(0, h a / 4 pi b).  Super-Gaussian growth is rejected.
pub fn position_observable<V: Fn(f64) -> f64>(
    v: V,
    params: &ModelParams,
    grid: &PositionGrid,
) -> Result<Array1<f64>> {
    params.require_1d()?;
    let axis = grid.only_axis()?;
    let sigma = params.sigma_q_sq(0).sqrt();
    let steps = 1601usize;
    let half = 8.0 * sigma;
    let du = 2.0 * half / (steps - 1) as f64;
    let weights: Vec<f64> = (0..steps)
        .map(|k| {
            let u = -half + k as f64 * du;
            let w = (-(u * u) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            let trap = if k == 0 || k == steps - 1 { 0.5 } else { 1.0 };
            w * du * trap
        })
        .collect();
    let mut out = Array1::<f64>::zeros(axis.len);
    for i in 0..axis.len {
        let x = axis.value(i);
        let mut acc = 0.0;
        let mut edge = 0.0f64;
        for (k, w) in weights.iter().enumerate() {
            let u = -half + k as f64 * du;
            let val = v(x - u);
            if !val.is_finite() {
                return Err(ModelError::Divergence {
                    reason: format!("observable is non-finite at {}", x - u),
                });
            }
            let contrib = w * val;
            if k == 0 || k == steps - 1 {
                edge = edge.max(contrib.abs());
            }
            acc += contrib;
        }
        if edge > 1e-10 * acc.abs().max(1.0) {
            return Err(ModelError::Divergence {
                reason: format!(
                    "observable grows too fast against the Gaussian weight near x = {x}"
                ),
            });
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Closed-form Gaussian-smoothed Coulomb potential at radius r:
/// -(e^2/r) erf(r / (sigma sqrt 2)), sigma^2 = (h/4 pi)(a/b), requiring
/// the isotropy a_i/b_i = a/b.  Finite at the origin.
pub fn smoothed_coulomb_at(e_sq: f64, params: &ModelParams, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "r".into(),
            reason: "radius must be nonnegative".into(),
        });
    }
    let ratio = params.isotropic_ratio()?;
    let sigma = (params.h * ratio / (4.0 * std::f64::consts::PI)).sqrt();
    let arg = r / (sigma * 2f64.sqrt());
    if arg < 1e-6 {
        // Series limit: erf(x)/x -> 2/sqrt(pi) as x -> 0.
        let lead = 2.0 / std::f64::consts::PI.sqrt() / (sigma * 2f64.sqrt());
        let corr = 1.0 - arg * arg / 3.0;
        return Ok(-e_sq * lead * corr);
    }
    Ok(-(e_sq / r) * libm::erf(arg))
}

/// Smoothed Coulomb multiplication field on a radial grid.
pub fn smoothed_coulomb_field(
    e_sq: f64,
    params: &ModelParams,
    radii: &Array1<f64>,
) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(radii.len());
    for (o, &r) in out.iter_mut().zip(radii.iter()) {
        *o = smoothed_coulomb_at(e_sq, params, r)?;
    }
    Ok(out)
}
