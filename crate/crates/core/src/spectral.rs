//! Dense eigenvalue computations for observable kernels.
//!
//! The headline consumer is the smoothed harmonic oscillator, whose
//! spectrum is the conventional ladder (h/2pi) omega (n + 1/2) raised by
//! the constant sum_i h (b_i^2 + m^2 omega^2 a_i^2) / (8 pi a_i b_i m).
//! A second route diagonalizes the closed differential form of a tagged
//! kernel with a three-point Laplacian, as an independent cross-check of
//! the dense kernel route.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::grid::PositionGrid;
use crate::operators::{kernel_by_symbol, ObservableSymbol, OperatorKernel, SymbolOrder};
use crate::params::ModelParams;

/// Ascending eigenvalues (and optionally eigenvectors, orthonormal under
/// the plain lattice dot product) with the discretization they came from.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Array1<Complex64>>>,
    pub points: usize,
    pub domain: (f64, f64),
}

/// The constant by which the smoothed oscillator spectrum sits above the
/// conventional one.
pub fn oscillator_shift(mass: f64, omega: f64, params: &ModelParams) -> f64 {
    (0..params.dim())
        .map(|i| {
            let (a, b) = (params.a[i], params.b[i]);
            params.h * (b * b + mass * mass * omega * omega * a * a)
                / (8.0 * std::f64::consts::PI * a * b * mass)
        })
        .sum()
}

fn sorted_indices(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite eigenvalues"));
    idx
}

/// Diagonalizes a Hermitian kernel and returns the lowest `count`
/// eigenpairs.  Complex Hermitian matrices go through the real symmetric
/// doubling [[Re, -Im], [Im, Re]]; the doubled eigenvalues are collapsed
/// back by discarding candidates that fall inside the span of already
/// accepted vectors at the same eigenvalue.
pub fn dense_spectrum(
    kernel: &OperatorKernel,
    count: usize,
    want_vectors: bool,
) -> Result<SpectralResult> {
    let matrix = kernel.matrix();
    let n = matrix.nrows();
    if count == 0 || count > n {
        return Err(ModelError::InvalidParameter {
            name: "count".into(),
            reason: format!("must lie in 1..={n}, got {count}"),
        });
    }
    let herm = kernel.hermiticity_residual();
    if herm > 1e-9 {
        return Err(ModelError::InvalidParameter {
            name: "kernel".into(),
            reason: format!(
                "Hermiticity residual {herm:.2e} exceeds the 1e-9 budget; \
                 eigenvalues would carry imaginary parts"
            ),
        });
    }
    let axis = *kernel.grid().only_axis()?;
    let domain = (axis.min(), axis.max());
    // Work with the Hermitian part; the residual is within budget.
    let re = |i: usize, j: usize| 0.5 * (matrix[(i, j)].re + matrix[(j, i)].re);
    let im = |i: usize, j: usize| 0.5 * (matrix[(i, j)].im - matrix[(j, i)].im);
    let scale = matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_im = matrix.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_im <= 1e-14 * scale.max(1e-300) {
        let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, re));
        let idx = sorted_indices(&eig.eigenvalues);
        let eigenvalues: Vec<f64> =
            idx.iter().take(count).map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = want_vectors.then(|| {
            idx.iter()
                .take(count)
                .map(|&i| {
                    Array1::from_iter(
                        eig.eigenvectors.column(i).iter().map(|&v| Complex64::new(v, 0.0)),
                    )
                })
                .collect()
        });
        return Ok(SpectralResult { eigenvalues, eigenvectors, points: n, domain });
    }
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        match (r < n, c < n) {
            (true, true) => re(r, c),
            (true, false) => -im(r, c - n),
            (false, true) => im(r - n, c),
            (false, false) => re(r - n, c - n),
        }
    });
    let eig = SymmetricEigen::new(big);
    let idx = sorted_indices(&eig.eigenvalues);
    let lam_scale = idx.iter().map(|&i| eig.eigenvalues[i].abs()).fold(0.0, f64::max);
    let cluster_tol = (1e-10 * lam_scale).max(1e-13);
    let mut chosen: Vec<(f64, Array1<Complex64>)> = Vec::with_capacity(n);
    for &i in &idx {
        if chosen.len() == n {
            break;
        }
        let lambda = eig.eigenvalues[i];
        let col = eig.eigenvectors.column(i);
        let mut z =
            Array1::from_iter((0..n).map(|r| Complex64::new(col[r], col[n + r])));
        for (lp, vp) in chosen.iter().rev() {
            if (lambda - lp).abs() > cluster_tol {
                break;
            }
            let ip: Complex64 = vp.iter().zip(z.iter()).map(|(a, b)| a.conj() * b).sum();
            for (zi, vi) in z.iter_mut().zip(vp.iter()) {
                *zi -= ip * vi;
            }
        }
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        // A doubled partner projects to nearly zero; a fresh direction
        // keeps most of its unit length.
        if norm > 0.5 {
            z.mapv_inplace(|v| v / norm);
            chosen.push((lambda, z));
        }
    }
    if chosen.len() < count {
        return Err(ModelError::Divergence {
            reason: format!(
                "eigenpair deduplication kept {} of the expected {n} pairs",
                chosen.len()
            ),
        });
    }
    let eigenvalues: Vec<f64> = chosen.iter().take(count).map(|(l, _)| *l).collect();
    let eigenvectors = want_vectors
        .then(|| chosen.into_iter().take(count).map(|(_, v)| v).collect());
    Ok(SpectralResult { eigenvalues, eigenvectors, points: n, domain })
}

/// Diagonalizes the closed differential form recorded on a kernel,
/// discretized with a three-point Laplacian and zero boundary values.
/// Independent of the dense kernel entries; second-order accurate.
pub fn tagged_spectrum(kernel: &OperatorKernel, count: usize) -> Result<SpectralResult> {
    let tag = kernel.closed_form().ok_or_else(|| ModelError::UnsupportedSymbol {
        reason: "no closed differential form is recorded for this kernel".into(),
    })?;
    let axis = *kernel.grid().only_axis()?;
    let n = axis.len;
    if count == 0 || count > n {
        return Err(ModelError::InvalidParameter {
            name: "count".into(),
            reason: format!("must lie in 1..={n}, got {count}"),
        });
    }
    let d2 = tag.second_derivative_coeff / (axis.step * axis.step);
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = tag.multiplier[i] + tag.constant_shift - 2.0 * d2;
        if i + 1 < n {
            mat[(i, i + 1)] = d2;
            mat[(i + 1, i)] = d2;
        }
    }
    let eig = SymmetricEigen::new(mat);
    let idx = sorted_indices(&eig.eigenvalues);
    let eigenvalues: Vec<f64> =
        idx.iter().take(count).map(|&i| eig.eigenvalues[i]).collect();
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: None,
        points: n,
        domain: (axis.min(), axis.max()),
    })
}

/// Spectrum of the smoothed oscillator Hamiltonian p^2/(2m) + m omega^2
/// q^2 / 2.  With `remove_shift` the recorded constant is subtracted
/// first, recovering the conventional ladder.
pub fn oscillator_spectrum(
    mass: f64,
    omega: f64,
    params: &ModelParams,
    grid: &PositionGrid,
    count: usize,
    remove_shift: bool,
) -> Result<SpectralResult> {
    params.require_1d()?;
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "mass".into(),
            reason: "must be positive and finite".into(),
        });
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ModelError::InvalidParameter {
            name: "omega".into(),
            reason: "must be positive and finite; for free motion diagonalize p^2/(2m) directly"
                .into(),
        });
    }
    if count == 0 {
        return Err(ModelError::InvalidParameter {
            name: "count".into(),
            reason: "at least one eigenvalue must be requested".into(),
        });
    }
    let axis = *grid.only_axis()?;
    // The count-th state must fit: classical turning points in both
    // position and momentum, with the lattice Nyquist bound on the latter.
    let hbar = params.h / (2.0 * std::f64::consts::PI);
    let e_top = hbar * omega * (count as f64 - 0.5);
    let q_turn = (2.0 * e_top / (mass * omega * omega)).sqrt();
    let p_turn = (2.0 * mass * e_top).sqrt();
    let half = axis.min().abs().min(axis.max().abs());
    let p_max = params.h / (2.0 * axis.step);
    if half < q_turn || p_max < p_turn {
        let fq = (q_turn / half).max(1.0);
        let fp = (p_turn / p_max).max(1.0);
        let mut suggested = (axis.len as f64 * fq * fp).ceil() as usize;
        suggested += suggested % 2;
        return Err(ModelError::Resolution {
            reason: format!(
                "state {} turns at |q| = {q_turn:.3}, |p| = {p_turn:.3}; grid reaches \
                 |q| = {half:.3}, |p| = {p_max:.3}",
                count - 1
            ),
            suggested_len: suggested,
        });
    }
    let symbol = ObservableSymbol::harmonic(mass, omega)?;
    let kernel = kernel_by_symbol(&symbol, params, grid, SymbolOrder::Exact)?;
    let kernel = if remove_shift {
        kernel.with_shift_removed().expect("harmonic symbols carry a closed form")
    } else {
        kernel
    };
    dense_spectrum(&kernel, count, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use ndarray::Array2;

    #[test]
    fn oscillator_ladder_at_unit_parameters() {
        let params = ModelParams::unit();
        let grid = PositionGrid::single(Axis::centered(8.0, 512).unwrap());
        let res = oscillator_spectrum(1.0, 1.0, &params, &grid, 5, false).unwrap();
        let tp = 2.0 * std::f64::consts::PI;
        for n in 0..5 {
            let expect = (n as f64 + 1.0) / tp;
            let got = res.eigenvalues[n];
            assert!(
                ((got - expect) / expect).abs() < 1e-6,
                "level {n}: {got} vs {expect}"
            );
        }
        let bare = oscillator_spectrum(1.0, 1.0, &params, &grid, 5, true).unwrap();
        for n in 0..5 {
            let expect = (n as f64 + 0.5) / tp;
            assert!(((bare.eigenvalues[n] - expect) / expect).abs() < 1e-6);
        }
    }

    #[test]
    fn shift_difference_is_the_recorded_constant() {
        let params = ModelParams::new(0.9, vec![1.1], vec![0.7]).unwrap();
        let (mass, omega) = (1.3, 0.8);
        let grid = PositionGrid::single(Axis::centered(10.0, 256).unwrap());
        let full = oscillator_spectrum(mass, omega, &params, &grid, 5, false).unwrap();
        let bare = oscillator_spectrum(mass, omega, &params, &grid, 5, true).unwrap();
        let shift = oscillator_shift(mass, omega, &params);
        for n in 0..5 {
            let diff = full.eigenvalues[n] - bare.eigenvalues[n];
            assert!(
                (diff - shift).abs() < 1e-8,
                "level {n}: difference {diff} vs shift {shift}"
            );
        }
    }

    #[test]
    fn tagged_route_cross_checks_the_dense_route() {
        // 512 points keep the three-point stencil's O(dx^2) bias on the
        // third level inside the comparison budget.
        let params = ModelParams::new(0.9, vec![1.1], vec![0.7]).unwrap();
        let grid = PositionGrid::single(Axis::centered(10.0, 512).unwrap());
        let symbol = ObservableSymbol::harmonic(1.3, 0.8).unwrap();
        let kernel = kernel_by_symbol(&symbol, &params, &grid, SymbolOrder::Exact).unwrap();
        let dense = dense_spectrum(&kernel, 3, false).unwrap();
        let tagged = tagged_spectrum(&kernel, 3).unwrap();
        for n in 0..3 {
            let rel = (dense.eigenvalues[n] - tagged.eigenvalues[n]).abs()
                / dense.eigenvalues[n];
            assert!(rel < 5e-3, "level {n}: dense {} vs tagged {}", dense.eigenvalues[n],
                tagged.eigenvalues[n]);
        }
    }

    #[test]
    fn free_kinetic_offset_under_domain_growth() {
        // Pure momentum-squared symbol: the smoothed kernel is the plain
        // second derivative raised by h b / (4 pi a).  On growing boxes
        // the lowest eigenvalue extrapolates to exactly that offset.
        let params = ModelParams::unit();
        let symbol =
            ObservableSymbol::polynomial(vec![(1.0, 0, 2)]).unwrap();
        let offset = params.sigma_p_sq(0);
        let step = 0.125;
        let mut lowest = Vec::new();
        for &n in &[96usize, 192, 384] {
            let half = step * n as f64 / 2.0;
            let axis = Axis::new(-half, step, n).unwrap();
            let grid = PositionGrid::single(axis);
            let kernel =
                kernel_by_symbol(&symbol, &params, &grid, SymbolOrder::Exact).unwrap();
            let res = tagged_spectrum(&kernel, 1).unwrap();
            lowest.push(res.eigenvalues[0]);
        }
        // Monotone approach from above, roughly quartering per doubling.
        assert!(lowest[0] > lowest[1] && lowest[1] > lowest[2]);
        assert!(lowest[2] > offset);
        let r01 = (lowest[0] - offset) / (lowest[1] - offset);
        assert!((3.0..5.0).contains(&r01), "box-size decay ratio {r01}");
        let extrapolated = (4.0 * lowest[2] - lowest[1]) / 3.0;
        assert!(
            (extrapolated - offset).abs() < 1e-6,
            "extrapolated {extrapolated} vs offset {offset}"
        );
    }

    #[test]
    fn complex_hermitian_matrices_use_the_doubling() {
        let axis = Axis::centered(4.0, 8).unwrap();
        let grid = PositionGrid::single(axis);
        // Hermitian circulant: eigenvalues are the transform of the
        // generating row, 2 + cos(2 pi l / 8) + 0.5 sin(2 pi l / 8).
        let c = |d: usize| -> Complex64 {
            match d {
                0 => Complex64::new(2.0, 0.0),
                1 => Complex64::new(0.5, 0.25),
                7 => Complex64::new(0.5, -0.25),
                _ => Complex64::ZERO,
            }
        };
        let matrix = Array2::from_shape_fn((8, 8), |(i, j)| c((i + 8 - j) % 8));
        let kernel = OperatorKernel::from_matrix(grid, matrix).unwrap();
        let res = dense_spectrum(&kernel, 8, true).unwrap();
        let mut expect: Vec<f64> = (0..8)
            .map(|l| {
                let t = 2.0 * std::f64::consts::PI * l as f64 / 8.0;
                2.0 + t.cos() + 0.5 * t.sin()
            })
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in res.eigenvalues.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        // Returned vectors satisfy the eigenrelation.
        let vecs = res.eigenvectors.unwrap();
        let m = kernel.matrix();
        for (vi, v) in vecs.iter().enumerate() {
            let mv = m.dot(v);
            let mut resid = 0.0f64;
            for i in 0..8 {
                resid += (mv[i] - v[i] * res.eigenvalues[vi]).norm_sqr();
            }
            assert!(resid.sqrt() < 1e-9, "eigenpair {vi} residual");
        }
    }

    #[test]
    fn degenerate_complex_spectra_keep_multiplicities() {
        let axis = Axis::centered(4.0, 8).unwrap();
        let grid = PositionGrid::single(axis);
        // Two identical 2x2 blocks [[1, j/2], [-j/2, 1]] and four free
        // diagonal ones: spectrum {0.5 x2, 1 x4, 1.5 x2}.
        let mut matrix = Array2::from_elem((8, 8), Complex64::ZERO);
        for i in 0..8 {
            matrix[(i, i)] = Complex64::new(1.0, 0.0);
        }
        matrix[(0, 1)] = Complex64::new(0.0, 0.5);
        matrix[(1, 0)] = Complex64::new(0.0, -0.5);
        matrix[(2, 3)] = Complex64::new(0.0, 0.5);
        matrix[(3, 2)] = Complex64::new(0.0, -0.5);
        let kernel = OperatorKernel::from_matrix(grid, matrix).unwrap();
        let res = dense_spectrum(&kernel, 8, true).unwrap();
        let expect = [0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.5, 1.5];
        for (got, want) in res.eigenvalues.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        // The kept vectors stay mutually orthonormal.
        let vecs = res.eigenvectors.unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let ip: Complex64 =
                    vecs[i].iter().zip(vecs[j].iter()).map(|(a, b)| a.conj() * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip.norm() - expect).abs() < 1e-9, "pair {i},{j}");
            }
        }
    }

    #[test]
    fn non_hermitian_kernels_are_rejected() {
        let axis = Axis::centered(4.0, 8).unwrap();
        let grid = PositionGrid::single(axis);
        let mut matrix = Array2::from_elem((8, 8), Complex64::ZERO);
        for i in 0..8 {
            matrix[(i, i)] = Complex64::new(1.0, 0.0);
        }
        matrix[(0, 1)] = Complex64::new(0.3, 0.0);
        let kernel = OperatorKernel::from_matrix(grid, matrix).unwrap();
        assert!(matches!(
            dense_spectrum(&kernel, 3, false),
            Err(ModelError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn small_domains_are_rejected_with_a_suggestion() {
        let params = ModelParams::unit();
        // Turning point of the 20th state is past |q| = 2.
        let tight = PositionGrid::single(Axis::centered(2.0, 64).unwrap());
        match oscillator_spectrum(1.0, 1.0, &params, &tight, 20, false) {
            Err(ModelError::Resolution { suggested_len, .. }) => {
                assert!(suggested_len > 64);
            }
            other => panic!("expected a resolution error, got {other:?}"),
        }
        // Coarse steps cannot reach the 30th state's momentum.
        let coarse = PositionGrid::single(Axis::centered(8.0, 16).unwrap());
        match oscillator_spectrum(1.0, 1.0, &params, &coarse, 16, false) {
            Err(ModelError::Resolution { suggested_len, .. }) => {
                assert!(suggested_len > 16);
            }
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }
}
