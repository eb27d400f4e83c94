//! Numerical toolkit for a diffusion-averaging model of quantum
//! observation on extended phase space.
//!
//! A wave function over position is lifted to an amplitude over phase
//! space crossed with a circle fiber; Gaussian shift diffusion averages
//! that amplitude, and every familiar object reappears on the other side
//! of the lift: squared moduli become genuinely nonnegative phase-space
//! densities, observables become integral kernels with smoothed symbols,
//! and the long-time limit of the diffusion singles the lifted sector
//! back out.  The crate provides
//!
//! - [`transform`]: the lift ([`synthesize`]) and its inverse
//!   ([`extract`]), an exact isometric pair on conjugate lattices;
//! - [`density`]: nonnegative densities, the Wigner transform they
//!   regularize, and the smoothing identity connecting the two;
//! - [`operators`]: observable kernels by direct quadrature and by
//!   closed-form symbol moments, with differential tags where they exist;
//! - [`diffusion`]: the averaging semigroup on the fiber modes, spectral
//!   and finite-difference integrators, decay-rate fits, and the
//!   asymptotic projection;
//! - [`spectral`]: dense Hermitian eigensolves (the smoothed oscillator
//!   ladder sits a recorded constant above the conventional one);
//! - [`lamb`]: the hydrogen 2S calibration tying the diffusion intensity
//!   ratio to a measured level shift;
//! - [`corpus`]: reproducible reference states.
//!
//! Conventions: transforms use the kernel exp(-j 2 pi p x / h) with the
//! action scale h carried by [`ModelParams`]; position grids are uniform
//! and momentum grids are their exact conjugates, so round trips are
//! lattice identities rather than approximations.

pub mod corpus;
pub mod density;
pub mod diffusion;
pub mod error;
pub mod fiber;
pub mod fourier;
pub mod grid;
pub mod hermite;
pub mod lamb;
pub mod operators;
pub mod params;
pub mod spectral;
pub mod transform;

pub use error::{ModelError, Result};
pub use grid::{Axis, PhaseGrid, PositionGrid};
pub use params::{ModelParams, PhysicalConstants};

pub use fiber::{
    apply_weyl, fiber_project, fiber_resynthesize, ExtendedAmplitude, FiberSamples,
    WeylElement,
};
pub use transform::{
    averaging_projector, extract, synthesize, AveragedAmplitude, WaveFunction,
};

pub use density::{
    density_from_amplitude, density_from_wavefunction, smoothing_check, wigner,
    PhaseSpaceDensity, WignerDensity,
};

pub use operators::{
    diagonal_kernel, kernel_by_quadrature, kernel_by_symbol, position_observable,
    smoothed_coulomb_at, smoothed_coulomb_field, ClosedFormTag, ObservableSymbol,
    OperatorKernel, PhasePolynomial, SymbolOrder,
};

pub use diffusion::{
    asymptotic_state, evolve, measure_decay, mode_eigenvalue, mode_length_scale,
    mode_position_axis, mode_to_momentum_rep, mode_to_position_rep, DecayFit,
    DiffusionSpec, DiffusionTrajectory, IntegratorKind,
};

pub use spectral::{
    dense_spectrum, oscillator_shift, oscillator_spectrum, tagged_spectrum,
    SpectralResult,
};

pub use lamb::{
    erg_to_mhz, hydrogen_radial, lamb_shift_forward, lamb_shift_inverse, mhz_to_erg,
    perturbative_shift, s_state_density_at_origin, HydrogenState, LambEstimate,
    PerturbativeShift,
};

pub use corpus::{
    coherent_state, hermite_state, k_mode_state, matched_gaussian_state,
    random_band_limited,
};
