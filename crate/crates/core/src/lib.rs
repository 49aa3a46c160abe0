//! Spectral solver for the steady two-dimensional Navier-Stokes equations outside the unit
//! disk, written as perturbations of the potential flow `-phi0/r e_r + mu/r e_theta`.
//!
//! The perturbation is carried by a stream function `gamma` and vorticity `w = -Laplacian gamma`,
//! expanded in Fourier modes. Each mode solves a pair of Euler-type ODEs through explicit Green
//! functions ([`linear_solver`]); the quadratic coupling ([`nonlinearity`]) is closed by Picard
//! iteration, with a scalar shooting on the circulation when `phi0 <= 2` ([`solver`]).

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod field;
pub mod flows;
pub mod linear_solver;
pub mod nonlinearity;
pub mod scalar;
pub mod solver;
pub mod uniqueness_diag;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations.
pub mod f64 {
    pub type ReferenceFlow = crate::flows::ReferenceFlow<f64>;
    pub type RadialGrid = crate::discretization::RadialGrid<f64>;
    pub type BoundaryTrace = crate::discretization::BoundaryTrace<f64>;
    pub type BoundarySpectrum = crate::discretization::BoundarySpectrum<f64>;
    pub type ModeFunction = crate::discretization::ModeFunction<f64>;
    pub type SpectralSolution = crate::linear_solver::SpectralSolution<f64>;
    pub type SolverConfig = crate::solver::SolverConfig<f64>;
    pub type SolveReport = crate::solver::SolveReport<f64>;
    pub type Solved = crate::solver::Solved<f64>;
    pub type SolveError = crate::solver::SolveError<f64>;
}

/// Single-precision instantiations; tolerances tuned for `f64` will not all be reachable.
pub mod f32 {
    pub type ReferenceFlow = crate::flows::ReferenceFlow<f32>;
    pub type RadialGrid = crate::discretization::RadialGrid<f32>;
    pub type BoundaryTrace = crate::discretization::BoundaryTrace<f32>;
    pub type SpectralSolution = crate::linear_solver::SpectralSolution<f32>;
    pub type SolverConfig = crate::solver::SolverConfig<f32>;
    pub type Solved = crate::solver::Solved<f32>;
}
