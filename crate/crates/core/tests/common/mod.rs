#![allow(dead_code)]

use hamel::discretization::{BoundarySpectrum, BoundaryTrace, RadialGrid};
use hamel::flows::ReferenceFlow;
use hamel::linear_solver::{solve_linear, LinearSolveInput, SpectralSolution, DEFAULT_RESONANCE_TOL};
use hamel::nonlinearity::SourceSpectrum;
use num_complex::Complex;

pub type C = Complex<f64>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn default_grid() -> RadialGrid<f64> {
    RadialGrid::build(1e4, 64).unwrap()
}

/// Linear solve with no source term.
pub fn homogeneous(
    grid: &RadialGrid<f64>,
    phi0: f64,
    mu: f64,
    mu0: f64,
    b: &BoundarySpectrum<f64>,
) -> SpectralSolution<f64> {
    let flow = ReferenceFlow::new(phi0, mu).unwrap();
    let src = SourceSpectrum::zeros(b.n_max(), grid.len());
    solve_linear(
        grid,
        &LinearSolveInput {
            flow,
            boundary: b,
            sources: &src,
            mu0,
        },
        DEFAULT_RESONANCE_TOL,
    )
    .unwrap()
}

/// Single-mode boundary spectrum.
pub fn single_mode(n_max: usize, n: usize, vr: C, vtheta: C) -> BoundarySpectrum<f64> {
    let mut b = BoundarySpectrum::zeros(n_max);
    b.vr[n] = vr;
    b.vtheta[n] = vtheta;
    b
}

/// Least-squares slope of `log |f|` over the last two decades.
pub fn tail_slope(grid: &RadialGrid<f64>, f: &[C]) -> (f64, f64) {
    let window = grid.last_decades(2.0);
    let r = &grid.nodes()[window.clone()];
    let v: Vec<f64> = window.map(|j| f[j].norm()).collect();
    hamel::field::log_slope(r, &v).expect("nonvanishing tail")
}

/// The non-uniqueness case: `phi0 = 2.5`, `mu0 = 0.2`, `v_theta,1 = v_r,2 = 0.01`.
pub fn branch_trace() -> BoundaryTrace<f64> {
    let mut vr = vec![c(0.0, 0.0); 3];
    let mut vtheta = vr.clone();
    vtheta[1] = c(0.01, 0.0);
    vr[2] = c(0.01, 0.0);
    BoundaryTrace::from_modes(2.5, 0.2, vr, vtheta).unwrap()
}

/// Subcase-1 trace with `v_theta,1 = eps`.
pub fn shooting_trace(phi0: f64, mu0: f64, eps: f64) -> BoundaryTrace<f64> {
    let mut vtheta = vec![c(0.0, 0.0); 2];
    vtheta[1] = c(eps, 0.0);
    BoundaryTrace::from_modes(phi0, mu0, vec![c(0.0, 0.0); 2], vtheta).unwrap()
}
