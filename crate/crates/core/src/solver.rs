//! Picard iteration for `x = S_mu(NL(x), v*)`, circulation shooting for `phi0 <= 2` and the
//! branch sweep over `mu` for `phi0 > 2`.

use std::time::Instant;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{field_norm, BoundaryTrace, RadialGrid};
use crate::error::{Error, Result};
use crate::field::{alpha_weight, decay_fit, ns_residual, DecayProfile};
use crate::flows::{existence_condition, ReferenceFlow};
use crate::linear_solver::{check_degenerate_band, solve_linear, LinearSolveInput, SpectralSolution};
use crate::nonlinearity::{compute_sources, SourceSpectrum};
use crate::scalar::{lit, to_f64, Real};

/// Increments above this are treated as blow-up.
const BLOW_UP: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig<T> {
    /// Mode cutoff `N`.
    pub n_max: usize,
    pub r_max: T,
    pub nodes_per_decade: usize,
    pub tail_exponent_floor: T,
    pub tol_fp: T,
    pub max_iter: usize,
    pub relaxation: T,
    pub tol_mu: T,
    pub max_shoot: usize,
    pub resonance_tol: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            n_max: 16,
            r_max: lit(1e4),
            nodes_per_decade: 64,
            tail_exponent_floor: lit(-2.0),
            tol_fp: lit(1e-10),
            max_iter: 200,
            relaxation: T::one(),
            tol_mu: lit(1e-10),
            max_shoot: 50,
            resonance_tol: lit(crate::linear_solver::DEFAULT_RESONANCE_TOL),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if !(self.tol_fp > T::zero()) {
            return bad("tol_fp must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.relaxation > T::zero() && self.relaxation <= T::one()) {
            return bad("relaxation must lie in (0, 1]");
        }
        if !(self.tol_mu > T::zero()) || self.max_shoot == 0 {
            return bad("tol_mu must be positive and max_shoot at least 1");
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid<T>> {
        Ok(RadialGrid::build(self.r_max, self.nodes_per_decade)?.with_tail_floor(self.tail_exponent_floor))
    }

    pub fn refined(&self) -> Self {
        Self {
            nodes_per_decade: 2 * self.nodes_per_decade,
            ..self.clone()
        }
    }
}

/// Weighted sup norms of the converged solution, `U^1_{alpha,4}` for `gamma` and `U^0_{alpha+2,4}` for `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolutionNorms<T> {
    pub alpha: T,
    pub kappa: T,
    pub gamma: T,
    pub w: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport<T> {
    pub converged: bool,
    pub iterations: usize,
    pub increment_history: Vec<T>,
    pub contraction_ratio: T,
    /// `|x - S(NL(x), v*)|` in the increment norm, evaluated once more after stopping.
    pub fixed_point_residual: Option<T>,
    pub phi0: T,
    pub mu0: T,
    pub mu_final: T,
    pub mu_history: Vec<T>,
    pub norms: Option<SolutionNorms<T>>,
    pub decay: Option<DecayProfile<T>>,
    pub ns_residual: Option<T>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl<T: Real> SolveReport<T> {
    fn new(flow: &ReferenceFlow<T>, mu0: T) -> Self {
        Self {
            converged: false,
            iterations: 0,
            increment_history: Vec::new(),
            contraction_ratio: T::zero(),
            fixed_point_residual: None,
            phi0: flow.phi0,
            mu0,
            mu_final: flow.mu,
            mu_history: Vec::new(),
            norms: None,
            decay: None,
            ns_residual: None,
            warnings: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solved<T> {
    pub solution: SpectralSolution<T>,
    pub report: SolveReport<T>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError<T: Real> {
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("fixed-point iteration did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<SolveReport<T>>),
    #[error("circulation shooting did not converge after {} steps", .0.mu_history.len())]
    ShootingFailed(Box<SolveReport<T>>),
}

impl<T: Real> SolveError<T> {
    pub fn report(&self) -> Option<&SolveReport<T>> {
        match self {
            Self::Numerical(_) => None,
            Self::NotConverged(r) | Self::ShootingFailed(r) => Some(r),
        }
    }
}

/// Median of successive increment ratios.
fn contraction_ratio<T: Real>(history: &[T]) -> T {
    let mut ratios: Vec<T> = history
        .windows(2)
        .filter(|w| w[0] > T::zero())
        .map(|w| w[1] / w[0])
        .filter(|r| r.is_finite())
        .collect();
    if ratios.is_empty() {
        return T::zero();
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let k = ratios.len();
    if k % 2 == 1 {
        ratios[k / 2]
    } else {
        (ratios[k / 2 - 1] + ratios[k / 2]) / lit(2.0)
    }
}

fn check_trace<T: Real>(flow: &ReferenceFlow<T>, trace: &BoundaryTrace<T>) -> Result<()> {
    if (flow.phi0 - trace.phi0).abs() > lit::<T>(1e-12) * (T::one() + flow.phi0) {
        return Err(Error::InvalidParameter(format!(
            "flow phi0 {} differs from the boundary flux {}",
            flow.phi0, trace.phi0
        )));
    }
    Ok(())
}

/// One application of `S_mu(NL(x), v*)`.
fn picard_map<T: Real>(
    grid: &RadialGrid<T>,
    x: &SpectralSolution<T>,
    input_template: &LinearSolveInput<'_, T>,
    resonance_tol: T,
) -> Result<SpectralSolution<T>> {
    let sources = compute_sources(grid, &x.gamma, &x.w, x.n_max())?;
    let input = LinearSolveInput {
        sources: &sources,
        ..*input_template
    };
    solve_linear(grid, &input, resonance_tol)
}

/// Picard iteration at fixed circulation `flow.mu` for the boundary trace `trace`.
pub fn picard_solve<T: Real>(
    flow: ReferenceFlow<T>,
    trace: &BoundaryTrace<T>,
    config: &SolverConfig<T>,
) -> Result<Solved<T>, SolveError<T>> {
    let start = Instant::now();
    config.validate()?;
    check_trace(&flow, trace)?;
    check_degenerate_band(flow.phi0)?;
    let mut report = SolveReport::new(&flow, trace.mu0);
    if !existence_condition(flow.phi0, flow.mu) {
        let msg = format!(
            "existence condition fails for phi0 = {}, mu = {}; attempting anyway",
            flow.phi0, flow.mu
        );
        warn!("{msg}");
        report.warnings.push(msg);
    }
    let grid = config.grid()?;
    let boundary = trace.spectrum(flow.mu, config.n_max);
    let zero = SourceSpectrum::zeros(config.n_max, grid.len());
    let template = LinearSolveInput {
        flow,
        boundary: &boundary,
        sources: &zero,
        mu0: trace.mu0,
    };
    let alpha = alpha_weight(&flow);
    let mut x = solve_linear(&grid, &template, config.resonance_tol)?;
    let omega = config.relaxation;
    for k in 1..=config.max_iter {
        let y = match picard_map(&grid, &x, &template, config.resonance_tol) {
            Ok(y) => y,
            Err(e) => {
                // a blown-up iterate surfaces as a quadrature failure; report it as divergence
                let msg = format!("iteration {k} failed: {e}");
                warn!("{msg}");
                report.warnings.push(msg);
                report.iterations = k;
                report.contraction_ratio = contraction_ratio(&report.increment_history);
                report.elapsed_seconds = start.elapsed().as_secs_f64();
                return Err(SolveError::NotConverged(Box::new(report)));
            }
        };
        let inc = y.gamma_distance(&x, alpha) * omega;
        x = if omega == T::one() {
            y
        } else {
            x.combine(T::one() - omega, &y, omega)
        };
        report.increment_history.push(inc);
        report.iterations = k;
        debug!("picard {k}: increment {inc:e}");
        if !inc.is_finite() || inc > lit(BLOW_UP) || !x.is_finite() {
            break;
        }
        if inc < config.tol_fp {
            report.converged = true;
            break;
        }
    }
    report.contraction_ratio = contraction_ratio(&report.increment_history);
    report.mu_final = flow.mu;
    if !report.converged {
        report.elapsed_seconds = start.elapsed().as_secs_f64();
        return Err(SolveError::NotConverged(Box::new(report)));
    }
    let check = picard_map(&grid, &x, &template, config.resonance_tol)?;
    report.fixed_point_residual = Some(check.gamma_distance(&x, alpha));
    finish_report(&mut report, &x)?;
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    info!(
        "picard converged in {} iterations (ratio {:.3e}, ns residual {:.3e})",
        report.iterations,
        to_f64(report.contraction_ratio),
        report.ns_residual.map_or(f64::NAN, to_f64)
    );
    Ok(Solved { solution: x, report })
}

fn finish_report<T: Real>(report: &mut SolveReport<T>, x: &SpectralSolution<T>) -> Result<()> {
    let alpha = alpha_weight(&x.flow);
    let kappa: T = lit(4.0);
    report.norms = Some(SolutionNorms {
        alpha,
        kappa,
        gamma: field_norm(&x.grid, &x.gamma, alpha, kappa, 1)?,
        w: field_norm(&x.grid, &x.w, alpha + lit(2.0), kappa, 0)?,
    });
    report.decay = Some(decay_fit(x));
    report.ns_residual = Some(ns_residual(x));
    Ok(())
}

/// Circulation shooting for `phi0 <= 2`: finds `mu` with `-gamma_0'(1) = mu0 - mu`, iterating
/// `mu <- mu0 + gamma_0'(1)` and switching to secant steps when that stops contracting.
pub fn shoot_mu<T: Real>(
    phi0: T,
    trace: &BoundaryTrace<T>,
    config: &SolverConfig<T>,
) -> Result<Solved<T>, SolveError<T>> {
    let start = Instant::now();
    let two: T = lit(2.0);
    if phi0 > two {
        return Err(Error::InvalidParameter(format!("circulation shooting needs phi0 <= 2, got {phi0}")).into());
    }
    let mu0 = trace.mu0;
    let base = ReferenceFlow::new(phi0, mu0)?;
    let mut warnings = Vec::new();
    if !existence_condition(phi0, mu0) {
        let msg = format!("existence condition fails for phi0 = {phi0}, mu0 = {mu0}; attempting anyway");
        warn!("{msg}");
        warnings.push(msg);
    }
    let mut mu = mu0;
    let mut history: Vec<(T, T)> = Vec::new();
    let mut secant = false;
    let mut last: Option<Solved<T>> = None;
    for step in 0..config.max_shoot {
        let solved = match picard_solve(base.with_mu(mu), trace, config) {
            Ok(s) => s,
            Err(SolveError::NotConverged(mut r)) => {
                r.mu_history = history.iter().map(|h| h.0).chain([mu]).collect();
                r.warnings.extend(warnings);
                return Err(SolveError::NotConverged(r));
            }
            Err(e) => return Err(e),
        };
        let g = mu0 + solved.solution.gamma[0].derivative[0].re - mu;
        debug!("shoot {step}: mu = {mu:e}, g = {g:e}");
        history.push((mu, g));
        last = Some(solved);
        if g.abs() < config.tol_mu {
            break;
        }
        let k = history.len();
        if !secant
            && k >= 3
            && history[k - 1].1.abs() > history[k - 2].1.abs()
            && history[k - 2].1.abs() > history[k - 3].1.abs()
        {
            secant = true;
            let msg = format!("fixed-point shooting stalled at step {step}; switching to secant");
            info!("{msg}");
            warnings.push(msg);
        }
        mu = if secant && k >= 2 {
            let (m1, g1) = history[k - 1];
            let (m0, g0) = history[k - 2];
            if g1 == g0 {
                m1 + g1
            } else {
                m1 - g1 * (m1 - m0) / (g1 - g0)
            }
        } else {
            mu + g
        };
    }
    let mut solved = last.expect("at least one shooting step");
    let report = &mut solved.report;
    report.mu_history = history.iter().map(|h| h.0).collect();
    report.mu_final = history.last().map(|h| h.0).unwrap_or(mu0);
    report.warnings.extend(warnings);
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    let closed = history.last().is_some_and(|h| h.1.abs() < config.tol_mu);
    if !closed {
        report.converged = false;
        return Err(SolveError::ShootingFailed(Box::new(solved.report)));
    }
    Ok(solved)
}

#[derive(Debug)]
pub struct BranchMember<T: Real> {
    pub mu: T,
    pub result: Result<Solved<T>, SolveError<T>>,
}

/// Solves the same boundary trace at every circulation in `mu_list` (requires `phi0 > 2`).
/// Members run in parallel; each failure is kept in its own entry.
pub fn branch_sweep<T: Real>(
    phi0: T,
    trace: &BoundaryTrace<T>,
    mu_list: &[T],
    config: &SolverConfig<T>,
) -> Result<Vec<BranchMember<T>>> {
    let two: T = lit(2.0);
    if !(phi0 > two) {
        return Err(Error::InvalidParameter(format!(
            "branch sweep requires phi0 > 2, got {phi0}"
        )));
    }
    check_degenerate_band(phi0)?;
    config.validate()?;
    for &mu in mu_list {
        if (mu - trace.mu0).abs() > T::one() {
            warn!("branch member mu = {mu} is far from mu0 = {}", trace.mu0);
        }
    }
    let base = ReferenceFlow::new(phi0, trace.mu0)?;
    Ok(mu_list
        .par_iter()
        .map(|&mu| BranchMember {
            mu,
            result: picard_solve(base.with_mu(mu), trace, config),
        })
        .collect())
}
