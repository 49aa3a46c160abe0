//! Self-check suite: manufactured solutions of the linear operator, ODE and trace residuals of
//! assembled modes, and the randomized inequality suites. Drives `hamel verify`.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex;
use serde::Serialize;

use crate::discretization::{BoundarySpectrum, RadialGrid};
use crate::error::Result;
use crate::flows::ReferenceFlow;
use crate::linear_solver::{
    ode_residual, solve_linear, solve_w_particular, solve_w_zero, LinearSolveInput, DEFAULT_RESONANCE_TOL,
};
use crate::nonlinearity::SourceSpectrum;
use crate::scalar::rpow;
use crate::uniqueness_diag::{
    hardy_sharpness, hardy_suite, poincare_wirtinger_check, positivity_roots, probe_q1_negativity, qform_grid,
    qform_suite, ProbeOutcome, TestStream,
};

type C = Complex<f64>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    /// Wall time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub quick: bool,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    /// Informational only; never affects `passed`.
    pub q1_probe: Option<(f64, ProbeOutcome)>,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub quick: bool,
    pub probe_phi0: Option<f64>,
}

fn run(name: &str, f: impl FnOnce(&mut BTreeMap<String, f64>) -> Result<bool>) -> CheckResult {
    let start = Instant::now();
    let mut metrics = BTreeMap::new();
    let passed = match f(&mut metrics) {
        Ok(p) => p,
        Err(e) => {
            log::error!("{name}: {e}");
            false
        }
    };
    CheckResult {
        name: name.to_string(),
        passed,
        metrics,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn sup_rel(a: &[C], b: &[C]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Manufactured vorticity oracle: `F = C s^{-(a+2)}`, `C = a^2 - a phi0 - (i n mu + n^2)`, for
/// which `w_n[F] = -r^{-a} + (C/sd) r^{zeta-}/(a + zeta-)`. Returns the sup relative error.
pub fn manufactured_error(grid: &RadialGrid<f64>, n: i64, phi0: f64, mu: f64, a: f64) -> Result<f64> {
    let flow = ReferenceFlow::new(phi0, mu)?;
    if n == 0 {
        // F = t^{-(a+3)}: w_0 = r^{-(a+1)} / ((a+1)(a+1-phi0))
        let f: Vec<C> = grid.nodes().iter().map(|&r| C::new(r.powf(-(a + 3.0)), 0.0)).collect();
        let w = solve_w_zero(grid, &flow, &f)?;
        let exact: Vec<C> = grid
            .nodes()
            .iter()
            .map(|&r| C::new(r.powf(-(a + 1.0)) / ((a + 1.0) * (a + 1.0 - phi0)), 0.0))
            .collect();
        return Ok(sup_rel(&w.values, &exact));
    }
    let ex = flow.exponents(n);
    let nf = n as f64;
    let c = C::new(a * a - a * phi0 - nf * nf, -nf * mu);
    let f: Vec<C> = grid.nodes().iter().map(|&r| c * r.powf(-(a + 2.0))).collect();
    let w = solve_w_particular(grid, &flow, n, &f)?;
    let exact: Vec<C> = grid
        .nodes()
        .iter()
        .map(|&r| -r.powf(-a) + c / ex.sqrt_disc * rpow(r, ex.zeta_minus) / (ex.zeta_minus + a))
        .collect();
    Ok(sup_rel(&w.values, &exact))
}

pub const MANUFACTURED_CASES: [(i64, f64, f64, f64); 4] = [
    (1, 2.5, 0.3, 2.5),
    (2, 2.5, 0.0, 3.0),
    (3, 3.0, 1.0, 4.0),
    (0, 2.5, 0.0, 3.0),
];

/// Linear solves exercising every branch of the mode assembly: generic modes, resonance, the
/// zero mode on both sides of `phi0 = 2`, and a nonzero source.
pub fn linear_verify_cases() -> Vec<(&'static str, f64, f64, f64)> {
    // (name, phi0, mu, mu0)
    vec![
        ("generic_phi0_2.5", 2.5, 0.3, 0.4),
        ("resonant_phi0_3.2", 3.2, 0.0, 0.1),
        ("subcase1_phi0_1", 1.0, 5.0, 5.0),
        ("zero_flux", 0.0, 8.0, 8.0),
    ]
}

/// Boundary data and a smooth source with `|n| <= 4` active, used by the residual checks.
pub fn verify_data(n_max: usize, grid: &RadialGrid<f64>) -> (BoundarySpectrum<f64>, SourceSpectrum<f64>) {
    let mut b = BoundarySpectrum::zeros(n_max);
    for n in 1..=n_max.min(4) {
        let s = 0.01 / n as f64;
        b.vr[n] = C::new(0.3 * s, s);
        b.vtheta[n] = C::new(s, -0.5 * s);
    }
    let mut src = SourceSpectrum::zeros(n_max, grid.len());
    for n in 0..=n_max.min(4) {
        let p = 5.0 + n as f64;
        for (j, &r) in grid.nodes().iter().enumerate() {
            let v = 0.01 * r.powf(-p) * (1.0 + 0.5 * (r.ln()).sin());
            src.modes[n][j] = if n == 0 { C::new(v, 0.0) } else { C::new(v, 0.3 * v) };
        }
    }
    (b, src)
}

/// Largest ODE residual and largest trace error over every mode of `linear_verify_cases`.
pub fn linear_residuals(grid: &RadialGrid<f64>, n_max: usize) -> Result<(f64, f64)> {
    let (b, src) = verify_data(n_max, grid);
    let (mut ode, mut trace) = (0.0f64, 0.0f64);
    for (_, phi0, mu, mu0) in linear_verify_cases() {
        let flow = ReferenceFlow::new(phi0, mu)?;
        let sol = solve_linear(
            grid,
            &LinearSolveInput {
                flow,
                boundary: &b,
                sources: &src,
                mu0,
            },
            DEFAULT_RESONANCE_TOL,
        )?;
        for n in 0..=n_max {
            let res = ode_residual(grid, &flow, n as i64, &sol.gamma[n], &sol.w[n], &src.modes[n]);
            ode = ode.max(res.max());
            let g = &sol.gamma[n];
            if n > 0 {
                let i_n = C::new(0.0, n as f64);
                trace = trace.max((i_n * g.values[0] - b.vr[n]).norm());
                trace = trace.max((g.derivative[0] + b.vtheta[n]).norm());
            } else if phi0 > 2.0 {
                trace = trace.max((-g.derivative[0].re - (mu0 - mu)).abs());
            }
        }
    }
    Ok((ode, trace))
}

pub fn run_verify(opts: VerifyOptions) -> Result<VerifyReport> {
    let grid: RadialGrid<f64> = RadialGrid::build(1e4, 64)?;
    let mut checks = Vec::new();

    checks.push(run("manufactured_linear_oracles", |m| {
        let mut ok = true;
        let fine = grid.refined();
        for (n, phi0, mu, a) in MANUFACTURED_CASES {
            let e = manufactured_error(&grid, n, phi0, mu, a)?;
            m.insert(format!("error_n{n}_phi{phi0}_mu{mu}_a{a}"), e);
            ok &= e < 1e-6;
            if !opts.quick {
                let ratio = e / manufactured_error(&fine, n, phi0, mu, a)?;
                m.insert(format!("refinement_n{n}_phi{phi0}_mu{mu}_a{a}"), ratio);
                ok &= ratio >= 3.5;
            }
        }
        Ok(ok)
    }));

    checks.push(run("ode_and_trace_residuals", |m| {
        let (ode, trace) = linear_residuals(&grid, 8)?;
        m.insert("max_ode_residual".into(), ode);
        m.insert("max_trace_error".into(), trace);
        Ok(ode < 1e-4 && trace < 1e-8)
    }));

    let (hardy_n, qform_n) = if opts.quick { (100, 50) } else { (1000, 500) };
    checks.push(run("hardy", |m| {
        let r = hardy_suite(opts.seed, hardy_n, &[2.0, 3.0, 4.0])?;
        let sharp = hardy_sharpness(2.0f64, 40.0, 32)?;
        m.insert("samples".into(), hardy_n as f64);
        m.insert("violations".into(), r.violations.len() as f64);
        m.insert("max_random_ratio".into(), r.max_ratio);
        m.insert("sharpness_ratio".into(), sharp);
        Ok(r.violations.is_empty() && sharp > 0.9)
    }));

    checks.push(run("quadratic_form", |m| {
        let r = qform_suite(opts.seed, qform_n, &[2.1, 2.5, 3.0])?;
        let mut ok = true;
        for s in &r.summaries {
            let tag = format!("phi0_{}", s.phi0);
            m.insert(
                format!("{tag}_max_decomposition_residual"),
                s.max_decomposition_residual,
            );
            m.insert(format!("{tag}_min_q1"), s.min_q1);
            m.insert(format!("{tag}_min_measured_constant"), s.min_measured_constant);
            ok &= s.max_decomposition_residual < 1e-10
                && s.q1_failures.is_empty()
                && s.bound_failures.is_empty()
                && s.min_measured_constant >= 0.2;
        }
        Ok(ok)
    }));

    checks.push(run("positivity_window", |m| {
        let mut ok = true;
        for phi0 in [2.2f64, 2.5, 3.0] {
            let roots = positivity_roots(phi0, 2.0 * phi0 + 2.0, 1e-13);
            let err = if roots.len() == 2 {
                (roots[0] - 3.0).abs().max((roots[1] - (2.0 * phi0 - 1.0)).abs())
            } else {
                f64::INFINITY
            };
            m.insert(format!("phi0_{phi0}_root_error"), err);
            ok &= err < 1e-9;
        }
        Ok(ok)
    }));

    checks.push(run("poincare_wirtinger", |m| {
        let g = qform_grid()?;
        let count = if opts.quick { 20 } else { 200 };
        let mut ok = true;
        for i in 0..count {
            ok &= poincare_wirtinger_check(&TestStream::random(&g, &[2, 3, 5, 8], opts.seed, i))?;
        }
        m.insert("samples".into(), count as f64);
        Ok(ok)
    }));

    let q1_probe = match opts.probe_phi0 {
        Some(phi0) => Some((
            phi0,
            probe_q1_negativity(phi0, opts.seed, if opts.quick { 1000 } else { 10_000 })?,
        )),
        None => None,
    };
    Ok(VerifyReport {
        seed: opts.seed,
        quick: opts.quick,
        passed: checks.iter().all(|c| c.passed),
        checks,
        q1_probe,
    })
}
