mod common;

use common::*;
use hamel::field::*;
use hamel::flows::ReferenceFlow;
use hamel::solver::{picard_solve, Solved, SolverConfig};

fn solved(mu: f64) -> Solved<f64> {
    picard_solve(
        ReferenceFlow::new(2.5, mu).unwrap(),
        &branch_trace(),
        &SolverConfig::default(),
    )
    .unwrap()
}

#[test]
fn corrupting_one_mode_is_detected() {
    // mu != mu0 so the zero mode carries an O(1) share of the vorticity
    let s = solved(0.15);
    let clean = ns_residual(&s.solution);
    for n in [0usize, 1, 2] {
        // a uniform rescaling of a homogeneous profile would still solve the linear part,
        // so distort the shape instead
        let mut bad = s.solution.clone();
        let nodes = bad.grid.nodes().to_vec();
        for (j, &r) in nodes.iter().enumerate() {
            let (f, df) = (1.0 + 0.01 * r.ln().sin(), 0.01 * r.ln().cos() / r);
            let m = &mut bad.w[n];
            m.derivative[j] = m.derivative[j] * f + m.values[j] * df;
            m.values[j] *= f;
        }
        let corrupted = ns_residual(&bad);
        assert!(corrupted >= 10.0 * clean, "mode {n}: {corrupted} vs {clean}");
    }
}

#[test]
fn reconstruction_matches_boundary_trace() {
    let s = solved(0.15);
    let trace = branch_trace();
    assert!(trace_error(&s.solution, &trace) < 1e-10);
    let m = theta_points(s.solution.n_max());
    let (ur, ut) = velocity_ring(&s.solution, 0, m);
    let (ur_star, ut_star) = trace.samples(m);
    for k in 0..m {
        assert!((ur[k] - ur_star[k]).abs() < 1e-10 && (ut[k] - ut_star[k]).abs() < 1e-10);
    }
}

#[test]
fn reconstructed_velocity_is_divergence_free() {
    assert!(divergence_residual(&solved(0.25).solution) < 1e-6);
}

#[test]
fn physical_field_has_one_row_per_node() {
    let s = solved(0.2);
    let f = reconstruct(&s.solution, 64);
    assert_eq!(f.r.len(), s.solution.grid.len());
    assert_eq!(f.theta.len(), 64);
    assert!(f
        .ur
        .iter()
        .chain(&f.utheta)
        .chain(&f.vorticity)
        .all(|row| row.len() == 64));
    // far field approaches the reference flow
    let last = f.r.len() - 1;
    let r = f.r[last];
    assert!((f.ur[last][7] * r + 2.5).abs() < 1e-3);
}

#[test]
fn asymptotic_circulation_recovers_mu() {
    for mu in [0.15, 0.2, 0.25] {
        let fit = asymptotic_circulation(&solved(mu).solution).unwrap();
        assert!((fit.mu_eff - mu).abs() < 0.05 * mu, "{mu}: {fit:?}");
    }
}

#[test]
fn nonlinear_decay_respects_the_ceiling() {
    let s = solved(0.2);
    let decay = s.report.decay.unwrap();
    let alpha = ReferenceFlow::new(2.5, 0.2).unwrap().alpha_window().0;
    let mut fitted = 0;
    for m in &decay.modes {
        if let Some(slope) = m.gamma_slope {
            assert!(slope <= -alpha + 0.05, "mode {}: {slope}", m.n);
            fitted += 1;
        }
    }
    assert!(fitted >= 3);
}
