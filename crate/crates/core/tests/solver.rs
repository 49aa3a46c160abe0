mod common;

use common::*;
use hamel::flows::ReferenceFlow;
use hamel::solver::*;

fn scaled_branch_trace(s: f64) -> hamel::discretization::BoundaryTrace<f64> {
    let mut t = branch_trace();
    for z in t.vr.iter_mut().chain(t.vtheta.iter_mut()) {
        *z *= s;
    }
    t
}

fn solve_at(s: f64, config: &SolverConfig<f64>) -> Result<Solved<f64>, SolveError<f64>> {
    picard_solve(ReferenceFlow::new(2.5, 0.2).unwrap(), &scaled_branch_trace(s), config)
}

#[test]
fn contraction_ratio_grows_with_data_size() {
    let config = SolverConfig::default();
    let ratios: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&s| solve_at(s, &config).unwrap().report.contraction_ratio)
        .collect();
    assert!(
        ratios[0] < ratios[1] && ratios[1] < ratios[2] && ratios[2] < 1.0,
        "{ratios:?}"
    );
    // roughly linear in the amplitude
    assert!((ratios[2] / ratios[1] - 10.0).abs() < 3.0, "{ratios:?}");
}

#[test]
fn large_data_reports_divergence() {
    let config = SolverConfig::default();
    match solve_at(300.0, &config) {
        Err(SolveError::NotConverged(report)) => {
            assert!(!report.converged);
            assert!(report.contraction_ratio > 1.0, "{}", report.contraction_ratio);
        }
        other => panic!("expected divergence, got {:?}", other.map(|s| s.report.iterations)),
    }
}

#[test]
fn converged_iterate_is_a_fixed_point() {
    let config = SolverConfig::default();
    let s = solve_at(1.0, &config).unwrap();
    let r = s.report;
    assert!(r.converged && r.iterations < config.max_iter);
    assert!(r.fixed_point_residual.unwrap() < 2.0 * config.tol_fp);
    assert!(r.ns_residual.unwrap() < 1e-4);
    assert!(r.increment_history.last().unwrap() < &config.tol_fp);
}

#[test]
fn relaxation_reaches_the_same_fixed_point() {
    let plain = solve_at(1.0, &SolverConfig::default()).unwrap();
    let relaxed = solve_at(
        1.0,
        &SolverConfig {
            relaxation: 0.6,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    assert!(relaxed.report.iterations > plain.report.iterations);
    assert!(relaxed.solution.gamma_distance(&plain.solution, 0.5) < 1e-9);
}

#[test]
fn shooting_without_perturbation_keeps_mu0() {
    let trace = hamel::discretization::BoundaryTrace::unperturbed(1.0, 5.0, 4);
    let s = shoot_mu(1.0, &trace, &SolverConfig::default()).unwrap();
    assert_eq!(s.report.mu_final, 5.0);
    assert!(s.solution.gamma.iter().all(|m| m.is_zero()));
}

#[test]
fn shooting_closes_the_circulation() {
    let config = SolverConfig::default();
    let s = shoot_mu(1.0, &shooting_trace(1.0, 5.0, 0.01), &config).unwrap();
    let gap = 5.0 + s.solution.gamma[0].derivative[0].re - s.report.mu_final;
    assert!(gap.abs() < config.tol_mu);
    assert!(s.report.mu_final != 5.0);
    assert!(s.report.mu_history.len() >= 2);
}

#[test]
fn regime_guards() {
    let config = SolverConfig::default();
    assert!(matches!(
        shoot_mu(2.5, &branch_trace(), &config),
        Err(SolveError::Numerical(_))
    ));
    assert!(branch_sweep(1.0, &shooting_trace(1.0, 5.0, 0.01), &[5.0], &config).is_err());
    let trace = branch_trace();
    let mismatched = picard_solve(ReferenceFlow::new(3.0, 0.2).unwrap(), &trace, &config);
    assert!(matches!(mismatched, Err(SolveError::Numerical(_))));
}

#[test]
fn branch_members_solve_the_full_equations() {
    let trace = branch_trace();
    let members = branch_sweep(2.5, &trace, &[0.15, 0.2, 0.25], &SolverConfig::default()).unwrap();
    assert_eq!(members.len(), 3);
    for m in members {
        let s = m.result.unwrap();
        assert_eq!(s.report.mu_final, m.mu);
        assert!(s.report.ns_residual.unwrap() < 1e-4);
    }
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    let ok: SolverConfig<f64> = serde_json::from_str(r#"{"n_max": 8}"#).unwrap();
    assert_eq!(ok.n_max, 8);
    assert_eq!(ok.nodes_per_decade, 64);
    assert!(serde_json::from_str::<SolverConfig<f64>>(r#"{"n_maxx": 8}"#).is_err());
    for bad in [
        SolverConfig {
            relaxation: 1.5,
            ..SolverConfig::default()
        },
        SolverConfig {
            tol_fp: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            max_iter: 0,
            ..SolverConfig::default()
        },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn single_precision_instantiation() {
    let mut vtheta = vec![num_complex::Complex::new(0.0f32, 0.0); 2];
    vtheta[1].re = 0.01;
    let trace =
        hamel::discretization::BoundaryTrace::from_modes(2.5f32, 0.2, vec![Default::default(); 2], vtheta).unwrap();
    let config = SolverConfig::<f32> {
        n_max: 4,
        r_max: 1e3,
        tol_fp: 1e-5,
        ..SolverConfig::default()
    };
    let s: hamel::f32::Solved = picard_solve(ReferenceFlow::new(2.5f32, 0.2).unwrap(), &trace, &config).unwrap();
    assert!(s.report.converged);
    assert!(s.report.ns_residual.unwrap() < 1e-2);
}
