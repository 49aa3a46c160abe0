use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hamel::discretization::BoundaryTrace;
use hamel::field::{asymptotic_circulation, reconstruct, theta_points, trace_error, velocity_ring, CirculationFit};
use hamel::flows::ReferenceFlow;
use hamel::solver::{branch_sweep, picard_solve, shoot_mu, SolveError, SolveReport, Solved};
use hamel::verify::{run_verify, VerifyOptions};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{self, ModeRow};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Config = 1,
    Failed = 2,
}

pub const DEFAULT_SEED: u64 = 42;

#[derive(Serialize, Deserialize)]
struct FlowMeta {
    phi0: f64,
    mu: f64,
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    command: &'a str,
    config: &'a RunConfig,
    converged: bool,
    error: Option<String>,
    trace_error: Option<f64>,
    circulation: Option<CirculationFit<f64>>,
    report: Option<&'a SolveReport<f64>>,
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("hamel-output"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_solution(dir: &Path, cfg: &RunConfig, solved: &Solved<f64>) -> Result<()> {
    let sol = &solved.solution;
    output::write_mode_csv(&dir.join("solution.csv"), &output::mode_rows(sol))?;
    let m = cfg.field_theta_points.unwrap_or_else(|| theta_points(sol.n_max()));
    output::write_field_csv(&dir.join("field.csv"), &reconstruct(sol, m))?;
    output::write_json(
        &dir.join("flow.json"),
        &FlowMeta {
            phi0: sol.flow.phi0,
            mu: sol.flow.mu,
        },
    )
}

fn finish_solve(
    command: &str,
    cfg: &RunConfig,
    trace: &BoundaryTrace<f64>,
    result: Result<Solved<f64>, SolveError<f64>>,
) -> Result<Status> {
    let dir = out_dir(cfg)?;
    let report_path = dir.join("report.json");
    match result {
        Ok(solved) => {
            let doc = SolveDocument {
                command,
                config: cfg,
                converged: true,
                error: None,
                trace_error: Some(trace_error(&solved.solution, trace)),
                circulation: asymptotic_circulation(&solved.solution).ok(),
                report: Some(&solved.report),
            };
            write_solution(&dir, cfg, &solved)?;
            output::write_json(&report_path, &doc)?;
            let r = &solved.report;
            println!(
                "converged in {} iterations, mu = {}, ns_residual = {:.3e}; wrote {}",
                r.iterations,
                r.mu_final,
                r.ns_residual.unwrap_or(f64::NAN),
                dir.display()
            );
            Ok(Status::Ok)
        }
        Err(SolveError::Numerical(e)) => Err(e.into()),
        Err(e) => {
            let doc = SolveDocument {
                command,
                config: cfg,
                converged: false,
                error: Some(e.to_string()),
                trace_error: None,
                circulation: None,
                report: e.report(),
            };
            output::write_json(&report_path, &doc)?;
            eprintln!("{e}; report in {}", report_path.display());
            Ok(Status::Failed)
        }
    }
}

pub fn solve(cfg: &RunConfig) -> Result<Status> {
    let trace = cfg.trace()?;
    if trace.phi0 > 2.0 {
        let mu = cfg.mu.unwrap_or(trace.mu0);
        let flow = ReferenceFlow::new(trace.phi0, mu)?;
        finish_solve("solve", cfg, &trace, picard_solve(flow, &trace, &cfg.solver))
    } else {
        if cfg.mu.is_some() {
            log::warn!("mu is determined by shooting when phi0 <= 2; the configured value is ignored");
        }
        finish_solve("solve", cfg, &trace, shoot_mu(trace.phi0, &trace, &cfg.solver))
    }
}

pub fn shoot(cfg: &RunConfig) -> Result<Status> {
    let trace = cfg.trace()?;
    if trace.phi0 > 2.0 {
        bail!("shoot needs phi0 <= 2, got {}; use solve or branch", trace.phi0);
    }
    finish_solve("shoot", cfg, &trace, shoot_mu(trace.phi0, &trace, &cfg.solver))
}

#[derive(Serialize)]
struct BranchRow {
    mu: f64,
    converged: bool,
    iterations: Option<usize>,
    trace_error: Option<f64>,
    /// Sup difference of the boundary velocity against the first converged member.
    trace_difference: Option<f64>,
    mu_eff: Option<f64>,
    ns_residual: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BranchDocument<'a> {
    command: &'a str,
    config: &'a RunConfig,
    all_converged: bool,
    members: Vec<BranchRow>,
    reports: Vec<Option<&'a SolveReport<f64>>>,
}

pub fn branch(cfg: &RunConfig) -> Result<Status> {
    let trace = cfg.trace()?;
    let mus = match &cfg.mu_list {
        Some(m) if !m.is_empty() => m.clone(),
        _ => bail!("branch needs a nonempty mu_list"),
    };
    let members = branch_sweep(trace.phi0, &trace, &mus, &cfg.solver)?;
    let dir = out_dir(cfg)?;
    let m = theta_points(cfg.solver.n_max);
    let first_ring = members
        .iter()
        .find_map(|b| b.result.as_ref().ok())
        .map(|s| velocity_ring(&s.solution, 0, m));
    let mut rows = Vec::with_capacity(members.len());
    for (k, b) in members.iter().enumerate() {
        rows.push(match &b.result {
            Ok(s) => {
                let ring = velocity_ring(&s.solution, 0, m);
                let diff = first_ring.as_ref().map(|f| {
                    f.0.iter()
                        .zip(&ring.0)
                        .chain(f.1.iter().zip(&ring.1))
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                });
                output::write_mode_csv(&dir.join(format!("solution_{k}.csv")), &output::mode_rows(&s.solution))?;
                BranchRow {
                    mu: b.mu,
                    converged: true,
                    iterations: Some(s.report.iterations),
                    trace_error: Some(trace_error(&s.solution, &trace)),
                    trace_difference: diff,
                    mu_eff: asymptotic_circulation(&s.solution).ok().map(|c| c.mu_eff),
                    ns_residual: s.report.ns_residual,
                    error: None,
                }
            }
            Err(e) => BranchRow {
                mu: b.mu,
                converged: false,
                iterations: e.report().map(|r| r.iterations),
                trace_error: None,
                trace_difference: None,
                mu_eff: None,
                ns_residual: None,
                error: Some(e.to_string()),
            },
        });
    }
    let all_converged = rows.iter().all(|r| r.converged);
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), output::fmt_f64);
    let mut table = csv::Writer::from_path(dir.join("branch.csv"))?;
    table.write_record([
        "mu",
        "converged",
        "trace_error",
        "trace_difference",
        "mu_eff",
        "ns_residual",
    ])?;
    println!(
        "{:>12} {:>9} {:>12} {:>12} {:>14} {:>12}",
        "mu", "converged", "trace_err", "trace_diff", "mu_eff", "ns_residual"
    );
    for r in &rows {
        table.write_record([
            output::fmt_f64(r.mu),
            r.converged.to_string(),
            opt(r.trace_error),
            opt(r.trace_difference),
            opt(r.mu_eff),
            opt(r.ns_residual),
        ])?;
        let short = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{:>12.6} {:>9} {:>12} {:>12} {:>14} {:>12}",
            r.mu,
            r.converged,
            short(r.trace_error),
            short(r.trace_difference),
            r.mu_eff.map_or_else(|| "-".to_string(), |v| format!("{v:.8}")),
            short(r.ns_residual)
        );
    }
    table.flush()?;
    let reports = members
        .iter()
        .map(|b| b.result.as_ref().map_or_else(|e| e.report(), |s| Some(&s.report)))
        .collect();
    output::write_json(
        &dir.join("branch.json"),
        &BranchDocument {
            command: "branch",
            config: cfg,
            all_converged,
            members: rows,
            reports,
        },
    )?;
    if all_converged {
        Ok(Status::Ok)
    } else {
        let failed: Vec<String> = members
            .iter()
            .filter(|b| b.result.is_err())
            .map(|b| b.mu.to_string())
            .collect();
        eprintln!("branch members failed at mu = {}", failed.join(", "));
        Ok(Status::Failed)
    }
}

pub fn verify(cfg: &RunConfig, quick: bool, probe_phi0: Option<f64>) -> Result<Status> {
    let opts = VerifyOptions {
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        quick,
        probe_phi0,
    };
    let report = run_verify(opts)?;
    for c in &report.checks {
        println!(
            "{:<28} {} ({:.2}s)",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.seconds
        );
    }
    if let Some((phi0, outcome)) = &report.q1_probe {
        println!("q1 probe at phi0 = {phi0}: {outcome:?} (informational)");
    }
    let dir = out_dir(cfg)?;
    output::write_json(&dir.join("verify.json"), &report)?;
    Ok(if report.passed { Status::Ok } else { Status::Failed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Serialize, Deserialize)]
struct ModesDocument {
    phi0: f64,
    mu: f64,
    modes: Vec<ModeRow>,
}

fn load_modes(input: &Path) -> Result<(FlowMeta, Vec<ModeRow>)> {
    let json = input.join("modes.json");
    if json.exists() {
        let text = fs::read_to_string(&json)?;
        let doc: ModesDocument = serde_json::from_str(&text).with_context(|| format!("parsing {}", json.display()))?;
        return Ok((
            FlowMeta {
                phi0: doc.phi0,
                mu: doc.mu,
            },
            doc.modes,
        ));
    }
    let csv = input.join("solution.csv");
    let flow = input.join("flow.json");
    if !csv.exists() || !flow.exists() {
        bail!(
            "{} holds neither modes.json nor solution.csv with flow.json",
            input.display()
        );
    }
    let meta: FlowMeta =
        serde_json::from_str(&fs::read_to_string(&flow)?).with_context(|| format!("parsing {}", flow.display()))?;
    Ok((meta, output::read_mode_csv(&csv)?))
}

pub fn export(input: &Path, format: ExportFormat, out: &Path) -> Result<Status> {
    let (meta, rows) = load_modes(input)?;
    let flow = ReferenceFlow::new(meta.phi0, meta.mu)?;
    let decay = output::decay_rows(&rows, &flow);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match format {
        ExportFormat::Csv => {
            output::write_mode_csv(&out.join("solution.csv"), &rows)?;
            output::write_decay_csv(&out.join("decay.csv"), &decay)?;
            output::write_json(&out.join("flow.json"), &meta)?;
        }
        ExportFormat::Json => {
            output::write_json(
                &out.join("modes.json"),
                &ModesDocument {
                    phi0: meta.phi0,
                    mu: meta.mu,
                    modes: rows,
                },
            )?;
            output::write_json(&out.join("decay.json"), &decay)?;
        }
    }
    println!("exported {} rows to {}", decay.len(), out.display());
    Ok(Status::Ok)
}
