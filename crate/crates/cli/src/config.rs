use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hamel::discretization::{BoundarySource, BoundaryTrace};
use hamel::solver::SolverConfig;
use serde::{Deserialize, Serialize};

/// Boundary perturbation as given in a run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// Perturbation modes `n = 0, 1, ...` as `[re, im]` pairs.
    Modes { vr: Vec<[f64; 2]>, vtheta: Vec<[f64; 2]> },
    /// Full velocity `(u_r, u_theta)` on uniform angles `2 pi k / m`.
    ThetaSamples { ur: Vec<f64>, utheta: Vec<f64> },
    /// CSV file with `ur,utheta` columns, resolved relative to the config file.
    SampleFile { path: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub phi0: Option<f64>,
    pub mu0: Option<f64>,
    /// Circulation at infinity for `solve` when `phi0 > 2`; defaults to `mu0`.
    pub mu: Option<f64>,
    pub mu_list: Option<Vec<f64>>,
    pub boundary: Option<BoundaryConfig>,
    pub solver: SolverConfig<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Angular points in `field.csv`; defaults to `max(4N, 8)`.
    pub field_theta_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    ur: f64,
    utheta: f64,
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut ur = Vec::new();
    let mut utheta = Vec::new();
    for row in reader.deserialize() {
        let row: SampleRow = row.with_context(|| format!("parsing {}", path.display()))?;
        ur.push(row.ur);
        utheta.push(row.utheta);
    }
    Ok((ur, utheta))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if let Some(BoundaryConfig::SampleFile { path: p }) = &mut cfg.boundary {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Boundary trace; without boundary data this is the unperturbed reference trace.
    pub fn trace(&self) -> Result<BoundaryTrace<f64>> {
        let source = match self.boundary.clone() {
            None => {
                let (Some(phi0), Some(mu0)) = (self.phi0, self.mu0) else {
                    bail!("phi0 and mu0 are required when no boundary data is given");
                };
                return Ok(BoundaryTrace::unperturbed(phi0, mu0, self.solver.n_max));
            }
            Some(BoundaryConfig::Modes { vr, vtheta }) => BoundarySource::Modes { vr, vtheta },
            Some(BoundaryConfig::ThetaSamples { ur, utheta }) => BoundarySource::ThetaSamples { ur, utheta },
            Some(BoundaryConfig::SampleFile { path }) => {
                let (ur, utheta) = read_samples(&path)?;
                BoundarySource::ThetaSamples { ur, utheta }
            }
        };
        let samples = matches!(source, BoundarySource::ThetaSamples { .. });
        let trace = source.into_trace(self.phi0, self.mu0)?;
        if samples {
            // sampled data carries its own flux and circulation; explicit values must agree
            for (name, given, found) in [("phi0", self.phi0, trace.phi0), ("mu0", self.mu0, trace.mu0)] {
                if let Some(g) = given {
                    if (g - found).abs() > 1e-9 * (1.0 + g.abs()) {
                        bail!("{name} = {g} disagrees with the boundary samples ({found})");
                    }
                }
            }
        }
        Ok(trace)
    }
}
