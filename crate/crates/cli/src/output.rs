use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use hamel::field::{predicted_gamma_slope, PhysicalField};
use hamel::flows::ReferenceFlow;
use hamel::linear_solver::SpectralSolution;
use serde::ser::Serialize;
use serde::Deserialize;

/// Every float is written with 17 significant digits so reports are byte-stable.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

/// One radial node of one mode, the unit of `solution.csv`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, Deserialize)]
pub struct ModeRow {
    pub n: i64,
    pub r: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub dgamma_re: f64,
    pub dgamma_im: f64,
    pub w_re: f64,
    pub w_im: f64,
    pub dw_re: f64,
    pub dw_im: f64,
}

impl ModeRow {
    fn fields(&self) -> [f64; 9] {
        [
            self.r,
            self.gamma_re,
            self.gamma_im,
            self.dgamma_re,
            self.dgamma_im,
            self.w_re,
            self.w_im,
            self.dw_re,
            self.dw_im,
        ]
    }
}

pub fn mode_rows(sol: &SpectralSolution<f64>) -> Vec<ModeRow> {
    let mut rows = Vec::with_capacity(sol.gamma.len() * sol.grid.len());
    for (g, w) in sol.gamma.iter().zip(&sol.w) {
        for (j, &r) in sol.grid.nodes().iter().enumerate() {
            rows.push(ModeRow {
                n: g.n,
                r,
                gamma_re: g.values[j].re,
                gamma_im: g.values[j].im,
                dgamma_re: g.derivative[j].re,
                dgamma_im: g.derivative[j].im,
                w_re: w.values[j].re,
                w_im: w.values[j].im,
                dw_re: w.derivative[j].re,
                dw_im: w.derivative[j].im,
            });
        }
    }
    rows
}

const MODE_HEADER: [&str; 10] = [
    "n",
    "r",
    "gamma_re",
    "gamma_im",
    "dgamma_re",
    "dgamma_im",
    "w_re",
    "w_im",
    "dw_re",
    "dw_im",
];

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

pub fn write_mode_csv(path: &Path, rows: &[ModeRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(MODE_HEADER)?;
    for row in rows {
        let mut rec = vec![row.n.to_string()];
        rec.extend(row.fields().iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mode_csv(path: &Path) -> Result<Vec<ModeRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = reader.deserialize().collect::<Result<Vec<ModeRow>, _>>();
    rows.with_context(|| format!("parsing {}", path.display()))
}

pub fn write_field_csv(path: &Path, field: &PhysicalField<f64>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["r", "theta", "ur", "utheta", "vorticity"])?;
    for (j, &r) in field.r.iter().enumerate() {
        for (k, &t) in field.theta.iter().enumerate() {
            w.write_record([r, t, field.ur[j][k], field.utheta[j][k], field.vorticity[j][k]].map(fmt_f64))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format decay table row: one per `(mode, node)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DecayRow {
    pub n: i64,
    pub r: f64,
    pub abs_gamma: f64,
    pub abs_w: f64,
    pub predicted_slope: f64,
}

pub fn decay_rows(rows: &[ModeRow], flow: &ReferenceFlow<f64>) -> Vec<DecayRow> {
    rows.iter()
        .map(|m| DecayRow {
            n: m.n,
            r: m.r,
            abs_gamma: m.gamma_re.hypot(m.gamma_im),
            abs_w: m.w_re.hypot(m.w_im),
            predicted_slope: predicted_gamma_slope(flow, m.n),
        })
        .collect()
}

pub fn write_decay_csv(path: &Path, rows: &[DecayRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "r", "abs_gamma", "abs_w", "predicted_slope"])?;
    for d in rows {
        let mut rec = vec![d.n.to_string()];
        rec.extend([d.r, d.abs_gamma, d.abs_w, d.predicted_slope].map(fmt_f64));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
