//! Physical-space reconstruction `u = u_ref + grad-perp gamma` and the diagnostics built on it.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{fd_derivative, slope, BoundaryTrace, ModeFunction};
use crate::error::{Error, Result};
use crate::linear_solver::SpectralSolution;
use crate::scalar::{lit, Real};

/// Velocity and vorticity on an `(r, theta)` tensor grid; rows follow the radial nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicalField<T> {
    pub r: Vec<T>,
    pub theta: Vec<T>,
    pub ur: Vec<Vec<T>>,
    pub utheta: Vec<Vec<T>>,
    pub vorticity: Vec<Vec<T>>,
}

/// `e^{i n theta_m}` for `0 <= n <= n_max`, one row per angle.
fn phases<T: Real>(theta: &[T], n_max: usize) -> Vec<Vec<Complex<T>>> {
    theta
        .iter()
        .map(|&t| {
            (0..=n_max)
                .map(|n| Complex::from_polar(T::one(), t * lit(n as f64)))
                .collect()
        })
        .collect()
}

/// `c_0 + 2 Re sum_{n>=1} c_n e^{i n theta}`.
fn real_sum<T: Real>(phase: &[Complex<T>], c: impl Fn(usize) -> Complex<T>) -> T {
    let mut acc = c(0).re;
    for (n, &e) in phase.iter().enumerate().skip(1) {
        acc = acc + lit::<T>(2.0) * (c(n) * e).re;
    }
    acc
}

pub fn uniform_theta<T: Real>(m: usize) -> Vec<T> {
    (0..m).map(|j| lit(2.0 * PI * j as f64 / m as f64)).collect()
}

fn i_n<T: Real>(n: usize) -> Complex<T> {
    Complex::new(T::zero(), lit(n as f64))
}

impl<T: Real> SpectralSolution<T> {
    /// Velocity `(u_r, u_theta)` at node `j` and angle with precomputed phases.
    fn velocity_at(&self, j: usize, phase: &[Complex<T>]) -> (T, T) {
        let r = self.grid.nodes()[j];
        let (ur0, ut0) = self.flow.velocity(r);
        let ur = real_sum(phase, |n| i_n::<T>(n) * self.gamma[n].values[j]) / r;
        let ut = real_sum(phase, |n| self.gamma[n].derivative[j]);
        (ur0 + ur, ut0 - ut)
    }
}

/// Samples the solution on `theta_points` uniform angles at every radial node.
pub fn reconstruct<T: Real>(solution: &SpectralSolution<T>, theta_points: usize) -> PhysicalField<T> {
    let theta = uniform_theta::<T>(theta_points);
    let ph = phases(&theta, solution.n_max());
    let rows: Vec<(Vec<T>, Vec<T>, Vec<T>)> = (0..solution.grid.len())
        .into_par_iter()
        .map(|j| {
            let mut ur = Vec::with_capacity(theta_points);
            let mut ut = Vec::with_capacity(theta_points);
            let mut w = Vec::with_capacity(theta_points);
            for p in &ph {
                let (a, b) = solution.velocity_at(j, p);
                ur.push(a);
                ut.push(b);
                w.push(real_sum(p, |n| solution.w[n].values[j]));
            }
            (ur, ut, w)
        })
        .collect();
    let mut field = PhysicalField {
        r: solution.grid.nodes().to_vec(),
        theta,
        ur: Vec::with_capacity(rows.len()),
        utheta: Vec::with_capacity(rows.len()),
        vorticity: Vec::with_capacity(rows.len()),
    };
    for (a, b, c) in rows {
        field.ur.push(a);
        field.utheta.push(b);
        field.vorticity.push(c);
    }
    field
}

/// Default angular resolution, oversampled four times the cutoff.
pub fn theta_points(n_max: usize) -> usize {
    (4 * n_max).max(8)
}

/// `sup_theta |u(1, theta) - u*(theta)|`.
pub fn trace_error<T: Real>(solution: &SpectralSolution<T>, trace: &BoundaryTrace<T>) -> T {
    let m = theta_points(solution.n_max());
    let (ur, ut) = trace.samples(m);
    let ph = phases(&uniform_theta::<T>(m), solution.n_max());
    let mut err = T::zero();
    for (k, p) in ph.iter().enumerate() {
        let (a, b) = solution.velocity_at(0, p);
        err = err.max((a - ur[k]).abs()).max((b - ut[k]).abs());
    }
    err
}

/// Velocity at radius node `j` on `m` uniform angles.
pub fn velocity_ring<T: Real>(solution: &SpectralSolution<T>, j: usize, m: usize) -> (Vec<T>, Vec<T>) {
    let ph = phases(&uniform_theta::<T>(m), solution.n_max());
    ph.iter().map(|p| solution.velocity_at(j, p)).unzip()
}

/// Sup of `(1/r) d_r(r u_r) + (1/r) d_theta u_theta` with the radial derivative taken by
/// finite differences; the spectral construction makes everything else cancel exactly.
pub fn divergence_residual<T: Real>(solution: &SpectralSolution<T>) -> T {
    let grid = &solution.grid;
    let m = theta_points(solution.n_max());
    let ph = phases(&uniform_theta::<T>(m), solution.n_max());
    let fd: Vec<Vec<Complex<T>>> = solution.gamma.iter().map(|g| fd_derivative(grid, &g.values)).collect();
    let mut best = T::zero();
    for (j, &r) in grid.nodes().iter().enumerate() {
        for p in &ph {
            let d = real_sum(p, |n| i_n::<T>(n) * (fd[n][j] - solution.gamma[n].derivative[j])) / r;
            best = best.max(d.abs());
        }
    }
    best
}

/// Relative residual of the steady vorticity equation
/// `w_rr + (phi0+1) w_r/r + w_thth/r^2 - mu w_th/r^2 - (gamma_th/r) w_r + (gamma_r/r) w_th`
/// on interior nodes: `sup |sum| / sup max |term|`.
pub fn ns_residual<T: Real>(solution: &SpectralSolution<T>) -> T {
    let grid = &solution.grid;
    let (phi0, mu) = (solution.flow.phi0, solution.flow.mu);
    let m = theta_points(solution.n_max());
    let ph = phases(&uniform_theta::<T>(m), solution.n_max());
    let w_rr: Vec<Vec<Complex<T>>> = solution.w.iter().map(|w| fd_derivative(grid, &w.derivative)).collect();
    let len = grid.len();
    if len < 5 {
        return T::zero();
    }
    let (res, scale) = (2..len - 2)
        .into_par_iter()
        .map(|j| {
            let r = grid.nodes()[j];
            let r2 = r * r;
            let (mut res, mut scale) = (T::zero(), T::zero());
            for p in &ph {
                let nsq = |n: usize| lit::<T>((n * n) as f64);
                let w_r = real_sum(p, |n| solution.w[n].derivative[j]);
                let wrr = real_sum(p, |n| w_rr[n][j]);
                let w_th = real_sum(p, |n| i_n::<T>(n) * solution.w[n].values[j]);
                let w_thth = real_sum(p, |n| -solution.w[n].values[j] * nsq(n));
                let g_th = real_sum(p, |n| i_n::<T>(n) * solution.gamma[n].values[j]);
                let g_r = real_sum(p, |n| solution.gamma[n].derivative[j]);
                let terms = [
                    wrr,
                    (phi0 + T::one()) * w_r / r,
                    w_thth / r2,
                    -mu * w_th / r2,
                    -g_th * w_r / r,
                    g_r * w_th / r,
                ];
                let sum: T = terms.iter().copied().sum();
                res = res.max(sum.abs());
                for t in terms {
                    scale = scale.max(t.abs());
                }
            }
            (res, scale)
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    if scale > T::zero() {
        res / scale
    } else {
        T::zero()
    }
}

/// Fit `r mean(u_theta) ~ mu_eff + c1 r^{-q}` over the last two decades.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CirculationFit<T> {
    pub mu_eff: T,
    pub c1: T,
    pub q: T,
    pub rms: T,
}

const Q_MIN: f64 = 0.02;
const Q_MAX: f64 = 8.0;
const Q_STEP: f64 = 0.02;

fn fit_offset<T: Real>(r: &[T], m: &[T], q: T) -> (T, T, T) {
    let nf: T = lit(r.len() as f64);
    let b: Vec<T> = r.iter().map(|&x| x.powf(-q)).collect();
    let mb = b.iter().copied().sum::<T>() / nf;
    let mm = m.iter().copied().sum::<T>() / nf;
    let sbb: T = b.iter().map(|&x| (x - mb) * (x - mb)).sum();
    let sbm: T = b.iter().zip(m).map(|(&x, &y)| (x - mb) * (y - mm)).sum();
    let c1 = if sbb > T::zero() { sbm / sbb } else { T::zero() };
    let c0 = mm - c1 * mb;
    let rss: T = b
        .iter()
        .zip(m)
        .map(|(&x, &y)| {
            let e = y - c0 - c1 * x;
            e * e
        })
        .sum();
    (c0, c1, (rss / nf).sqrt())
}

/// `mu_eff = lim r <u_theta>`, extrapolated from `mu - r gamma_0'(r)` on the last two decades.
pub fn asymptotic_circulation<T: Real>(solution: &SpectralSolution<T>) -> Result<CirculationFit<T>> {
    let grid = &solution.grid;
    let window = grid.last_decades(2.0);
    let r: Vec<T> = grid.nodes()[window.clone()].to_vec();
    let m: Vec<T> = window
        .map(|j| solution.flow.mu - grid.nodes()[j] * solution.gamma[0].derivative[j].re)
        .collect();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergentTail);
    }
    let spread = m.iter().fold(T::zero(), |a, &v| a.max((v - m[m.len() - 1]).abs()));
    if spread == T::zero() {
        return Ok(CirculationFit {
            mu_eff: m[m.len() - 1],
            c1: T::zero(),
            q: T::zero(),
            rms: T::zero(),
        });
    }
    let mut best = (T::infinity(), T::zero());
    let steps = ((Q_MAX - Q_MIN) / Q_STEP).round() as usize;
    for k in 0..=steps {
        let q: T = lit(Q_MIN + Q_STEP * k as f64);
        let (_, _, rms) = fit_offset(&r, &m, q);
        if rms < best.0 {
            best = (rms, q);
        }
    }
    // golden-section polish inside the bracketing cell
    let step: T = lit(Q_STEP);
    let (mut a, mut b) = ((best.1 - step).max(lit(Q_MIN)), (best.1 + step).min(lit(Q_MAX)));
    let g: T = lit((5f64.sqrt() - 1.0) / 2.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if fit_offset(&r, &m, c).2 < fit_offset(&r, &m, d).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let q = (a + b) / lit(2.0);
    let (mu_eff, c1, rms) = fit_offset(&r, &m, q);
    if !mu_eff.is_finite() || q <= lit(Q_MIN * 1.0001) && c1.abs() > rms {
        return Err(Error::NonConvergentTail);
    }
    Ok(CirculationFit { mu_eff, c1, q, rms })
}

/// Log-log fit of one mode over the last two decades.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeDecay<T> {
    pub n: i64,
    pub gamma_slope: Option<T>,
    pub gamma_rms: Option<T>,
    pub w_slope: Option<T>,
    pub w_rms: Option<T>,
    /// `max(-|n|, Re zeta_n^- + 2, -2 alpha)`; for `n = 0`, `max(-(phi0-2), -2 alpha)` when `phi0 > 2`.
    pub predicted: T,
    /// `predicted - gamma_slope`; nonnegative when the mode decays at least as fast as predicted.
    pub margin: Option<T>,
}

/// Measured decay exponents. `beta0`, `beta1`, `beta_sup1` are the decay rates of the velocity
/// carried by the zero mode, the first mode and the slowest of the modes `|n| >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile<T> {
    pub alpha: T,
    pub modes: Vec<ModeDecay<T>>,
    pub beta0: Option<T>,
    pub beta1: Option<T>,
    pub beta_sup1: Option<T>,
}

/// Relative amplitude below which a mode is treated as numerically zero.
pub const NEGLIGIBLE_MODE: f64 = 1e-13;

/// `alpha_window` clipped to `[0.01, 1]`, the weight exponent used throughout.
pub fn alpha_weight<T: Real>(flow: &crate::flows::ReferenceFlow<T>) -> T {
    flow.alpha_window().0.max(lit(0.01)).min(T::one())
}

/// Slope and rms of `log |f|` against `log r` on `window`, `None` if any sample vanishes.
pub fn log_slope<T: Real>(r: &[T], f: &[T]) -> Option<(T, T)> {
    if f.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return None;
    }
    let xs: Vec<T> = r.iter().map(|v| v.ln()).collect();
    let ys: Vec<T> = f.iter().map(|v| v.ln()).collect();
    Some(slope(&xs, &ys))
}

pub fn predicted_gamma_slope<T: Real>(flow: &crate::flows::ReferenceFlow<T>, n: i64) -> T {
    let alpha = alpha_weight(flow);
    let floor = -(alpha + alpha);
    let two: T = lit(2.0);
    if n == 0 {
        return if flow.phi0 > two {
            (two - flow.phi0).max(floor)
        } else {
            floor
        };
    }
    let a: T = lit(-(n.unsigned_abs() as f64));
    a.max(flow.exponents(n).zeta_minus.re + two).max(floor)
}

/// Fits every mode of `gamma` and `w` over the last two decades.
pub fn decay_fit<T: Real>(solution: &SpectralSolution<T>) -> DecayProfile<T> {
    let grid = &solution.grid;
    let window = grid.last_decades(2.0);
    let r = &grid.nodes()[window.clone()];
    let global = solution.gamma.iter().map(|m| m.max_abs()).fold(T::zero(), T::max);
    let cutoff = global * lit(NEGLIGIBLE_MODE);
    let fit = |m: &ModeFunction<T>, f: &dyn Fn(usize) -> T| -> Option<(T, T)> {
        if !(m.max_abs() > cutoff) {
            return None;
        }
        let vals: Vec<T> = window.clone().map(f).collect();
        log_slope(r, &vals)
    };
    let mut modes = Vec::with_capacity(solution.gamma.len());
    let mut velocity = Vec::with_capacity(solution.gamma.len());
    for (g, w) in solution.gamma.iter().zip(&solution.w) {
        let n = g.n;
        let gs = fit(g, &|j| g.values[j].norm());
        let ws = fit(w, &|j| w.values[j].norm());
        let nf: T = lit(n.unsigned_abs() as f64);
        let vs = fit(g, &|j| {
            (g.values[j].norm() * nf / grid.nodes()[j]).max(g.derivative[j].norm())
        });
        velocity.push(vs.map(|(s, _)| -s));
        let predicted = predicted_gamma_slope(&solution.flow, n);
        modes.push(ModeDecay {
            n,
            gamma_slope: gs.map(|x| x.0),
            gamma_rms: gs.map(|x| x.1),
            w_slope: ws.map(|x| x.0),
            w_rms: ws.map(|x| x.1),
            predicted,
            margin: gs.map(|x| predicted - x.0),
        });
    }
    let beta_sup1 = velocity.iter().skip(2).flatten().copied().reduce(T::min);
    DecayProfile {
        alpha: alpha_weight(&solution.flow),
        modes,
        beta0: velocity.first().copied().flatten(),
        beta1: velocity.get(1).copied().flatten(),
        beta_sup1,
    }
}
