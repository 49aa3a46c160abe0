//! Numerical checks of the inequalities behind uniqueness: a weighted Hardy inequality, the
//! positivity window in `alpha`, Poincare-Wirtinger for modes `|k| >= 2` and the splitting of the
//! quadratic form `Q+ = Q1 + Q(1)`.
//!
//! Test streams are written in `x = log r` as `g(x) = b(x) T(x)` with a smooth bump `b` vanishing
//! to all orders at both ends of the span and `T` a random trigonometric sum, so every integrand
//! vanishes with all derivatives at the ends and the grid quadrature converges spectrally.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{PlainQuadrature, RadialGrid};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

type C = Complex<f64>;

/// Radial profile of mode `k` of a test stream function with its first two `r`-derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamMode<T> {
    pub k: i64,
    pub phi: Vec<Complex<T>>,
    pub d1: Vec<Complex<T>>,
    pub d2: Vec<Complex<T>>,
}

/// Modes `k > 0` of a real stream function; `-k` is the conjugate and is accounted for in sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestStream<T> {
    pub grid: RadialGrid<T>,
    pub modes: Vec<StreamMode<T>>,
    pub seed: Option<(u64, u64)>,
}

/// `g(x)` with `d/dx` and `d^2/dx^2`.
type Jet = (C, C, C);

/// Smooth bump `exp(p x - c/(t(1-t)))`, `t = x/L`, and its two derivatives.
fn bump(x: f64, len: f64, p: f64, c: f64) -> (f64, f64, f64) {
    let t = x / len;
    if t <= 0.0 || t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = t * (1.0 - t);
    let du = (1.0 - 2.0 * t) / len;
    let ddu = -2.0 / (len * len);
    let psi = p * x - c / u;
    let dpsi = p + c * du / (u * u);
    let ddpsi = c * (ddu / (u * u) - 2.0 * du * du / (u * u * u));
    let e = psi.exp();
    (e, dpsi * e, (ddpsi + dpsi * dpsi) * e)
}

/// `sum_j c_j e^{i beta_j x}` with derivatives.
fn trig(x: f64, terms: &[(f64, C)]) -> Jet {
    let mut out = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
    for &(beta, c) in terms {
        let e = C::from_polar(1.0, beta * x) * c;
        out.0 += e;
        out.1 += e * C::new(0.0, beta);
        out.2 -= e * (beta * beta);
    }
    out
}

/// Random envelope-times-trigonometric profile in `x`.
#[derive(Clone, Debug)]
struct Profile {
    len: f64,
    p: f64,
    c: f64,
    terms: Vec<(f64, C)>,
}

impl Profile {
    fn random<R: Rng>(rng: &mut R, len: f64) -> Self {
        let p = rng.gen_range(-2.0..0.5);
        let c = rng.gen_range(0.3..1.0);
        let terms = (-3i32..=3)
            .map(|j| {
                let scale = 1.0 / (1.0 + (j * j) as f64);
                let beta = PI * j as f64 / len;
                (beta, C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
            })
            .collect();
        Self { len, p, c, terms }
    }

    fn jet(&self, x: f64) -> Jet {
        let (b, db, ddb) = bump(x, self.len, self.p, self.c);
        let (t, dt, ddt) = trig(x, &self.terms);
        (t * b, dt * b + t * db, ddt * b + dt * db * 2.0 + t * ddb)
    }
}

/// Converts an `x`-jet into `(phi, phi_r, phi_rr)` at radius `r = e^x`.
fn to_radial(r: f64, (g, gx, gxx): Jet) -> Jet {
    (g, gx / r, (gxx - gx) / (r * r))
}

fn cast<T: Real>(z: C) -> Complex<T> {
    Complex::new(lit(z.re), lit(z.im))
}

impl<T: Real> StreamMode<T> {
    /// Samples a profile given as a function of `x = log r`.
    pub fn from_log_profile(grid: &RadialGrid<T>, k: i64, f: impl Fn(f64) -> (C, C, C)) -> Self {
        let mut m = Self {
            k,
            phi: Vec::with_capacity(grid.len()),
            d1: Vec::with_capacity(grid.len()),
            d2: Vec::with_capacity(grid.len()),
        };
        for j in 0..grid.len() {
            let x = to_f64(grid.x(j));
            let (a, b, c) = to_radial(x.exp(), f(x));
            m.phi.push(cast(a));
            m.d1.push(cast(b));
            m.d2.push(cast(c));
        }
        m
    }
}

/// Per-sample RNG: the suite seed selects the key, the sample index the stream.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

impl<T: Real> TestStream<T> {
    /// Random stream with the given positive modes; amplitudes decay like `k^{-2}`.
    pub fn random(grid: &RadialGrid<T>, ks: &[i64], seed: u64, index: u64) -> Self {
        let mut rng = sample_rng(seed, index);
        let len = to_f64(grid.r_max()).ln();
        let modes = ks
            .iter()
            .map(|&k| {
                let prof = Profile::random(&mut rng, len);
                let amp = rng.gen_range(0.1..1.0) / (k * k) as f64;
                StreamMode::from_log_profile(grid, k, |x| {
                    let (a, b, c) = prof.jet(x);
                    (a * amp, b * amp, c * amp)
                })
            })
            .collect();
        Self {
            grid: grid.clone(),
            modes,
            seed: Some((seed, index)),
        }
    }

    pub fn vanishes_at_boundary(&self) -> bool {
        self.modes.iter().all(|m| m.phi[0].norm() == T::zero())
    }
}

/// `2 pi int f(r) r dr` over the grid, given `f` at the nodes.
fn radial_integral<T: Real>(grid: &RadialGrid<T>, quad: &PlainQuadrature<T>, f: impl Fn(usize, T) -> T) -> T {
    let g: Vec<T> = grid.nodes().iter().enumerate().map(|(j, &r)| f(j, r) * r * r).collect();
    quad.integrate(&g) * lit(2.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyOutcome<T> {
    pub lhs: T,
    pub rhs: T,
    pub ok: bool,
}

/// `int |w|^2 r^{alpha-2} dr <= 4/(alpha-1)^2 int |w_r|^2 r^alpha dr` on `[1, R_max]`.
pub fn hardy_check<T: Real>(
    grid: &RadialGrid<T>,
    w: &[Complex<T>],
    dw: &[Complex<T>],
    alpha: T,
) -> Result<HardyOutcome<T>> {
    if !(alpha > T::one()) {
        return Err(Error::InvalidParameter(format!(
            "Hardy check needs alpha > 1, got {alpha}"
        )));
    }
    if w.len() != grid.len() || dw.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: w.len().min(dw.len()),
        });
    }
    if w[0].norm() > lit(1e-12) {
        return Err(Error::InvalidParameter("Hardy check needs w(1) = 0".into()));
    }
    let quad = PlainQuadrature::new(grid.h());
    // dr = r dx
    let l: Vec<T> = grid
        .nodes()
        .iter()
        .zip(w)
        .map(|(&r, z)| z.norm_sqr() * r.powf(alpha - T::one()))
        .collect();
    let rr: Vec<T> = grid
        .nodes()
        .iter()
        .zip(dw)
        .map(|(&r, z)| z.norm_sqr() * r.powf(alpha + T::one()))
        .collect();
    let am1 = alpha - T::one();
    let lhs = quad.integrate(&l);
    let rhs = quad.integrate(&rr) * lit::<T>(4.0) / (am1 * am1);
    Ok(HardyOutcome {
        lhs,
        rhs,
        ok: lhs <= rhs * lit(1.0 + 1e-8),
    })
}

/// Ratio `lhs/rhs` on `w = r^{(1-alpha)/2} sin(pi log r / L)` over `[1, e^L]`; tends to 1 as `L` grows.
pub fn hardy_sharpness<T: Real>(alpha: T, span: f64, nodes_per_decade: usize) -> Result<T> {
    let grid = RadialGrid::build(lit::<T>(span.exp()), nodes_per_decade)?;
    let s = (1.0 - to_f64(alpha)) / 2.0;
    let beta = PI / span;
    let m = StreamMode::from_log_profile(&grid, 1, |x| {
        let e = (s * x).exp();
        let (sn, cs) = (beta * x).sin_cos();
        (
            C::new(e * sn, 0.0),
            C::new(e * (s * sn + beta * cs), 0.0),
            C::new(0.0, 0.0),
        )
    });
    let mut w = m.phi;
    w[0] = Complex::new(T::zero(), T::zero());
    let out = hardy_check(&grid, &w, &m.d1, alpha)?;
    Ok(out.lhs / out.rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardyViolation {
    pub seed: u64,
    pub index: u64,
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardySuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub alphas: Vec<f64>,
    pub violations: Vec<HardyViolation>,
    /// Largest `lhs/rhs` seen over the random samples.
    pub max_ratio: f64,
}

/// Random admissible functions (vanishing at both ends), every sample tested at every `alpha`.
pub fn hardy_suite(seed: u64, samples: usize, alphas: &[f64]) -> Result<HardySuiteReport> {
    let grid: RadialGrid<f64> = RadialGrid::build(1e3, 64)?;
    let results: Vec<Vec<(f64, HardyOutcome<f64>, u64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = TestStream::random(&grid, &[1], seed, i);
            let m = &s.modes[0];
            alphas
                .iter()
                .map(|&a| hardy_check(&grid, &m.phi, &m.d1, a).map(|o| (a, o, i)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut report = HardySuiteReport {
        seed,
        samples,
        alphas: alphas.to_vec(),
        violations: Vec::new(),
        max_ratio: 0.0,
    };
    for (alpha, o, index) in results.into_iter().flatten() {
        if o.rhs > 0.0 {
            report.max_ratio = report.max_ratio.max(o.lhs / o.rhs);
        }
        if !o.ok {
            report.violations.push(HardyViolation {
                seed,
                index,
                alpha,
                lhs: o.lhs,
                rhs: o.rhs,
            });
        }
    }
    Ok(report)
}

/// `1 - 4/(alpha-1)^2 ((phi0-1) - (phi0+1-alpha)(alpha-1)/2)`.
pub fn positivity_factor<T: Real>(alpha: T, phi0: T) -> T {
    let one = T::one();
    let two: T = lit(2.0);
    let am1 = alpha - one;
    one - lit::<T>(4.0) / (am1 * am1) * ((phi0 - one) - (phi0 + one - alpha) * am1 / two)
}

/// Sign changes of `positivity_factor(., phi0)` on `(1, alpha_max]`, located by bisection to `tol`.
pub fn positivity_roots<T: Real>(phi0: T, alpha_max: T, tol: T) -> Vec<T> {
    let f = |a: T| positivity_factor(a, phi0);
    let step: T = lit(0.01);
    let mut roots = Vec::new();
    let mut a = T::one() + lit(0.005);
    let mut fa = f(a);
    while a < alpha_max {
        let b = a + step;
        let fb = f(b);
        if fa == T::zero() {
            roots.push(a);
        } else if fa * fb < T::zero() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > tol {
                let mid = (lo + hi) / lit(2.0);
                let fm = f(mid);
                if fm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < T::zero()) == (flo < T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo + hi) / lit(2.0));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// `sum k^4 |c_k|^2 >= 4 sum k^2 |c_k|^2` at every node, for `phi` and for `phi_r`.
pub fn poincare_wirtinger_check<T: Real>(stream: &TestStream<T>) -> Result<bool> {
    if stream
        .modes
        .iter()
        .any(|m| m.k.abs() <= 1 && m.phi.iter().any(|z| z.norm() > T::zero()))
    {
        return Err(Error::LowModes);
    }
    let slack: T = lit(1.0 - 1e-12);
    for j in 0..stream.grid.len() {
        for field in [
            |m: &StreamMode<T>, j: usize| m.phi[j],
            |m: &StreamMode<T>, j: usize| m.d1[j],
        ] {
            let (mut k4, mut k2) = (T::zero(), T::zero());
            for m in &stream.modes {
                let kk: T = lit((m.k * m.k) as f64);
                let a = field(m, j).norm_sqr();
                k4 = k4 + kk * kk * a;
                k2 = k2 + kk * a;
            }
            if k4 < lit::<T>(4.0) * k2 * slack {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QFormResult<T> {
    pub phi0: T,
    pub q_plus: T,
    pub q_1: T,
    pub q_sup1: T,
    /// `int [k^4|phi|^2/(4r^4) + k^2|phi|^2/(4r^4) + k^2|phi_r|^2/r^2 + 2|phi_r|^2/r^2 + |phi_rr|^2]`
    /// over the modes `|k| >= 2`.
    pub lower_bound_rhs: T,
    /// `||grad w(1)||^2` and `||w(1)/|x| ||^2` for the part with `|k| >= 2`.
    pub gradient_norm: T,
    pub weighted_norm: T,
    pub decomposition_residual: T,
    /// Whether `phi0` lies in `(2, 3]`, where both positivity statements are expected.
    pub asserted: bool,
    pub q1_nonnegative: bool,
    pub sup1_above_bound: bool,
}

impl<T: Real> QFormResult<T> {
    /// `Q(1) / (||grad w(1)||^2 + ||w(1)/|x| ||^2)`.
    pub fn measured_constant(&self) -> Option<T> {
        let d = self.gradient_norm + self.weighted_norm;
        (d > T::zero()).then(|| self.q_sup1 / d)
    }
}

/// Mode densities of `|grad w|^2` and of `phi0 (|w_r|^2 - |w_theta|^2)/r^2` for `w = grad-perp phi`.
fn densities<T: Real>(k: T, r: T, phi: Complex<T>, d1: Complex<T>, d2: Complex<T>, phi0: T) -> (T, T) {
    let two: T = lit(2.0);
    let r2 = r * r;
    let a = two * k * k * (d1 / r - phi / r2).norm_sqr();
    let b = d2.norm_sqr();
    let c = (-phi * (k * k) / r2 + d1 / r).norm_sqr();
    let p = phi0 * (k * k * phi.norm_sqr() / (r2 * r2) - d1.norm_sqr() / r2);
    (a + b + c, p)
}

/// Evaluates the splitting of the quadratic form on `stream` (modes `k >= 1`, conjugates implied).
pub fn q_form<T: Real>(phi0: T, stream: &TestStream<T>) -> Result<QFormResult<T>> {
    if stream.modes.iter().any(|m| m.k <= 0) {
        return Err(Error::InvalidParameter(
            "q_form takes modes k >= 1; the zero mode is excluded".into(),
        ));
    }
    let grid = &stream.grid;
    let quad = PlainQuadrature::new(grid.h());
    // each stored mode stands for k and -k
    let both: T = lit(2.0);
    let quarter: T = lit(0.25);
    let (mut q_plus, mut q_1, mut q_sup1, mut bound, mut grad, mut weighted) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for m in &stream.modes {
        let k: T = lit(m.k as f64);
        let full = radial_integral(grid, &quad, |j, r| {
            let (g, p) = densities(k, r, m.phi[j], m.d1[j], m.d2[j], phi0);
            g + p
        }) * both;
        q_plus = q_plus + full;
        if m.k == 1 {
            let three: T = lit(3.0);
            q_1 = q_1
                + radial_integral(grid, &quad, |j, r| {
                    (three - phi0) * (m.d1[j] / r - m.phi[j] / (r * r)).norm_sqr() + m.d2[j].norm_sqr()
                }) * both;
            continue;
        }
        q_sup1 = q_sup1 + full;
        grad = grad
            + radial_integral(grid, &quad, |j, r| {
                densities(k, r, m.phi[j], m.d1[j], m.d2[j], T::zero()).0
            }) * both;
        weighted = weighted
            + radial_integral(grid, &quad, |j, r| {
                let r2 = r * r;
                k * k * m.phi[j].norm_sqr() / (r2 * r2) + m.d1[j].norm_sqr() / r2
            }) * both;
        bound = bound
            + radial_integral(grid, &quad, |j, r| {
                let r2 = r * r;
                let (p2, d2) = (m.phi[j].norm_sqr() / (r2 * r2), m.d1[j].norm_sqr() / r2);
                let k2 = k * k;
                quarter * k2 * k2 * p2 + quarter * k2 * p2 + k2 * d2 + lit::<T>(2.0) * d2 + m.d2[j].norm_sqr()
            }) * both;
    }
    let scale = q_plus.abs().max(q_1.abs()).max(q_sup1.abs());
    let tol_q = lit::<T>(1e-8) * scale;
    let residual = (q_plus - q_1 - q_sup1).abs();
    Ok(QFormResult {
        phi0,
        q_plus,
        q_1,
        q_sup1,
        lower_bound_rhs: bound,
        gradient_norm: grad,
        weighted_norm: weighted,
        decomposition_residual: if scale > T::zero() { residual / scale } else { T::zero() },
        asserted: phi0 > lit(2.0) && phi0 <= lit(3.0),
        q1_nonnegative: q_1 >= -tol_q,
        sup1_above_bound: q_sup1 >= bound - tol_q,
    })
}

/// Grid used by the randomized quadratic-form suites.
pub fn qform_grid() -> Result<RadialGrid<f64>> {
    RadialGrid::build(1e3, 128)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QFormSummary {
    pub phi0: f64,
    pub samples: usize,
    pub max_decomposition_residual: f64,
    pub min_q1: f64,
    pub q1_failures: Vec<u64>,
    pub bound_failures: Vec<u64>,
    pub min_measured_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QFormSuiteReport {
    pub seed: u64,
    pub summaries: Vec<QFormSummary>,
}

/// Modes used by the random quadratic-form streams.
const QFORM_MODES: [i64; 5] = [1, 2, 3, 4, 5];

pub fn qform_suite(seed: u64, samples: usize, phi0s: &[f64]) -> Result<QFormSuiteReport> {
    let grid = qform_grid()?;
    let streams: Vec<TestStream<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| TestStream::random(&grid, &QFORM_MODES, seed, i))
        .collect();
    let mut summaries = Vec::with_capacity(phi0s.len());
    for &phi0 in phi0s {
        let results: Vec<QFormResult<f64>> = streams.par_iter().map(|s| q_form(phi0, s)).collect::<Result<_>>()?;
        let mut sum = QFormSummary {
            phi0,
            samples,
            max_decomposition_residual: 0.0,
            min_q1: f64::INFINITY,
            q1_failures: Vec::new(),
            bound_failures: Vec::new(),
            min_measured_constant: f64::INFINITY,
        };
        for (i, q) in results.iter().enumerate() {
            sum.max_decomposition_residual = sum.max_decomposition_residual.max(q.decomposition_residual);
            sum.min_q1 = sum.min_q1.min(q.q_1);
            if !q.q1_nonnegative {
                sum.q1_failures.push(i as u64);
            }
            if !q.sup1_above_bound {
                sum.bound_failures.push(i as u64);
            }
            if let Some(c) = q.measured_constant() {
                sum.min_measured_constant = sum.min_measured_constant.min(c);
            }
        }
        summaries.push(sum);
    }
    Ok(QFormSuiteReport { seed, summaries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum ProbeOutcome {
    Found { seed: u64, index: u64, q1: f64 },
    Inconclusive { samples: usize, min_q1_ratio: f64 },
}

/// Randomized search for a mode-one stream with `Q1 < 0`. `min_q1_ratio` is the smallest
/// `Q1 / int(|d_r(phi/r)|^2 + |phi_rr|^2)` seen.
pub fn probe_q1_negativity(phi0: f64, seed: u64, samples: usize) -> Result<ProbeOutcome> {
    let grid = qform_grid()?;
    let quad = PlainQuadrature::new(grid.h());
    let found: Vec<(u64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = TestStream::random(&grid, &[1], seed, i);
            let q = q_form(phi0, &s)?;
            let m = &s.modes[0];
            let norm = 2.0
                * radial_integral(&grid, &quad, |j, r| {
                    (m.d1[j] / r - m.phi[j] / (r * r)).norm_sqr() + m.d2[j].norm_sqr()
                });
            Ok((i, q.q_1, if norm > 0.0 { q.q_1 / norm } else { f64::INFINITY }))
        })
        .collect::<Result<_>>()?;
    if let Some(&(index, q1, _)) = found.iter().find(|f| f.1 < 0.0) {
        return Ok(ProbeOutcome::Found { seed, index, q1 });
    }
    let min_q1_ratio = found.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    Ok(ProbeOutcome::Inconclusive { samples, min_q1_ratio })
}
