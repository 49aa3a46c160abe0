//! Mode-by-mode solution operator: given sources `F_n` and boundary data, build
//! `(gamma_n, w_n)` from the Green functions of
//!
//! ```text
//! gamma'' + gamma'/r - n^2 gamma/r^2 = -w
//! w'' + (phi0+1) w'/r - (i n mu + n^2) w/r^2 = F
//! ```
//!
//! with `i n gamma_n(1) = v*_{r,n}`, `-gamma_n'(1) = v*_{theta,n}` and decay at infinity.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{BoundarySpectrum, KernelQuadrature, ModeFunction, RadialGrid};
use crate::error::{Error, Result};
use crate::flows::{ModeExponents, ReferenceFlow};
use crate::nonlinearity::SourceSpectrum;
use crate::scalar::{lit, rpow, Real};

/// Width of the excluded band `(2, 2 + DEGENERATE_BAND)` for `phi0`.
pub const DEGENERATE_BAND: f64 = 1e-6;
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeConstants<T> {
    pub n: i64,
    pub gamma_bar: Complex<T>,
    pub w_bar: Complex<T>,
    pub resonant: bool,
}

pub struct LinearSolveInput<'a, T> {
    pub flow: ReferenceFlow<T>,
    pub boundary: &'a BoundarySpectrum<T>,
    pub sources: &'a SourceSpectrum<T>,
    /// Target circulation; only enters the homogeneous zero mode when `phi0 > 2`.
    pub mu0: T,
}

/// Per-mode profiles `(gamma_n, w_n)` for `0 <= n <= N` on a radial grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSolution<T> {
    pub grid: RadialGrid<T>,
    pub flow: ReferenceFlow<T>,
    pub gamma: Vec<ModeFunction<T>>,
    pub w: Vec<ModeFunction<T>>,
}

impl<T: Real> SpectralSolution<T> {
    pub fn zero(grid: RadialGrid<T>, flow: ReferenceFlow<T>, n_max: usize) -> Self {
        let modes: Vec<_> = (0..=n_max).map(|n| ModeFunction::zero(n as i64, grid.len())).collect();
        Self {
            grid,
            flow,
            gamma: modes.clone(),
            w: modes,
        }
    }

    pub fn n_max(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn gamma_mode(&self, n: i64) -> ModeFunction<T> {
        let m = &self.gamma[n.unsigned_abs() as usize];
        if n < 0 {
            m.conj()
        } else {
            m.clone()
        }
    }

    pub fn w_mode(&self, n: i64) -> ModeFunction<T> {
        let m = &self.w[n.unsigned_abs() as usize];
        if n < 0 {
            m.conj()
        } else {
            m.clone()
        }
    }

    /// `a * self + b * other`, mode by mode.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Self {
            grid: self.grid.clone(),
            flow: self.flow,
            gamma: self
                .gamma
                .iter()
                .zip(&other.gamma)
                .map(|(x, y)| x.combine(a, y, b))
                .collect(),
            w: self.w.iter().zip(&other.w).map(|(x, y)| x.combine(a, y, b)).collect(),
        }
    }

    /// `sup r^alpha (1+|n|)^4 |gamma_n - other_n|`.
    pub fn gamma_distance(&self, other: &Self, alpha: T) -> T {
        let mut best = T::zero();
        for (a, b) in self.gamma.iter().zip(&other.gamma) {
            let wn = lit::<T>(1.0 + a.n.unsigned_abs() as f64).powi(4);
            for (j, &r) in self.grid.nodes().iter().enumerate() {
                best = best.max(r.powf(alpha) * wn * (a.values[j] - b.values[j]).norm());
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.iter().chain(&self.w).all(|m| m.is_finite())
    }
}

fn zero_c<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Quadratures for the four kernels a mode needs.
struct ModeKernels<T> {
    ex: ModeExponents<T>,
    w_out: KernelQuadrature<T>,
    w_in: KernelQuadrature<T>,
    g_out: KernelQuadrature<T>,
    g_in: KernelQuadrature<T>,
}

impl<T: Real> ModeKernels<T> {
    fn new(grid: &RadialGrid<T>, flow: &ReferenceFlow<T>, n: i64) -> Self {
        let ex = flow.exponents(n);
        let a = Complex::new(lit::<T>(n.unsigned_abs() as f64), T::zero());
        Self {
            w_out: KernelQuadrature::new(grid.h(), ex.zeta_plus),
            w_in: KernelQuadrature::new(grid.h(), ex.zeta_minus),
            g_out: KernelQuadrature::new(grid.h(), a),
            g_in: KernelQuadrature::new(grid.h(), -a),
            ex,
        }
    }
}

fn w_particular_with<T: Real>(grid: &RadialGrid<T>, k: &ModeKernels<T>, f: &[Complex<T>]) -> Result<ModeFunction<T>> {
    let n = k.ex.n;
    if k.ex.sqrt_disc.norm() == T::zero() {
        return Err(Error::ZeroDiscriminant(n));
    }
    if f.iter().all(|z| z.norm() == T::zero()) {
        return Ok(ModeFunction::zero(n, grid.len()));
    }
    let scaled: Vec<Complex<T>> = f.iter().map(|&z| z / k.ex.sqrt_disc).collect();
    let outer = k.w_out.out_all(grid, &scaled)?;
    let inner = k.w_in.in_all(grid, &scaled)?;
    let values = outer.iter().zip(&inner).map(|(&a, &b)| a + b).collect();
    let derivative = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (k.ex.zeta_plus * outer[j] + k.ex.zeta_minus * inner[j]) / r)
        .collect();
    Ok(ModeFunction { n, values, derivative })
}

fn gamma_particular_with<T: Real>(
    grid: &RadialGrid<T>,
    k: &ModeKernels<T>,
    w: &ModeFunction<T>,
) -> Result<ModeFunction<T>> {
    let n = k.ex.n;
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    if w.is_zero() {
        return Ok(ModeFunction::zero(n, grid.len()));
    }
    let a: T = lit(n.unsigned_abs() as f64);
    let scaled: Vec<Complex<T>> = w.values.iter().map(|&z| z / (a + a)).collect();
    let outer = k.g_out.out_all(grid, &scaled)?;
    let inner = k.g_in.in_all(grid, &scaled)?;
    let values = outer.iter().zip(&inner).map(|(&p, &q)| p + q).collect();
    let derivative = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (outer[j] - inner[j]) * a / r)
        .collect();
    Ok(ModeFunction { n, values, derivative })
}

/// Particular vorticity `w_n[F]` (enters the mode with a minus sign).
pub fn solve_w_particular<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    n: i64,
    f: &[Complex<T>],
) -> Result<ModeFunction<T>> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    w_particular_with(grid, &ModeKernels::new(grid, flow, n), f)
}

/// Particular stream function `gamma_n[w] = int G(r,s) w(s) ds`, solving `L gamma = -w`.
pub fn solve_gamma_particular<T: Real>(grid: &RadialGrid<T>, n: i64, w: &ModeFunction<T>) -> Result<ModeFunction<T>> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    // gamma kernels do not depend on the flow
    let flow = ReferenceFlow {
        phi0: T::zero(),
        mu: T::zero(),
    };
    gamma_particular_with(grid, &ModeKernels::new(grid, &flow, n), w)
}

/// `w_0[F](r) = int_r^inf int_s^inf (t/s)^{phi0+1} F(t) dt ds`.
pub fn solve_w_zero<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    f: &[Complex<T>],
) -> Result<ModeFunction<T>> {
    if f.iter().all(|z| z.norm() == T::zero()) {
        return Ok(ModeFunction::zero(0, grid.len()));
    }
    let div_r = |v: &[Complex<T>]| -> Vec<Complex<T>> { v.iter().zip(grid.nodes()).map(|(&z, &r)| z / r).collect() };
    let inner_zeta = Complex::new(-(flow.phi0 + T::one()), T::zero());
    let inner = KernelQuadrature::new(grid.h(), inner_zeta).out_all(grid, &div_r(f))?;
    let values = KernelQuadrature::new(grid.h(), zero_c()).out_all(grid, &div_r(&inner))?;
    let derivative = inner.iter().map(|&z| -z).collect();
    Ok(ModeFunction {
        n: 0,
        values,
        derivative,
    })
}

/// `gamma_0[w](r) = int_r^inf int_s^inf (sigma/s) w(sigma) dsigma ds`, which solves
/// `gamma'' + gamma'/r = +w`; the assembled zero mode uses its negative.
pub fn solve_gamma_zero<T: Real>(grid: &RadialGrid<T>, w0: &ModeFunction<T>) -> Result<ModeFunction<T>> {
    if w0.is_zero() {
        return Ok(ModeFunction::zero(0, grid.len()));
    }
    let div_r = |v: &[Complex<T>]| -> Vec<Complex<T>> { v.iter().zip(grid.nodes()).map(|(&z, &r)| z / r).collect() };
    let inner =
        KernelQuadrature::new(grid.h(), Complex::new(-T::one(), T::zero())).out_all(grid, &div_r(&w0.values))?;
    let values = KernelQuadrature::new(grid.h(), zero_c()).out_all(grid, &div_r(&inner))?;
    let derivative = inner.iter().map(|&z| -z).collect();
    Ok(ModeFunction {
        n: 0,
        values,
        derivative,
    })
}

/// Constants `(gamma_bar, w_bar)` matching the boundary traces of mode `n != 0`.
pub fn boundary_constants<T: Real>(
    n: i64,
    flow: &ReferenceFlow<T>,
    trace_gamma: Complex<T>,
    trace_dgamma: Complex<T>,
    vr: Complex<T>,
    vtheta: Complex<T>,
    resonance_tol: T,
) -> Result<ModeConstants<T>> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    let zeta = flow.exponents(n).zeta_minus;
    let a: T = lit(n.unsigned_abs() as f64);
    let sgn: T = lit(n.signum() as f64);
    let two: T = lit(2.0);
    // gamma_n(1) fixed by the radial trace: gamma_n(1) = v_r / (i n)
    let target = Complex::new(T::zero(), -sgn / a) * vr;
    let g0 = target + trace_gamma;
    let shift = zeta + two;
    let resonant_gap = shift + a;
    if resonant_gap.norm() < resonance_tol {
        // gamma = gamma_bar r^{-a} + w_bar/(2a) r^{-a} ln r - gamma[F]
        let gamma_bar = g0;
        let w_bar = (g0 * a + trace_dgamma - vtheta) * (two * a);
        return Ok(ModeConstants {
            n,
            gamma_bar,
            w_bar,
            resonant: true,
        });
    }
    if (shift - a).norm() < resonance_tol {
        return Err(Error::DegenerateMode(n));
    }
    // gamma = gamma_bar r^{-a} - w_bar r^{2+zeta}/P - gamma[F], P = (zeta+2)^2 - n^2
    let p = shift * shift - a * a;
    let gamma_bar = (shift * g0 - trace_dgamma + vtheta) / resonant_gap;
    let w_bar = -p / resonant_gap * (g0 * a + trace_dgamma - vtheta);
    Ok(ModeConstants {
        n,
        gamma_bar,
        w_bar,
        resonant: false,
    })
}

/// Adds the homogeneous parts fixed by `constants` to the particular solutions.
pub fn assemble_mode<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    constants: &ModeConstants<T>,
    w_part: &ModeFunction<T>,
    gamma_part: &ModeFunction<T>,
) -> (ModeFunction<T>, ModeFunction<T>) {
    let n = constants.n;
    let zeta = flow.exponents(n).zeta_minus;
    let a: T = lit(n.unsigned_abs() as f64);
    let two: T = lit(2.0);
    let shift = zeta + two;
    let p = shift * shift - a * a;
    let (gb, wb) = (constants.gamma_bar, constants.w_bar);
    let len = grid.len();
    let mut gamma = ModeFunction::zero(n, len);
    let mut w = ModeFunction::zero(n, len);
    for (j, &r) in grid.nodes().iter().enumerate() {
        let rz = rpow(r, zeta);
        w.values[j] = wb * rz - w_part.values[j];
        w.derivative[j] = wb * zeta * rz / r - w_part.derivative[j];
        let ra = r.powf(-a);
        let (hom, dhom) = if constants.resonant {
            let lr = r.ln();
            let c = wb / (two * a);
            (c * ra * lr, c * ra / r * (T::one() - a * lr))
        } else {
            let c = -wb / p;
            let rs = rz * r * r;
            (c * rs, c * shift * rs / r)
        };
        gamma.values[j] = gb * ra + hom - gamma_part.values[j];
        gamma.derivative[j] = -gb * a * ra / r + dhom - gamma_part.derivative[j];
    }
    (gamma, w)
}

/// Solves one mode `n >= 1` end to end.
fn solve_mode<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    n: i64,
    f: &[Complex<T>],
    vr: Complex<T>,
    vtheta: Complex<T>,
    resonance_tol: T,
) -> Result<(ModeFunction<T>, ModeFunction<T>)> {
    let kernels = ModeKernels::new(grid, flow, n);
    let w_part = w_particular_with(grid, &kernels, f)?;
    let g_part = gamma_particular_with(grid, &kernels, &w_part)?;
    let c = boundary_constants(
        n,
        flow,
        g_part.values[0],
        g_part.derivative[0],
        vr,
        vtheta,
        resonance_tol,
    )?;
    Ok(assemble_mode(grid, flow, &c, &w_part, &g_part))
}

/// Zero mode: `w_0 = w_0[F]`, `gamma_0 = -gamma_0[w_0]`, plus for `phi0 > 2` the homogeneous
/// pair `w_bar r^{-phi0}`, `-w_bar r^{2-phi0}/(phi0-2)^2` fixing `-gamma_0'(1) = mu0 - mu`.
fn solve_zero_mode<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    f: &[Complex<T>],
    circulation_gap: T,
) -> Result<(ModeFunction<T>, ModeFunction<T>)> {
    let mut w = solve_w_zero(grid, flow, f)?;
    let part = solve_gamma_zero(grid, &w)?;
    let mut gamma = part.scaled(Complex::new(-T::one(), T::zero()));
    let two: T = lit(2.0);
    if flow.phi0 > two {
        let d = flow.phi0 - two;
        // -gamma_0'(1) = -part'(1) ... solved for w_bar
        let w_bar = d * (part.derivative[0].re - circulation_gap);
        let c = -w_bar / (d * d);
        for (j, &r) in grid.nodes().iter().enumerate() {
            let rw = r.powf(-flow.phi0);
            let rg = r.powf(-d);
            w.values[j] = w.values[j] + rw * w_bar;
            w.derivative[j] = w.derivative[j] - rw / r * (w_bar * flow.phi0);
            gamma.values[j] = gamma.values[j] + rg * c;
            gamma.derivative[j] = gamma.derivative[j] - rg / r * (c * d);
        }
    }
    Ok((gamma, w))
}

pub fn check_degenerate_band<T: Real>(phi0: T) -> Result<()> {
    let two: T = lit(2.0);
    if phi0 > two && phi0 < two + lit(DEGENERATE_BAND) {
        return Err(Error::DegenerateBand(phi0.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// The full linear solution operator over modes `0..=N`, parallel over modes.
pub fn solve_linear<T: Real>(
    grid: &RadialGrid<T>,
    input: &LinearSolveInput<'_, T>,
    resonance_tol: T,
) -> Result<SpectralSolution<T>> {
    let flow = input.flow;
    check_degenerate_band(flow.phi0)?;
    let n_max = input.boundary.n_max();
    if input.sources.n_max() != n_max {
        return Err(Error::CutoffMismatch(input.sources.n_max(), n_max));
    }
    let gap = input.mu0 - flow.mu;
    let modes: Vec<(ModeFunction<T>, ModeFunction<T>)> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let f = &input.sources.modes[n];
            if n == 0 {
                solve_zero_mode(grid, &flow, f, gap)
            } else {
                solve_mode(
                    grid,
                    &flow,
                    n as i64,
                    f,
                    input.boundary.vr[n],
                    input.boundary.vtheta[n],
                    resonance_tol,
                )
            }
        })
        .collect::<Result<_>>()?;
    let (gamma, w) = modes.into_iter().unzip();
    Ok(SpectralSolution {
        grid: grid.clone(),
        flow,
        gamma,
        w,
    })
}

/// Relative finite-difference residuals of both mode equations on interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeResidual<T> {
    pub gamma: T,
    pub w: T,
}

impl<T: Real> OdeResidual<T> {
    pub fn max(&self) -> T {
        self.gamma.max(self.w)
    }
}

/// Substitutes an assembled mode into both ODEs, with second derivatives from 4th-order
/// differences of the analytic first derivatives. Each residual is normalized by the largest
/// term of its equation.
pub fn ode_residual<T: Real>(
    grid: &RadialGrid<T>,
    flow: &ReferenceFlow<T>,
    n: i64,
    gamma: &ModeFunction<T>,
    w: &ModeFunction<T>,
    f: &[Complex<T>],
) -> OdeResidual<T> {
    use crate::discretization::fd_derivative;
    let g2 = fd_derivative(grid, &gamma.derivative);
    let w2 = fd_derivative(grid, &w.derivative);
    let nf: T = lit(n as f64);
    let c = Complex::new(nf * nf, nf * flow.mu);
    let last = grid.len() - 2;
    let (mut rg, mut sg, mut rw, mut sw) = (T::zero(), T::zero(), T::zero(), T::zero());
    for j in 2..last {
        let r = grid.nodes()[j];
        let tg = [
            g2[j],
            gamma.derivative[j] / r,
            -gamma.values[j] * (nf * nf) / (r * r),
            w.values[j],
        ];
        let tw = [
            w2[j],
            w.derivative[j] * (flow.phi0 + T::one()) / r,
            -w.values[j] * c / (r * r),
            -f[j],
        ];
        let sum = |t: &[Complex<T>]| t.iter().fold(zero_c::<T>(), |a, &b| a + b).norm();
        let big = |t: &[Complex<T>]| t.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        rg = rg.max(sum(&tg));
        sg = sg.max(big(&tg));
        rw = rw.max(sum(&tw));
        sw = sw.max(big(&tw));
    }
    let rel = |r: T, s: T| if s > T::zero() { r / s } else { T::zero() };
    OdeResidual {
        gamma: rel(rg, sg),
        w: rel(rw, sw),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn grid() -> RadialGrid<f64> {
        RadialGrid::build(1e4, 64).unwrap()
    }

    fn sup_rel(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn zero_source_gives_zero_particulars() {
        let g = grid();
        let flow = ReferenceFlow { phi0: 2.5, mu: 0.3 };
        let z = vec![c(0.0, 0.0); g.len()];
        assert!(solve_w_particular(&g, &flow, 2, &z).unwrap().is_zero());
        assert!(solve_w_zero(&g, &flow, &z).unwrap().is_zero());
        assert!(solve_gamma_particular(&g, 1, &ModeFunction::zero(1, g.len()))
            .unwrap()
            .is_zero());
        assert!(solve_gamma_zero(&g, &ModeFunction::zero(0, g.len())).unwrap().is_zero());
        assert!(matches!(
            solve_gamma_particular(&g, 0, &ModeFunction::zero(0, g.len())),
            Err(Error::ZeroMode)
        ));
    }

    #[test]
    fn manufactured_particular_vorticity() {
        // M r^{-a} = C r^{-a-2}, so w_n[C s^{-a-2}] = -r^{-a} + (C/sd) r^{zeta-}/(a+zeta-).
        let g = grid();
        let (n, phi0, mu, a) = (2i64, 2.5, 0.0, 3.0);
        let flow = ReferenceFlow { phi0, mu };
        let ex = flow.exponents(n);
        let cc = c(a * a - a * phi0 - (n * n) as f64, -(n as f64) * mu);
        assert_relative_eq!(cc.re, -2.5);
        assert_relative_eq!(ex.sqrt_disc.re, 22.25f64.sqrt(), max_relative = 1e-14);
        let f: Vec<_> = g.nodes().iter().map(|&r| cc * r.powf(-(a + 2.0))).collect();
        let w = solve_w_particular(&g, &flow, n, &f).unwrap();
        let exact: Vec<_> = g
            .nodes()
            .iter()
            .map(|&r| -r.powf(-a) + cc / ex.sqrt_disc * rpow(r, ex.zeta_minus) / (ex.zeta_minus + a))
            .collect();
        assert!(sup_rel(&w.values, &exact) < 1e-6);
        let dexact: Vec<_> = g
            .nodes()
            .iter()
            .map(|&r| {
                a * r.powf(-a - 1.0)
                    + cc / ex.sqrt_disc * ex.zeta_minus * rpow(r, ex.zeta_minus - 1.0) / (ex.zeta_minus + a)
            })
            .collect();
        assert!(sup_rel(&w.derivative, &dexact) < 1e-6);
    }

    #[test]
    fn nested_zero_mode_vorticity() {
        // inner(s) = s^{-4}/(4 - phi0 - 1)... for F = t^{-6}: int_s^inf (t/s)^{phi0+1} t^{-6} dt
        // = s^{-5}/(4 - phi0); outer = r^{-4}/(4 (4 - phi0)).
        let g = grid();
        for phi0 in [2.5, 0.0] {
            let flow = ReferenceFlow { phi0, mu: 0.0 };
            let f: Vec<_> = g.nodes().iter().map(|&r| c(r.powi(-6), 0.0)).collect();
            let w = solve_w_zero(&g, &flow, &f).unwrap();
            let exact: Vec<_> = g
                .nodes()
                .iter()
                .map(|&r| c(r.powi(-4) / (4.0 * (4.0 - phi0)), 0.0))
                .collect();
            assert!(sup_rel(&w.values, &exact) < 1e-6, "phi0 {phi0}");
            let dexact: Vec<_> = g.nodes().iter().map(|&r| c(-r.powi(-5) / (4.0 - phi0), 0.0)).collect();
            assert!(sup_rel(&w.derivative, &dexact) < 1e-6);
        }
    }

    #[test]
    fn nested_zero_mode_stream() {
        // int_r^inf (1/s) int_s^inf sigma^{-3} dsigma ds = r^{-2}/4
        let g = grid();
        let w = ModeFunction {
            n: 0,
            values: g.nodes().iter().map(|&r| c(r.powi(-4), 0.0)).collect(),
            derivative: g.nodes().iter().map(|&r| c(-4.0 * r.powi(-5), 0.0)).collect(),
        };
        let gm = solve_gamma_zero(&g, &w).unwrap();
        let exact: Vec<_> = g.nodes().iter().map(|&r| c(r.powi(-2) / 4.0, 0.0)).collect();
        assert!(sup_rel(&gm.values, &exact) < 1e-6);
        let fd = crate::discretization::fd_derivative(&g, &gm.values);
        assert!(sup_rel(&gm.derivative, &fd) < 1e-5);
    }

    #[test]
    fn particular_stream_power_law() {
        // w = s^{-4}, n = 2: first = r^2/4 int_r^inf s^{-5} = r^{-2}/16,
        // second = r^{-2}/4 int_1^r s^{-1} = r^{-2} ln r / 4
        let g = grid();
        let w = ModeFunction {
            n: 2,
            values: g.nodes().iter().map(|&r| c(r.powi(-4), 0.0)).collect(),
            derivative: vec![c(0.0, 0.0); g.len()],
        };
        let gm = solve_gamma_particular(&g, 2, &w).unwrap();
        let exact: Vec<_> = g
            .nodes()
            .iter()
            .map(|&r| c(r.powi(-2) / 16.0 + r.powi(-2) * r.ln() / 4.0, 0.0))
            .collect();
        assert!(sup_rel(&gm.values, &exact) < 1e-6);
        let j = g.nodes().iter().position(|&r| r > 2.0).unwrap();
        assert!((gm.values[j] - exact[j]).norm() < 1e-6 * exact[j].norm());
    }

    #[test]
    fn traces_of_homogeneous_mode() {
        let g = grid();
        let flow = ReferenceFlow { phi0: 2.5, mu: 0.3 };
        let z = vec![c(0.0, 0.0); g.len()];
        let (vr, vt) = (c(0.0, 1.0), c(0.0, 0.0));
        let (gm, w) = solve_mode(&g, &flow, 1, &z, vr, vt, 1e-8).unwrap();
        assert!((c(0.0, 1.0) * gm.values[0] - vr).norm() < 1e-12);
        assert!((gm.derivative[0] + vt).norm() < 1e-12);
        assert!(ode_residual(&g, &flow, 1, &gm, &w, &z).max() < 1e-4);
    }

    #[test]
    fn zero_data_zero_solution() {
        let g = grid();
        let flow = ReferenceFlow { phi0: 2.5, mu: 0.2 };
        let b = BoundarySpectrum::zeros(4);
        let s = SourceSpectrum::zeros(4, g.len());
        let sol = solve_linear(
            &g,
            &LinearSolveInput {
                flow,
                boundary: &b,
                sources: &s,
                mu0: 0.2,
            },
            1e-8,
        )
        .unwrap();
        assert!(sol.gamma.iter().chain(&sol.w).all(|m| m.is_zero()));
    }

    #[test]
    fn homogeneous_zero_mode_matches_circulation_gap() {
        let g = grid();
        let flow = ReferenceFlow { phi0: 2.5, mu: 0.1 };
        let b = BoundarySpectrum::zeros(2);
        let s = SourceSpectrum::zeros(2, g.len());
        let sol = solve_linear(
            &g,
            &LinearSolveInput {
                flow,
                boundary: &b,
                sources: &s,
                mu0: 0.2,
            },
            1e-8,
        )
        .unwrap();
        let (gm, w) = (&sol.gamma[0], &sol.w[0]);
        assert_relative_eq!(-gm.derivative[0].re, 0.1, max_relative = 1e-12);
        for (j, &r) in g.nodes().iter().enumerate() {
            assert_relative_eq!(gm.values[j].re, 0.2 * r.powf(-0.5), max_relative = 1e-12);
            // w = -Laplacian gamma
            assert_relative_eq!(w.values[j].re, -0.05 * r.powf(-2.5), max_relative = 1e-12);
        }
        let z = vec![c(0.0, 0.0); g.len()];
        assert!(ode_residual(&g, &flow, 0, gm, w, &z).max() < 1e-4);
    }

    #[test]
    fn degenerate_band_is_rejected() {
        let g = grid();
        let b = BoundarySpectrum::zeros(2);
        let s = SourceSpectrum::zeros(2, g.len());
        let flow = ReferenceFlow {
            phi0: 2.0 + 1e-7,
            mu: 0.0,
        };
        let input = LinearSolveInput {
            flow,
            boundary: &b,
            sources: &s,
            mu0: 0.0,
        };
        assert!(matches!(solve_linear(&g, &input, 1e-8), Err(Error::DegenerateBand(_))));
        let input = LinearSolveInput {
            flow: ReferenceFlow { phi0: 2.0, mu: 0.0 },
            ..input
        };
        assert!(solve_linear(&g, &input, 1e-8).is_ok());
    }
}
