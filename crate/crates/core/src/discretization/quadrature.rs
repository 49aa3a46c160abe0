//! Product quadrature for `int s f(s) (r/s)^zeta ds` on the geometric grid.
//!
//! In `x = log s` the kernel `(r/s)^zeta` is an exponential, integrated exactly
//! against a local quintic interpolant of `s^2 f(s)`. The integral beyond
//! `R_max` uses a power law fitted to the last five nodes.

use std::f64::consts::PI;

use num_complex::Complex;

use super::RadialGrid;
use crate::error::{Error, Result};
use crate::scalar::{cfinite, lit, to_f64, Real};

const STENCIL: usize = 6;
const OFFSETS: usize = STENCIL - 1;
const GAUSS_POINTS: usize = 12;
const TAIL_NODES: usize = 5;
const TAIL_FIT_RMS: f64 = 0.05;

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let legendre = |x: f64| {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            (p1, dp)
        };
        for _ in 0..100 {
            let (p, dp) = legendre(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// Lagrange basis on the nodes `m - q`, `m = 0..6`, evaluated at `u`.
fn lagrange<T: Real>(q: usize, u: T) -> [T; STENCIL] {
    let mut out = [T::one(); STENCIL];
    for (m, slot) in out.iter_mut().enumerate() {
        let tm = m as f64 - q as f64;
        for k in 0..STENCIL {
            if k != m {
                let tk = k as f64 - q as f64;
                *slot = *slot * (u - lit(tk)) / lit(tm - tk);
            }
        }
    }
    out
}

/// First node of the interpolation stencil used on interval `j` of `intervals`.
#[inline]
fn stencil_start(j: usize, intervals: usize) -> usize {
    (j.max(2) - 2).min(intervals - OFFSETS)
}

/// Interval weights for the kernels `e^{-zeta t}` (outward) and `e^{zeta (h - t)}` (inward).
#[derive(Clone, Debug)]
pub struct KernelQuadrature<T> {
    h: T,
    zeta: Complex<T>,
    step_out: Complex<T>,
    step_in: Complex<T>,
    out_w: [[Complex<T>; STENCIL]; OFFSETS],
    in_w: [[Complex<T>; STENCIL]; OFFSETS],
}

impl<T: Real> KernelQuadrature<T> {
    pub fn new(h: T, zeta: Complex<T>) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let mut out_w = [[zero; STENCIL]; OFFSETS];
        let mut in_w = [[zero; STENCIL]; OFFSETS];
        let zh = zeta * h;
        for (u, wt) in gauss_legendre_unit(GAUSS_POINTS) {
            let u: T = lit(u);
            let wt: T = lit(wt);
            let k_out = (-zh * u).exp() * (wt * h);
            let k_in = (zh * (T::one() - u)).exp() * (wt * h);
            for q in 0..OFFSETS {
                let basis = lagrange(q, u);
                for m in 0..STENCIL {
                    out_w[q][m] = out_w[q][m] + k_out * basis[m];
                    in_w[q][m] = in_w[q][m] + k_in * basis[m];
                }
            }
        }
        Self {
            h,
            zeta,
            step_out: (-zh).exp(),
            step_in: zh.exp(),
            out_w,
            in_w,
        }
    }

    pub fn zeta(&self) -> Complex<T> {
        self.zeta
    }

    fn check(&self, grid: &RadialGrid<T>, f: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if f.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: f.len(),
            });
        }
        debug_assert!((self.h - grid.h()).abs() <= grid.h() * lit(1e-12));
        f.iter()
            .zip(grid.nodes())
            .enumerate()
            .map(|(j, (&v, &r))| {
                if cfinite(v) {
                    Ok(v * (r * r))
                } else {
                    Err(Error::NonFinite(j))
                }
            })
            .collect()
    }

    fn local(weights: &[[Complex<T>; STENCIL]; OFFSETS], g: &[Complex<T>], j: usize) -> Complex<T> {
        let s = stencil_start(j, g.len() - 1);
        let w = &weights[j - s];
        let mut acc = Complex::new(T::zero(), T::zero());
        for m in 0..STENCIL {
            acc = acc + w[m] * g[s + m];
        }
        acc
    }

    /// `int_{r_j}^inf s f(s) (r_j/s)^zeta ds` at every node.
    pub fn out_all(&self, grid: &RadialGrid<T>, f: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let g = self.check(grid, f)?;
        let last = grid.intervals();
        let local: Vec<Complex<T>> = (0..last).map(|j| Self::local(&self.out_w, &g, j)).collect();
        let scale = local.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let mut acc = self.tail(grid, f, scale)?;
        let mut out = vec![acc; grid.len()];
        for j in (0..last).rev() {
            acc = local[j] + self.step_out * acc;
            out[j] = acc;
        }
        Ok(out)
    }

    /// `int_1^{r_j} s f(s) (r_j/s)^zeta ds` at every node.
    pub fn in_all(&self, grid: &RadialGrid<T>, f: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let g = self.check(grid, f)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut out = Vec::with_capacity(grid.len());
        out.push(acc);
        for j in 0..grid.intervals() {
            acc = self.step_in * acc + Self::local(&self.in_w, &g, j);
            out.push(acc);
        }
        Ok(out)
    }

    /// Closed-form integral beyond `R_max` of the fitted power law.
    fn tail(&self, grid: &RadialGrid<T>, f: &[Complex<T>], scale: T) -> Result<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let n = grid.len();
        let idx = n - TAIL_NODES..n;
        let q: Vec<Complex<T>> = idx.clone().map(|k| f[k] * grid.nodes()[k]).collect();
        let end = q[TAIL_NODES - 1];
        if q.iter().all(|z| z.norm() == T::zero()) {
            return Ok(zero);
        }
        let r_max = grid.r_max();
        let fitted = fit_power(&idx.map(|k| grid.x(k)).collect::<Vec<_>>(), &q);
        let p = match fitted {
            Some(pq) => pq - self.zeta,
            None => Complex::new(grid.tail_exponent_floor(), T::zero()),
        };
        let denom = -(p + T::one());
        if !(denom.re > T::zero()) {
            // A numerically negligible tail cannot spoil the integral, whatever its fit says.
            if end.norm() * r_max <= lit::<T>(1e-12) * scale {
                return Ok(zero);
            }
            return Err(Error::DivergentTail(to_f64(p.re)));
        }
        Ok(end * r_max / denom)
    }
}

/// Least-squares complex exponent of `q ~ A e^{p x}`; `None` when the samples are not power-law like.
fn fit_power<T: Real>(xs: &[T], q: &[Complex<T>]) -> Option<Complex<T>> {
    if q.iter().any(|z| z.norm() == T::zero()) {
        return None;
    }
    let two_pi: T = lit(2.0 * PI);
    let pi: T = lit(PI);
    let logs: Vec<T> = q.iter().map(|z| z.norm().ln()).collect();
    let mut args: Vec<T> = Vec::with_capacity(q.len());
    for z in q {
        let mut a = z.arg();
        if let Some(&prev) = args.last() {
            while a - prev > pi {
                a = a - two_pi;
            }
            while a - prev < -pi {
                a = a + two_pi;
            }
        }
        args.push(a);
    }
    let (sre, rre) = slope(xs, &logs);
    let (sim, rim) = slope(xs, &args);
    let tol: T = lit(TAIL_FIT_RMS);
    let p = Complex::new(sre, sim);
    (cfinite(p) && rre <= tol && rim <= tol).then_some(p)
}

/// Least-squares slope and rms residual.
pub(crate) fn slope<T: Real>(xs: &[T], ys: &[T]) -> (T, T) {
    let n: T = lit(xs.len() as f64);
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let rss: T = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - my - b * (x - mx);
            e * e
        })
        .sum();
    (b, (rss / n).sqrt())
}

/// `int_{r_j}^inf s f(s) (r_j/s)^zeta ds`.
pub fn integrate_out<T: Real>(
    grid: &RadialGrid<T>,
    f: &[Complex<T>],
    j: usize,
    zeta: Complex<T>,
) -> Result<Complex<T>> {
    Ok(KernelQuadrature::new(grid.h(), zeta).out_all(grid, f)?[j])
}

/// `int_1^{r_j} s f(s) (r_j/s)^zeta ds`.
pub fn integrate_in<T: Real>(grid: &RadialGrid<T>, f: &[Complex<T>], j: usize, zeta: Complex<T>) -> Result<Complex<T>> {
    Ok(KernelQuadrature::new(grid.h(), zeta).in_all(grid, f)?[j])
}

/// Same interval rule without a kernel, for real integrands already expressed in `x = log r`.
#[derive(Clone, Debug)]
pub struct PlainQuadrature<T> {
    weights: [[T; STENCIL]; OFFSETS],
}

impl<T: Real> PlainQuadrature<T> {
    pub fn new(h: T) -> Self {
        let mut weights = [[T::zero(); STENCIL]; OFFSETS];
        for (u, wt) in gauss_legendre_unit(GAUSS_POINTS) {
            let u: T = lit(u);
            let wt: T = lit::<T>(wt) * h;
            for (q, row) in weights.iter_mut().enumerate() {
                let basis = lagrange(q, u);
                for m in 0..STENCIL {
                    row[m] = row[m] + wt * basis[m];
                }
            }
        }
        Self { weights }
    }

    /// `int_{x_0}^{x_J} g dx` for samples `g` on a uniform grid.
    pub fn integrate(&self, g: &[T]) -> T {
        let last = g.len() - 1;
        let mut acc = T::zero();
        for j in 0..last {
            let s = stencil_start(j, last);
            let w = &self.weights[j - s];
            for m in 0..STENCIL {
                acc = acc + w[m] * g[s + m];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn samples(g: &RadialGrid<f64>, f: impl Fn(f64) -> Complex<f64>) -> Vec<Complex<f64>> {
        g.nodes().iter().map(|&r| f(r)).collect()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre_unit(GAUSS_POINTS);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        let m: f64 = rule.iter().map(|(u, w)| w * u.powi(21)).sum();
        assert_relative_eq!(m, 1.0 / 22.0, max_relative = 1e-13);
    }

    #[test]
    fn zero_integrand() {
        let g = RadialGrid::build(1e4, 64).unwrap();
        let f = vec![c(0.0, 0.0); g.len()];
        assert_eq!(integrate_out(&g, &f, 0, c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(integrate_in(&g, &f, 10, c(-1.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn outward_power_law() {
        let g = RadialGrid::build(1e4, 64).unwrap();
        let f = samples(&g, |r| c(r.powi(-5), 0.0));
        let v = integrate_out(&g, &f, 0, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 0.25, max_relative = 1e-6);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn outward_complex_exponent() {
        // int_r^inf s^{-2} (r/s)^zeta ds = r^{-1} / (1 + zeta)
        let g = RadialGrid::build(1e4, 64).unwrap();
        let f = samples(&g, |r| c(r.powi(-3), 0.0));
        let zeta = c(2.0, 1.0);
        let all = KernelQuadrature::new(g.h(), zeta).out_all(&g, &f).unwrap();
        for (j, &r) in g.nodes().iter().enumerate() {
            let exact = c(1.0 / r, 0.0) / (zeta + 1.0);
            assert!((all[j] - exact).norm() <= 1e-8 * exact.norm(), "node {j}");
        }
    }

    #[test]
    fn inward_power_law() {
        let g = RadialGrid::build(1e4, 64).unwrap();
        let f = samples(&g, |r| c(r.powi(-5), 0.0));
        let zeta = c(-2.0, 0.0);
        let all = KernelQuadrature::new(g.h(), zeta).in_all(&g, &f).unwrap();
        assert_eq!(all[0], c(0.0, 0.0));
        // int_1^r s^{-4} (r/s)^{-2} ds = r^{-2} (1 - r^{-1})
        for (j, &r) in g.nodes().iter().enumerate().skip(1) {
            let exact = r.powi(-2) * (1.0 - 1.0 / r);
            assert_relative_eq!(all[j].re, exact, max_relative = 1e-7);
        }
        let e = std::f64::consts::E;
        let ge = RadialGrid::build(e, 64).unwrap();
        let fe = samples(&ge, |r| c(r.powi(-5), 0.0));
        let v = integrate_in(&ge, &fe, ge.len() - 1, zeta).unwrap();
        assert_relative_eq!(v.re, e.powi(-2) * (1.0 - 1.0 / e), max_relative = 1e-6);
    }

    #[test]
    fn refinement_converges() {
        let err = |g: &RadialGrid<f64>| {
            let f = samples(g, |r| c(r.powf(-4.5), 0.0));
            let v = integrate_out(g, &f, 0, c(1.5, 0.7)).unwrap();
            let exact = c(1.0, 0.0) / (c(1.5, 0.7) + 2.5);
            (v - exact).norm() / exact.norm()
        };
        let g = RadialGrid::build(1e4, 16).unwrap();
        assert!(err(&g) / err(&g.refined()) > 3.5);
    }

    #[test]
    fn doubling_r_max_is_harmless() {
        let f = |r: f64| c(r.powi(-4) + 0.3 * r.powf(-3.5), 0.0);
        let a = RadialGrid::build(1e4, 64).unwrap();
        let b = RadialGrid::build(2e4, 64).unwrap();
        let va = integrate_out(&a, &samples(&a, f), 0, c(1.0, 0.0)).unwrap();
        let vb = integrate_out(&b, &samples(&b, f), 0, c(1.0, 0.0)).unwrap();
        assert!((va - vb).norm() < 1e-8 * va.norm());
    }

    #[test]
    fn divergent_tail_is_reported() {
        let g = RadialGrid::build(1e4, 64).unwrap();
        let f = samples(&g, |r| c(r.powf(-1.5), 0.0));
        assert!(matches!(
            integrate_out(&g, &f, 0, c(0.0, 0.0)),
            Err(Error::DivergentTail(_))
        ));
        let mut bad = samples(&g, |r| c(r.powi(-5), 0.0));
        bad[3] = c(f64::NAN, 0.0);
        assert!(matches!(
            integrate_out(&g, &bad, 0, c(1.0, 0.0)),
            Err(Error::NonFinite(3))
        ));
    }

    #[test]
    fn plain_rule() {
        let g: RadialGrid<f64> = RadialGrid::build(100.0, 32).unwrap();
        let q = PlainQuadrature::new(g.h());
        let vals: Vec<f64> = (0..g.len()).map(|j| (-2.0 * g.x(j)).exp()).collect();
        let exact = (1.0 - (-2.0 * g.x(g.len() - 1)).exp()) / 2.0;
        assert_relative_eq!(q.integrate(&vals), exact, max_relative = 1e-7);
    }
}
