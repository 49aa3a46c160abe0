//! Radial grids, semi-infinite quadrature, boundary spectra and weighted norms.

mod boundary;
mod quadrature;

pub use boundary::{dft_coefficients, project_boundary, synthesize, BoundarySource, BoundarySpectrum, BoundaryTrace};
pub(crate) use quadrature::slope;
pub use quadrature::{integrate_in, integrate_out, KernelQuadrature, PlainQuadrature};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cfinite, lit, to_f64, Real};

/// Smallest admissible number of log-intervals.
pub const MIN_INTERVALS: usize = 32;

/// Geometric node set `r_j = exp(h j)` on `[1, R_max]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialGrid<T> {
    nodes: Vec<T>,
    h: T,
    r_max: T,
    nodes_per_decade: usize,
    tail_exponent_floor: T,
}

impl<T: Real> RadialGrid<T> {
    pub fn build(r_max: T, nodes_per_decade: usize) -> Result<Self> {
        if !(r_max > T::one()) || !r_max.is_finite() {
            return Err(Error::EmptyDomain(to_f64(r_max)));
        }
        if nodes_per_decade < 16 {
            return Err(Error::CoarseGrid(nodes_per_decade));
        }
        let decades = to_f64(r_max).log10();
        // guard against 128.00000000001 rounding up to 129
        let j = ((nodes_per_decade as f64 * decades) - 1e-9)
            .ceil()
            .max(MIN_INTERVALS as f64) as usize;
        Ok(Self::with_intervals(r_max, j, nodes_per_decade))
    }

    fn with_intervals(r_max: T, intervals: usize, nodes_per_decade: usize) -> Self {
        let h = r_max.ln() / lit(intervals as f64);
        let mut nodes: Vec<T> = (0..=intervals).map(|j| (h * lit(j as f64)).exp()).collect();
        nodes[0] = T::one();
        nodes[intervals] = r_max;
        Self {
            nodes,
            h,
            r_max,
            nodes_per_decade,
            tail_exponent_floor: lit(-2.0),
        }
    }

    pub fn with_tail_floor(mut self, floor: T) -> Self {
        self.tail_exponent_floor = floor;
        self
    }

    /// Same span with exactly half the log-step.
    pub fn refined(&self) -> Self {
        let mut g = Self::with_intervals(self.r_max, 2 * self.intervals(), 2 * self.nodes_per_decade);
        g.tail_exponent_floor = self.tail_exponent_floor;
        g
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn nodes_per_decade(&self) -> usize {
        self.nodes_per_decade
    }

    pub fn tail_exponent_floor(&self) -> T {
        self.tail_exponent_floor
    }

    /// Log-coordinate of node `j`.
    pub fn x(&self, j: usize) -> T {
        self.h * lit(j as f64)
    }

    /// Indices of the nodes covering the last `decades` decades.
    pub fn last_decades(&self, decades: f64) -> std::ops::Range<usize> {
        let cut = self.r_max / lit(10f64.powf(decades));
        let start = self.nodes.iter().position(|&r| r >= cut).unwrap_or(0);
        start..self.len()
    }
}

/// Complex radial profile of one Fourier mode together with its analytic radial derivative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeFunction<T> {
    pub n: i64,
    pub values: Vec<Complex<T>>,
    pub derivative: Vec<Complex<T>>,
}

impl<T: Real> ModeFunction<T> {
    pub fn zero(n: i64, len: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self {
            n,
            values: vec![z; len],
            derivative: vec![z; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        let zero = T::zero();
        self.values
            .iter()
            .chain(&self.derivative)
            .all(|z| z.re == zero && z.im == zero)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.derivative).all(|&z| cfinite(z))
    }

    pub fn conj(&self) -> Self {
        Self {
            n: -self.n,
            values: self.values.iter().map(|z| z.conj()).collect(),
            derivative: self.derivative.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&z| z * s).collect(),
            derivative: self.derivative.iter().map(|&z| z * s).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        let mix = |x: &[Complex<T>], y: &[Complex<T>]| x.iter().zip(y).map(|(&p, &q)| p * a + q * b).collect();
        Self {
            n: self.n,
            values: mix(&self.values, &other.values),
            derivative: mix(&self.derivative, &other.derivative),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Beyond the last quarter of nodes `|values|` should not grow by more than 10%.
    pub fn decays_at_tail(&self) -> bool {
        let start = self.values.len() * 3 / 4;
        let tail = &self.values[start..];
        let tol: T = lit(1.1);
        tail.windows(2).all(|w| w[1].norm() <= w[0].norm() * tol)
    }
}

/// 6th-order finite-difference `d/dr` of samples on the geometric grid; centered in the
/// interior, shifted 7-point stencils on the first and last three nodes.
pub fn fd_derivative<T: Real>(grid: &RadialGrid<T>, f: &[Complex<T>]) -> Vec<Complex<T>> {
    const EDGE: [[f64; 7]; 3] = [
        [-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0],
        [-10.0, -77.0, 150.0, -100.0, 50.0, -15.0, 2.0],
        [2.0, -24.0, -35.0, 80.0, -30.0, 8.0, -1.0],
    ];
    const CENTER: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let n = f.len();
    assert!(n >= 7 && n == grid.len());
    let sixty_h = grid.h() * lit(60.0);
    let apply = |w: &[f64; 7], at: &dyn Fn(usize) -> Complex<T>| {
        w.iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (k, &c)| {
                acc + at(k) * lit::<T>(c)
            })
    };
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let dx = if j < 3 {
            apply(&EDGE[j], &|k| f[k])
        } else if j >= n - 3 {
            -apply(&EDGE[n - 1 - j], &|k| f[n - 1 - k])
        } else {
            apply(&CENTER, &|k| f[j + k - 3])
        };
        out.push(dx / sixty_h / grid.nodes()[j]);
    }
    out
}

/// Weights of the spaces `B_kappa` and `U^m_{alpha,kappa}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedNorms<T> {
    pub alpha: T,
    pub kappa: T,
    pub m: usize,
}

impl<T: Real> WeightedNorms<T> {
    pub fn new(alpha: T, kappa: T, m: usize) -> Result<Self> {
        if !(lit::<T>(m as f64) < kappa) {
            return Err(Error::NormOrder {
                m,
                kappa: to_f64(kappa),
            });
        }
        Ok(Self { alpha, kappa, m })
    }

    pub fn field(&self, grid: &RadialGrid<T>, modes: &[ModeFunction<T>]) -> Result<T> {
        field_norm(grid, modes, self.alpha, self.kappa, self.m)
    }
}

/// `sup_n (1+|n|)^kappa |c_n|` with `coeffs[n]` the coefficient of mode `n >= 0`.
pub fn seq_norm<T: Real>(coeffs: &[Complex<T>], kappa: T) -> T {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| lit::<T>(1.0 + n as f64).powf(kappa) * c.norm())
        .fold(T::zero(), T::max)
}

/// `sup r^{alpha+l} (1+|n|)^{kappa-l} |d^l phi_n|` over modes, nodes and `l <= m`.
pub fn field_norm<T: Real>(grid: &RadialGrid<T>, modes: &[ModeFunction<T>], alpha: T, kappa: T, m: usize) -> Result<T> {
    if m > 2 || !(lit::<T>(m as f64) < kappa) {
        return Err(Error::NormOrder {
            m,
            kappa: to_f64(kappa),
        });
    }
    let mut best = T::zero();
    for mode in modes {
        let weight_n = lit::<T>(1.0 + mode.n.unsigned_abs() as f64);
        let second = if m == 2 {
            Some(fd_derivative(grid, &mode.derivative))
        } else {
            None
        };
        for (j, &r) in grid.nodes().iter().enumerate() {
            let mut derivs = vec![mode.values[j]];
            if m >= 1 {
                derivs.push(mode.derivative[j]);
            }
            if let Some(s) = &second {
                derivs.push(s[j]);
            }
            for (l, d) in derivs.iter().enumerate() {
                let lf: T = lit(l as f64);
                let v = r.powf(alpha + lf) * weight_n.powf(kappa - lf) * d.norm();
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_examples() {
        let g = RadialGrid::build(10.0, 32).unwrap();
        assert_eq!(g.len(), 33);
        assert_eq!(g.nodes()[32], 10.0);
        assert_eq!(g.nodes()[0], 1.0);
        assert_eq!(RadialGrid::build(1e4, 32).unwrap().len(), 129);
        assert_eq!(RadialGrid::build(1e4, 64).unwrap().len(), 257);
        assert!(RadialGrid::build(1.0, 32).is_err());
        assert!(RadialGrid::build(10.0, 8).is_err());
    }

    #[test]
    fn grid_is_geometric() {
        let g = RadialGrid::build(1e4, 64).unwrap();
        let q = g.nodes()[1] / g.nodes()[0];
        for w in g.nodes().windows(2) {
            assert_relative_eq!(w[1] / w[0], q, max_relative = 1e-12);
        }
        let fine = g.refined();
        assert_eq!(fine.intervals(), 2 * g.intervals());
        assert_relative_eq!(fine.h() * 2.0, g.h(), max_relative = 1e-14);
    }

    #[test]
    fn short_spans_keep_minimum_intervals() {
        let g = RadialGrid::build(2.0, 16).unwrap();
        assert_eq!(g.intervals(), MIN_INTERVALS);
    }

    #[test]
    fn finite_difference_is_fourth_order() {
        let err = |g: &RadialGrid<f64>| {
            let f: Vec<Complex<f64>> = g.nodes().iter().map(|r| Complex::new(r.powi(-3), 0.0)).collect();
            let d = fd_derivative(g, &f);
            g.nodes()
                .iter()
                .zip(&d)
                .map(|(r, d)| ((d.re + 3.0 * r.powi(-4)) / r.powi(-4)).abs())
                .fold(0.0, f64::max)
        };
        let g = RadialGrid::build(100.0, 32).unwrap();
        let ratio = err(&g) / err(&g.refined());
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn norm_examples() {
        let g = RadialGrid::build(100.0, 32).unwrap();
        let mut m = ModeFunction::zero(2, g.len());
        assert_eq!(field_norm(&g, &[m.clone()], 1.0, 3.0, 0).unwrap(), 0.0);
        for (j, &r) in g.nodes().iter().enumerate() {
            m.values[j] = Complex::new(1.0 / r, 0.0);
            m.derivative[j] = Complex::new(-1.0 / (r * r), 0.0);
        }
        assert_relative_eq!(
            field_norm(&g, &[m.clone()], 1.0, 3.0, 0).unwrap(),
            27.0,
            max_relative = 1e-12
        );
        assert!(field_norm(&g, &[m], 1.0, 2.0, 2).is_err());
        let c: Vec<Complex<f64>> = (0..10).map(|n| Complex::new((1.0 + n as f64).powi(-5), 0.0)).collect();
        assert_relative_eq!(seq_norm(&c, 5.0), 1.0, max_relative = 1e-14);
        assert!(WeightedNorms::new(0.5, 1.0, 1).is_err());
    }
}
