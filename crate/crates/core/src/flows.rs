//! Reference and Hamel flows, mode exponents and the existence predicate.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Potential flow `-phi0/r e_r + mu/r e_theta` around which the problem is linearized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFlow<T> {
    pub phi0: T,
    pub mu: T,
}

impl<T: Real> ReferenceFlow<T> {
    pub fn new(phi0: T, mu: T) -> Result<Self> {
        if !(phi0 >= T::zero()) || !phi0.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reference flow needs finite phi0 >= 0 and finite mu (phi0 = {phi0}, mu = {mu})"
            )));
        }
        Ok(Self { phi0, mu })
    }

    pub fn with_mu(self, mu: T) -> Self {
        Self { mu, ..self }
    }

    pub fn velocity(&self, r: T) -> (T, T) {
        ref_velocity(self, r)
    }

    pub fn exponents(&self, n: i64) -> ModeExponents<T> {
        mode_exponents(self, n)
    }

    pub fn rho(&self) -> T {
        rho_decay(self)
    }

    pub fn alpha_window(&self) -> (T, bool) {
        alpha_window(self)
    }
}

/// Hamel spiral `v_r = -phi/r`, `v_theta = lambda r^{1-phi} + mu/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamelParams<T> {
    pub phi: T,
    pub mu: T,
    pub lambda: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeExponents<T> {
    pub n: i64,
    pub zeta_plus: Complex<T>,
    pub zeta_minus: Complex<T>,
    /// Principal root of `phi0^2 + 4(i n mu + n^2)`.
    pub sqrt_disc: Complex<T>,
}

pub fn hamel_velocity<T: Real>(p: &HamelParams<T>, r: T, _theta: T) -> (T, T) {
    let vr = -p.phi / r;
    let vt = p.lambda * r.powf(T::one() - p.phi) + p.mu / r;
    (vr, vt)
}

pub fn ref_velocity<T: Real>(f: &ReferenceFlow<T>, r: T) -> (T, T) {
    (-f.phi0 / r, f.mu / r)
}

pub fn mode_exponents<T: Real>(f: &ReferenceFlow<T>, n: i64) -> ModeExponents<T> {
    let nf: T = lit(n as f64);
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    // c = i n mu + n^2, so that zeta^2 + phi0 zeta - c = 0.
    let c = Complex::new(nf * nf, nf * f.mu);
    let sqrt_disc = (Complex::new(f.phi0 * f.phi0, T::zero()) + c * four).sqrt();
    let sum = sqrt_disc + f.phi0;
    let zeta_minus = -sum / two;
    // Written through the product of the roots to avoid cancellation when |c| << phi0^2.
    let zeta_plus = if sum.norm() > T::zero() {
        c * two / sum
    } else {
        Complex::new(T::zero(), T::zero())
    };
    ModeExponents {
        n,
        zeta_plus,
        zeta_minus,
        sqrt_disc,
    }
}

/// Closed forms of `(Re zeta_n^+, Re zeta_n^-)`.
pub fn real_parts_closed_form<T: Real>(phi0: T, mu: T, n: i64) -> (T, T) {
    let nf: T = lit(n as f64);
    let a = phi0 * phi0 + lit::<T>(4.0) * nf * nf;
    let inner = a + (a * a + lit::<T>(16.0) * nf * nf * mu * mu).sqrt();
    let half_root = inner.sqrt() / lit::<T>(2.0 * std::f64::consts::SQRT_2);
    let base = -phi0 / lit(2.0);
    (base + half_root, base - half_root)
}

/// `|Re zeta_1^-|`, the slowest admissible decay rate among nonzero modes.
pub fn rho_decay<T: Real>(f: &ReferenceFlow<T>) -> T {
    let a = f.phi0 * f.phi0 + lit(4.0);
    let inner = a + (a * a + lit::<T>(16.0) * f.mu * f.mu).sqrt();
    f.phi0 / lit(2.0) + inner.sqrt() / lit::<T>(2.0 * std::f64::consts::SQRT_2)
}

/// `(1/2 min(rho - 2, 1), rho > 2)`.
pub fn alpha_window<T: Real>(f: &ReferenceFlow<T>) -> (T, bool) {
    let rho = rho_decay(f);
    let two: T = lit(2.0);
    ((rho - two).min(T::one()) / two, rho > two)
}

pub fn existence_condition<T: Real>(phi0: T, mu: T) -> bool {
    let three_halves: T = lit(1.5);
    if phi0 > three_halves {
        return true;
    }
    if !(phi0 >= T::zero()) {
        return false;
    }
    let threshold = (lit::<T>(4.0) - phi0) * (lit::<T>(3.0) - lit::<T>(2.0) * phi0).sqrt();
    mu.abs() > threshold
}

/// Flux and circulation of a boundary trace sampled on a uniform theta grid.
pub fn flux_circulation<T: Real>(ur: &[T], utheta: &[T]) -> Result<(T, T)> {
    if ur.len() != utheta.len() {
        return Err(Error::SampleMismatch(ur.len(), utheta.len()));
    }
    if ur.len() < 8 {
        return Err(Error::TooFewSamples {
            needed: 8,
            got: ur.len(),
        });
    }
    let m: T = lit(ur.len() as f64);
    let mean_r = ur.iter().copied().sum::<T>() / m;
    let mean_t = utheta.iter().copied().sum::<T>() / m;
    Ok((-mean_r, mean_t))
}
