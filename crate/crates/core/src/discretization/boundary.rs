use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{flux_circulation, ReferenceFlow};
use crate::scalar::{lit, to_f64, Real};

const FLUX_TOL: f64 = 1e-10;

/// Fourier coefficients `(v*_{r,n}, v*_{theta,n})`, `0 <= n <= N`; negative modes by conjugation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySpectrum<T> {
    pub vr: Vec<Complex<T>>,
    pub vtheta: Vec<Complex<T>>,
}

impl<T: Real> BoundarySpectrum<T> {
    pub fn zeros(n_max: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self {
            vr: vec![z; n_max + 1],
            vtheta: vec![z; n_max + 1],
        }
    }

    pub fn new(vr: Vec<Complex<T>>, vtheta: Vec<Complex<T>>) -> Result<Self> {
        if vr.len() != vtheta.len() || vr.is_empty() {
            return Err(Error::CutoffMismatch(vr.len(), vtheta.len()));
        }
        if vr[0].norm() > lit(FLUX_TOL) {
            return Err(Error::ResidualFlux(to_f64(vr[0].norm())));
        }
        Ok(Self { vr, vtheta })
    }

    pub fn n_max(&self) -> usize {
        self.vr.len() - 1
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            vr: self.vr.iter().map(|&z| z * s).collect(),
            vtheta: self.vtheta.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            vr: self.vr.iter().map(|z| z.conj()).collect(),
            vtheta: self.vtheta.iter().map(|z| z.conj()).collect(),
        }
    }
}

/// `c_n = (1/M) sum_j u(theta_j) e^{-i n theta_j}` for `0 <= n <= n_max`.
pub fn dft_coefficients<T: Real>(samples: &[T], n_max: usize) -> Vec<Complex<T>> {
    let m = samples.len();
    let mf: T = lit(m as f64);
    (0..=n_max)
        .map(|n| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (j, &u) in samples.iter().enumerate() {
                // reduce n*j mod m first so large products keep full phase accuracy
                let phase = 2.0 * PI * ((n * j) % m) as f64 / m as f64;
                acc = acc + Complex::new(lit::<T>(phase.cos()), lit::<T>(-phase.sin())) * u;
            }
            acc / mf
        })
        .collect()
}

/// Real field `c_0 + 2 Re sum_{n>=1} c_n e^{i n theta}`.
pub fn synthesize<T: Real>(coeffs: &[Complex<T>], theta: T) -> T {
    let mut acc = coeffs.first().map_or(T::zero(), |c| c.re);
    for (n, c) in coeffs.iter().enumerate().skip(1) {
        let e = Complex::from_polar(T::one(), theta * lit(n as f64));
        acc = acc + lit::<T>(2.0) * (c * e).re;
    }
    acc
}

/// Projects a boundary trace onto modes `0..=n_max` relative to `u_ref[phi0, mu]`.
pub fn project_boundary<T: Real>(ur: &[T], utheta: &[T], n_max: usize, phi0: T, mu: T) -> Result<BoundarySpectrum<T>> {
    if ur.len() != utheta.len() {
        return Err(Error::SampleMismatch(ur.len(), utheta.len()));
    }
    let needed = 2 * n_max + 2;
    if ur.len() < needed {
        return Err(Error::TooFewSamples { needed, got: ur.len() });
    }
    let shifted_r: Vec<T> = ur.iter().map(|&u| u + phi0).collect();
    let shifted_t: Vec<T> = utheta.iter().map(|&u| u - mu).collect();
    let mut vr = dft_coefficients(&shifted_r, n_max);
    let vtheta = dft_coefficients(&shifted_t, n_max);
    if vr[0].norm() > lit(FLUX_TOL) {
        return Err(Error::ResidualFlux(to_f64(vr[0].norm())));
    }
    vr[0] = Complex::new(T::zero(), T::zero());
    Ok(BoundarySpectrum { vr, vtheta })
}

/// Raw boundary trace `u* = -phi0 e_r + mu0 e_theta + v*`, kept independent of the circulation
/// it is later projected against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryTrace<T> {
    pub phi0: T,
    pub mu0: T,
    /// Perturbation coefficients for `n >= 0`; entry 0 is zero.
    pub vr: Vec<Complex<T>>,
    pub vtheta: Vec<Complex<T>>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn from_samples(ur: &[T], utheta: &[T]) -> Result<Self> {
        let (phi0, mu0) = flux_circulation(ur, utheta)?;
        let n_max = (ur.len() - 2) / 2;
        let spectrum = project_boundary(ur, utheta, n_max, phi0, mu0)?;
        let mut vtheta = spectrum.vtheta;
        vtheta[0] = Complex::new(T::zero(), T::zero());
        Ok(Self {
            phi0,
            mu0,
            vr: spectrum.vr,
            vtheta,
        })
    }

    /// Builds a trace from perturbation modes listed from `n = 0`; a real `vtheta[0]` shifts `mu0`.
    pub fn from_modes(phi0: T, mu0: T, vr: Vec<Complex<T>>, vtheta: Vec<Complex<T>>) -> Result<Self> {
        ReferenceFlow::new(phi0, mu0)?;
        let mut spectrum = BoundarySpectrum::new(vr, vtheta)?;
        if spectrum.vtheta[0].im.abs() > lit(FLUX_TOL) {
            return Err(Error::InvalidParameter("vtheta[0] must be real".into()));
        }
        let mu0 = mu0 + spectrum.vtheta[0].re;
        spectrum.vtheta[0] = Complex::new(T::zero(), T::zero());
        Ok(Self {
            phi0,
            mu0,
            vr: spectrum.vr,
            vtheta: spectrum.vtheta,
        })
    }

    /// Unperturbed trace of `u_ref[phi0, mu0]`.
    pub fn unperturbed(phi0: T, mu0: T, n_max: usize) -> Self {
        let z = BoundarySpectrum::zeros(n_max);
        Self {
            phi0,
            mu0,
            vr: z.vr,
            vtheta: z.vtheta,
        }
    }

    pub fn spectrum(&self, mu: T, n_max: usize) -> BoundarySpectrum<T> {
        let z = Complex::new(T::zero(), T::zero());
        let take = |v: &[Complex<T>]| (0..=n_max).map(|n| v.get(n).copied().unwrap_or(z)).collect::<Vec<_>>();
        let mut vtheta = take(&self.vtheta);
        vtheta[0] = Complex::new(self.mu0 - mu, T::zero());
        BoundarySpectrum {
            vr: take(&self.vr),
            vtheta,
        }
    }

    /// `(u_r*, u_theta*)` on `m` uniform angles.
    pub fn samples(&self, m: usize) -> (Vec<T>, Vec<T>) {
        (0..m)
            .map(|j| {
                let th: T = lit(2.0 * PI * j as f64 / m as f64);
                (
                    synthesize(&self.vr, th) - self.phi0,
                    synthesize(&self.vtheta, th) + self.mu0,
                )
            })
            .unzip()
    }

    /// `B_kappa`-style size of the perturbation.
    pub fn amplitude(&self) -> T {
        self.vr
            .iter()
            .chain(&self.vtheta)
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }
}

/// Boundary data as accepted on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySource<T> {
    ThetaSamples { ur: Vec<T>, utheta: Vec<T> },
    Modes { vr: Vec<[T; 2]>, vtheta: Vec<[T; 2]> },
}

impl<T: Real> BoundarySource<T> {
    /// `phi0`/`mu0` are required for the modes form and ignored for samples, which carry their own.
    pub fn into_trace(self, phi0: Option<T>, mu0: Option<T>) -> Result<BoundaryTrace<T>> {
        match self {
            Self::ThetaSamples { ur, utheta } => BoundaryTrace::from_samples(&ur, &utheta),
            Self::Modes { vr, vtheta } => {
                let (Some(phi0), Some(mu0)) = (phi0, mu0) else {
                    return Err(Error::InvalidParameter("modes boundary data needs phi0 and mu0".into()));
                };
                let conv = |v: Vec<[T; 2]>| v.into_iter().map(|[a, b]| Complex::new(a, b)).collect();
                BoundaryTrace::from_modes(phi0, mu0, conv(vr), conv(vtheta))
            }
        }
    }
}
