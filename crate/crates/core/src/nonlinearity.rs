//! Quadratic coupling `F_n = (i/r) sum_{k+l=n} (l gamma_l w_k' - k gamma_l' w_k)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{ModeFunction, RadialGrid};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Source samples `F_n(r_j)` for `0 <= n <= N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceSpectrum<T> {
    pub modes: Vec<Vec<Complex<T>>>,
}

impl<T: Real> SourceSpectrum<T> {
    pub fn zeros(n_max: usize, len: usize) -> Self {
        Self {
            modes: vec![vec![Complex::new(T::zero(), T::zero()); len]; n_max + 1],
        }
    }

    pub fn n_max(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            modes: self.modes.iter().map(|m| m.iter().map(|&z| z * s).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .zip(&other.modes)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x + y).collect())
                .collect(),
        }
    }
}

/// Truncated convolution over `|k|, |l| <= n_max` evaluated at every node.
///
/// `gamma[n]` and `w[n]` hold modes `n >= 0`; negative modes are their conjugates.
pub fn compute_sources<T: Real>(
    grid: &RadialGrid<T>,
    gamma: &[ModeFunction<T>],
    w: &[ModeFunction<T>],
    n_max: usize,
) -> Result<SourceSpectrum<T>> {
    if gamma.len() != n_max + 1 || w.len() != n_max + 1 {
        return Err(Error::CutoffMismatch(gamma.len().min(w.len()), n_max + 1));
    }
    let len = grid.len();
    for m in gamma.iter().chain(w) {
        if m.values.len() != len || m.derivative.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: m.derivative.len().min(m.values.len()),
            });
        }
    }
    let nm = n_max as i64;
    let full = |modes: &[ModeFunction<T>]| -> Vec<ModeFunction<T>> {
        (-nm..=nm)
            .map(|k| {
                if k >= 0 {
                    modes[k as usize].clone()
                } else {
                    modes[(-k) as usize].conj()
                }
            })
            .collect()
    };
    let g = full(gamma);
    let ww = full(w);
    let active_g: Vec<bool> = g.iter().map(|m| !m.is_zero()).collect();
    let active_w: Vec<bool> = ww.iter().map(|m| !m.is_zero()).collect();
    let at = |k: i64| (k + nm) as usize;
    let i = Complex::new(T::zero(), T::one());

    let modes = (0..=nm)
        .into_par_iter()
        .map(|n| {
            let mut out = vec![Complex::new(T::zero(), T::zero()); len];
            for k in (n - nm).max(-nm)..=(n + nm).min(nm) {
                let l = n - k;
                let (gl, wk) = (at(l), at(k));
                if !active_g[gl] || !active_w[wk] {
                    continue;
                }
                let lf: T = lit(l as f64);
                let kf: T = lit(k as f64);
                let (gm, wm) = (&g[gl], &ww[wk]);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = *o + gm.values[j] * wm.derivative[j] * lf - gm.derivative[j] * wm.values[j] * kf;
                }
            }
            for (o, &r) in out.iter_mut().zip(grid.nodes()) {
                *o = *o * i / r;
            }
            if n == 0 {
                // F_0 is real for real fields; drop the rounding residue
                for o in out.iter_mut() {
                    o.im = T::zero();
                }
            }
            out
        })
        .collect();
    Ok(SourceSpectrum { modes })
}
