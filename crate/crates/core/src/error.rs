use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("R_max must exceed 1, got {0}")]
    EmptyDomain(f64),
    #[error("nodes_per_decade must be at least 16, got {0}")]
    CoarseGrid(usize),
    #[error("need at least {needed} boundary samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("boundary samples for u_r and u_theta differ in length ({0} vs {1})")]
    SampleMismatch(usize, usize),
    #[error("residual flux {0:e} remains after removing phi0")]
    ResidualFlux(f64),
    #[error("divergent tail: fitted exponent {0} >= -1")]
    DivergentTail(f64),
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("square root of the discriminant vanishes for mode {0}")]
    ZeroDiscriminant(i64),
    #[error("mode 0 must go through the zero-mode solver")]
    ZeroMode,
    #[error("degenerate constants for mode {0}: both factors of (zeta+2)^2 - n^2 vanish")]
    DegenerateMode(i64),
    #[error("phi0 = {0} lies in the guard band just above 2")]
    DegenerateBand(f64),
    #[error("derivative order {m} must be below kappa = {kappa}")]
    NormOrder { m: usize, kappa: f64 },
    #[error("mode cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("modes with |n| <= 1 present")]
    LowModes,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-convergent tail in asymptotic fit")]
    NonConvergentTail,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
