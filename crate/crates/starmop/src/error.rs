use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("supercritical input: t0 = {t0} exceeds the critical time {t0_crit}")]
    Supercritical { t0: f64, t0_crit: f64 },

    #[error("pole at w = 0")]
    Pole,

    #[error("z = {re}{im:+}i lies on a sector boundary (arg within {tol:e} rad)")]
    SectorResolution { re: f64, im: f64, tol: f64 },

    #[error("boundary values could not be separated at s = {0}")]
    BoundaryResolution(f64),

    #[error("contour truncation insufficient: tail bound {0:e}")]
    Truncation(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("singular system at n = {n}: {detail}")]
    Singular { n: usize, detail: String },

    #[error("z is within {dist:e} of the star (minimum {min:e})")]
    Proximity { dist: f64, min: f64 },

    #[error("split exponent out of range")]
    Overflow,

    #[error("point lies inside the droplet")]
    InsideDomain,

    #[error("boundary curve is not simple: {0}")]
    SelfIntersection(String),

    #[error("inconsistent coefficient system: residual {0:e}")]
    Inconsistent(f64),

    #[error("|z| = {0} exceeds the series radius")]
    Radius(f64),

    #[error("residue mismatch at {at}: got {got}, expected {expected}")]
    ResidueMismatch { at: String, got: f64, expected: f64 },

    #[error("branch continuation failed: {0}")]
    BranchContinuation(String),

    #[error("zeros still moved by {change:e} at {bits} bits")]
    Precision { bits: usize, change: f64 },

    #[error("root finder failed: {0}")]
    RootFinding(String),
}

pub type Result<T> = std::result::Result<T, Error>;
