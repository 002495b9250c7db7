use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("modulus {tau} outside the evaluation domain (Im tau must be >= {min_im})")]
    Domain { tau: Complex64, min_im: f64 },

    #[error("argument {z} lies on a pole (distance {distance:e} to the singular set)")]
    Pole { z: Complex64, distance: f64 },

    #[error("theta series did not converge within {cap} terms")]
    SeriesCap { cap: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate seed: {0}")]
    DegenerateSeed(String),

    #[error("Newton iteration failed to converge: {0}")]
    NewtonDivergence(String),

    #[error("p = {p} came within {distance:e} of a half period at tau = {tau}")]
    BranchPoint {
        tau: Complex64,
        p: Complex64,
        distance: f64,
    },

    #[error("step size underflow at parameter {at} (h = {h:e})")]
    StepFailure { at: f64, h: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("internal consistency check failed: {what} (difference {diff:e})")]
    Inconsistency { what: String, diff: f64 },

    #[error("path passes within {distance:e} of a singular point {point}")]
    ClearanceViolation { point: Complex64, distance: f64 },

    #[error("no valid detour: {0}")]
    NoValidDetour(String),

    #[error("t = {given} does not match t(tau) = {expected}")]
    TMismatch {
        given: Complex64,
        expected: Complex64,
    },

    #[error("function vanishes on the path at tau = {tau}")]
    ZeroCrossing { tau: Complex64 },

    #[error("p does not approach zero along the trajectory (min |p| = {min_abs_p})")]
    NonVanishingP { min_abs_p: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("theta_4 = n0 + 1/2 vanishes")]
    ZeroTheta4,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input rather than by a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidParams(_)
                | Error::DegenerateSeed(_)
                | Error::TMismatch { .. }
                | Error::ZeroTheta4
                | Error::InsufficientSamples(_)
        )
    }
}
