use serde::Serialize;
use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, Error, PartialEq, Serialize)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("harmonic exceeds cutoff: m = {harmonic} but n_cut = {n_cut}")]
    HarmonicExceedsCutoff { harmonic: i64, n_cut: usize },

    #[error("parity undefined at nonzero offset (n_offset = {offset})")]
    ParityUndefined { offset: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("harmonic series did not converge for m = {harmonic}: relative tail {tail:e} at n_max = {n_max}")]
    SeriesNotConverged {
        harmonic: usize,
        tail: f64,
        n_max: usize,
    },

    #[error(
        "eigensolver did not converge: {converged}/{wanted} pairs, worst residual {residual:e}"
    )]
    EigenNotConverged {
        wanted: usize,
        converged: usize,
        residual: f64,
    },

    #[error("singular shifted matrix at pivot {0}")]
    SingularShift(usize),

    #[error("gap closure on path at phi = {phi}")]
    GapClosure { phi: f64 },

    #[error(
        "gap {gap:e} between levels {n} and {m} is below 10x the solver residual {residual:e}"
    )]
    UnresolvedGap {
        n: usize,
        m: usize,
        gap: f64,
        residual: f64,
    },

    #[error("doublet coupling {numerator:e} at phi = {phi} exceeds 1e-8 of |dH/dphi| = {norm:e}")]
    DoubletCoupling { phi: f64, numerator: f64, norm: f64 },

    #[error("step size underflow at t = {time} ns (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("norm drift {drift:e} exceeds tolerance at t = {time} ns")]
    NormDrift { time: f64, drift: f64 },

    #[error("logical basis mismatch: final doublet overlap {overlap} < 0.9")]
    BasisMismatch { overlap: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
