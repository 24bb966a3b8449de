use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {requested} is not on the grid lattice; nearest representable times are {below} and {above}")]
    TimeNotOnLattice {
        requested: f64,
        below: f64,
        above: f64,
    },

    #[error("Picard iteration did not converge after {iterations} iterations (last difference {last_diff:.3e}, last contraction ratio {last_ratio:.3})")]
    NoConvergence {
        iterations: usize,
        last_diff: f64,
        last_ratio: f64,
    },

    #[error("inner cell iteration did not converge at node (alpha index {alpha}, beta index {beta})")]
    CellNoConvergence { alpha: usize, beta: usize },

    #[error("overlapping diamonds disagree by {disagreement:.3e} (bound {bound:.3e}) between tiles {left} and {right}")]
    OverlapMismatch {
        left: usize,
        right: usize,
        disagreement: f64,
        bound: f64,
    },

    #[error("CONCENTRATION-SUSPECTED at t = {t}: step radius {radius} fell below 2h = {min_radius}")]
    ConcentrationSuspected {
        t: f64,
        radius: f64,
        min_radius: f64,
    },

    #[error("solution reached the computational boundary at t = {t} (edge amplitude {amplitude:.3e})")]
    DomainExhausted { t: f64, amplitude: f64 },

    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::CellNoConvergence { .. }
                | Error::OverlapMismatch { .. }
                | Error::ConcentrationSuspected { .. }
                | Error::DomainExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
