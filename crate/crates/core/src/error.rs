use std::path::PathBuf;

use crate::fit::nlls::NllsSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{quantity} = {value:e} is outside its domain: {reason}")]
    Domain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("frequency grid is not strictly increasing at index {index}")]
    GridOrdering { index: usize },

    #[error("no resonance dip found (min |S21| is {ratio:.4} of the baseline)")]
    NoDip { ratio: f64 },

    #[error("no feasible geometry in the search grid")]
    EmptyFeasibleSet,

    #[error("thickness draw rejected {attempts} times in a row for resonator {resonator}")]
    RejectionLimit { resonator: usize, attempts: usize },

    #[error("fit did not converge after {iterations} iterations")]
    Convergence {
        iterations: usize,
        best: Box<NllsSolution>,
    },

    #[error("fit produced an unphysical {quantity} = {value:e}")]
    Unphysical { quantity: &'static str, value: f64 },

    #[error("sweep is degenerate: {0}")]
    DegenerateSweep(&'static str),

    #[error("configuration error:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<crate::io::config::FieldError>),

    #[error("{path}:{line}: {message}")]
    TraceFormat {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            reason,
        }
    }
}

pub(crate) fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(
            quantity,
            value,
            "must be positive and finite",
        ))
    }
}
