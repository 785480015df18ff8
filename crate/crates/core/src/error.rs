use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    /// A structural invariant of an input does not hold.
    #[error("invalid {field}{}: {message}", part_suffix(*.part))]
    Invalid {
        part: Option<usize>,
        field: &'static str,
        message: String,
    },

    #[error("need ≥ 3 frames, got {0}")]
    TooFewFrames(usize),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Mesh geometry that cannot be integrated or closed.
    #[error("geometry error{}: {message}", part_suffix(*.part))]
    Geometry { part: Option<usize>, message: String },

    #[error("rotation matrix is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("QP solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NotConverged {
        iterations: usize,
        kkt_residual: f64,
        best: Vec<f64>,
    },
}

fn part_suffix(part: Option<usize>) -> String {
    match part {
        Some(p) => format!(" (part {p})"),
        None => String::new(),
    }
}

impl Error {
    pub fn invalid(part: Option<usize>, field: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            part,
            field,
            message: message.into(),
        }
    }

    pub(crate) fn geometry(part: Option<usize>, message: impl Into<String>) -> Self {
        Error::Geometry {
            part,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input files or arguments, as
    /// opposed to numeric or geometric failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Invalid { .. }
                | Error::TooFewFrames(_)
                | Error::Dimension { .. }
                | Error::UnknownName { .. }
        )
    }
}
