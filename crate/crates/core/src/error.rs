use std::fmt;

use thiserror::Error;

/// Pipeline phase an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Decompose,
    Transform,
    Riccati,
    Recover,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Decompose => "decompose",
            Phase::Transform => "transform",
            Phase::Riccati => "riccati",
            Phase::Recover => "recover",
        })
    }
}

#[derive(Debug, Error)]
pub enum LqError {
    #[error("R_e,{stage} is not positive definite (Cholesky failed at stage {stage})")]
    Factorization { stage: usize },

    #[error("input {input} is redundant: its controllability index is 0")]
    RedundantInput { input: usize },

    #[error("controllability index search reached rank {found}, expected {expected}")]
    IndexSearch { found: usize, expected: usize },

    #[error("singular selection matrix (condition estimate {condition:.3e})")]
    SingularSelection { condition: f64 },

    #[error("canonical pattern violated in {what}: residual {residual:.3e} (condition estimate {condition:.3e})")]
    Pattern {
        what: String,
        residual: f64,
        condition: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("no controllable instance found after {attempts} attempts")]
    Generation { attempts: usize },

    #[error("KKT matrix is singular")]
    DegenerateKkt,

    #[error("KKT system has {vars} variables, above the cap of {cap}")]
    OracleTooLarge { vars: usize, cap: usize },

    #[error("{phase} phase: {source}")]
    InPhase {
        phase: Phase,
        #[source]
        source: Box<LqError>,
    },
}

impl LqError {
    pub(crate) fn in_phase(self, phase: Phase) -> LqError {
        LqError::InPhase {
            phase,
            source: Box::new(self),
        }
    }

    /// Phase tag, if the error was raised inside the solve pipeline.
    pub fn phase(&self) -> Option<Phase> {
        match self {
            LqError::InPhase { phase, .. } => Some(*phase),
            _ => None,
        }
    }

    /// The underlying error with any phase wrapper removed.
    pub fn root(&self) -> &LqError {
        match self {
            LqError::InPhase { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Errors from reading or writing problem files.
#[derive(Debug, Error)]
pub enum ProblemIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema violation in field `{field}`: {message}")]
    Schema { field: String, message: String },
}

pub type Result<T, E = LqError> = std::result::Result<T, E>;
