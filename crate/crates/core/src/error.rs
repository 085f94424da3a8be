use thiserror::Error;

use crate::var::VarId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("unbound variable `{0}`")]
    UnboundVariable(VarId),
    #[error("evaluation hit a pole at the chosen point")]
    PoleAtPoint,
    #[error("canonical expansion exceeded the budget of {limit} terms")]
    ExpansionOverflow { limit: usize },
    #[error("no admissible random point found after {attempts} attempts")]
    SingularLocusExhausted { attempts: u32 },
    #[error("parse error at {start}..{end}: {message}")]
    Parse {
        start: usize,
        end: usize,
        message: String,
    },
    #[error("defining function is not real-valued: {0}")]
    NotReal(String),
    #[error("jet order {order} exceeds the maximum {max}")]
    JetOrderExceeded { order: u32, max: u32 },
    #[error("coefficient involves `{0}`, which is not a coordinate of this stage")]
    UnrewritableCoefficient(VarId),
    #[error("degree {0} exceeds the supported maximum")]
    DegreeTooHigh(usize),
    #[error("change-of-basis matrix is singular")]
    SingularFrame,
    #[error("expression too large to render ({nodes} tree nodes)")]
    TooLargeToRender { nodes: u64 },
    #[error("`{0}` is already bound")]
    AlreadyBound(&'static str),
    #[error("`sb` must be bound before this step")]
    UnboundSbar,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
