use thiserror::Error;

/// Errors raised by the lattice, engine, solver and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bond ({x}, {}) lies outside the window [{lo}, {hi}]", x + 1)]
    OutOfWindow { x: i64, lo: i64, hi: i64 },

    #[error("no boundary event possible: sites 0 and 1 are both empty")]
    NoBoundaryEvent,

    #[error("configuration invariant violated: {0}")]
    Invariant(String),

    #[error("invalid initial profile: {0}")]
    Profile(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("CFL condition violated: dt = {dt:e} exceeds dx^2/(2 a_max) = {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("multi-interface configuration: {blocks} disjoint mushy blocks")]
    MultiInterface { blocks: usize },

    #[error("test function support [{lo}, {hi}] is not inside {what}")]
    Support { lo: f64, hi: f64, what: &'static str },

    #[error("simulation failure: {0}")]
    Simulation(String),

    #[error("coupling logic error: {0}")]
    Coupling(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
