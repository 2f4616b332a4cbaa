use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The ODE boundary value problem has no solution for lambda >= 4.
    #[error("no solution for lambda = {lambda}: lambda >= 4 is the almost-perfect recovery regime")]
    NoSolution { lambda: f64 },

    #[error("integration failed at x = {x}: {reason} (state {state:?})")]
    NumericalFailure {
        x: f64,
        state: [f64; 3],
        reason: String,
    },

    /// The shooting trajectory left the saddle neighbourhood before it got close enough.
    #[error("trajectory escaped at x = {x_reached} before reaching the saddle neighbourhood (distance {distance:e})")]
    Precision { x_reached: f64, distance: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("population dynamics did not converge after {iterations} iterations (last KS {last_ks:e}, target {target:e})")]
    Convergence {
        iterations: usize,
        last_ks: f64,
        target: f64,
    },

    #[error("tree with depth {depth} and arity {arity} needs {nodes} nodes, above the cap of {cap}")]
    TreeTooLarge {
        depth: usize,
        arity: usize,
        nodes: u128,
        cap: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
