use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside the domain ({expected})")]
    Domain {
        func: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{what}: no convergence after {iterations} iterations (last bracket [{lo}, {hi}])")]
    Convergence {
        what: &'static str,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    #[error("{what}: iteration does not contract (step grew from {previous} to {current})")]
    NonContraction {
        what: &'static str,
        previous: f64,
        current: f64,
    },

    #[error("quadrature did not converge: best estimate {estimate} with error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("no eigenvalue bracket with {nodes} nodes in K window [{lo}, {hi}]")]
    Bracket { nodes: usize, lo: f64, hi: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),
}
