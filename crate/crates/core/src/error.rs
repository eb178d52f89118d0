use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Gauss-Legendre root finding did not converge for n = {0}")]
    QuadratureNoConvergence(usize),

    #[error("invalid cross section: {0}")]
    InvalidCrossSection(String),

    #[error("line does not meet the unitarity circle (discriminant {discriminant:e})")]
    NoIntersection { discriminant: f64 },

    #[error("more than {limit} solutions accepted")]
    SolutionOverflow { limit: usize },

    #[error("F is not positive at node {node} (value {value:e})")]
    NonpositiveF { node: usize, value: f64 },

    #[error("|sin phi| = {value} > 1 at node {node} (cos theta = {cos_theta})")]
    SinOutOfRange {
        node: usize,
        cos_theta: f64,
        value: f64,
    },

    #[error("fixed point not reached after {iters} iterations (last change {last_change:e})")]
    MaxIterExceeded { iters: usize, last_change: f64 },

    #[error("every coefficient in the trailing window is zero")]
    AllZeroWindow,
}

pub type Result<T> = std::result::Result<T, Error>;
