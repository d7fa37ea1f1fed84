use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array lengths disagree with each other or with the grid.
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// The explicit time step exceeds the diffusion stability bound.
    #[error("CFL violation: dt = {dt:e} exceeds the stability bound {dt_max:e}")]
    Cfl { dt: f64, dt_max: f64 },

    /// The 2x2 Stefan-Maxwell system is (numerically) singular at a node.
    #[error("singular flux system{} (xi1 = {xi1}, xi2 = {xi2}, denominator = {denominator:e})",
        .node.map(|j| format!(" at node {j}")).unwrap_or_default())]
    Singular {
        node: Option<usize>,
        xi1: f64,
        xi2: f64,
        denominator: f64,
    },

    /// Two trajectories cannot be compared (time axes or grids differ).
    #[error("incompatible trajectories: {0}")]
    Incompatible(String),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Singular { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
