use thiserror::Error;

/// Errors raised by the geometric and combinatorial routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix size {m} outside the supported range {min}..={max}")]
    Size { m: usize, min: usize, max: usize },

    #[error("invalid root system {family} of rank {rank}: {reason}")]
    RootSystem {
        family: String,
        rank: usize,
        reason: String,
    },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("ill-conditioned group element (condition estimate {0:e})")]
    Conditioning(f64),

    #[error("degenerate measure: Hessian minimum eigenvalue {0:e} below guard")]
    DegenerateMeasure(f64),

    #[error("Newton iteration stopped after {iterations} steps with gradient norm {grad_norm:e}")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        /// Gradient norm at every iterate.
        trace: Vec<f64>,
    },

    #[error("degenerate ratio: restricted Q2 determinant {0:e}")]
    DegenerateRatio(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no admissible frame selection; deficient vectors {deficient:?} reach only {reachable} ground elements for demand {demand}")]
    InfeasibleFrame {
        deficient: Vec<usize>,
        reachable: usize,
        demand: usize,
    },

    #[error("exhaustive enumeration is limited to rank <= {max}, got {rank}")]
    Capability { rank: usize, max: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
