use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("mode {mode} is a rigid-body mode (near-zero frequency); damping ratio undefined")]
    RigidBodyMode { mode: usize },

    #[error("mode {mode} has no successor mode; MOF undefined")]
    UndefinedMode { mode: usize },

    #[error(
        "irregular damping construction failed after {retries} retries; \
         achieved zeta range [{achieved_min:.3e}, {achieved_max:.3e}]"
    )]
    ConstructionFailed {
        retries: usize,
        achieved_min: f64,
        achieved_max: f64,
    },

    #[error("column {col} is degenerate (zero norm); cannot normalize")]
    DegenerateColumn { col: usize },

    #[error("dynamic stiffness matrix is singular at the requested frequency")]
    SingularSystem,

    #[error("combinatorial guard exceeded: C(n, m) = {combinations:.3e} > {limit:.3e}")]
    CombinatorialGuard { combinations: f64, limit: f64 },

    #[error("only {available} admissible extrema for budget {budget}")]
    InsufficientExtrema { available: usize, budget: usize },

    #[error("solve for force index {index} failed: {source}")]
    RowSolve {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
