use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The eigensolver hit its iteration cap. `residual` is the worst relative
    /// residual among the requested modes at that point.
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("supermodes are degenerate (delta n = {delta_n:.3e}); waveguides are decoupled")]
    InfiniteCouplingLength { delta_n: f64 },

    #[error("splitting ratio {target} unreachable on branch {order}: {reason}")]
    UnreachableTarget { target: f64, order: u32, reason: String },

    #[error("two-pair truncation invalid for mean pair number {0} (must be <= 0.1)")]
    TruncationInvalid(f64),

    /// Least-squares fit hit its iteration cap. Carries the best parameters seen.
    #[error("fit did not converge after {iterations} iterations (cost {cost:.6e})")]
    FitConvergence { iterations: usize, cost: f64, best: Vec<f64> },

    #[error("unidentifiable model: {0}")]
    Unidentifiable(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
