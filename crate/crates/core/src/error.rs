use thiserror::Error;

/// Errors produced by the plasma library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("configuration contains coincident points or a factor zero; gradient is singular")]
    SingularConfiguration,

    #[error("initial configuration has non-finite energy")]
    InfiniteInitialEnergy,

    #[error("operation requires at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("separation bound is vacuous: delta = {delta} >= 1 (perturbation too large)")]
    VacuousBound { delta: f64 },

    #[error("grid domain too small: fillable mass {fillable} < 1")]
    DomainTooSmall { fillable: f64 },

    #[error("sublevel set of the fill level {fill_level} reaches the domain boundary")]
    SublevelExceedsDomain { fill_level: f64 },

    #[error("histogram range excludes {excluded_fraction:.6} of the points (> 0.001 allowed)")]
    RangeExcludesPoints { excluded_fraction: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
