use thiserror::Error;

/// Errors raised while building or validating a bandit instance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("compatibility constant requires a non-empty support")]
    DegenerateSupport,
    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("lasso did not reach tolerance {tol:e} after {iters} iterations (residual {residual:e})")]
    NoConvergence { tol: f64, iters: usize, residual: f64 },
    #[error("singular restricted system")]
    Singular,
    #[error("invalid regression input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),
    #[error("invalid mechanism parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("horizon {horizon} exceeded")]
    HorizonExceeded { horizon: usize },
    #[error("prefix {t} out of range (inserted {count})")]
    OutOfRange { t: usize, count: usize },
    #[error("node at level {level} index {index} was evicted")]
    NodeEvicted { level: u32, index: usize },
    #[error("support must be non-empty")]
    EmptySupport,
    #[error("support index {index} outside context dimension {dim}")]
    SupportIndex { index: usize, dim: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Errors surfaced by the experiment harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("insufficient trials: event count {count} below {min}")]
    InsufficientTrials { count: u64, min: u64 },
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl HarnessError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io(_) | HarnessError::Csv(_) => 3,
            _ => 2,
        }
    }
}
