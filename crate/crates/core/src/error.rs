use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussError {
    #[error("density undefined for zero variance")]
    DegenerateVariance,
    #[error("negative variance {0}")]
    NegativeVariance(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("quantile level {0} outside (0, 1)")]
    QuantileDomain(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Position in a source file, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at {pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("guard variance must be finite and >= 0, got {0}")]
    BadVariance(f64),
    #[error("step budget exhausted")]
    BudgetExhausted,
    #[error("call to unbound host function `{0}`")]
    UnknownHost(String),
    #[error("host function `{0}` is already bound")]
    DuplicateHost(String),
    #[error("host function `{name}` failed: {message}")]
    Host { name: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GbnError {
    #[error("node {node}: variance must be > 0, got {variance}")]
    NonPositiveVariance { node: usize, variance: f64 },
    #[error("node {node}: parent {parent} does not precede it")]
    NonTopological { node: usize, parent: usize },
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("network is not a chain")]
    NotChain,
    #[error("precision matrix is not tridiagonal (entry ({row}, {col}) = {value})")]
    NotTridiagonal { row: usize, col: usize, value: f64 },
    #[error("recovered variance for node {node} is not positive ({variance})")]
    NegativeRecoveredVariance { node: usize, variance: f64 },
    #[error("trace {trace} has length {found}, network has {expected} nodes")]
    TraceLength {
        trace: usize,
        expected: usize,
        found: usize,
    },
    #[error("improper posterior: alpha* - n + 1 = {margin} <= 0; {needed} more trace(s) required")]
    ImproperPosterior { margin: f64, needed: usize },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("{path}: row {row}: {message}")]
    Csv {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{path}: line {line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("expert trace success rate {rate:.4} below 1% ({accepted} of {attempts})")]
    LowSuccessRate {
        rate: f64,
        accepted: usize,
        attempts: usize,
    },
    #[error("program has {program} motion blocks, model has {model} nodes")]
    ModelMismatch { program: usize, model: usize },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Gbn(#[from] GbnError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}
