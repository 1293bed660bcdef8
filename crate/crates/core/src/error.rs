use thiserror::Error;

/// Position-tagged syntax error from the symbol parser.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` refers to dimension {index}, but the symbol has n = {n}")]
    DimensionIndex { name: String, index: usize, n: usize },

    #[error("symbol is not 2π-periodic in x: |a(x) - a(x + 2π e_{axis})| = {defect:e} at x = {x:?}")]
    NotPeriodic { axis: usize, x: Vec<f64>, defect: f64 },

    #[error("branch cut of `{func}` reached on the real domain at x = {x:?}, xi = {xi:?}")]
    BranchCut { func: &'static str, x: Vec<f64>, xi: Vec<f64> },

    #[error("evaluation produced a non-finite value at x = {x:?}, xi = {xi:?}")]
    NonFinite { x: Vec<f64>, xi: Vec<f64> },

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    DerivativeOrder { order: usize, max: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid symbol class: {0}")]
    ClassInvariant(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid sector angle {0} (need 0 < theta < pi)")]
    Sector(f64),

    #[error("matrix is numerically singular (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("lambda = {re}{im:+}i lies in Omega_(x,xi) at node (x index {x_index}, xi index {xi_index})")]
    LambdaInOmega { re: f64, im: f64, x_index: usize, xi_index: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("contour: {0}")]
    Contour(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
