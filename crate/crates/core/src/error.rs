use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("square {square} is not contained in the root {root}")]
    NotInRoot { square: String, root: String },
    #[error("tree is not convex: {0}")]
    NotConvex(String),
    #[error("shift {shift} moves the support fully off the grid")]
    ShiftOffGrid { shift: f64 },
    #[error("scale {t} is under-resolved by grid spacing {h}")]
    UnderResolved { t: f64, h: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("pair is not admissible: residual {residual:e} exceeds {tolerance:e}")]
    InadmissiblePair { residual: f64, tolerance: f64 },
    #[error("grid too large: n = {n} exceeds {limit}")]
    GridTooLarge { n: usize, limit: usize },
    #[error("all sets are empty")]
    EmptyInstance,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
