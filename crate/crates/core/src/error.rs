use thiserror::Error;

/// Errors raised by the soliton laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tail rule: {0}")]
    InvalidRule(&'static str),
    #[error("invalid soliton parameters: {0}")]
    InvalidParams(&'static str),
    #[error("truncation order {requested} exceeds the {available} stored parameters")]
    OrderExceedsPrefix { requested: usize, available: usize },
    #[error("Cholesky factorization of 1 + C broke down at pivot {pivot}")]
    CholeskyBreakdown { pivot: usize },
    #[error("evaluation point (t = {t:e}, x = {x:e}) is outside the supported window")]
    WindowExceeded { t: f64, x: f64 },
    #[error("unsupported derivative order (t: {t}, x: {x})")]
    UnsupportedOrder { t: usize, x: usize },
    #[error("no truncation order brings the tail bound below {eps}")]
    NoTruncation { eps: f64 },
    #[error("principal minor expansion is limited to N <= {max}, got {requested}")]
    ExpansionTooLarge { requested: usize, max: usize },
    #[error("grid is not usable: {0}")]
    InvalidGrid(&'static str),
    #[error("grid too narrow: |V| = {value:e} at the boundary exceeds {limit:e}")]
    GridTooNarrow { value: f64, limit: f64 },
    #[error("grid too coarse: eigenvalue {index} moves by {shift:e} under refinement")]
    GridTooCoarse { index: usize, shift: f64 },
    #[error("wavenumber {k} cannot be resolved on a window of width {width}")]
    WavenumberTooSmall { k: f64, width: f64 },
    #[error("wavenumber sits on a pole of the transmission coefficient")]
    Pole,
    #[error("spectral parameter must lie off the real axis")]
    RealSpectralParameter,
    #[error("field carries x-derivatives up to order {available}, {required} required")]
    InsufficientJet { required: usize, available: usize },
    #[error("trace relations are defined for odd orders, got {0}")]
    EvenOrder(usize),
    #[error("parameter class does not satisfy the hypotheses: {0}")]
    ClassMismatch(&'static str),
    #[error("truncation ladder must be nonempty and nondecreasing")]
    InvalidLadder,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
