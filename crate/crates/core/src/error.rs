use thiserror::Error;

/// Errors raised by the tensor, geometry and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("singular metric: |det| = {det:e}")]
    SingularMetric { det: f64 },

    #[error("point {point:?} lies outside the chart domain")]
    DomainViolation { point: Vec<f64> },

    #[error("degenerate Levi-Civita specification: {0}")]
    DegenerateSpec(String),

    #[error("missing derivatives: requested order {requested}, available {available}")]
    MissingDerivatives { requested: usize, available: usize },

    #[error("least-squares span has zero norm")]
    ZeroSpan,

    #[error("samples are not proportional (relative residual {residual:e} at sample {index})")]
    NotProportional { index: usize, residual: f64 },

    #[error("trajectory left the domain at t = {time}")]
    LeftDomain { time: f64 },

    #[error("energy drift {drift:e} exceeds 1e-3; reduce the step")]
    StepTooLarge { drift: f64 },

    #[error("parameter values must be pairwise distinct (duplicate {value})")]
    DuplicateParameter { value: f64 },

    #[error("g and a are linearly dependent at this point")]
    DegenerateSpan,

    #[error("curvature fails its symmetries (residual {residual:e})")]
    SymmetryViolation { residual: f64 },

    #[error("operator is not regular (minimal polynomial degree {degree} < {dim})")]
    NotRegular { degree: usize, dim: usize },

    #[error("ad_b(x) leaves the image of ad_a (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("hypothesis [R(x) - Kx, a] = 0 fails on basis element {basis_index} (residual {residual:e})")]
    HypothesisFailed { basis_index: usize, residual: f64 },

    #[error("both b and A are proportional to a")]
    BothProportional,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
