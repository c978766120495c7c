use thiserror::Error;

/// Errors surfaced by the library. Each variant names the precondition that
/// failed so callers (and the CLI) can report it verbatim.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("insufficient coefficients: truncated list of length {have} cannot reach degree {need}")]
    InsufficientCoefficients { have: usize, need: usize },

    #[error("spec has no exact rational expansion")]
    NotExactlyExpandable,

    #[error("series_log requires a positive constant term")]
    LogNeedsPositiveConstant,

    #[error("series_exp requires a zero constant term")]
    ExpNeedsZeroConstant,

    #[error("series_compose requires the inner series to have zero constant term")]
    ComposeNeedsZeroConstant,

    #[error("series inverse requires a nonzero constant term")]
    InverseNeedsNonzeroConstant,

    #[error("evaluation point t={t} outside domain [0, {limit})")]
    RangeError { t: f64, limit: f64 },

    #[error("mean out of range: target {target} not reachable (limit {limit})")]
    MeanOutOfRange { target: f64, limit: f64 },

    #[error("infinite boundary variance: second moment diverges at t=R")]
    InfiniteBoundaryVariance,

    #[error("no boundary extension: {0}")]
    NoBoundaryExtension(String),

    #[error("regime requires k/n below the mean limit (k/n={ratio}, limit {limit})")]
    RatioOutOfRange { ratio: f64, limit: f64 },

    #[error("requires psi'(0) != 0 (coefficient of z^1 must be positive)")]
    NeedsPositiveLinearCoefficient,

    #[error("regime requires uniform Gaussianity; spec is not flagged uniformly Gaussian")]
    NotUniformlyGaussian,

    #[error("ratio limit L is at or beyond the mean limit; use the boundary estimator")]
    UseBoundaryEstimator,

    #[error("expansion order J must be at least 1")]
    ExpansionOrderTooSmall,

    #[error("prefactor series is not analytic at tau={tau} (its radius is {radius})")]
    PrefactorNotAnalytic { tau: f64, radius: f64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("supercritical tilt: mean of tilted offspring is {mean} > 1")]
    SupercriticalTilt { mean: f64 },

    #[error("constraint violated: requires s*tau < t*S (s={s}, tau={tau}, t={t}, S={cap})")]
    TiltConstraint { s: f64, tau: f64, t: f64, cap: f64 },

    #[error("gauge of the exponent polynomial must be 1 (found {0})")]
    ExponentGaugeNotOne(u64),

    #[error("cannot certify case M=1 with infinite radius for a truncated spec: {0}")]
    UncertifiableCase(String),
}

pub type Result<T> = std::result::Result<T, Error>;
