//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building systems, integrating them or
/// post-processing results.
#[derive(Debug, Error)]
pub enum Error {
    /// A NaN or infinity showed up where a finite value was required.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Two eigenvalues coincide (or the eigenbasis is numerically singular),
    /// so the averaged matrix has no usable simple spectrum.
    #[error("spectrum is not simple: {0}")]
    NonSimpleSpectrum(String),

    /// Averaging window with non-positive length.
    #[error("averaging window must be positive, got {0}")]
    DegenerateWindow(f64),

    /// Step size too large for the smallest delay.
    #[error("step size {dt} exceeds h_lo/2 = {limit}; delayed lookups would leave completed data")]
    StepTooLarge { dt: f64, limit: f64 },

    /// Integration interval of non-positive length.
    #[error("empty integration interval: t_end = {t_end} <= t0 = {t0}")]
    EmptyInterval { t0: f64, t_end: f64 },

    /// Dense-output evaluation outside the covered time range.
    #[error("time {t} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// Observed delay values leave the declared [h_lo, h_hi] corridor.
    #[error("delay bound violation: {0}")]
    DelayBoundViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Nonlinearity term that is not a monomial with positive powers.
    #[error("unsupported nonlinearity form: {0}")]
    UnsupportedForm(String),

    #[error("negative argument: {0}")]
    NegativeArgument(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Sample series and bound pair cover incompatible time ranges.
    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    /// A finite-time stability check was asked about a horizon the series
    /// does not cover.
    #[error("horizon not covered: {0}")]
    HorizonUncovered(String),

    /// Ray direction with zero image under the eigenbasis transform.
    #[error("degenerate ray direction")]
    DegenerateDirection,

    /// Radius bisection: the smallest probed history already blows up.
    #[error("radius search: smallest probe {0} already exceeds the blowup threshold")]
    AllBad(f64),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
