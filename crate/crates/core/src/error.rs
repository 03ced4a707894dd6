use thiserror::Error;

/// Errors raised by the estimation pipeline and its supporting machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid length {n} is not a power of two")]
    NotPowerOfTwo { n: usize },

    #[error("fine level {j1} is too large for n = {n} (need j1 <= {max})")]
    LevelTooFine { j1: i64, n: usize, max: i64 },

    #[error("invalid level range: j0 = {j0}, j1 = {j1}")]
    InvalidLevels { j0: i64, j1: i64 },

    #[error("shift k = {k} out of range for level {j} (need 0 <= k < {})", 1u64 << *j as u32)]
    ShiftOutOfRange { j: i64, k: i64 },

    #[error("invalid {name} = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("kernel Fourier coefficient vanishes at frequency {frequency} (level {level})")]
    VanishingKernel { frequency: i64, level: i64 },

    #[error("kernel table has {got} coefficients, expected {expected}")]
    KernelLength { got: usize, expected: usize },

    #[error("kernel is not Hermitian at frequency {frequency}")]
    KernelNotHermitian { frequency: i64 },

    #[error("frequency must be nonzero")]
    ZeroFrequency,

    #[error("circulant embedding has negative eigenvalues after {attempts} attempts")]
    EmbeddingFailed { attempts: usize },

    #[error("non-vanishing imaginary part {residual:e} in {context}")]
    ImaginaryResidual { context: &'static str, residual: f64 },

    #[error("need at least {need} coefficients at level {level}, have {have}")]
    TooFewCoefficients { level: i64, have: usize, need: usize },

    #[error("unknown signal '{0}'")]
    UnknownSignal(String),

    #[error("inadmissible rate parameters: {0}")]
    Inadmissible(String),

    #[error("blurred signal is identically zero")]
    ZeroSignal,

    #[error("replication {index} (seed {seed}) failed: {source}")]
    Replication {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotPowerOfTwo { .. }
                | Error::LevelTooFine { .. }
                | Error::InvalidLevels { .. }
                | Error::ShiftOutOfRange { .. }
                | Error::InvalidParameter { .. }
                | Error::KernelLength { .. }
                | Error::KernelNotHermitian { .. }
                | Error::ZeroFrequency
                | Error::UnknownSignal(_)
                | Error::Inadmissible(_)
                | Error::Parse(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
