use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A mode energy fell below [`crate::model::EPSILON_FLOOR`].
    #[error("gapless mode at phi = {phi}: epsilon = {epsilon:e}")]
    GaplessMode { phi: f64, epsilon: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {step} exceeds one tenth of the shortest segment ({min_segment})")]
    StepTooLarge { step: f64, min_segment: f64 },

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("state-vector oracle limited to {max} sites, got {n_sites}")]
    DimensionTooLarge { n_sites: usize, max: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("line {line}: {message}")]
    Schedule { line: usize, message: String },

    #[error("boundary-safe window is empty for N = {n_sites}, t_max = {t_max}")]
    EmptySafeWindow { n_sites: usize, t_max: f64 },

    #[error("observable {found} is not valid here (expected {expected})")]
    WrongObservable { expected: &'static str, found: String },
}

pub type Result<T> = std::result::Result<T, Error>;
