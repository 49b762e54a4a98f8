use thiserror::Error;

/// Errors produced by the detection and retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal must have at least 2 samples, got {0}")]
    SignalTooShort(usize),

    #[error("signal contains non-finite samples")]
    NonFiniteSamples,

    #[error("mode amplitude must be strictly positive on the sample grid")]
    NonPositiveAmplitude,

    #[error("mode instantaneous frequency must be strictly positive on the sample grid")]
    NonPositiveFrequency,

    #[error("mode instantaneous frequencies cross or touch on the sample grid")]
    ModesCross,

    #[error("instantaneous frequency {found:.3} exceeds the representable band [0, {limit})")]
    FrequencyOutOfBand { found: f64, limit: f64 },

    #[error("operation undefined for an all-zero signal")]
    ZeroSignal,

    #[error("reference signal has zero energy")]
    ZeroReference,

    #[error("signal lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("window scale sigma must be strictly positive, got {0}")]
    InvalidSigma(f64),

    #[error("frequency bin count must be at least 3, got {0}")]
    InvalidBinCount(usize),

    #[error("window value at the origin is zero; the transform is not invertible")]
    NonInvertibleWindow,

    #[error("spectrogram is identically zero; entropy selection is undefined")]
    DegenerateSpectrogram,

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("peeling {modes} modes with band half-width {half_width} bins exhausts the {bins} available bins")]
    NoSpectrumLeft {
        modes: usize,
        half_width: usize,
        bins: usize,
    },

    #[error("no ridge groups available for fitting")]
    NoGroups,

    #[error("every candidate ridge configuration has intersecting curves")]
    AllCandidatesIntersect,
}

pub type Result<T> = std::result::Result<T, Error>;
