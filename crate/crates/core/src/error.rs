use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("buffer too short: need {needed} samples, got {got}")]
    BufferTooShort { needed: usize, got: usize },
    #[error("frequency {hz} Hz is outside (0, {nyquist}) Hz")]
    FrequencyOutOfRange { hz: f64, nyquist: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inconsistent spectrogram geometry: {0}")]
    InconsistentGeometry(String),
    #[error("no voiced frames")]
    NoVoicedFrames,
    #[error("insufficient voiced content: {0}")]
    InsufficientVoicing(String),
    #[error("found only {found} formants")]
    FewerThanThreeFormants { found: usize, partial: [f64; 3] },
    #[error("input contains no frame with energy")]
    SilentInput,
    #[error("invalid scaling bounds: {0}")]
    InvalidBounds(String),
    #[error("expected {expected} angles, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("shot count must be positive")]
    InvalidShots,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("not a probability distribution (sum = {0})")]
    NotADistribution(f64),
    #[error("reports use different quantum configurations: {0}")]
    ModeMismatch(String),
    #[error("input dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model does not accept this report: {0}")]
    ModelInputMismatch(String),
    #[error("training labels need at least two distinct grades")]
    DegenerateLabels,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("grade {0} is outside 2..=5")]
    InvalidGrade(u8),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedContainer(_) => "MalformedContainer",
            Error::UnsupportedEncoding(_) => "UnsupportedEncoding",
            Error::EmptyBuffer => "EmptyBuffer",
            Error::BufferTooShort { .. } => "BufferTooShort",
            Error::FrequencyOutOfRange { .. } => "FrequencyOutOfRange",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InconsistentGeometry(_) => "InconsistentGeometry",
            Error::NoVoicedFrames => "NoVoicedFrames",
            Error::InsufficientVoicing(_) => "InsufficientVoicing",
            Error::FewerThanThreeFormants { .. } => "FewerThanThreeFormants",
            Error::SilentInput => "SilentInput",
            Error::InvalidBounds(_) => "InvalidBounds",
            Error::WrongArity { .. } => "WrongArity",
            Error::NotNormalized(_) => "NotNormalized",
            Error::InvalidShots => "InvalidShots",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::NotADistribution(_) => "NotADistribution",
            Error::ModeMismatch(_) => "ModeMismatch",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ModelInputMismatch(_) => "ModelInputMismatch",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::InvalidGrade(_) => "InvalidGrade",
            Error::Io { .. } => "IoError",
            Error::Format(_) => "FormatError",
        }
    }

    /// Errors that mean two artifacts do not fit together, as opposed to bad input.
    pub fn is_contract_mismatch(&self) -> bool {
        matches!(
            self,
            Error::ModeMismatch(_) | Error::ModelInputMismatch(_) | Error::DimensionMismatch { .. }
        )
    }
}
