use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix dimension {0} exceeds the supported maximum of 16")]
    TooLarge(usize),

    #[error("generator {generator} is out of range for block length {length}")]
    GeneratorOutOfRange { generator: usize, length: usize },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid block profile: {0}")]
    InvalidProfile(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("permutation pool has {pool} members but {needed} are required")]
    InsufficientPool { pool: usize, needed: usize },

    #[error("debiasing kept {kept} pairs but {needed} are required")]
    TooFewPairs { kept: usize, needed: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
