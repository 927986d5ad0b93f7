use thiserror::Error;

/// Error taxonomy shared by the whole crate.
///
/// `Validation` means the inputs violate a documented precondition (bad
/// dimensions, unknown band, out-of-range parameter). `Format` means bytes
/// were read but do not form a valid file (bad magic, malformed JSON,
/// trailing data). `Io` is the underlying transport failing, including
/// truncated payloads.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
        } else {
            Error::Format(e.to_string())
        }
    }
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
