use thiserror::Error;

pub type Result<T> = std::result::Result<T, PhyError>;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("{what}: expected length {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what}: value {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("no frame detected (peak metric {peak:.3} below threshold {threshold})")]
    NoDetection { peak: f64, threshold: f64 },

    #[error("malformed resource grid: {0}")]
    MalformedGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported wav layout: {0}")]
    UnsupportedWav(String),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PhyError {
    pub(crate) fn length(what: &'static str, expected: usize, got: usize) -> Self {
        PhyError::Length {
            what,
            expected,
            got,
        }
    }
}

/// Fails with [`PhyError::Length`] unless `got == expected`.
pub(crate) fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(PhyError::length(what, expected, got))
    }
}
