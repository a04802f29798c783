use thiserror::Error;

/// Errors produced by the waveform, channel, receiver, and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("frequency {freq_hz} Hz outside the Nyquist band (|f| <= {nyquist_hz} Hz)")]
    OutOfBand { freq_hz: f64, nyquist_hz: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("reference ({reference} samples) longer than received ({received} samples)")]
    ReferenceTooLong { reference: usize, received: usize },

    #[error("synchronization peak not found")]
    SyncNotFound,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capture file error: {0}")]
    Capture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
