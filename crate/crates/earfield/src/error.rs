use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: bad magic")]
    BadMagic { what: &'static str },
    #[error("{what}: file truncated (needed {needed} bytes, found {found})")]
    Truncated {
        what: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("{what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error("{}: {source}", path.display())]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: sample rate {found} Hz, expected {expected} Hz", path.display())]
    SampleRate { path: PathBuf, found: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] earfield_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    /// Process exit code: 2 for configuration errors (including inputs that
    /// do not fit together), 3 for I/O and file format errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use earfield_core::Error as E;
        match self {
            Error::Config(_) => 2,
            Error::Core(
                E::LayoutMismatch(_)
                | E::FftSizeMismatch(..)
                | E::NoRecordings
                | E::MissingPredictorInput(_)
                | E::Fingerprint(_)
                | E::WeightShape(_)
                | E::MedianUnavailable,
            ) => 2,
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::Format { .. }
            | Error::Wav { .. }
            | Error::Csv { .. }
            | Error::Json { .. }
            | Error::SampleRate { .. } => 3,
            Error::Core(_) => 1,
        }
    }
}
