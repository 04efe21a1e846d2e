use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame must carry at least one codeword (L = 0)")]
    EmptyFrame,

    #[error("expected a {expected_rows}x{expected_cols} matrix, got {rows}x{cols}")]
    Shape {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix data has {len} entries, {rows}x{cols} needs {}", rows * cols)]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("constraint threshold undefined: every channel term is zero")]
    DegenerateConstraint,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("finite-SNR diversity needs at least 3 points with nonzero outage, found {0}")]
    InsufficientPoints(usize),

    #[error("trial {trial} at {snr_db} dB: {source}")]
    Trial {
        trial: u64,
        snr_db: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Domain { name, value, range }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
