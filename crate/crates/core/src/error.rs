use std::fmt;

/// Tensor axis named in dimension-mismatch errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
    Tubes,
    Inner,
    Length,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axis::Rows => "n1 (rows)",
            Axis::Cols => "n2 (columns)",
            Axis::Tubes => "n3 (tubes)",
            Axis::Inner => "inner dimension",
            Axis::Length => "series length",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: {left} vs {right}")]
    DimensionMismatch {
        axis: Axis,
        left: usize,
        right: usize,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("insufficient data: {got} time points, need at least {needed}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("imaginary residue {residue:.3e} exceeds tolerance {tolerance:.1e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("truth slice {0} has zero norm; relative error undefined")]
    ZeroNormTruth(usize),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("csv: {0}")]
    Csv(String),

    #[error("forecast origin {origin}: {source}")]
    AtOrigin {
        origin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
