use thiserror::Error;

/// Errors raised by the algebraic and protocol layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("evaluation domain is empty")]
    EmptyDomain,
    #[error("evaluation domain contains a repeated point at index {0}")]
    DuplicatePoint(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("polynomial degree {degree} exceeds the SRS degree bound {bound}")]
    DegreeOverflow { degree: usize, bound: usize },
    #[error("invalid degree bound {0}")]
    InvalidDegreeBound(usize),
    #[error("setup secret must be nonzero")]
    ZeroSecret,
    #[error("malformed {what} encoding")]
    MalformedEncoding { what: &'static str },
    #[error("opened values do not match the vanishing polynomial (non-exact division for polynomial {0})")]
    NonExactDivision(usize),
    #[error("group shape violation: {0}")]
    Shape(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("micro-domain size {size} does not divide domain size {domain}")]
    Indivisible { domain: usize, size: usize },
    #[error("coordinate ({row}, {col}) is out of bounds")]
    OutOfBounds { row: u32, col: u32 },
    #[error("data of {len} bytes exceeds grid capacity of {capacity} bytes")]
    DataTooLarge { len: usize, capacity: usize },
    #[error("invalid grid dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Decoding failures for the byte layouts in [`crate::wire`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("truncated input: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{0} trailing bytes after object")]
    TrailingBytes(usize),
    #[error("scalar count {count} disagrees with block shape ({expected} cells)")]
    CountMismatch { count: u32, expected: u64 },
    #[error("grouped object carries no scalars")]
    EmptyGroup,
    #[error("non-canonical scalar at index {0}")]
    NonCanonicalScalar(usize),
    #[error("invalid block region [{rows_start},{rows_end}) x [{cols_start},{cols_end})")]
    InvalidBlock {
        rows_start: u32,
        rows_end: u32,
        cols_start: u32,
        cols_end: u32,
    },
    #[error("bad fixture magic")]
    BadMagic,
    #[error("unsupported fixture version {0}")]
    UnsupportedVersion(u8),
    #[error("missing fixture section {0}")]
    MissingSection(String),
    #[error("malformed fixture section {0}")]
    MalformedSection(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
