use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice dimensions must be positive (got {lx}x{ly})")]
    ZeroDim { lx: usize, ly: usize },

    #[error("{what}: size {size} exceeds the limit of {limit}")]
    SizeExceeded {
        what: &'static str,
        size: u64,
        limit: u64,
    },

    #[error("bipartition must leave both sides nonempty")]
    EmptySide,

    #[error("image {image:#x} has bits set outside the {n}-pixel lattice")]
    OutOfRange { image: u64, n: usize },

    #[error("label-1 image set is empty")]
    EmptySet,

    #[error("duplicate image {0:#x}")]
    Duplicate(u64),

    #[error("amplitude vector has zero norm")]
    ZeroNorm,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("functions live on different lattice geometries")]
    GeometryMismatch,

    #[error("dense path needs n_a <= {cap} (got {n_a})")]
    DenseCapExceeded { n_a: usize, cap: usize },

    #[error("Gram matrix dimension {dim} exceeds the dense eigensolve cap of {cap}")]
    GramCapExceeded { dim: usize, cap: usize },

    #[error("spectrum sums to {sum}, expected 1")]
    BadSpectrum { sum: f64 },

    #[error("requested {count} images but only {available} exist")]
    CountExceeded { count: u64, available: u64 },

    #[error("cut family yields {cuts} cuts with {distinct} distinct boundary lengths; need at least 3 cuts and 2 distinct lengths")]
    TooFewCuts { cuts: usize, distinct: usize },

    #[error("invalid cut spec {spec:?}: {reason} (expected `cols<K`, `rows<K` or `mask:<hex>`)")]
    BadCutSpec { spec: String, reason: String },

    #[error("invalid task file: {0}")]
    BadTaskFile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
