use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed JSON document; the message carries line and column.
    #[error("cannot parse spec document: {0}")]
    Parse(String),

    /// Structurally valid document with an invalid field.
    #[error("invalid spec field `{field}`: {message}")]
    Spec { field: String, message: String },

    #[error("sequence generation failed at index {index}: {message}")]
    Generation { index: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation not supported for {variant} specs: {message}")]
    Unsupported { variant: String, message: String },

    #[error(
        "non-critical spec: limiting period matrix is not ±Id (trace {trace}); \
         use the |tr| ≠ 2 classification path"
    )]
    NonCritical { trace: f64 },

    #[error("near-degenerate discriminant {discr:e} at stage {stage}, window {window}")]
    NearDegenerate {
        stage: usize,
        window: usize,
        discr: f64,
    },

    #[error("no diagonal pairing is admissible for every window at stage {stage}")]
    Pairing { stage: usize },

    #[error("discriminant of R at index {index} is not positive ({discr:e})")]
    NegativeDiscriminant { index: usize, discr: f64 },

    #[error("backward recursion is unstable: buffer doubling changes the result by {disagreement:e}")]
    Unstable { disagreement: f64 },

    #[error("boundary case: |q| = {q} is within 1e-3 of 1")]
    BoundaryCase { q: f64 },

    #[error("Carleman's condition appears to hold (partial sum {partial_sum} still growing)")]
    CarlemanHolds { partial_sum: f64 },

    #[error("input is not sorted at position {index}")]
    Unsorted { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn spec_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec {
        field: field.into(),
        message: message.into(),
    }
}
