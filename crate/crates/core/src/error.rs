use alloc::string::String;

/// Errors produced by stream construction and the analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input text contained a character other than '0', '1', or whitespace.
    #[error("invalid character {found:?} at offset {offset}")]
    Format { offset: usize, found: char },

    /// A requested length or index exceeds the available data.
    #[error("length {requested} out of bounds (available {available})")]
    OutOfBounds { requested: u64, available: u64 },

    /// An argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    /// A probability or other parameter left its valid domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// The stream lacks one of the two symbols, so conditional statistics
    /// are undefined.
    #[error("degenerate stream: {0}")]
    DegenerateStream(&'static str),

    /// Every phase in the trace fell inside the ambiguity guard band.
    #[error("degenerate trace: all {ambiguous} phases ambiguous")]
    DegenerateTrace { ambiguous: u64 },

    /// Too few pattern occurrences (or other events) to form an estimate.
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: u64, got: u64 },
}
