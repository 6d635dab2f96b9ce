use crate::store::FamilyId;
use thiserror::Error;

/// Errors surfaced by loading, expression handling, counting and mining.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("duplicate object identifier {0:?}")]
    DuplicateObject(String),

    #[error("universe is empty")]
    EmptyUniverse,

    #[error("unknown object identifier {0:?}")]
    UnknownObject(String),

    #[error("descriptor {0:?} is not a proper non-empty subset of the universe")]
    NotProperSubset(String),

    #[error("duplicate descriptor name {0:?}")]
    DuplicateDescriptor(String),

    #[error("family {family} does not cover the universe; uncovered: {}", uncovered.join(", "))]
    CoveringViolation {
        family: FamilyId,
        uncovered: Vec<String>,
    },

    #[error("unknown descriptor {0:?}")]
    UnknownDescriptor(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("non-numeric cell {value:?} for object {object:?} in column {column:?}")]
    NonNumericCell {
        object: String,
        column: String,
        value: String,
    },

    #[error("bucket spec references missing column {0:?}")]
    MissingColumn(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("expression ranges over {0} distinct descriptors; canonicalization supports at most 16")]
    TooManyVariables(usize),

    #[error("query of {depth} literals exceeds the maximum depth {max}")]
    QueryTooDeep { depth: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{count} admissible expressions exceed the enumeration bound {bound}")]
    EnumerationTooLarge { count: u128, bound: u128 },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
