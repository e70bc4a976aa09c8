use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CkError {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("proposition index {index} out of range (workspace has {max} propositions)")]
    PropOutOfRange { index: usize, max: usize },

    #[error("agent index {index} out of range (workspace has {max} agents)")]
    AgentOutOfRange { index: usize, max: usize },

    #[error("{what}: level {requested} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u32,
        cap: u32,
    },

    #[error("{what}: enumeration size would exceed guard of {guard}")]
    SizeGuardExceeded { what: &'static str, guard: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("formula depth {depth} exceeds evaluation level {level}")]
    DepthExceedsLevel { depth: u32, level: u32 },

    #[error("projection level {requested} exceeds atom level {level}")]
    ProjectionAboveLevel { requested: u32, level: u32 },

    #[error("atom {atom} is not a member of the restricted level {level}")]
    NotInRestrictedLevel { atom: u32, level: u32 },

    #[error("truth set of the formula at its depth is empty")]
    EmptyAlpha,

    #[error("the formula is not semantically closed")]
    NotClosed,

    #[error("schedule exhausted: no member beyond {after} under the declared tail rule")]
    ScheduleExhausted { after: u64 },

    #[error("horizon {horizon} too small: {why}")]
    HorizonTooSmall { horizon: u64, why: String },

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("restriction to an empty point set")]
    EmptyRestriction,

    #[error("malformed structure: {0}")]
    MalformedStructure(String),

    #[error("generativity level unknown: {0}")]
    GenLevelUnknown(String),
}

pub type Result<T> = std::result::Result<T, CkError>;
