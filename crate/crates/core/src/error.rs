use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by group arithmetic, chain construction and the bounded searches.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("elements belong to different group families")]
    FamilyMismatch,
    #[error("generator index {index} out of range (family has {count} generators)")]
    BadGeneratorIndex { index: usize, count: usize },
    #[error("invalid group family: {0}")]
    InvalidFamily(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("subgroup has no structural generating set")]
    NotStructural,
    #[error("chain is not descending at level {0}")]
    NotDescending(usize),
    #[error("level {level} is not available (chain defines levels 0..={last})")]
    LevelUnavailable { level: usize, last: usize },
    #[error("coset enumeration budget of {budget} exceeded")]
    EnumerationBudgetExceeded { budget: usize },
    #[error("orbit budget of {0} points exceeded")]
    OrbitBudgetExceeded(usize),
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(usize),
    #[error("coset index {index} out of range (level has {size} cosets)")]
    BadIndex { index: usize, size: usize },
    #[error("fiber point is not bonding-compatible at level {0}")]
    IncompatiblePoint(usize),
    #[error("wrong family: {0}")]
    WrongFamily(String),
    #[error("depth {depth} exceeds the available range of a chain (last level {last})")]
    DepthExceedsVerified { depth: usize, last: usize },
    #[error("witness invalid: {0}")]
    WitnessInvalid(String),
    #[error("bad indices: {0}")]
    BadIndices(String),
    #[error("not a pro-group morphism: {0}")]
    NotAMorphism(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("oracle mismatch in claim `{claim}`: {detail}")]
    OracleMismatch { claim: String, detail: String },
    #[error("invalid step index {0}")]
    InvalidStep(String),
    #[error("bad word: {0}")]
    BadWord(String),
}

impl Error {
    /// True for errors caused by a budget rather than by bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::EnumerationBudgetExceeded { .. }
                | Error::OrbitBudgetExceeded(_)
                | Error::SearchBudgetExceeded(_)
        )
    }
}
