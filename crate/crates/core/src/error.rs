use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("invalid structure config: {0}")]
    Config(String),
    #[error("structure has no agents")]
    NoAgents,
    #[error("agent {0} has no observations")]
    NoObservations(String),
    #[error("result set is empty")]
    NoResults,
    #[error("duplicate identifier in {0}")]
    Duplicate(String),
    #[error("identifier {0:?} must be nonempty and use only [A-Za-z0-9_]")]
    BadIdentifier(String),
    #[error("unknown composition {0:?} (expected max, min or union)")]
    UnknownComposition(String),
    #[error("union results must name sorted element sets or \"_\": {0}")]
    BadUnionResult(String),
    #[error("structure too large: {0}")]
    TooLarge(String),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("unknown observation {observation} for agent {agent}")]
    UnknownObservation { agent: String, observation: String },
    #[error("unknown result {0}")]
    UnknownResult(String),
    #[error("group {group} needs {expected} observation components, found {found}")]
    Arity { group: String, expected: usize, found: usize },
    #[error("observation atoms need a nonempty group")]
    EmptyObservationGroup,
    #[error("composition undefined on empty set")]
    EmptyComposition,
    #[error("composition leaves the result domain: {0}")]
    CompositionUndefined(String),
    #[error("composition of the singleton {{{0}}} is not {0}")]
    SingletonLaw(String),
    #[error("composition violates the partition law on {0}")]
    PartitionLaw(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search space of {0} models exceeds the budget of {1}")]
    Budget(u128, u128),
    #[error("state is not part of the model")]
    UnknownState,
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProveError {
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("malformed sequent: {0}")]
    Malformed(String),
    #[error("rule instance is not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Umbrella error for callers that mix parsing, proving and model checking.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Prove(#[from] ProveError),
}
