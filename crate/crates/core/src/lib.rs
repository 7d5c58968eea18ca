//! Proof search and model checking for the logic of correlated knowledge.

pub mod calculus;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod generate;
mod kernel;
pub mod par;
pub mod parser;
pub mod semantics;
pub mod structure;
pub mod syntax;
pub mod tables;

pub use calculus::{apply_rule, applicable_instances, fresh_label, is_axiom, Axiom, AxiomKind, RuleId, RuleInstance};
pub use engine::{decide, decide_formula, prove, prove_formula, ProofNode, ProofResult, ProverOptions, Stats, Step};
pub use error::{Error, OracleError, ParseError, ProveError, StructureError};
pub use parser::{parse_formula, parse_input, parse_sequent, ROOT_LABEL};
pub use semantics::{check_validity, find_countermodel, sequent_valid, CorrelationModel};
pub use structure::{Group, JointObservation, ObservationStructure};
pub use syntax::{Formula, Label, LabelledFormula, RelAtom, Sequent};
pub use tables::{init_tables, ChainBound, LoopTables};
