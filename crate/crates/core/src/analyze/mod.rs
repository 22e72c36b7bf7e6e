//! Structural analysis of branching programs: thrifty / read-once /
//! bitwise-independence checks, state-set computation, pebbling extraction,
//! input recovery and entropy censuses.

mod adder;
mod bintbp;
mod census;
mod checks;
mod extract;
mod find_input;
mod oracle;
mod state_sets;

pub use adder::{
    adder_census, build_pair_adder, build_two_pair_adder, min_pair_adder_states, pair_instances,
    two_pair_instances, AdderCensus,
};
pub use bintbp::{
    check_critical_pebbling, check_pebble_input_counts, extract_state_pebbles, CriticalReport,
    ExtractedConfig, FractionalExtraction,
};
pub use census::{entropy_census, CensusReport, ExtractionKind};
pub use checks::{
    check_bitwise_independence, check_syntactic_read_once, check_thrifty, BitwiseVerdict,
    ThriftyVerdict,
};
pub use extract::{
    extract_rontbp_pebbling, path_whole_config, rontbp_state_configs, ExtractedWholePebbling,
};
pub use find_input::find_input;
pub use oracle::{
    check_exhaustive_agreement, check_sampled_agreement, sample_instance, OracleReport,
};
pub use state_sets::{compute_state_sets, FactoredSet, StateSets, Sweep, SweepDescriptor};

use thiserror::Error;

use crate::bp::{BpError, StateId};
use crate::budget::BudgetError;
use crate::tree::TreeError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("node {node} is queried twice along one path")]
    NodeQueriedTwice { node: usize },
    #[error("node {node} is never queried on the accepting path")]
    MissingQuery { node: usize },
    #[error("instance has no accepting path")]
    NoAcceptingPath,
    #[error("state {state} received two different pebbling configurations")]
    StateConfigMismatch { state: StateId },
    #[error("projection of state {state} at node {node} has {size} values, not a power of two")]
    ProjectionNotPowerOfTwo {
        state: StateId,
        node: usize,
        size: u128,
    },
    #[error("state {state} lies on no accepting path of the sweep")]
    EmptyStateSet { state: StateId },
    #[error("operation needs the exact hard-input sweep, got {0}")]
    NeedsExactSweep(String),
    #[error("program is not correct for the adder problem on input {0}")]
    AdderIncorrect(String),
    #[error("no consistent input recovered")]
    NoConsistentInput,
    #[error("{0}")]
    Unsupported(String),
}
