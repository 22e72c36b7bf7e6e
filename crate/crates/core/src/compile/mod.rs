//! Translating pebbling strategies into branching programs.
//!
//! All three pebbling-driven compilers build a layered program with one
//! layer per pebbling configuration: each layer carries one state per
//! assignment of values (or bit values) to the currently pebbled non-root
//! nodes, and the layer-to-layer edges mirror the pebbling move. Unlabelled
//! states introduced for guesses and forgets are removed afterwards by
//! [`eliminate_guess_states`], which preserves the accepted set.

mod eliminate;
mod fractional;
mod group;
mod whole;

pub use eliminate::eliminate_guess_states;
pub use fractional::{compile_fractional_to_bintbp, Encoding};
pub use group::compile_group_sft;
pub use whole::{compile_black_to_dtbp, compile_wbw_to_ntbp};

use thiserror::Error;

use crate::bp::BpError;
use crate::budget::BudgetError;
use crate::pebbling::SequenceError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("input strategy is invalid: {0}")]
    Sequence(#[from] SequenceError),
    #[error("strategy is not read-once")]
    NotReadOnce,
    #[error("strategy is not a {expected} sequence")]
    WrongGame { expected: &'static str },
    #[error("unsupported root move at step {step}: {reason}")]
    RootMove { step: usize, reason: &'static str },
    #[error("k = {0} is not a power of two")]
    KNotPowerOfTwo(u32),
    #[error("move at step {step} is not aligned to whole bits (1/{bits_per_value})")]
    NotBitAligned { step: usize, bits_per_value: u32 },
    #[error("encoding is not a bijection onto {0}-bit strings")]
    BadEncoding(u32),
    #[error("operation table is not a group: {0}")]
    NotAGroup(&'static str),
    #[error("compiled program would have {count} states, cap is {cap}")]
    TooManyStates { count: u128, cap: u64 },
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}
