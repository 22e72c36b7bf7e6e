//! Pebbling games, k-way branching programs and entropy censuses for the
//! tree evaluation problem.
//!
//! The crate is organized around a pipeline:
//!
//! * [`tree`] — instances of the tree evaluation problem (function and
//!   boolean versions), evaluation, and the hard input family `E`.
//! * [`pebbling`] — exact-rational pebbling configurations, legal moves for
//!   the black / whole black-white / fractional black-white games, strategy
//!   generators, and an exact optimal-peak search.
//! * [`bp`] — k-way branching programs: representation, deterministic and
//!   nondeterministic execution, serialization, DOT export.
//! * [`compile`] — translators from pebbling strategies to branching
//!   programs, plus the layered group-operation program.
//! * [`analyze`] — structural checkers (thrifty, syntactic read-once,
//!   bitwise independence), pebbling extraction from programs, input
//!   recovery, and entropy censuses.
//!
//! All pebble arithmetic is exact rational; no pebble value is ever stored
//! as a float.

pub mod analyze;
pub mod bp;
pub mod budget;
pub mod compile;
pub mod pebbling;
pub mod tree;

pub use budget::Budget;
pub use tree::{TepInstance, TepVariant, TreeShape, Value};
