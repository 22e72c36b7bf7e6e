//! Pebbling games on complete binary trees.
//!
//! A configuration assigns each node a black value `b(i)` and a white value
//! `w(i)`, both exact rationals in `[0,1]` with `b(i) + w(i) <= 1`. The four
//! legal moves:
//!
//! 1. decrease `b(i)` arbitrarily;
//! 2. increase `w(i)` arbitrarily;
//! 3. if each child of `i` has pebble value 1, decrease `w(i)` to 0;
//! 4. if each child of `i` has pebble value 1, increase `b(i)` arbitrarily
//!    and simultaneously (optionally) decrease the black value of a child.
//!
//! The children conditions are vacuous at leaves. A sequence is a pebbling
//! if it starts and ends empty and at some point the root has black value 1;
//! its peak is the maximum total pebble value over all configurations.
//! The whole game restricts values to `{0,1}`; the black game additionally
//! forbids white pebbles.

mod search;
mod strategies;

pub use search::optimal_peak;
pub use strategies::{
    generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy,
};

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::BudgetError;
use crate::tree::TreeShape;

/// Exact rational pebble value.
pub type Pebble = Rational64;

pub fn pebble(numer: i64, denom: i64) -> Pebble {
    Rational64::new(numer, denom)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PebbleError {
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("move amount must be strictly positive")]
    NonPositiveAmount,
    #[error("black value of node {node} would leave [0,1]")]
    BlackOutOfRange { node: usize },
    #[error("pebble value of node {node} would exceed 1")]
    SumOutOfRange { node: usize },
    #[error("children of node {node} are not both fully pebbled")]
    ChildrenNotFull { node: usize },
    #[error("node {node} has no white pebble to remove")]
    NoWhitePebble { node: usize },
    #[error("{child} is not a child of {node}")]
    NotAChild { node: usize, child: usize },
    #[error("leaf {0} has no children to decrease")]
    LeafChildDecrease(usize),
    #[error("white pebbles are not allowed in the black game")]
    WhiteInBlackGame,
    #[error("value of node {node} must stay in {{0,1}} in the whole game")]
    NotWhole { node: usize },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("illegal move at step {step}: {source}")]
    IllegalMove { step: usize, source: PebbleError },
    #[error("root never reaches black pebble value 1")]
    RootNeverBlack,
    #[error("sequence ends with {total} pebbles still on the tree")]
    NonEmptyEnd { total: Pebble },
    #[error("sequence parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("search discretization needs {bits} bits per configuration, over the 128-bit limit")]
    TooFine { bits: u32 },
    #[error("denominator must be {expected} for {variant} (got {got})")]
    BadDenominator {
        variant: PebbleVariant,
        expected: u32,
        got: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PebbleVariant {
    #[serde(rename = "black")]
    Black,
    #[serde(rename = "wbw")]
    WholeBw,
    #[serde(rename = "fractional")]
    FractionalBw,
}

impl fmt::Display for PebbleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PebbleVariant::Black => write!(f, "black"),
            PebbleVariant::WholeBw => write!(f, "wbw"),
            PebbleVariant::FractionalBw => write!(f, "fractional"),
        }
    }
}

/// One legal move. Move 4 carries the black increase and the optional
/// simultaneous child decrease as a single atomic step, so no transient
/// configuration ever violates the pebble restrictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PebbleMove {
    DecreaseBlack {
        node: usize,
        amount: Pebble,
    },
    IncreaseWhite {
        node: usize,
        amount: Pebble,
    },
    RemoveWhite {
        node: usize,
    },
    /// Place or slide black: `from_child` is the simultaneous decrease.
    PlaceBlack {
        node: usize,
        amount: Pebble,
        from_child: Option<(usize, Pebble)>,
    },
}

impl PebbleMove {
    pub fn node(&self) -> usize {
        match self {
            PebbleMove::DecreaseBlack { node, .. }
            | PebbleMove::IncreaseWhite { node, .. }
            | PebbleMove::RemoveWhite { node }
            | PebbleMove::PlaceBlack { node, .. } => *node,
        }
    }
}

impl fmt::Display for PebbleMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PebbleMove::DecreaseBlack { node, amount } => write!(f, "b({node}) -= {amount}"),
            PebbleMove::IncreaseWhite { node, amount } => write!(f, "w({node}) += {amount}"),
            PebbleMove::RemoveWhite { node } => write!(f, "w({node}) -> 0"),
            PebbleMove::PlaceBlack {
                node,
                amount,
                from_child: None,
            } => write!(f, "b({node}) += {amount}"),
            PebbleMove::PlaceBlack {
                node,
                amount,
                from_child: Some((child, by)),
            } => write!(f, "b({node}) += {amount}, b({child}) -= {by}"),
        }
    }
}

/// Black and white pebble values for every node of the tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PebbleConfig {
    shape: TreeShape,
    /// `(black, white)` per node; index 0 unused.
    values: Vec<(Pebble, Pebble)>,
}

impl PebbleConfig {
    pub fn empty(shape: TreeShape) -> Self {
        PebbleConfig {
            shape,
            values: vec![(Pebble::zero(), Pebble::zero()); shape.node_count() + 1],
        }
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn black(&self, node: usize) -> Pebble {
        self.values[node].0
    }

    pub fn white(&self, node: usize) -> Pebble {
        self.values[node].1
    }

    /// Pebble value `b(i) + w(i)` of a node.
    pub fn value(&self, node: usize) -> Pebble {
        self.values[node].0 + self.values[node].1
    }

    /// Total pebble value over all nodes.
    pub fn total(&self) -> Pebble {
        self.values
            .iter()
            .map(|(b, w)| *b + *w)
            .fold(Pebble::zero(), |acc, v| acc + v)
    }

    /// Total pebble value over non-root nodes.
    pub fn total_non_root(&self) -> Pebble {
        self.shape
            .non_root_nodes()
            .map(|i| self.value(i))
            .fold(Pebble::zero(), |acc, v| acc + v)
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|(b, w)| b.is_zero() && w.is_zero())
    }

    fn node_full(&self, node: usize) -> bool {
        self.value(node).is_one()
    }

    /// Both children fully pebbled; vacuously true at leaves.
    pub fn children_full(&self, node: usize) -> bool {
        self.shape.is_leaf(node) || (self.node_full(2 * node) && self.node_full(2 * node + 1))
    }

    pub fn set(&mut self, node: usize, black: Pebble, white: Pebble) {
        self.values[node] = (black, white);
    }

    fn whole(v: Pebble) -> bool {
        v.is_zero() || v.is_one()
    }

    fn check_move(&self, mv: &PebbleMove, variant: PebbleVariant) -> Result<(), PebbleError> {
        let node = mv.node();
        if !self.shape.contains(node) {
            return Err(PebbleError::NodeOutOfRange(node));
        }
        let whole = variant != PebbleVariant::FractionalBw;
        let (b, w) = self.values[node];
        match mv {
            PebbleMove::DecreaseBlack { amount, .. } => {
                if *amount <= Pebble::zero() {
                    return Err(PebbleError::NonPositiveAmount);
                }
                let nb = b - amount;
                if nb < Pebble::zero() {
                    return Err(PebbleError::BlackOutOfRange { node });
                }
                if whole && !Self::whole(nb) {
                    return Err(PebbleError::NotWhole { node });
                }
            }
            PebbleMove::IncreaseWhite { amount, .. } => {
                if variant == PebbleVariant::Black {
                    return Err(PebbleError::WhiteInBlackGame);
                }
                if *amount <= Pebble::zero() {
                    return Err(PebbleError::NonPositiveAmount);
                }
                if b + w + amount > Pebble::one() {
                    return Err(PebbleError::SumOutOfRange { node });
                }
                if whole && !Self::whole(w + amount) {
                    return Err(PebbleError::NotWhole { node });
                }
            }
            PebbleMove::RemoveWhite { .. } => {
                if variant == PebbleVariant::Black {
                    return Err(PebbleError::WhiteInBlackGame);
                }
                if !self.children_full(node) {
                    return Err(PebbleError::ChildrenNotFull { node });
                }
                if w.is_zero() {
                    return Err(PebbleError::NoWhitePebble { node });
                }
            }
            PebbleMove::PlaceBlack {
                amount, from_child, ..
            } => {
                if *amount <= Pebble::zero() {
                    return Err(PebbleError::NonPositiveAmount);
                }
                if !self.children_full(node) {
                    return Err(PebbleError::ChildrenNotFull { node });
                }
                if b + w + amount > Pebble::one() {
                    return Err(PebbleError::SumOutOfRange { node });
                }
                if whole && !Self::whole(b + amount) {
                    return Err(PebbleError::NotWhole { node });
                }
                if let Some((child, by)) = from_child {
                    if self.shape.is_leaf(node) {
                        return Err(PebbleError::LeafChildDecrease(node));
                    }
                    if *child != 2 * node && *child != 2 * node + 1 {
                        return Err(PebbleError::NotAChild {
                            node,
                            child: *child,
                        });
                    }
                    if *by <= Pebble::zero() {
                        return Err(PebbleError::NonPositiveAmount);
                    }
                    let cb = self.values[*child].0 - by;
                    if cb < Pebble::zero() {
                        return Err(PebbleError::BlackOutOfRange { node: *child });
                    }
                    if whole && !Self::whole(cb) {
                        return Err(PebbleError::NotWhole { node: *child });
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a single legal move in place.
    pub fn apply_in_place(
        &mut self,
        mv: &PebbleMove,
        variant: PebbleVariant,
    ) -> Result<(), PebbleError> {
        self.check_move(mv, variant)?;
        match mv {
            PebbleMove::DecreaseBlack { node, amount } => {
                self.values[*node].0 -= amount;
            }
            PebbleMove::IncreaseWhite { node, amount } => {
                self.values[*node].1 += amount;
            }
            PebbleMove::RemoveWhite { node } => {
                self.values[*node].1 = Pebble::zero();
            }
            PebbleMove::PlaceBlack {
                node,
                amount,
                from_child,
            } => {
                self.values[*node].0 += amount;
                if let Some((child, by)) = from_child {
                    self.values[*child].0 -= by;
                }
            }
        }
        Ok(())
    }
}

/// Successor configuration under a legal move, or the reason it is illegal.
pub fn apply_move(
    config: &PebbleConfig,
    mv: &PebbleMove,
    variant: PebbleVariant,
) -> Result<PebbleConfig, PebbleError> {
    let mut next = config.clone();
    next.apply_in_place(mv, variant)?;
    Ok(next)
}

/// An ordered move list for one tree and game variant. The derived
/// configurations are `C_1 = empty, C_2, .., C_{t}` with one configuration
/// after each move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PebbleSequence {
    pub shape: TreeShape,
    pub variant: PebbleVariant,
    /// Discretization the strategy was built for (1 for whole games).
    pub denominator: u32,
    pub moves: Vec<PebbleMove>,
}

impl PebbleSequence {
    /// All configurations along the sequence, checking every transition.
    pub fn configs(&self) -> Result<Vec<PebbleConfig>, SequenceError> {
        let mut configs = Vec::with_capacity(self.moves.len() + 1);
        let mut current = PebbleConfig::empty(self.shape);
        configs.push(current.clone());
        for (step, mv) in self.moves.iter().enumerate() {
            current
                .apply_in_place(mv, self.variant)
                .map_err(|source| SequenceError::IllegalMove { step, source })?;
            configs.push(current.clone());
        }
        Ok(configs)
    }

    /// Validates the whole sequence and returns its peak: every transition
    /// legal for the variant, both endpoints empty, and the root reaching
    /// black value 1 at some configuration.
    pub fn validate(&self) -> Result<Pebble, SequenceError> {
        let configs = self.configs()?;
        let last = configs.last().expect("at least the empty configuration");
        if !last.is_empty() {
            return Err(SequenceError::NonEmptyEnd {
                total: last.total(),
            });
        }
        if !configs.iter().any(|c| c.black(1).is_one()) {
            return Err(SequenceError::RootNeverBlack);
        }
        Ok(configs
            .iter()
            .map(|c| c.total())
            .max()
            .expect("nonempty configuration list"))
    }
}

/// Validates a sequence and reports its peak pebble value.
pub fn validate_sequence(seq: &PebbleSequence) -> Result<Pebble, SequenceError> {
    seq.validate()
}

/// Whether a whole black-white sequence is read-once: every node's
/// `(b, w)` trajectory is all-zero, then one constant nonzero plateau,
/// then all-zero again.
pub fn is_read_once(seq: &PebbleSequence) -> Result<bool, SequenceError> {
    let configs = seq.configs()?;
    for node in seq.shape.nodes() {
        let traj: Vec<(Pebble, Pebble)> = configs
            .iter()
            .map(|c| (c.black(node), c.white(node)))
            .collect();
        let zero = (Pebble::zero(), Pebble::zero());
        let first = match traj.iter().position(|v| *v != zero) {
            Some(p) => p,
            None => return Ok(false), // never pebbled: no nonzero plateau
        };
        let last = traj.iter().rposition(|v| *v != zero).unwrap();
        if traj[first..=last].iter().any(|v| *v != traj[first]) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
struct MoveFile {
    kind: String,
    node: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    amount: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    child: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    child_amount: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    h: u32,
    variant: PebbleVariant,
    denominator: u32,
    moves: Vec<MoveFile>,
}

fn rational_str(v: Pebble) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

fn parse_rational(text: &str) -> Result<Pebble, SequenceError> {
    Pebble::from_str(text.trim()).map_err(|e| SequenceError::Parse(format!("bad rational: {e}")))
}

impl PebbleSequence {
    pub fn to_json(&self) -> String {
        let moves = self
            .moves
            .iter()
            .map(|mv| match mv {
                PebbleMove::DecreaseBlack { node, amount } => MoveFile {
                    kind: "decrease_black".into(),
                    node: *node,
                    amount: Some(rational_str(*amount)),
                    child: None,
                    child_amount: None,
                },
                PebbleMove::IncreaseWhite { node, amount } => MoveFile {
                    kind: "increase_white".into(),
                    node: *node,
                    amount: Some(rational_str(*amount)),
                    child: None,
                    child_amount: None,
                },
                PebbleMove::RemoveWhite { node } => MoveFile {
                    kind: "remove_white".into(),
                    node: *node,
                    amount: None,
                    child: None,
                    child_amount: None,
                },
                PebbleMove::PlaceBlack {
                    node,
                    amount,
                    from_child,
                } => MoveFile {
                    kind: "place_black".into(),
                    node: *node,
                    amount: Some(rational_str(*amount)),
                    child: from_child.map(|(c, _)| c),
                    child_amount: from_child.map(|(_, by)| rational_str(by)),
                },
            })
            .collect();
        let file = SequenceFile {
            h: self.shape.height(),
            variant: self.variant,
            denominator: self.denominator,
            moves,
        };
        serde_json::to_string(&file).expect("sequence serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, SequenceError> {
        let file: SequenceFile =
            serde_json::from_str(text).map_err(|e| SequenceError::Parse(e.to_string()))?;
        let shape =
            TreeShape::new(file.h).map_err(|e| SequenceError::Parse(e.to_string()))?;
        let mut moves = Vec::with_capacity(file.moves.len());
        for m in &file.moves {
            let amount = || -> Result<Pebble, SequenceError> {
                parse_rational(
                    m.amount
                        .as_deref()
                        .ok_or_else(|| SequenceError::Parse(format!("{} needs amount", m.kind)))?,
                )
            };
            let mv = match m.kind.as_str() {
                "decrease_black" => PebbleMove::DecreaseBlack {
                    node: m.node,
                    amount: amount()?,
                },
                "increase_white" => PebbleMove::IncreaseWhite {
                    node: m.node,
                    amount: amount()?,
                },
                "remove_white" => PebbleMove::RemoveWhite { node: m.node },
                "place_black" => {
                    let from_child = match (&m.child, &m.child_amount) {
                        (Some(c), Some(a)) => Some((*c, parse_rational(a)?)),
                        (None, None) => None,
                        _ => {
                            return Err(SequenceError::Parse(
                                "place_black needs both child and child_amount or neither".into(),
                            ))
                        }
                    };
                    PebbleMove::PlaceBlack {
                        node: m.node,
                        amount: amount()?,
                        from_child,
                    }
                }
                other => return Err(SequenceError::Parse(format!("unknown move kind {other}"))),
            };
            moves.push(mv);
        }
        Ok(PebbleSequence {
            shape,
            variant: file.variant,
            denominator: file.denominator,
            moves,
        })
    }

    /// Per-step pebble values as TSV: one row per configuration, with the
    /// move leading into it, the running total and each node's value.
    pub fn timeline_tsv(&self) -> Result<String, SequenceError> {
        let configs = self.configs()?;
        let mut out = String::from("step\tmove\ttotal");
        for node in self.shape.nodes() {
            out.push_str(&format!("\tn{node}"));
        }
        out.push('\n');
        for (step, config) in configs.iter().enumerate() {
            let mv = if step == 0 {
                "-".to_string()
            } else {
                self.moves[step - 1].to_string()
            };
            out.push_str(&format!("{step}\t{mv}\t{}", rational_str(config.total())));
            for node in self.shape.nodes() {
                out.push_str(&format!("\t{}", rational_str(config.value(node))));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(h: u32) -> TreeShape {
        TreeShape::new(h).unwrap()
    }

    fn one() -> Pebble {
        Pebble::one()
    }

    #[test]
    fn white_placement_is_unconditional() {
        let config = PebbleConfig::empty(shape(3));
        let next = apply_move(
            &config,
            &PebbleMove::IncreaseWhite {
                node: 7,
                amount: one(),
            },
            PebbleVariant::WholeBw,
        )
        .unwrap();
        assert_eq!(next.white(7), one());
    }

    #[test]
    fn white_removal_requires_full_children() {
        let mut config = PebbleConfig::empty(shape(2));
        config.set(2, one(), Pebble::zero());
        config.set(1, Pebble::zero(), one());
        let err = apply_move(
            &config,
            &PebbleMove::RemoveWhite { node: 1 },
            PebbleVariant::WholeBw,
        )
        .unwrap_err();
        assert_eq!(err, PebbleError::ChildrenNotFull { node: 1 });
    }

    #[test]
    fn leaves_have_vacuous_children_condition() {
        let config = PebbleConfig::empty(shape(3));
        let next = apply_move(
            &config,
            &PebbleMove::PlaceBlack {
                node: 4,
                amount: one(),
                from_child: None,
            },
            PebbleVariant::Black,
        )
        .unwrap();
        assert_eq!(next.black(4), one());
    }

    #[test]
    fn black_game_rejects_whites() {
        let config = PebbleConfig::empty(shape(2));
        let err = apply_move(
            &config,
            &PebbleMove::IncreaseWhite {
                node: 2,
                amount: one(),
            },
            PebbleVariant::Black,
        )
        .unwrap_err();
        assert_eq!(err, PebbleError::WhiteInBlackGame);
    }

    #[test]
    fn whole_game_rejects_fractions() {
        let config = PebbleConfig::empty(shape(2));
        let err = apply_move(
            &config,
            &PebbleMove::PlaceBlack {
                node: 2,
                amount: pebble(1, 2),
                from_child: None,
            },
            PebbleVariant::WholeBw,
        )
        .unwrap_err();
        assert_eq!(err, PebbleError::NotWhole { node: 2 });
        // The same move is legal in the fractional game.
        let next = apply_move(
            &config,
            &PebbleMove::PlaceBlack {
                node: 2,
                amount: pebble(1, 2),
                from_child: None,
            },
            PebbleVariant::FractionalBw,
        )
        .unwrap();
        assert_eq!(next.black(2), pebble(1, 2));
    }

    fn black_h2() -> PebbleSequence {
        PebbleSequence {
            shape: shape(2),
            variant: PebbleVariant::Black,
            denominator: 1,
            moves: vec![
                PebbleMove::PlaceBlack {
                    node: 2,
                    amount: one(),
                    from_child: None,
                },
                PebbleMove::PlaceBlack {
                    node: 3,
                    amount: one(),
                    from_child: None,
                },
                PebbleMove::PlaceBlack {
                    node: 1,
                    amount: one(),
                    from_child: Some((2, one())),
                },
                PebbleMove::DecreaseBlack {
                    node: 3,
                    amount: one(),
                },
                PebbleMove::DecreaseBlack {
                    node: 1,
                    amount: one(),
                },
            ],
        }
    }

    #[test]
    fn validate_black_height_2() {
        assert_eq!(validate_sequence(&black_h2()).unwrap(), pebble(2, 1));
    }

    #[test]
    fn nonempty_end_is_rejected() {
        let mut seq = black_h2();
        seq.variant = PebbleVariant::WholeBw;
        seq.moves.push(PebbleMove::IncreaseWhite {
            node: 753,
            amount: one(),
        });
        // Out-of-range first; use a real node.
        seq.moves.pop();
        seq.moves.push(PebbleMove::IncreaseWhite {
            node: 3,
            amount: one(),
        });
        let err = validate_sequence(&seq).unwrap_err();
        assert_eq!(err, SequenceError::NonEmptyEnd { total: one() });
    }

    #[test]
    fn root_must_be_pebbled() {
        let seq = PebbleSequence {
            shape: shape(2),
            variant: PebbleVariant::Black,
            denominator: 1,
            moves: vec![
                PebbleMove::PlaceBlack {
                    node: 2,
                    amount: one(),
                    from_child: None,
                },
                PebbleMove::DecreaseBlack {
                    node: 2,
                    amount: one(),
                },
            ],
        };
        assert_eq!(
            validate_sequence(&seq).unwrap_err(),
            SequenceError::RootNeverBlack
        );
    }

    #[test]
    fn repebbled_node_is_not_read_once() {
        let mut seq = black_h2();
        seq.variant = PebbleVariant::WholeBw;
        // Pebble leaf 2 again after it was slid away, then clean up.
        seq.moves.truncate(4); // ..., dec 3 (root still pebbled)
        seq.moves.push(PebbleMove::PlaceBlack {
            node: 2,
            amount: one(),
            from_child: None,
        });
        seq.moves.push(PebbleMove::DecreaseBlack {
            node: 2,
            amount: one(),
        });
        seq.moves.push(PebbleMove::DecreaseBlack {
            node: 1,
            amount: one(),
        });
        assert!(validate_sequence(&seq).is_ok());
        assert!(!is_read_once(&seq).unwrap());
    }

    #[test]
    fn sequence_json_round_trip() {
        let seq = black_h2();
        let text = seq.to_json();
        let back = PebbleSequence::from_json(&text).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn timeline_has_one_row_per_configuration() {
        let tsv = black_h2().timeline_tsv().unwrap();
        assert_eq!(tsv.lines().count(), 1 + 5 + 1); // header + C_1..C_6
    }
}
