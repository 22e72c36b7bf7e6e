//! Layered compilation of fractional strategies into bitwise-independent
//! nondeterministic thrifty programs.
//!
//! Requires `k = 2^l`. A pebble value `v` on a node corresponds to `v*l`
//! fixed bits of the node's encoded value: black fractions are bits the
//! program has computed (and possibly re-forgotten), white fractions are
//! guessed bits awaiting verification. Each layer carries one state per
//! assignment of the currently fixed bits. Queries reveal whole values;
//! fixing only a fraction of the bits merges outcomes that agree on the
//! fixed positions, and outcomes disagreeing with already-fixed bits get no
//! edge, which is what kills wrong guesses.
//!
//! Bit positions are bookkept deterministically: increases take the lowest
//! free positions, black decreases release the highest black positions,
//! white removals clear all white positions.

use std::collections::BTreeMap;

use crate::bp::{BpVariant, BranchingProgram, RawEdge, State, StateId, StateLabel, StateTag};
use crate::budget::Budget;
use crate::pebbling::{Pebble, PebbleMove, PebbleSequence, PebbleVariant};
use crate::tree::{TepVariant, TreeShape, Value};

use super::eliminate_guess_states;
use super::CompileError;

/// Bijection between `[k]` and `l`-bit strings; bit `j` of the code is the
/// `j`-th least significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    k: u32,
    bits: u32,
    to_bits: Vec<u32>,
    from_bits: Vec<Value>,
}

impl Encoding {
    pub fn new(k: u32, to_bits: Vec<u32>) -> Result<Self, CompileError> {
        if !k.is_power_of_two() {
            return Err(CompileError::KNotPowerOfTwo(k));
        }
        let bits = k.trailing_zeros();
        if to_bits.len() != k as usize {
            return Err(CompileError::BadEncoding(bits));
        }
        let mut from_bits = vec![Value::MAX; k as usize];
        for (v, &code) in to_bits.iter().enumerate() {
            if code >= k || from_bits[code as usize] != Value::MAX {
                return Err(CompileError::BadEncoding(bits));
            }
            from_bits[code as usize] = v as Value;
        }
        Ok(Encoding {
            k,
            bits,
            to_bits,
            from_bits,
        })
    }

    /// The identity encoding: a value's code is its binary representation.
    pub fn identity(k: u32) -> Result<Self, CompileError> {
        if !k.is_power_of_two() {
            return Err(CompileError::KNotPowerOfTwo(k));
        }
        Encoding::new(k, (0..k).collect())
    }

    /// Every bijection `[k] -> {0,1}^l`; factorial in `k`, intended for
    /// `l <= 2` only.
    pub fn all(k: u32) -> Result<Vec<Encoding>, CompileError> {
        if !k.is_power_of_two() {
            return Err(CompileError::KNotPowerOfTwo(k));
        }
        let mut result = Vec::new();
        let mut codes: Vec<u32> = (0..k).collect();
        permute(&mut codes, 0, &mut |perm| {
            result.push(Encoding::new(k, perm.to_vec()).expect("permutations are bijections"));
        });
        Ok(result)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Bits per value, `l = log2 k`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn encode(&self, v: Value) -> u32 {
        self.to_bits[v as usize]
    }

    pub fn decode(&self, code: u32) -> Value {
        self.from_bits[code as usize]
    }
}

fn permute(values: &mut Vec<u32>, at: usize, emit: &mut dyn FnMut(&[u32])) {
    if at == values.len() {
        emit(values);
        return;
    }
    for i in at..values.len() {
        values.swap(at, i);
        permute(values, at + 1, emit);
        values.swap(at, i);
    }
}

/// Per-node bit ownership at one configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BitState {
    black: u32,
    white: u32,
}

impl BitState {
    fn fixed(&self) -> u32 {
        self.black | self.white
    }
}

/// What one move does at bit level.
enum BitDelta {
    WhiteAdd { node: usize, positions: u32 },
    BlackDrop { node: usize, positions: u32 },
    WhiteClear { node: usize, positions: u32 },
    BlackAdd {
        node: usize,
        positions: u32,
        child_drop: Option<(usize, u32)>,
    },
    /// Whole-root placement; only the slid child's bits change.
    RootPlace { child_drop: Option<(usize, u32)> },
    /// Root black decrease: tags unchanged.
    RootDrop,
}

fn lowest_free(fixed: u32, count: u32, full: u32) -> u32 {
    let mut mask = 0;
    let mut taken = 0;
    for p in 0..32 {
        if taken == count {
            break;
        }
        let bit = 1u32 << p;
        if full & bit != 0 && fixed & bit == 0 {
            mask |= bit;
            taken += 1;
        }
    }
    debug_assert_eq!(taken, count);
    mask
}

fn highest_set(mask: u32, count: u32) -> u32 {
    let mut out = 0;
    let mut taken = 0;
    for p in (0..32).rev() {
        if taken == count {
            break;
        }
        let bit = 1u32 << p;
        if mask & bit != 0 {
            out |= bit;
            taken += 1;
        }
    }
    debug_assert_eq!(taken, count);
    out
}

/// Converts a pebble amount into a whole bit count.
fn bit_amount(amount: Pebble, bits_per_value: u32, step: usize) -> Result<u32, CompileError> {
    let scaled = amount * Pebble::new(bits_per_value as i64, 1);
    if !scaled.is_integer() || *scaled.numer() <= 0 {
        return Err(CompileError::NotBitAligned {
            step,
            bits_per_value,
        });
    }
    Ok(*scaled.numer() as u32)
}

/// Replays the strategy, producing per-configuration bit states and the
/// per-move deltas.
fn replay_bits(
    seq: &PebbleSequence,
    bits_per_value: u32,
) -> Result<(Vec<Vec<BitState>>, Vec<BitDelta>), CompileError> {
    let shape = seq.shape;
    let full = (1u32 << bits_per_value) - 1;
    let mut current = vec![BitState::default(); shape.node_count() + 1];
    let mut configs = vec![current.clone()];
    let mut deltas = Vec::with_capacity(seq.moves.len());

    for (step, mv) in seq.moves.iter().enumerate() {
        let delta = match mv {
            PebbleMove::IncreaseWhite { node, amount } => {
                if *node == 1 {
                    return Err(CompileError::RootMove {
                        step,
                        reason: "white pebbles on the root are not compilable",
                    });
                }
                let n = bit_amount(*amount, bits_per_value, step)?;
                let positions = lowest_free(current[*node].fixed(), n, full);
                current[*node].white |= positions;
                BitDelta::WhiteAdd {
                    node: *node,
                    positions,
                }
            }
            PebbleMove::DecreaseBlack { node, amount } => {
                if *node == 1 {
                    BitDelta::RootDrop
                } else {
                    let n = bit_amount(*amount, bits_per_value, step)?;
                    let positions = highest_set(current[*node].black, n);
                    current[*node].black &= !positions;
                    BitDelta::BlackDrop {
                        node: *node,
                        positions,
                    }
                }
            }
            PebbleMove::RemoveWhite { node } => {
                let positions = current[*node].white;
                current[*node].white = 0;
                BitDelta::WhiteClear {
                    node: *node,
                    positions,
                }
            }
            PebbleMove::PlaceBlack {
                node,
                amount,
                from_child,
            } => {
                let child_drop = match from_child {
                    Some((child, by)) => {
                        let n = bit_amount(*by, bits_per_value, step)?;
                        let positions = highest_set(current[*child].black, n);
                        current[*child].black &= !positions;
                        Some((*child, positions))
                    }
                    None => None,
                };
                if *node == 1 {
                    if !amount.is_integer() {
                        return Err(CompileError::RootMove {
                            step,
                            reason: "the root must be pebbled whole",
                        });
                    }
                    BitDelta::RootPlace { child_drop }
                } else {
                    let n = bit_amount(*amount, bits_per_value, step)?;
                    let positions = lowest_free(current[*node].fixed(), n, full);
                    current[*node].black |= positions;
                    BitDelta::BlackAdd {
                        node: *node,
                        positions,
                        child_drop,
                    }
                }
            }
        };
        deltas.push(delta);
        configs.push(current.clone());
    }
    Ok((configs, deltas))
}

/// Tag of one state: per tagged node, `(mask, bits)` with `bits ⊆ mask`.
type BitTag = BTreeMap<usize, (u32, u32)>;

struct Layer {
    /// `(node, fixed mask)` for nodes with at least one fixed bit.
    tagged: Vec<(usize, u32)>,
    offset: StateId,
    width: u64,
}

impl Layer {
    fn decode(&self, mut rank: u64) -> BitTag {
        let mut tag = BTreeMap::new();
        for &(node, mask) in self.tagged.iter().rev() {
            let digits = 1u64 << mask.count_ones();
            let packed = (rank % digits) as u32;
            rank /= digits;
            tag.insert(node, (mask, spread(packed, mask)));
        }
        tag
    }

    fn state_id(&self, tag: &BitTag) -> StateId {
        let mut rank = 0u64;
        for &(node, mask) in &self.tagged {
            let (tmask, tbits) = tag[&node];
            debug_assert_eq!(tmask, mask, "tag mask mismatch at node {node}");
            rank = (rank << mask.count_ones()) | compress(tbits, mask) as u64;
        }
        self.offset + rank as StateId
    }
}

/// Packs the bits of `value` at the set positions of `mask` into the low
/// bits, lowest position first.
fn compress(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut t = 0;
    for p in 0..32 {
        let bit = 1u32 << p;
        if mask & bit != 0 {
            if value & bit != 0 {
                out |= 1 << t;
            }
            t += 1;
        }
    }
    out
}

/// Inverse of `compress`: spreads low bits onto the positions of `mask`.
fn spread(packed: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut t = 0;
    for p in 0..32 {
        let bit = 1u32 << p;
        if mask & bit != 0 {
            if packed & (1 << t) != 0 {
                out |= bit;
            }
            t += 1;
        }
    }
    out
}

fn full_value(tag: &BitTag, node: usize, enc: &Encoding) -> Value {
    let (mask, bits) = tag[&node];
    debug_assert_eq!(mask, (1u32 << enc.bits()) - 1, "node {node} not fully fixed");
    enc.decode(bits)
}

fn query_label(shape: TreeShape, node: usize, tag: &BitTag, enc: &Encoding) -> StateLabel {
    if shape.is_leaf(node) {
        StateLabel::Leaf { node }
    } else {
        StateLabel::Func {
            node,
            x: full_value(tag, 2 * node, enc),
            y: full_value(tag, 2 * node + 1, enc),
        }
    }
}

/// Drops positions from a node's tag entry, removing the node when no bit
/// stays fixed.
fn tag_drop(tag: &mut BitTag, node: usize, positions: u32) {
    if let Some((mask, bits)) = tag.get(&node).copied() {
        let nmask = mask & !positions;
        if nmask == 0 {
            tag.remove(&node);
        } else {
            tag.insert(node, (nmask, bits & nmask));
        }
    }
}

fn tag_add(tag: &mut BitTag, node: usize, positions: u32, values: u32) {
    let (mask, bits) = tag.get(&node).copied().unwrap_or((0, 0));
    tag.insert(node, (mask | positions, bits | (values & positions)));
}

/// Compiles a bit-aligned fractional strategy into a layered
/// nondeterministic thrifty program under the given encoding.
pub fn compile_fractional_to_bintbp(
    seq: &PebbleSequence,
    k: u32,
    encoding: &Encoding,
    keep_guess_states: bool,
    budget: &Budget,
) -> Result<BranchingProgram, CompileError> {
    if seq.variant == PebbleVariant::Black {
        return Err(CompileError::WrongGame {
            expected: "fractional or whole black-white",
        });
    }
    if !k.is_power_of_two() {
        return Err(CompileError::KNotPowerOfTwo(k));
    }
    if encoding.k() != k {
        return Err(CompileError::BadEncoding(k.trailing_zeros()));
    }
    seq.validate()?;
    let shape = seq.shape;
    let bits_per_value = k.trailing_zeros();
    let (bit_configs, deltas) = replay_bits(seq, bits_per_value)?;

    let mut layers = Vec::with_capacity(bit_configs.len());
    let mut next_id: u64 = 0;
    for config in &bit_configs {
        let tagged: Vec<(usize, u32)> = shape
            .non_root_nodes()
            .filter_map(|i| {
                let fixed = config[i].fixed();
                (fixed != 0).then_some((i, fixed))
            })
            .collect();
        let mut width = 1u64;
        for &(_, mask) in &tagged {
            width = width
                .checked_shl(mask.count_ones())
                .ok_or(CompileError::TooManyStates {
                    count: u128::MAX,
                    cap: budget.max_configs,
                })?;
        }
        if next_id + width > budget.max_configs {
            return Err(CompileError::TooManyStates {
                count: next_id as u128 + width as u128,
                cap: budget.max_configs,
            });
        }
        layers.push(Layer {
            tagged,
            offset: next_id as StateId,
            width,
        });
        next_id += width;
    }

    let mut states: Vec<State> = Vec::with_capacity(next_id as usize);
    let mut edges: Vec<RawEdge> = Vec::new();

    for (step, delta) in deltas.iter().enumerate() {
        let layer = &layers[step];
        let target = &layers[step + 1];
        for rank in 0..layer.width {
            let tag = layer.decode(rank);
            let id = layer.offset + rank as StateId;
            let mut push_state = |label: StateLabel, states: &mut Vec<State>| {
                states.push(State {
                    id,
                    label,
                    tag: Some(StateTag {
                        layer: step,
                        values: BTreeMap::new(),
                        bits: tag.clone(),
                    }),
                });
            };

            match delta {
                BitDelta::WhiteAdd { node, positions } => {
                    push_state(StateLabel::Guess, &mut states);
                    let combos = 1u32 << positions.count_ones();
                    for c in 0..combos {
                        let mut next_tag = tag.clone();
                        tag_add(&mut next_tag, *node, *positions, spread(c, *positions));
                        edges.push(RawEdge {
                            from: id,
                            to: target.state_id(&next_tag),
                            label: None,
                        });
                    }
                }
                BitDelta::BlackDrop { node, positions } => {
                    push_state(StateLabel::Guess, &mut states);
                    let mut next_tag = tag.clone();
                    tag_drop(&mut next_tag, *node, *positions);
                    edges.push(RawEdge {
                        from: id,
                        to: target.state_id(&next_tag),
                        label: None,
                    });
                }
                BitDelta::RootDrop => {
                    push_state(StateLabel::Guess, &mut states);
                    edges.push(RawEdge {
                        from: id,
                        to: target.state_id(&tag),
                        label: None,
                    });
                }
                BitDelta::WhiteClear { node, positions } => {
                    let label = query_label(shape, *node, &tag, encoding);
                    push_state(label, &mut states);
                    let (fixed_mask, fixed_bits) = tag[node];
                    for v in 0..k {
                        let code = encoding.encode(v as Value);
                        if code & fixed_mask != fixed_bits {
                            continue; // disagrees with computed or guessed bits
                        }
                        let mut next_tag = tag.clone();
                        tag_drop(&mut next_tag, *node, *positions);
                        edges.push(RawEdge {
                            from: id,
                            to: target.state_id(&next_tag),
                            label: Some(v as Value),
                        });
                    }
                }
                BitDelta::BlackAdd {
                    node,
                    positions,
                    child_drop,
                } => {
                    let label = query_label(shape, *node, &tag, encoding);
                    push_state(label, &mut states);
                    let (fixed_mask, fixed_bits) =
                        tag.get(node).copied().unwrap_or((0, 0));
                    for v in 0..k {
                        let code = encoding.encode(v as Value);
                        if code & fixed_mask != fixed_bits {
                            continue;
                        }
                        let mut next_tag = tag.clone();
                        tag_add(&mut next_tag, *node, *positions, code);
                        if let Some((child, drop)) = child_drop {
                            tag_drop(&mut next_tag, *child, *drop);
                        }
                        edges.push(RawEdge {
                            from: id,
                            to: target.state_id(&next_tag),
                            label: Some(v as Value),
                        });
                    }
                }
                BitDelta::RootPlace { child_drop } => {
                    let label = query_label(shape, 1, &tag, encoding);
                    push_state(label, &mut states);
                    let mut next_tag = tag.clone();
                    if let Some((child, drop)) = child_drop {
                        tag_drop(&mut next_tag, *child, *drop);
                    }
                    edges.push(RawEdge {
                        from: id,
                        to: target.state_id(&next_tag),
                        label: Some(1),
                    });
                }
            }
        }
    }

    let last = layers.last().expect("at least the start layer");
    debug_assert_eq!(last.width, 1);
    states.push(State {
        id: last.offset,
        label: StateLabel::Accept,
        tag: Some(StateTag {
            layer: layers.len() - 1,
            values: BTreeMap::new(),
            bits: BTreeMap::new(),
        }),
    });

    let bp = BranchingProgram::new(
        shape.height(),
        k,
        BpVariant::Nondeterministic,
        TepVariant::Bt,
        layers[0].offset,
        states,
        edges,
    )?;
    if keep_guess_states {
        Ok(bp)
    } else {
        Ok(eliminate_guess_states(&bp)?)
    }
}
