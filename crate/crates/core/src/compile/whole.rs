//! Layered compilation of whole-pebble strategies.
//!
//! Layer `i` corresponds to pebbling configuration `C_i` and carries one
//! state per assignment of values in `[k]` to the pebbled non-root nodes
//! (the root is never tagged: on the accepting branch its value is pinned
//! to 1 by the single root-query edge). The move from `C_i` to `C_{i+1}`
//! determines the labels of layer `i` and its outgoing edges:
//!
//! * place black on `j` — query `j`, k outcome edges extending the tag;
//! * slide black onto `j` — query `j`, k outcome edges extending the tag
//!   and dropping the slid child (only the 1-edge for the root);
//! * place white on `j` — unlabelled states fanning to every value of `j`;
//! * remove black from `j` — unlabelled states forgetting `j`'s value;
//! * remove white from `j` — query `j`, one edge for the tagged value.
//!
//! State ids are assigned layer by layer, within a layer by the
//! lexicographic rank of the tag (most significant digit = lowest node
//! index), so builds are reproducible.

use std::collections::BTreeMap;

use num_traits::One;

use crate::bp::{
    BpVariant, BranchingProgram, RawEdge, State, StateId, StateLabel, StateTag,
};
use crate::budget::Budget;
use crate::pebbling::{
    is_read_once, Pebble, PebbleMove, PebbleSequence, PebbleVariant,
};
use crate::tree::{TepVariant, TreeShape, Value};

use super::eliminate_guess_states;
use super::CompileError;

struct Layer {
    /// Pebbled non-root nodes, ascending.
    tagged: Vec<usize>,
    /// First state id of the layer.
    offset: StateId,
    /// `k^|tagged|`.
    width: u64,
}

impl Layer {
    fn decode(&self, k: u32, mut rank: u64) -> BTreeMap<usize, Value> {
        let mut tag = BTreeMap::new();
        for &node in self.tagged.iter().rev() {
            tag.insert(node, (rank % k as u64) as Value);
            rank /= k as u64;
        }
        tag
    }

    fn encode(&self, k: u32, tag: &BTreeMap<usize, Value>) -> u64 {
        self.tagged
            .iter()
            .fold(0u64, |acc, node| acc * k as u64 + tag[node] as u64)
    }

    fn state_id(&self, k: u32, tag: &BTreeMap<usize, Value>) -> StateId {
        self.offset + self.encode(k, tag) as StateId
    }
}

fn query_label(shape: TreeShape, node: usize, tag: &BTreeMap<usize, Value>) -> StateLabel {
    if shape.is_leaf(node) {
        StateLabel::Leaf { node }
    } else {
        StateLabel::Func {
            node,
            x: tag[&(2 * node)],
            y: tag[&(2 * node + 1)],
        }
    }
}

/// Builds the layered program for a validated whole-pebble sequence.
fn compile_whole(
    seq: &PebbleSequence,
    k: u32,
    budget: &Budget,
) -> Result<BranchingProgram, CompileError> {
    seq.validate()?;
    let shape = seq.shape;
    let configs = seq.configs()?;

    let mut layers = Vec::with_capacity(configs.len());
    let mut next_id: u64 = 0;
    for config in &configs {
        let tagged: Vec<usize> = shape
            .non_root_nodes()
            .filter(|&i| config.value(i).is_one())
            .collect();
        let width = (k as u64)
            .checked_pow(tagged.len() as u32)
            .ok_or(CompileError::TooManyStates {
                count: u128::MAX,
                cap: budget.max_configs,
            })?;
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

    for (step, mv) in seq.moves.iter().enumerate() {
        let layer = &layers[step];
        let target = &layers[step + 1];
        for rank in 0..layer.width {
            let tag = layer.decode(k, rank);
            let id = layer.offset + rank as StateId;
            let mut connect = |label: StateLabel,
                               outcomes: &mut dyn Iterator<Item = (Option<Value>, BTreeMap<usize, Value>)>,
                               states: &mut Vec<State>,
                               edges: &mut Vec<RawEdge>| {
                states.push(State {
                    id,
                    label,
                    tag: Some(StateTag {
                        layer: step,
                        values: tag.clone(),
                        bits: BTreeMap::new(),
                    }),
                });
                for (edge_label, next_tag) in outcomes {
                    edges.push(RawEdge {
                        from: id,
                        to: target.state_id(k, &next_tag),
                        label: edge_label,
                    });
                }
            };

            match mv {
                PebbleMove::PlaceBlack {
                    node, from_child, ..
                } if *node == 1 => {
                    // Root query: only the accepting outcome has an edge.
                    let label = query_label(shape, 1, &tag);
                    let mut next_tag = tag.clone();
                    if let Some((child, _)) = from_child {
                        next_tag.remove(child);
                    }
                    let mut outcomes = std::iter::once((Some(1 as Value), next_tag));
                    connect(label, &mut outcomes, &mut states, &mut edges);
                }
                PebbleMove::PlaceBlack {
                    node, from_child, ..
                } => {
                    let label = query_label(shape, *node, &tag);
                    let node = *node;
                    let child = from_child.map(|(c, _)| c);
                    let base = tag.clone();
                    let mut outcomes = (0..k).map(move |v| {
                        let mut next_tag = base.clone();
                        next_tag.insert(node, v as Value);
                        if let Some(c) = child {
                            next_tag.remove(&c);
                        }
                        (Some(v as Value), next_tag)
                    });
                    connect(label, &mut outcomes, &mut states, &mut edges);
                }
                PebbleMove::IncreaseWhite { node, .. } => {
                    let node = *node;
                    if node == 1 {
                        return Err(CompileError::RootMove {
                            step,
                            reason: "white pebbles on the root are not compilable",
                        });
                    }
                    let base = tag.clone();
                    let mut outcomes = (0..k).map(move |v| {
                        let mut next_tag = base.clone();
                        next_tag.insert(node, v as Value);
                        (None, next_tag)
                    });
                    connect(StateLabel::Guess, &mut outcomes, &mut states, &mut edges);
                }
                PebbleMove::DecreaseBlack { node, .. } => {
                    let mut next_tag = tag.clone();
                    next_tag.remove(node); // the root is never tagged: no-op
                    let mut outcomes = std::iter::once((None, next_tag));
                    connect(StateLabel::Guess, &mut outcomes, &mut states, &mut edges);
                }
                PebbleMove::RemoveWhite { node } => {
                    let label = query_label(shape, *node, &tag);
                    let tagged_value = tag[node];
                    let mut next_tag = tag.clone();
                    next_tag.remove(node);
                    let mut outcomes = std::iter::once((Some(tagged_value), next_tag));
                    connect(label, &mut outcomes, &mut states, &mut edges);
                }
            }
        }
    }

    // The final layer is the empty configuration: the accepting state.
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

    Ok(BranchingProgram::new(
        shape.height(),
        k,
        BpVariant::Nondeterministic,
        TepVariant::Bt,
        layers[0].offset,
        states,
        edges,
    )?)
}

/// Compiles a read-once whole black-white strategy into a nondeterministic
/// thrifty program solving the boolean problem. With `keep_guess_states`
/// the pre-elimination layered form is returned.
pub fn compile_wbw_to_ntbp(
    seq: &PebbleSequence,
    k: u32,
    keep_guess_states: bool,
    budget: &Budget,
) -> Result<BranchingProgram, CompileError> {
    if seq.variant == PebbleVariant::FractionalBw {
        return Err(CompileError::WrongGame {
            expected: "whole black-white",
        });
    }
    if !is_read_once(seq)? {
        return Err(CompileError::NotReadOnce);
    }
    let bp = compile_whole(seq, k, budget)?;
    if keep_guess_states {
        Ok(bp)
    } else {
        Ok(eliminate_guess_states(&bp)?)
    }
}

/// Compiles a black strategy into a deterministic thrifty program. The
/// root query's 0-outcome is wired to an explicit reject sink so the
/// program is total.
pub fn compile_black_to_dtbp(
    seq: &PebbleSequence,
    k: u32,
    budget: &Budget,
) -> Result<BranchingProgram, CompileError> {
    if seq.variant != PebbleVariant::Black {
        return Err(CompileError::WrongGame { expected: "black" });
    }
    let layered = compile_whole(seq, k, budget)?;
    let bp = eliminate_guess_states(&layered)?;

    let mut states: Vec<State> = bp.states().to_vec();
    let mut edges: Vec<RawEdge> = bp
        .edges()
        .iter()
        .map(|e| RawEdge {
            from: bp.state(e.from).id,
            to: bp.state(e.to).id,
            label: e.label,
        })
        .collect();
    let reject = states.len() as StateId;
    states.push(State {
        id: reject,
        label: StateLabel::Final { value: 0 },
        tag: None,
    });
    for state in bp.states() {
        if matches!(state.label, StateLabel::Func { node: 1, .. }) {
            edges.push(RawEdge {
                from: state.id,
                to: reject,
                label: Some(0),
            });
        }
    }
    Ok(BranchingProgram::new(
        bp.h(),
        bp.k(),
        BpVariant::Deterministic,
        TepVariant::Bt,
        bp.state(bp.start()).id,
        states,
        edges,
    )?)
}

/// Upper bound on the compiled size: one query layer per pebbling move
/// that queries, each of width at most `k^peak`.
pub fn whole_size_bound(h: u32, k: u32, peak: Pebble) -> u128 {
    let layers = (1u128 << h) - 1;
    let p = (peak.numer() / peak.denom()) as u32 + u32::from(!peak.is_integer());
    layers * (k as u128).pow(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{accepts, run_deterministic};
    use crate::pebbling::{generate_black_strategy, generate_ro_wbw_strategy};
    use crate::tree::{enumerate_all_instances, enumerate_hard_inputs};

    #[test]
    fn wbw_h2_is_small_and_exhaustively_correct() {
        let budget = Budget::default();
        let seq = generate_ro_wbw_strategy(2);
        let bp = compile_wbw_to_ntbp(&seq, 2, false, &budget).unwrap();
        assert!(bp.size() <= 12, "size {} over the bound", bp.size());
        for instance in enumerate_all_instances(2, 2, TepVariant::Bt, &budget).unwrap() {
            assert_eq!(accepts(&bp, &instance), instance.is_yes());
        }
    }

    #[test]
    fn black_h2_is_deterministic_and_exhaustively_correct() {
        let budget = Budget::default();
        let seq = generate_black_strategy(2);
        let bp = compile_black_to_dtbp(&seq, 2, &budget).unwrap();
        assert_eq!(bp.variant(), BpVariant::Deterministic);
        for instance in enumerate_all_instances(2, 2, TepVariant::Bt, &budget).unwrap() {
            let (outcome, _) = run_deterministic(&bp, &instance).unwrap();
            assert_eq!(outcome.accepted(), instance.is_yes());
            assert_eq!(accepts(&bp, &instance), instance.is_yes());
        }
    }

    #[test]
    fn hard_inputs_accept_and_flat_root_rejects() {
        let budget = Budget::default();
        let bp =
            compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        for instance in enumerate_hard_inputs(3, 2) {
            assert!(accepts(&bp, &instance));
        }
    }

    #[test]
    fn elimination_preserves_acceptance() {
        let budget = Budget::default();
        let seq = generate_ro_wbw_strategy(2);
        let kept = compile_wbw_to_ntbp(&seq, 2, true, &budget).unwrap();
        let pruned = compile_wbw_to_ntbp(&seq, 2, false, &budget).unwrap();
        assert!(kept.size() > pruned.size());
        for instance in enumerate_all_instances(2, 2, TepVariant::Bt, &budget).unwrap() {
            assert_eq!(accepts(&kept, &instance), accepts(&pruned, &instance));
        }
    }

    #[test]
    fn non_read_once_strategies_are_rejected() {
        let budget = Budget::default();
        let mut seq = generate_ro_wbw_strategy(2);
        seq.variant = PebbleVariant::WholeBw;
        // Repebble leaf 2 after the slide, then clean it up again.
        use crate::pebbling::PebbleMove as M;
        use num_traits::One;
        let one = Pebble::one();
        seq.moves.truncate(4);
        seq.moves.push(M::PlaceBlack {
            node: 2,
            amount: one,
            from_child: None,
        });
        seq.moves.push(M::DecreaseBlack { node: 2, amount: one });
        seq.moves.push(M::DecreaseBlack { node: 1, amount: one });
        assert_eq!(
            compile_wbw_to_ntbp(&seq, 2, false, &budget).unwrap_err(),
            CompileError::NotReadOnce
        );
    }

    #[test]
    fn black_compiler_rejects_wbw_strategies() {
        let budget = Budget::default();
        let seq = generate_ro_wbw_strategy(4);
        assert!(matches!(
            compile_black_to_dtbp(&seq, 2, &budget),
            Err(CompileError::WrongGame { .. })
        ));
    }
}
