//! Fractional pebbling extracted from a bitwise-independent program, and
//! the runtime checks that the extraction behaves like a legal fractional
//! pebbling.
//!
//! Per state `s` and non-root node `i` the pebble values are
//!
//! ```text
//! b(i, s) = 1 - log_k |proj(F_s, i)|
//! w(i, s) = log_k ( |proj(F_s, i)| / |proj(A_s, i)| )
//! ```
//!
//! exact rationals because the projections of a bitwise-independent
//! program are powers of two. Along an accepting path of a hard input the
//! *critical states* are: the last state querying the root; and,
//! recursively, for a critical state `s` of a node with child `c`, the last
//! state querying `c` before `s` (when `b(c,s) > 0`) or the first after
//! (when `w(c,s) > 0`). A pebbling is then laid along the critical states
//! — blacks appear right after the critical that computed them and are
//! dropped when no longer needed, whites appear at the critical that needs
//! them and are discharged right after the critical that verified them —
//! and is checked to be a legal fractional pebbling that never
//! overestimates the per-state values.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::bp::{BranchingProgram, StateLabel};
use crate::pebbling::{Pebble, PebbleConfig, PebbleMove, PebbleSequence, PebbleVariant};
use crate::tree::TepInstance;

use super::state_sets::StateSets;
use super::AnalyzeError;

/// Fractional pebble values of one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedConfig {
    /// `(b, w)` per non-root node; absent nodes are unpebbled.
    pub values: BTreeMap<usize, (Pebble, Pebble)>,
}

impl ExtractedConfig {
    pub fn value(&self, node: usize) -> (Pebble, Pebble) {
        self.values
            .get(&node)
            .copied()
            .unwrap_or((Pebble::zero(), Pebble::zero()))
    }

    pub fn total_non_root(&self) -> Pebble {
        self.values
            .values()
            .fold(Pebble::zero(), |acc, (b, w)| acc + b + w)
    }

    pub fn is_empty(&self) -> bool {
        self.values.values().all(|(b, w)| b.is_zero() && w.is_zero())
    }
}

#[derive(Debug, Clone)]
pub struct FractionalExtraction {
    /// Per state position; `None` for states off every accepting path.
    pub configs: Vec<Option<ExtractedConfig>>,
    /// Range/sum violations (never expected; they would indicate a broken
    /// extraction rather than a broken program).
    pub range_violations: Vec<String>,
    /// Start or accept state with a nonempty configuration.
    pub endpoint_violations: Vec<String>,
}

impl FractionalExtraction {
    pub fn passed(&self) -> bool {
        self.range_violations.is_empty() && self.endpoint_violations.is_empty()
    }
}

fn log2_exact(value: u128) -> Option<u32> {
    value.is_power_of_two().then(|| value.trailing_zeros())
}

/// Per-state fractional pebble values from exact state sets.
pub fn extract_state_pebbles(
    bp: &BranchingProgram,
    sets: &StateSets,
) -> Result<FractionalExtraction, AnalyzeError> {
    if !bp.k().is_power_of_two() {
        return Err(AnalyzeError::Unsupported(format!(
            "fractional extraction needs k a power of two, got {}",
            bp.k()
        )));
    }
    let bits = bp.k().trailing_zeros() as i64;
    let mut configs = vec![None; bp.state_count()];
    let mut range_violations = Vec::new();
    let mut endpoint_violations = Vec::new();

    for pos in 0..bp.state_count() {
        if sets.a(pos).is_empty() {
            continue;
        }
        let mut values = BTreeMap::new();
        for node in bp.shape().non_root_nodes() {
            let f_size = sets.f(pos).project(node).len() as u128;
            let a_size = sets.a(pos).project(node).len() as u128;
            let mf = log2_exact(f_size).ok_or(AnalyzeError::ProjectionNotPowerOfTwo {
                state: bp.state(pos).id,
                node,
                size: f_size,
            })? as i64;
            let ma = log2_exact(a_size).ok_or(AnalyzeError::ProjectionNotPowerOfTwo {
                state: bp.state(pos).id,
                node,
                size: a_size,
            })? as i64;
            let b = Pebble::new(bits - mf, bits);
            let w = Pebble::new(mf - ma, bits);
            let zero = Pebble::zero();
            let one = Pebble::one();
            if b < zero || b > one || w < zero || w > one || b + w > one {
                range_violations.push(format!(
                    "state {} node {node}: b={b} w={w}",
                    bp.state(pos).id
                ));
            }
            if !(b.is_zero() && w.is_zero()) {
                values.insert(node, (b, w));
            }
        }
        configs[pos] = Some(ExtractedConfig { values });
    }

    for (pos, name) in [(Some(bp.start()), "start"), (bp.accept_position(), "accept")] {
        if let Some(pos) = pos {
            if let Some(config) = &configs[pos] {
                if !config.is_empty() {
                    endpoint_violations.push(format!(
                        "{name} state has {} pebbles",
                        config.total_non_root()
                    ));
                }
            }
        }
    }

    Ok(FractionalExtraction {
        configs,
        range_violations,
        endpoint_violations,
    })
}

/// The number of hard inputs accepting through a state must be exactly
/// `k^(N - p)` where `p` is the state's total non-root pebble value.
/// Returns the violating states.
pub fn check_pebble_input_counts(
    bp: &BranchingProgram,
    sets: &StateSets,
    extraction: &FractionalExtraction,
) -> Vec<(u32, Pebble, u128, u128)> {
    let bits = bp.k().trailing_zeros();
    let n = bp.shape().non_root_count() as i64;
    let mut violations = Vec::new();
    for pos in 0..bp.state_count() {
        let config = match &extraction.configs[pos] {
            Some(c) => c,
            None => continue,
        };
        let p = config.total_non_root();
        // k^(N - p) = 2^(bits * (N - p)); the exponent is integral.
        let exponent = (Pebble::from_integer(n) - p) * Pebble::from_integer(bits as i64);
        debug_assert!(exponent.is_integer());
        let expected = 1u128 << (*exponent.numer() as u32);
        let actual = sets.a(pos).cardinality();
        if actual != expected {
            violations.push((bp.state(pos).id, p, actual, expected));
        }
    }
    violations
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CriticalReport {
    pub checked: u64,
    /// A critical state for an internal node whose children are not fully
    /// pebbled there.
    pub children_violations: u64,
    /// The pebbling along critical states broke a move's legality.
    pub legality_violations: u64,
    /// The pebbling along critical states overestimated a per-state value.
    pub underestimate_violations: u64,
    /// Sequence-level failures (nonempty end, root never pebbled).
    pub sequence_violations: u64,
    /// Inputs whose critical-state structure could not be built at all.
    pub structure_violations: u64,
    pub witnesses: Vec<String>,
}

impl CriticalReport {
    pub fn passed(&self) -> bool {
        self.children_violations == 0
            && self.legality_violations == 0
            && self.underestimate_violations == 0
            && self.sequence_violations == 0
            && self.structure_violations == 0
    }

    fn witness(&mut self, instance: &TepInstance) {
        if self.witnesses.len() < 5 {
            self.witnesses.push(instance.to_canonical_json());
        }
    }
}

struct BlackRequirement {
    node: usize,
    amount: Pebble,
    /// Critical index after which the black appears.
    from: usize,
    /// Critical index through which it is needed.
    until: usize,
}

struct WhiteRequirement {
    node: usize,
    amount: Pebble,
    /// Critical index at which the white appears (the needing critical).
    from: usize,
    /// Critical index of the verifying query; discharged right after.
    until: usize,
}

/// Validates the fractional pebbling along critical states for each input.
pub fn check_critical_pebbling(
    bp: &BranchingProgram,
    extraction: &FractionalExtraction,
    instances: impl Iterator<Item = TepInstance>,
) -> Result<CriticalReport, AnalyzeError> {
    let shape = bp.shape();
    let mut report = CriticalReport::default();

    'instances: for instance in instances {
        report.checked += 1;
        let path = match crate::bp::lex_first_accepting_path(bp, &instance) {
            Some(p) => p,
            None => return Err(AnalyzeError::NoAcceptingPath),
        };
        let config_at = |idx: usize| -> Result<&ExtractedConfig, AnalyzeError> {
            extraction.configs[path.states[idx]]
                .as_ref()
                .ok_or(AnalyzeError::EmptyStateSet {
                    state: bp.state(path.states[idx]).id,
                })
        };

        // Query positions along the path, per node (general programs may
        // query a node several times).
        let mut queried_at: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, &pos) in path.states.iter().enumerate() {
            if let Some(node) = bp.state(pos).label.queried_node() {
                queried_at.entry(node).or_default().push(idx);
            }
        }
        let root_critical = match queried_at.get(&1).and_then(|v| v.last()).copied() {
            Some(p) => p,
            None => {
                report.structure_violations += 1;
                report.witness(&instance);
                continue 'instances;
            }
        };

        // Discover critical states top-down and record the pebble
        // requirements they impose on their children.
        let mut critical_positions: Vec<usize> = vec![0, path.states.len() - 1, root_critical];
        let mut per_node_criticals: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        per_node_criticals.insert(1, vec![root_critical]);
        let mut queue: Vec<(usize, usize)> = vec![(1, root_critical)];
        let mut black_raw: Vec<(usize, Pebble, usize, usize)> = Vec::new(); // (node, b, own critical, parent critical)
        let mut white_raw: Vec<(usize, Pebble, usize, usize)> = Vec::new(); // (node, w, parent critical, own critical)

        while let Some((node, crit)) = queue.pop() {
            if shape.is_leaf(node) {
                continue;
            }
            let config = config_at(crit)?;
            for child in [2 * node, 2 * node + 1] {
                let (b, w) = config.value(child);
                let empty = Vec::new();
                let queries = queried_at.get(&child).unwrap_or(&empty);
                if b > Pebble::zero() {
                    match queries.iter().rev().find(|&&q| q < crit) {
                        Some(&own) => {
                            black_raw.push((child, b, own, crit));
                            if !per_node_criticals.entry(child).or_default().contains(&own) {
                                per_node_criticals.get_mut(&child).unwrap().push(own);
                                critical_positions.push(own);
                                queue.push((child, own));
                            }
                        }
                        None => {
                            report.structure_violations += 1;
                            report.witness(&instance);
                            continue 'instances;
                        }
                    }
                }
                if w > Pebble::zero() {
                    match queries.iter().find(|&&q| q > crit) {
                        Some(&own) => {
                            white_raw.push((child, w, crit, own));
                            if !per_node_criticals.entry(child).or_default().contains(&own) {
                                per_node_criticals.get_mut(&child).unwrap().push(own);
                                critical_positions.push(own);
                                queue.push((child, own));
                            }
                        }
                        None => {
                            report.structure_violations += 1;
                            report.witness(&instance);
                            continue 'instances;
                        }
                    }
                }
            }
        }

        critical_positions.sort_unstable();
        critical_positions.dedup();
        let crit_index = |p: usize| critical_positions.binary_search(&p).unwrap();

        // Children of a queried node must be fully pebbled at its critical
        // states (per the per-state values).
        for (&node, crits) in &per_node_criticals {
            if shape.is_leaf(node) {
                continue;
            }
            for &crit in crits {
                debug_assert!(matches!(
                    bp.state(path.states[crit]).label,
                    StateLabel::Func { .. }
                ));
                let config = config_at(crit)?;
                for child in [2 * node, 2 * node + 1] {
                    let (b, w) = config.value(child);
                    if !(b + w).is_one() {
                        report.children_violations += 1;
                        report.witness(&instance);
                    }
                }
            }
        }

        let blacks: Vec<BlackRequirement> = black_raw
            .iter()
            .map(|&(node, amount, own, parent)| BlackRequirement {
                node,
                amount,
                from: crit_index(own),
                until: crit_index(parent),
            })
            .collect();
        let whites: Vec<WhiteRequirement> = white_raw
            .iter()
            .map(|&(node, amount, parent, own)| WhiteRequirement {
                node,
                amount,
                from: crit_index(parent),
                until: crit_index(own),
            })
            .collect();

        // Configuration at each critical index.
        let steps = critical_positions.len();
        let node_value = |t: usize, node: usize| -> (Pebble, Pebble) {
            let mut b = Pebble::zero();
            for req in &blacks {
                if req.node == node && req.from < t && t <= req.until {
                    b = b.max(req.amount);
                }
            }
            let mut w = Pebble::zero();
            for req in &whites {
                if req.node == node && req.from <= t && t <= req.until {
                    w = w.max(req.amount);
                }
            }
            (b, w)
        };

        // Emit moves between consecutive critical configurations:
        // children-full operations first (black increases, white
        // removals), then the free ones, nodes in heap order.
        let root_ci = crit_index(root_critical);
        let mut moves: Vec<PebbleMove> = Vec::new();
        for t in 1..steps {
            if t == root_ci + 1 {
                moves.push(PebbleMove::PlaceBlack {
                    node: 1,
                    amount: Pebble::one(),
                    from_child: None,
                });
                moves.push(PebbleMove::DecreaseBlack {
                    node: 1,
                    amount: Pebble::one(),
                });
            }
            let mut frees: Vec<PebbleMove> = Vec::new();
            for node in shape.non_root_nodes() {
                let (pb, pw) = node_value(t - 1, node);
                let (nb, nw) = node_value(t, node);
                if nb > pb {
                    moves.push(PebbleMove::PlaceBlack {
                        node,
                        amount: nb - pb,
                        from_child: None,
                    });
                } else if nb < pb {
                    frees.push(PebbleMove::DecreaseBlack {
                        node,
                        amount: pb - nb,
                    });
                }
                if nw < pw {
                    moves.push(PebbleMove::RemoveWhite { node });
                    if nw > Pebble::zero() {
                        frees.push(PebbleMove::IncreaseWhite { node, amount: nw });
                    }
                } else if nw > pw {
                    frees.push(PebbleMove::IncreaseWhite {
                        node,
                        amount: nw - pw,
                    });
                }
            }
            moves.extend(frees);
        }

        let sequence = PebbleSequence {
            shape,
            variant: PebbleVariant::FractionalBw,
            denominator: bp.k().trailing_zeros().max(1),
            moves,
        };
        match sequence.validate() {
            Ok(_) => {}
            Err(crate::pebbling::SequenceError::IllegalMove { .. }) => {
                report.legality_violations += 1;
                report.witness(&instance);
                continue 'instances;
            }
            Err(_) => {
                report.sequence_violations += 1;
                report.witness(&instance);
                continue 'instances;
            }
        }

        // Underestimation: at every path position the prevailing critical
        // configuration is componentwise at most the per-state values.
        let mut t = 0usize;
        for (idx, &pos) in path.states.iter().enumerate() {
            while t + 1 < steps && critical_positions[t + 1] <= idx {
                t += 1;
            }
            let state_config = match &extraction.configs[pos] {
                Some(c) => c,
                None => continue,
            };
            for node in shape.non_root_nodes() {
                let (cb, cw) = node_value(t, node);
                let (sb, sw) = state_config.value(node);
                if cb > sb || cw > sw {
                    report.underestimate_violations += 1;
                    report.witness(&instance);
                }
            }
        }
    }

    Ok(report)
}

/// Full whole-config variant of `PebbleConfig` for callers wanting the
/// critical pebbling as explicit configurations (used by tests).
pub fn extracted_to_config(shape: crate::tree::TreeShape, config: &ExtractedConfig) -> PebbleConfig {
    let mut out = PebbleConfig::empty(shape);
    for (&node, &(b, w)) in &config.values {
        out.set(node, b, w);
    }
    out
}
