//! Thrifty, syntactic read-once and bitwise-independence checkers.

use serde::{Deserialize, Serialize};

use crate::bp::{BranchingProgram, StateId, StateLabel};
use crate::compile::Encoding;
use crate::tree::{hard_input_from_tuple, Value};

use super::state_sets::{FactoredSet, StateSets};
use super::AnalyzeError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThriftyViolation {
    pub state: StateId,
    pub queried_node: usize,
    pub queried_at: (Value, Value),
    /// Canonical JSON of a sweep input accepting through the state with
    /// different child values.
    pub witness: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThriftyVerdict {
    pub pass: bool,
    pub violations: Vec<ThriftyViolation>,
}

/// A program is thrifty on the sweep when every internal-node query on
/// every accepting path uses the queried node's true child values. With
/// exact state sets this is a projection condition: for a state querying
/// `f_j(x, y)`, the accepting set must project to `{x}` at `2j` and `{y}`
/// at `2j+1`.
pub fn check_thrifty(bp: &BranchingProgram, sets: &StateSets) -> ThriftyVerdict {
    let mut violations = Vec::new();
    for (pos, state) in bp.states().iter().enumerate() {
        let (node, x, y) = match state.label {
            StateLabel::Func { node, x, y } => (node, x, y),
            _ => continue,
        };
        let a = sets.a(pos);
        if a.is_empty() {
            continue; // no accepting path through this state
        }
        for (child, expected) in [(2 * node, x), (2 * node + 1, y)] {
            let proj = a.project(child);
            if proj.iter().any(|&v| v != expected) {
                let bad = a
                    .filter_on(&[child], move |vals| vals[0] != expected)
                    .witness()
                    .expect("projection mismatch has a witness");
                let shape = bp.shape();
                violations.push(ThriftyViolation {
                    state: state.id,
                    queried_node: node,
                    queried_at: (x, y),
                    witness: hard_input_from_tuple(shape, bp.k(), &bad).to_canonical_json(),
                });
            }
        }
    }
    ThriftyVerdict {
        pass: violations.is_empty(),
        violations,
    }
}

/// Whether no start-to-accept graph path queries the same tree node twice.
/// Checked via reachability between same-node query states, not path
/// enumeration.
pub fn check_syntactic_read_once(bp: &BranchingProgram) -> bool {
    let n = bp.state_count();
    let accept = match bp.accept_position() {
        Some(a) => a,
        None => return true,
    };

    // Graph-reachability (ignoring consistency) from the start.
    let mut from_start = vec![false; n];
    from_start[bp.start()] = true;
    for &pos in bp.topo_order() {
        if !from_start[pos] {
            continue;
        }
        for &eidx in bp.out_edges(pos) {
            from_start[bp.edge(eidx).to] = true;
        }
    }
    // Graph-reachability to the accept state.
    let mut to_accept = vec![false; n];
    to_accept[accept] = true;
    for &pos in bp.topo_order().iter().rev() {
        if to_accept[pos] {
            continue;
        }
        to_accept[pos] = bp.out_edges(pos).iter().any(|&e| to_accept[bp.edge(e).to]);
    }

    // Bitset transitive closure in reverse topological order.
    let words = n.div_ceil(64);
    let mut closure: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
    for &pos in bp.topo_order().iter().rev() {
        for &eidx in bp.out_edges(pos) {
            let to = bp.edge(eidx).to;
            let (row_to, row_pos) = if to > pos {
                let (a, b) = closure.split_at_mut(to);
                (&mut b[0], &mut a[pos])
            } else {
                let (a, b) = closure.split_at_mut(pos);
                (&mut a[to], &mut b[0])
            };
            for w in 0..words {
                row_pos[w] |= row_to[w];
            }
            row_pos[to / 64] |= 1u64 << (to % 64);
        }
    }

    // Query states grouped by queried node.
    let mut by_node: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (pos, state) in bp.states().iter().enumerate() {
        if let Some(node) = state.label.queried_node() {
            by_node.entry(node).or_default().push(pos);
        }
    }
    for states in by_node.values() {
        for &s in states {
            if !from_start[s] {
                continue;
            }
            for &t in states {
                if s == t || !to_accept[t] {
                    continue;
                }
                if closure[s][t / 64] & (1u64 << (t % 64)) != 0 {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct BitwiseViolation {
    pub state: StateId,
    pub which: &'static str, // "F" or "A"
    /// Node whose value set is not a bit product, or None when the tuple
    /// set itself is not the product of its per-node projections.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BitwiseVerdict {
    pub pass: bool,
    /// Code table of the encoding that passed (or the last one tried).
    pub encoding: Vec<u32>,
    pub violations: Vec<BitwiseViolation>,
}

fn product_violations(
    set: &FactoredSet,
    which: &'static str,
    state: StateId,
    n_nodes: usize,
    k: u32,
    enc: &Encoding,
    out: &mut Vec<BitwiseViolation>,
) {
    if set.is_empty() {
        return;
    }
    // Whole-tuple factorization: |S| must equal the product of the
    // per-node projection sizes (S is always a subset of that product).
    let mut product: u128 = 1;
    for node in 2..2 + n_nodes {
        product = product.saturating_mul(set.project(node).len() as u128);
    }
    if set.cardinality() != product {
        out.push(BitwiseViolation {
            state,
            which,
            node: None,
        });
    }
    // Per-node bit structure: the projection must be exactly the set of
    // values agreeing with its fixed bits under the encoding.
    let _ = k;
    for node in 2..2 + n_nodes {
        let proj = set.project(node);
        let mut and_mask = u32::MAX;
        let mut or_mask = 0u32;
        for &v in &proj {
            let code = enc.encode(v);
            and_mask &= code;
            or_mask |= code;
        }
        let free_bits = (and_mask ^ or_mask) & ((1u32 << enc.bits()) - 1);
        if proj.len() as u128 != 1u128 << free_bits.count_ones() {
            out.push(BitwiseViolation {
                state,
                which,
                node: Some(node),
            });
        }
    }
}

fn check_with_encoding(bp: &BranchingProgram, sets: &StateSets, enc: &Encoding) -> BitwiseVerdict {
    let mut violations = Vec::new();
    for pos in 0..bp.state_count() {
        let id = bp.state(pos).id;
        product_violations(
            sets.f(pos),
            "F",
            id,
            sets.n_nodes,
            sets.k,
            enc,
            &mut violations,
        );
        product_violations(
            sets.a(pos),
            "A",
            id,
            sets.n_nodes,
            sets.k,
            enc,
            &mut violations,
        );
    }
    BitwiseVerdict {
        pass: violations.is_empty(),
        encoding: (0..bp.k()).map(|v| enc.encode(v as Value)).collect(),
        violations,
    }
}

/// Verifies the product structure of every state's `F_s` and `A_s` under
/// the given encoding, or searches all encodings (exhaustive only for
/// `k <= 4`; beyond that only the identity is tried).
pub fn check_bitwise_independence(
    bp: &BranchingProgram,
    sets: &StateSets,
    encoding: Option<&Encoding>,
) -> Result<BitwiseVerdict, AnalyzeError> {
    if !bp.k().is_power_of_two() {
        return Err(AnalyzeError::Unsupported(format!(
            "bitwise independence needs k a power of two (got {}); restrict the sweep first",
            bp.k()
        )));
    }
    match encoding {
        Some(enc) => Ok(check_with_encoding(bp, sets, enc)),
        None => {
            let candidates = if bp.k() <= 4 {
                Encoding::all(bp.k()).map_err(|e| AnalyzeError::Unsupported(e.to_string()))?
            } else {
                vec![Encoding::identity(bp.k())
                    .map_err(|e| AnalyzeError::Unsupported(e.to_string()))?]
            };
            let mut last = None;
            for enc in &candidates {
                let verdict = check_with_encoding(bp, sets, enc);
                if verdict.pass {
                    return Ok(verdict);
                }
                last = Some(verdict);
            }
            Ok(last.expect("at least one candidate encoding"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::{compute_state_sets, Sweep};
    use crate::budget::Budget;
    use crate::compile::{compile_black_to_dtbp, compile_wbw_to_ntbp};
    use crate::pebbling::{generate_black_strategy, generate_ro_wbw_strategy};
    use crate::tree::enumerate_hard_inputs;

    #[test]
    fn compiled_programs_are_thrifty_on_hard_inputs() {
        let budget = Budget::default();
        for h in [2u32, 3] {
            let black =
                compile_black_to_dtbp(&generate_black_strategy(h), 2, &budget).unwrap();
            let sets = compute_state_sets(&black, &Sweep::HardInputs, &budget).unwrap();
            assert!(check_thrifty(&black, &sets).pass, "black h={h}");

            let wbw =
                compile_wbw_to_ntbp(&generate_ro_wbw_strategy(h), 2, false, &budget).unwrap();
            let sets = compute_state_sets(&wbw, &Sweep::HardInputs, &budget).unwrap();
            assert!(check_thrifty(&wbw, &sets).pass, "wbw h={h}");
        }
    }

    #[test]
    fn eager_root_query_is_not_thrifty() {
        // A program that queries f_1(0,0) first, unconditionally: thrifty
        // only if every accepting input has v_2 = v_3 = 0.
        use crate::bp::{BpVariant, RawEdge, State};
        use crate::tree::TepVariant;
        let states = vec![
            State {
                id: 0,
                label: StateLabel::Func { node: 1, x: 0, y: 0 },
                tag: None,
            },
            State {
                id: 1,
                label: StateLabel::Accept,
                tag: None,
            },
        ];
        let edges = vec![RawEdge {
            from: 0,
            to: 1,
            label: Some(1),
        }];
        let bp = BranchingProgram::new(
            2,
            2,
            BpVariant::Nondeterministic,
            TepVariant::Bt,
            0,
            states,
            edges,
        )
        .unwrap();
        let budget = Budget::default();
        let sets = compute_state_sets(&bp, &Sweep::HardInputs, &budget).unwrap();
        let verdict = check_thrifty(&bp, &sets);
        assert!(!verdict.pass);
        // The violation witness accepts through the state with v_2 = 1.
        let witness = crate::tree::TepInstance::from_json(&verdict.violations[0].witness).unwrap();
        assert!(enumerate_hard_inputs(2, 2).any(|i| i == witness));
    }

    #[test]
    fn wbw_compile_is_syntactically_read_once_and_black_verdict_is_recorded() {
        let budget = Budget::default();
        let wbw = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        assert!(check_syntactic_read_once(&wbw));

        // Fixture: the recursive black strategy pebbles each node once, so
        // its compiled program is also syntactically read-once at h=3.
        let black = compile_black_to_dtbp(&generate_black_strategy(3), 2, &budget).unwrap();
        assert!(check_syntactic_read_once(&black));
    }

    #[test]
    fn two_sequential_root_queries_are_not_read_once() {
        use crate::bp::{BpVariant, RawEdge, State};
        use crate::tree::TepVariant;
        let func = |id, x, y| State {
            id,
            label: StateLabel::Func { node: 1, x, y },
            tag: None,
        };
        let states = vec![
            func(0, 0, 0),
            func(1, 0, 1),
            State {
                id: 2,
                label: StateLabel::Accept,
                tag: None,
            },
        ];
        let edges = vec![
            RawEdge {
                from: 0,
                to: 1,
                label: Some(1),
            },
            RawEdge {
                from: 1,
                to: 2,
                label: Some(1),
            },
        ];
        let bp = BranchingProgram::new(
            2,
            2,
            BpVariant::Nondeterministic,
            TepVariant::Bt,
            0,
            states,
            edges,
        )
        .unwrap();
        assert!(!check_syntactic_read_once(&bp));
    }

    #[test]
    fn whole_value_tags_are_bitwise_independent() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        let sets = compute_state_sets(&bp, &Sweep::HardInputs, &budget).unwrap();
        let enc = Encoding::identity(2).unwrap();
        let verdict = check_bitwise_independence(&bp, &sets, Some(&enc)).unwrap();
        assert!(verdict.pass, "violations: {:?}", verdict.violations);
    }

    #[test]
    fn correlated_bits_fail_the_product_check() {
        // Hand-built set over one node (k = 4): values {0b00, 0b11}; the
        // second bit is determined by the first.
        let full = FactoredSet::full(4, 2);
        let set = full.filter_on(&[2], |v| v[0] == 0 || v[0] == 3);
        let enc = Encoding::identity(4).unwrap();
        let mut violations = Vec::new();
        product_violations(&set, "F", 0, 2, 4, &enc, &mut violations);
        assert!(!violations.is_empty());
    }
}
