//! Recovering a hard input from a state and the values of its unpebbled
//! nodes.
//!
//! The walk from the state explores consistent continuations to the
//! accepting state, gathering candidate values for the pebbled nodes:
//! black-pebbled children are read off the query arguments, white-pebbled
//! nodes off the chosen outcome edges, and unpebbled nodes are checked
//! against the supplied values. Each candidate completion is then
//! simulated, and only those with an accepting path through the state are
//! returned; for read-once programs the result is unique.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_traits::One;

use crate::bp::{BranchingProgram, StateLabel};
use crate::budget::Budget;
use crate::pebbling::PebbleConfig;
use crate::tree::{hard_input_from_tuple, TepInstance, Value};

use super::AnalyzeError;

struct Walk<'a> {
    bp: &'a BranchingProgram,
    config: &'a PebbleConfig,
    unpebbled: &'a BTreeMap<usize, Value>,
    accept: usize,
    budget_left: u64,
    completions: BTreeSet<Vec<(usize, Value)>>,
}

impl<'a> Walk<'a> {
    /// Records the candidate value of a pebbled node; `false` on conflict
    /// with an earlier candidate.
    fn record(
        candidates: &mut BTreeMap<usize, Value>,
        node: usize,
        value: Value,
    ) -> bool {
        match candidates.get(&node) {
            Some(&existing) => existing == value,
            None => {
                candidates.insert(node, value);
                true
            }
        }
    }

    fn explore(
        &mut self,
        pos: usize,
        candidates: &mut BTreeMap<usize, Value>,
    ) -> Result<(), AnalyzeError> {
        if self.budget_left == 0 {
            return Err(AnalyzeError::Budget(crate::budget::BudgetError {
                what: "walk branches",
                needed: 0,
                cap: 0,
            }));
        }
        self.budget_left -= 1;

        if pos == self.accept {
            self.completions
                .insert(candidates.iter().map(|(&n, &v)| (n, v)).collect());
            return Ok(());
        }
        let state = self.bp.state(pos);
        let queried = match state.label {
            StateLabel::Func { node, x, y } => {
                // The children of a queried node cannot be white here, and
                // the node itself cannot already be black: either would
                // mean a second query of the same node on one path.
                for (child, arg) in [(2 * node, x), (2 * node + 1, y)] {
                    if self.config.white(child).is_one() {
                        return Err(AnalyzeError::NodeQueriedTwice { node: child });
                    }
                    if self.config.black(child).is_one() {
                        if !Self::record(candidates, child, arg) {
                            return Ok(()); // conflicting candidate: dead branch
                        }
                    } else if self.unpebbled.get(&child) != Some(&arg) {
                        return Ok(()); // inconsistent with the known values
                    }
                }
                if node != 1 && self.config.black(node).is_one() {
                    return Err(AnalyzeError::NodeQueriedTwice { node });
                }
                node
            }
            StateLabel::Leaf { node } => {
                if self.config.black(node).is_one() {
                    return Err(AnalyzeError::NodeQueriedTwice { node });
                }
                node
            }
            StateLabel::Guess => {
                let bp = self.bp;
                for &eidx in bp.out_edges(pos) {
                    let to = bp.edge(eidx).to;
                    self.explore(to, candidates)?;
                }
                return Ok(());
            }
            StateLabel::Accept | StateLabel::Final { .. } => return Ok(()),
        };

        let white = queried != 1 && self.config.white(queried).is_one();
        let bp = self.bp;
        for &eidx in bp.out_edges(pos) {
            let edge = bp.edge(eidx);
            let label = edge.label.expect("query edges are labelled");
            if queried == 1 {
                // Root queries carry only the accepting outcome on hard
                // inputs; follow whatever edges exist.
                self.explore(edge.to, candidates)?;
            } else if white {
                let mut branch = candidates.clone();
                if Self::record(&mut branch, queried, label) {
                    self.explore(edge.to, &mut branch)?;
                }
            } else if self.unpebbled.get(&queried) == Some(&label) {
                self.explore(edge.to, candidates)?;
            }
        }
        Ok(())
    }
}

/// Recovers the hard inputs consistent with the unpebbled-node values that
/// accept through the given state. `config` is the state-determined whole
/// configuration of `state_pos`.
pub fn find_input(
    bp: &BranchingProgram,
    state_pos: usize,
    config: &PebbleConfig,
    unpebbled: &BTreeMap<usize, Value>,
    budget: &Budget,
) -> Result<Vec<TepInstance>, AnalyzeError> {
    let accept = bp.accept_position().ok_or(AnalyzeError::NoAcceptingPath)?;
    let shape = bp.shape();

    let mut walk = Walk {
        bp,
        config,
        unpebbled,
        accept,
        budget_left: budget.max_paths,
        completions: BTreeSet::new(),
    };
    let mut candidates = BTreeMap::new();
    walk.explore(state_pos, &mut candidates)?;

    let mut results = Vec::new();
    let mut seen = BTreeSet::new();
    for completion in &walk.completions {
        let mut values: BTreeMap<usize, Value> = unpebbled.clone();
        values.extend(completion.iter().copied());
        if values.len() != shape.non_root_count() {
            continue; // some pebbled node never got a candidate value
        }
        let tuple: Vec<Value> = shape.non_root_nodes().map(|n| values[&n]).collect();
        if !seen.insert(tuple.clone()) {
            continue;
        }
        let instance = hard_input_from_tuple(shape, bp.k(), &tuple);
        let forward = crate::bp::consistent_forward(bp, &instance);
        let backward = crate::bp::consistent_backward(bp, &instance);
        if forward[state_pos] && backward[state_pos] {
            results.push(instance);
        }
    }
    if results.is_empty() {
        return Err(AnalyzeError::NoConsistentInput);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::extract::rontbp_state_configs;
    use crate::compile::compile_wbw_to_ntbp;
    use crate::pebbling::generate_ro_wbw_strategy;
    use crate::tree::enumerate_hard_inputs;

    #[test]
    fn start_state_recovers_the_full_input() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        let configs = rontbp_state_configs(&bp, &budget).unwrap();
        let start_config = configs[bp.start()].clone().unwrap();
        for instance in enumerate_hard_inputs(2, 2) {
            let values = instance.evaluate();
            let unpebbled: BTreeMap<usize, Value> = bp
                .shape()
                .non_root_nodes()
                .map(|n| (n, values.get(n)))
                .collect();
            let found = find_input(&bp, bp.start(), &start_config, &unpebbled, &budget).unwrap();
            assert_eq!(found, vec![instance]);
        }
    }

    #[test]
    fn inconsistent_values_recover_nothing() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        let configs = rontbp_state_configs(&bp, &budget).unwrap();
        // Pick a mid-path state with a pebbled node and feed values that
        // contradict its tag.
        let pos = (0..bp.state_count())
            .find(|&p| {
                configs[p]
                    .as_ref()
                    .is_some_and(|c| !c.is_empty() && c.black(2).is_one())
            })
            .expect("some state black-pebbles node 2");
        let config = configs[pos].clone().unwrap();
        // Node 3 is unpebbled there for the h=2 strategy; claim node 3 has
        // a value, but lie about node 2 being unpebbled is impossible, so
        // instead supply an unpebbled map whose values admit no accepting
        // path through pos. With f_1 == 1 every completion accepts, so use
        // an empty map to starve the walk of required values instead.
        let unpebbled = BTreeMap::new();
        let result = find_input(&bp, pos, &config, &unpebbled, &budget);
        assert!(matches!(result, Err(AnalyzeError::NoConsistentInput)));
    }
}
