//! Whole black-white pebbling extracted from a read-once program.
//!
//! Along an accepting path of a hard input, every tree node is queried
//! exactly once. Relative to a path position, a non-root node is black
//! when it has been queried but its parent has not, white when its parent
//! has been queried but it has not, and unpebbled otherwise. Because the
//! program is syntactically read-once, the configuration at a state does
//! not depend on which accepting path was used to compute it; this module
//! both computes the configurations and re-checks that independence.

use std::collections::BTreeMap;

use num_traits::One;

use crate::bp::{BranchingProgram, ComputationPath, StateLabel};
use crate::budget::Budget;
use crate::pebbling::{Pebble, PebbleConfig, PebbleMove, PebbleSequence, PebbleVariant};
use crate::tree::TepInstance;

use super::AnalyzeError;

/// Query position of every tree node along a path; exactly one per node.
fn query_positions(
    bp: &BranchingProgram,
    path: &ComputationPath,
) -> Result<BTreeMap<usize, usize>, AnalyzeError> {
    let mut positions = BTreeMap::new();
    for (idx, &pos) in path.states.iter().enumerate() {
        if let Some(node) = bp.state(pos).label.queried_node() {
            if positions.insert(node, idx).is_some() {
                return Err(AnalyzeError::NodeQueriedTwice { node });
            }
        }
    }
    for node in bp.shape().nodes() {
        if !positions.contains_key(&node) {
            return Err(AnalyzeError::MissingQuery { node });
        }
    }
    Ok(positions)
}

/// The whole configuration at one path position (the root is carried as
/// unpebbled; its momentary pebble lives between the root query and the
/// next state).
pub fn path_whole_config(
    bp: &BranchingProgram,
    positions: &BTreeMap<usize, usize>,
    at: usize,
) -> PebbleConfig {
    let shape = bp.shape();
    let one = Pebble::one();
    let zero = Pebble::from_integer(0);
    let mut config = PebbleConfig::empty(shape);
    for node in shape.non_root_nodes() {
        let own = positions[&node];
        let parent = positions[&(node / 2)];
        if own < at && parent >= at {
            config.set(node, one, zero);
        } else if own >= at && parent < at {
            config.set(node, zero, one);
        }
    }
    config
}

#[derive(Debug, Clone)]
pub struct ExtractedWholePebbling {
    /// Configuration at each path position.
    pub configs: Vec<PebbleConfig>,
    /// The reconstructed move sequence, including the momentary root
    /// pebble; validates as a whole black-white pebbling.
    pub sequence: PebbleSequence,
}

/// Extracts the pebbling a read-once program performs along one accepting
/// path of a hard input.
pub fn extract_rontbp_pebbling(
    bp: &BranchingProgram,
    instance: &TepInstance,
    path: &ComputationPath,
) -> Result<ExtractedWholePebbling, AnalyzeError> {
    if !path.consistent_with(bp, instance) {
        return Err(AnalyzeError::NoAcceptingPath);
    }
    let shape = bp.shape();
    let one = Pebble::one();
    let positions = query_positions(bp, path)?;
    let configs: Vec<PebbleConfig> = (0..path.states.len())
        .map(|at| path_whole_config(bp, &positions, at))
        .collect();

    let mut moves = Vec::new();
    for at in 0..path.states.len() - 1 {
        let state = bp.state(path.states[at]);
        let queried = match state.label.queried_node() {
            Some(n) => n,
            None => {
                debug_assert_eq!(&configs[at], &configs[at + 1], "guess states change nothing");
                continue;
            }
        };
        let before = &configs[at];
        let after = &configs[at + 1];

        // Children of the queried node that are still unqueried become
        // white pebbles before the node's own pebble change.
        if !shape.is_leaf(queried) {
            for child in [2 * queried, 2 * queried + 1] {
                if after.white(child).is_one() && !before.white(child).is_one() {
                    moves.push(PebbleMove::IncreaseWhite {
                        node: child,
                        amount: one,
                    });
                }
            }
        }

        // Black children of the queried node are consumed: one slides up,
        // the rest are removed.
        let black_children: Vec<usize> = if shape.is_leaf(queried) {
            Vec::new()
        } else {
            [2 * queried, 2 * queried + 1]
                .into_iter()
                .filter(|&c| before.black(c).is_one())
                .collect()
        };

        if before.white(queried).is_one() {
            // The query verifies a guess.
            moves.push(PebbleMove::RemoveWhite { node: queried });
            for &child in &black_children {
                moves.push(PebbleMove::DecreaseBlack {
                    node: child,
                    amount: one,
                });
            }
        } else {
            // The query computes the node: place black, sliding from the
            // first black child when one exists.
            let mut slide = black_children.iter().copied();
            let from_child = slide.next().map(|c| (c, one));
            moves.push(PebbleMove::PlaceBlack {
                node: queried,
                amount: one,
                from_child,
            });
            for child in slide {
                moves.push(PebbleMove::DecreaseBlack {
                    node: child,
                    amount: one,
                });
            }
            if queried == 1 {
                // Pebbled and unpebbled immediately after the root query.
                moves.push(PebbleMove::DecreaseBlack { node: 1, amount: one });
            }
        }
    }

    let sequence = PebbleSequence {
        shape,
        variant: PebbleVariant::WholeBw,
        denominator: 1,
        moves,
    };
    Ok(ExtractedWholePebbling { configs, sequence })
}

/// Computes the state-determined configuration of every state by sweeping
/// the designated accepting path of each hard input; a state seeing two
/// distinct configurations is a read-once extraction violation.
pub fn rontbp_state_configs(
    bp: &BranchingProgram,
    budget: &Budget,
) -> Result<Vec<Option<PebbleConfig>>, AnalyzeError> {
    let count = crate::tree::hard_input_count(bp.h(), bp.k()).unwrap_or(u128::MAX);
    budget.check_instances(count)?;
    let mut configs: Vec<Option<PebbleConfig>> = vec![None; bp.state_count()];
    for instance in crate::tree::enumerate_hard_inputs(bp.h(), bp.k()) {
        let path = crate::bp::lex_first_accepting_path(bp, &instance)
            .ok_or(AnalyzeError::NoAcceptingPath)?;
        let positions = query_positions(bp, &path)?;
        for (at, &pos) in path.states.iter().enumerate() {
            let config = path_whole_config(bp, &positions, at);
            match &configs[pos] {
                None => configs[pos] = Some(config),
                Some(existing) if *existing != config => {
                    return Err(AnalyzeError::StateConfigMismatch {
                        state: bp.state(pos).id,
                    })
                }
                _ => {}
            }
        }
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::lex_first_accepting_path;
    use crate::compile::compile_wbw_to_ntbp;
    use crate::pebbling::{generate_ro_wbw_strategy, validate_sequence};
    use crate::tree::enumerate_hard_inputs;

    #[test]
    fn extraction_validates_with_small_peak_at_h2() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        for instance in enumerate_hard_inputs(2, 2) {
            let path = lex_first_accepting_path(&bp, &instance).unwrap();
            let extracted = extract_rontbp_pebbling(&bp, &instance, &path).unwrap();
            let peak = validate_sequence(&extracted.sequence).unwrap();
            assert!(peak <= Pebble::from_integer(2), "peak {peak}");
        }
    }

    #[test]
    fn extraction_validates_at_h3() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        for instance in enumerate_hard_inputs(3, 2) {
            let path = lex_first_accepting_path(&bp, &instance).unwrap();
            let extracted = extract_rontbp_pebbling(&bp, &instance, &path).unwrap();
            validate_sequence(&extracted.sequence).unwrap();
        }
    }

    #[test]
    fn configurations_are_state_determined() {
        let budget = Budget::default();
        for h in [2u32, 3] {
            let bp =
                compile_wbw_to_ntbp(&generate_ro_wbw_strategy(h), 2, false, &budget).unwrap();
            rontbp_state_configs(&bp, &budget).unwrap();
        }
    }

    #[test]
    fn start_state_has_empty_configuration() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        let configs = rontbp_state_configs(&bp, &budget).unwrap();
        assert!(configs[bp.start()].as_ref().unwrap().is_empty());
    }
}
