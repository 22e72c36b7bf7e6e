//! Entropy censuses: distribute the sweep's inputs over bottleneck states
//! and read off the implied size lower bound.
//!
//! Each input is mapped to the first state on its designated accepting
//! path (lexicographically first by edge order) whose extracted pebbling
//! configuration carries at least the threshold number of pebbles on
//! non-root nodes. The buckets partition the sweep, so the program must
//! have at least `|sweep| / max-bucket` states.

use std::collections::BTreeMap;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::bp::{BranchingProgram, StateId};
use crate::budget::Budget;
use crate::pebbling::Pebble;
use crate::tree::TepInstance;

use super::bintbp::FractionalExtraction;
use super::extract::path_whole_config;
use super::state_sets::{Sweep, SweepDescriptor};
use super::AnalyzeError;

/// How per-state pebble values are derived for the census.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionKind {
    /// Whole black-white configurations from query positions (read-once
    /// nondeterministic programs).
    ReadOnceWhole,
    /// Fractional values from state-set projections (bitwise-independent
    /// programs); requires a precomputed extraction.
    BitwiseFractional,
    /// Black-only extraction for deterministic thrifty programs: a node is
    /// pebbled when it has been queried and its parent has not.
    DeterministicBlack,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusReport {
    pub sweep: SweepDescriptor,
    /// Threshold as an exact rational `p/q`.
    pub threshold: String,
    /// Bucket sizes per bottleneck state id.
    pub buckets: BTreeMap<StateId, u64>,
    pub max_bucket: u64,
    /// `ceil(|sweep| / max_bucket)`: the program must have at least this
    /// many states.
    pub implied_lower_bound: u128,
    pub measured_size: usize,
    /// Inputs whose designated path never reaches the threshold.
    pub unreached: u64,
}

impl CensusReport {
    pub fn bound_holds(&self) -> bool {
        self.unreached == 0 && self.measured_size as u128 >= self.implied_lower_bound
    }
}

fn rational_str(v: Pebble) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

/// Runs the census. `fractional` must be supplied for
/// `ExtractionKind::BitwiseFractional`.
pub fn entropy_census(
    bp: &BranchingProgram,
    kind: ExtractionKind,
    sweep: &Sweep,
    threshold: Pebble,
    fractional: Option<&FractionalExtraction>,
    budget: &Budget,
) -> Result<CensusReport, AnalyzeError> {
    let shape = bp.shape();
    let (descriptor, instances) = super::state_sets::sweep_instances(bp, sweep, budget)?;

    // Per-state totals for the fractional extraction are input-independent.
    let fractional_totals: Option<Vec<Option<Pebble>>> = match kind {
        ExtractionKind::BitwiseFractional => {
            let extraction = fractional.ok_or_else(|| {
                AnalyzeError::Unsupported(
                    "fractional census needs a precomputed extraction".into(),
                )
            })?;
            Some(
                extraction
                    .configs
                    .iter()
                    .map(|c| c.as_ref().map(|c| c.total_non_root()))
                    .collect(),
            )
        }
        _ => None,
    };

    let mut buckets: BTreeMap<StateId, u64> = BTreeMap::new();
    let mut unreached: u64 = 0;

    for instance in instances {
        let bottleneck = census_bottleneck(bp, kind, &instance, threshold, &fractional_totals)?;
        match bottleneck {
            Some(pos) => *buckets.entry(bp.state(pos).id).or_insert(0) += 1,
            None => unreached += 1,
        }
    }

    let max_bucket = buckets.values().copied().max().unwrap_or(0);
    let total: u128 = buckets.values().map(|&c| c as u128).sum::<u128>() + unreached as u128;
    let implied_lower_bound = if max_bucket == 0 {
        0
    } else {
        total.div_ceil(max_bucket as u128)
    };
    Ok(CensusReport {
        sweep: descriptor,
        threshold: rational_str(threshold),
        buckets,
        max_bucket,
        implied_lower_bound,
        measured_size: bp.size(),
        unreached,
    })
}

/// First state on the designated accepting path whose configuration holds
/// at least `threshold` pebbles on non-root nodes.
fn census_bottleneck(
    bp: &BranchingProgram,
    kind: ExtractionKind,
    instance: &TepInstance,
    threshold: Pebble,
    fractional_totals: &Option<Vec<Option<Pebble>>>,
) -> Result<Option<usize>, AnalyzeError> {
    let path =
        crate::bp::lex_first_accepting_path(bp, instance).ok_or(AnalyzeError::NoAcceptingPath)?;

    match kind {
        ExtractionKind::BitwiseFractional => {
            let totals = fractional_totals.as_ref().expect("checked by caller");
            for &pos in &path.states {
                if let Some(total) = totals[pos] {
                    if total >= threshold {
                        return Ok(Some(pos));
                    }
                }
            }
            Ok(None)
        }
        ExtractionKind::ReadOnceWhole => {
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
            for at in 0..path.states.len() {
                let config = path_whole_config(bp, &positions, at);
                if config.total_non_root() >= threshold {
                    return Ok(Some(path.states[at]));
                }
            }
            Ok(None)
        }
        ExtractionKind::DeterministicBlack => {
            // A non-root node is black when it has been queried and its
            // parent still awaits a query at or after the position.
            let shape = bp.shape();
            let mut first_query: BTreeMap<usize, usize> = BTreeMap::new();
            let mut last_query: BTreeMap<usize, usize> = BTreeMap::new();
            for (idx, &pos) in path.states.iter().enumerate() {
                if let Some(node) = bp.state(pos).label.queried_node() {
                    first_query.entry(node).or_insert(idx);
                    last_query.insert(node, idx);
                }
            }
            for at in 0..path.states.len() {
                let mut total = Pebble::from_integer(0);
                for node in shape.non_root_nodes() {
                    let queried_before = first_query.get(&node).is_some_and(|&q| q < at);
                    let parent_pending = last_query.get(&(node / 2)).is_some_and(|&q| q >= at);
                    if queried_before && parent_pending {
                        total += Pebble::one();
                    }
                }
                if total >= threshold {
                    return Ok(Some(path.states[at]));
                }
            }
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile_black_to_dtbp, compile_wbw_to_ntbp};
    use crate::pebbling::{generate_black_strategy, generate_ro_wbw_strategy, pebble};
    use crate::tree::hard_input_count;

    #[test]
    fn rontbp_census_reproduces_the_counting_bound() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        let report = entropy_census(
            &bp,
            ExtractionKind::ReadOnceWhole,
            &Sweep::HardInputs,
            pebble(2, 1), // ceil(h/2)
            None,
            &budget,
        )
        .unwrap();
        assert_eq!(report.unreached, 0);
        let total: u64 = report.buckets.values().sum();
        assert_eq!(total as u128, hard_input_count(3, 2).unwrap());
        // Buckets are at most k^(N - ceil(h/2)) = 2^4.
        assert!(report.max_bucket <= 16, "max bucket {}", report.max_bucket);
        assert!(report.implied_lower_bound >= 4);
        assert!(report.measured_size as u128 >= report.implied_lower_bound);
    }

    #[test]
    fn deterministic_census_reports_raw_numbers() {
        let budget = Budget::default();
        let bp = compile_black_to_dtbp(&generate_black_strategy(2), 2, &budget).unwrap();
        let report = entropy_census(
            &bp,
            ExtractionKind::DeterministicBlack,
            &Sweep::HardInputs,
            pebble(2, 1),
            None,
            &budget,
        )
        .unwrap();
        assert_eq!(report.unreached, 0);
        assert_eq!(
            report.buckets.values().sum::<u64>() as u128,
            hard_input_count(2, 2).unwrap()
        );
        assert!(report.measured_size as u128 >= report.implied_lower_bound);
    }
}
