//! Exact optimal-peak search.
//!
//! Pebble values are restricted to multiples of `1/d`. For a candidate
//! budget `p` the search explores the graph of configurations with total at
//! most `p`: a forward reachability pass from the empty configuration and a
//! backward pass to the empty configuration (by enumerating move
//! preimages). The budget is feasible iff some configuration with a whole
//! black pebble on the root lies in both sets. The optimum is found by
//! binary search on `p`, which is sound because feasibility is monotone in
//! the budget.

use std::collections::{HashSet, VecDeque};

use num_rational::Rational64;

use crate::budget::Budget;
use crate::tree::TreeShape;

use super::{Pebble, PebbleVariant, SequenceError};

/// Exact minimum peak over all valid strategies with values restricted to
/// multiples of `1/denominator` (use 1 for the whole games).
pub fn optimal_peak(
    h: u32,
    variant: PebbleVariant,
    denominator: u32,
    budget: &Budget,
) -> Result<Pebble, SequenceError> {
    let expected = match variant {
        PebbleVariant::Black | PebbleVariant::WholeBw => 1,
        PebbleVariant::FractionalBw => denominator,
    };
    if denominator != expected || denominator == 0 {
        return Err(SequenceError::BadDenominator {
            variant,
            expected: if expected == 0 { 1 } else { expected },
            got: denominator,
        });
    }
    let shape = TreeShape::new(h).map_err(|e| SequenceError::Parse(e.to_string()))?;
    let space = SearchSpace::new(shape, variant, denominator)?;

    // Root placement needs both children at value 1, so every strategy has
    // a configuration with >= 2 pebbles; the black strategy gives peak h.
    let d = denominator as u32;
    let mut lo = 2 * d;
    let mut hi = h * d;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if space.feasible(mid, budget)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if !space.feasible(lo, budget)? {
        // h pebbles always suffice; reaching this means a bug.
        return Err(SequenceError::Parse(
            "no feasible budget up to h pebbles".into(),
        ));
    }
    Ok(Rational64::new(lo as i64, d as i64))
}

/// Configurations are stored as packed u128 keys: per node, black and white
/// values in units of `1/d`, each in a fixed-width field.
struct SearchSpace {
    shape: TreeShape,
    variant: PebbleVariant,
    d: u32,
    bits_per: u32,
}

impl SearchSpace {
    fn new(shape: TreeShape, variant: PebbleVariant, d: u32) -> Result<Self, SequenceError> {
        let bits_per = 32 - d.leading_zeros();
        let total_bits = 2 * shape.node_count() as u32 * bits_per;
        if total_bits > 128 {
            return Err(SequenceError::TooFine { bits: total_bits });
        }
        Ok(SearchSpace {
            shape,
            variant,
            d,
            bits_per,
        })
    }

    fn encode(&self, config: &[(u32, u32)]) -> u128 {
        let mut key = 0u128;
        for &(b, w) in config.iter().skip(1) {
            key = (key << self.bits_per) | b as u128;
            key = (key << self.bits_per) | w as u128;
        }
        key
    }

    fn decode(&self, mut key: u128) -> Vec<(u32, u32)> {
        let count = self.shape.node_count();
        let mask = (1u128 << self.bits_per) - 1;
        let mut config = vec![(0u32, 0u32); count + 1];
        for i in (1..=count).rev() {
            let w = (key & mask) as u32;
            key >>= self.bits_per;
            let b = (key & mask) as u32;
            key >>= self.bits_per;
            config[i] = (b, w);
        }
        config
    }

    fn total(config: &[(u32, u32)]) -> u32 {
        config.iter().map(|&(b, w)| b + w).sum()
    }

    fn children_full(&self, config: &[(u32, u32)], node: usize) -> bool {
        if self.shape.is_leaf(node) {
            return true;
        }
        let full = |i: usize| config[i].0 + config[i].1 == self.d;
        full(2 * node) && full(2 * node + 1)
    }

    fn whites_allowed(&self) -> bool {
        self.variant != PebbleVariant::Black
    }

    /// All legal successors within the budget (in units of 1/d).
    fn successors(&self, config: &[(u32, u32)], cap: u32, out: &mut Vec<u128>) {
        let d = self.d;
        let total = Self::total(config);
        for node in self.shape.nodes() {
            let (b, w) = config[node];

            // Move 1: decrease black.
            for a in 1..=b {
                let mut next = config.to_vec();
                next[node].0 -= a;
                out.push(self.encode(&next));
            }

            // Move 2: increase white.
            if self.whites_allowed() {
                let room = d - b - w;
                for a in 1..=room {
                    if total + a > cap {
                        break;
                    }
                    let mut next = config.to_vec();
                    next[node].1 += a;
                    out.push(self.encode(&next));
                }
            }

            let children_full = self.children_full(config, node);

            // Move 3: remove white.
            if self.whites_allowed() && w > 0 && children_full {
                let mut next = config.to_vec();
                next[node].1 = 0;
                out.push(self.encode(&next));
            }

            // Move 4: place black, optionally sliding from a child.
            if children_full {
                let room = d - b - w;
                for a in 1..=room {
                    if total + a <= cap {
                        let mut next = config.to_vec();
                        next[node].0 += a;
                        out.push(self.encode(&next));
                    }
                    if !self.shape.is_leaf(node) {
                        for child in [2 * node, 2 * node + 1] {
                            for e in 1..=config[child].0 {
                                if total + a - e > cap {
                                    continue;
                                }
                                let mut next = config.to_vec();
                                next[node].0 += a;
                                next[child].0 -= e;
                                out.push(self.encode(&next));
                            }
                        }
                    }
                }
            }
        }
    }

    /// All configurations that reach `config` by one legal move, within the
    /// budget.
    fn predecessors(&self, config: &[(u32, u32)], cap: u32, out: &mut Vec<u128>) {
        let d = self.d;
        let total = Self::total(config);
        for node in self.shape.nodes() {
            let (b, w) = config[node];

            // Preimage of move 1: black was higher by a.
            let head = d - b - w;
            for a in 1..=head {
                if total + a > cap {
                    break;
                }
                let mut prev = config.to_vec();
                prev[node].0 += a;
                out.push(self.encode(&prev));
            }

            if self.whites_allowed() {
                // Preimage of move 2: white was lower by a.
                for a in 1..=w {
                    let mut prev = config.to_vec();
                    prev[node].1 -= a;
                    out.push(self.encode(&prev));
                }

                // Preimage of move 3: white was any positive value; children
                // (unchanged by the move) must be full.
                if w == 0 && self.children_full(config, node) {
                    let room = d - b;
                    for a in 1..=room {
                        if total + a > cap {
                            break;
                        }
                        let mut prev = config.to_vec();
                        prev[node].1 = a;
                        out.push(self.encode(&prev));
                    }
                }
            }

            // Preimage of move 4: black was lower by a; children full in the
            // predecessor. Without a slide the children are unchanged, so
            // they must be full now; with a slide from child c by e, the
            // predecessor has b(c) + e and fullness pins e.
            for a in 1..=b {
                if self.children_full(config, node) {
                    let mut prev = config.to_vec();
                    prev[node].0 -= a;
                    out.push(self.encode(&prev));
                }
                if !self.shape.is_leaf(node) {
                    for child in [2 * node, 2 * node + 1] {
                        let sibling = child ^ 1;
                        let sib_full = config[sibling].0 + config[sibling].1 == d;
                        if !sib_full {
                            continue;
                        }
                        let child_value = config[child].0 + config[child].1;
                        if child_value >= d {
                            continue; // already full: no positive slide amount
                        }
                        let e = d - child_value;
                        if total - a + e > cap {
                            continue;
                        }
                        let mut prev = config.to_vec();
                        prev[node].0 -= a;
                        prev[child].0 += e;
                        out.push(self.encode(&prev));
                    }
                }
            }
        }
    }

    /// Whether a complete pebbling exists within `cap` units.
    fn feasible(&self, cap: u32, budget: &Budget) -> Result<bool, SequenceError> {
        let empty_key = self.encode(&vec![(0, 0); self.shape.node_count() + 1]);

        let forward = self.reach(empty_key, cap, budget, false)?;
        let backward = self.reach(empty_key, cap, budget, true)?;

        let d = self.d;
        for key in &forward {
            if !backward.contains(key) {
                continue;
            }
            let config = self.decode(*key);
            if config[1].0 == d {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn reach(
        &self,
        start: u128,
        cap: u32,
        budget: &Budget,
        backward: bool,
    ) -> Result<HashSet<u128>, SequenceError> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        let mut scratch = Vec::new();
        while let Some(key) = queue.pop_front() {
            budget.check_configs(seen.len() as u64)?;
            let config = self.decode(key);
            scratch.clear();
            if backward {
                self.predecessors(&config, cap, &mut scratch);
            } else {
                self.successors(&config, cap, &mut scratch);
            }
            for &next in &scratch {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebbling::pebble;

    #[test]
    fn black_optimum_is_h() {
        let budget = Budget::default();
        for h in 2..=4 {
            assert_eq!(
                optimal_peak(h, PebbleVariant::Black, 1, &budget).unwrap(),
                pebble(h as i64, 1)
            );
        }
    }

    #[test]
    fn whole_bw_optimum_small() {
        let budget = Budget::default();
        assert_eq!(
            optimal_peak(2, PebbleVariant::WholeBw, 1, &budget).unwrap(),
            pebble(2, 1)
        );
        assert_eq!(
            optimal_peak(3, PebbleVariant::WholeBw, 1, &budget).unwrap(),
            pebble(3, 1)
        );
    }

    #[test]
    fn fractional_optimum_small() {
        let budget = Budget::default();
        assert_eq!(
            optimal_peak(2, PebbleVariant::FractionalBw, 2, &budget).unwrap(),
            pebble(2, 1)
        );
        assert_eq!(
            optimal_peak(3, PebbleVariant::FractionalBw, 2, &budget).unwrap(),
            pebble(5, 2)
        );
    }

    #[test]
    fn denominator_is_checked() {
        let budget = Budget::default();
        assert!(matches!(
            optimal_peak(2, PebbleVariant::Black, 2, &budget),
            Err(SequenceError::BadDenominator { .. })
        ));
    }

    #[test]
    fn tight_budget_is_reported() {
        let budget = Budget {
            max_configs: 10,
            ..Budget::default()
        };
        assert!(matches!(
            optimal_peak(4, PebbleVariant::WholeBw, 1, &budget),
            Err(SequenceError::Budget(_))
        ));
    }
}
