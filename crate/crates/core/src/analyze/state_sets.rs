//! Exact per-state input sets.
//!
//! For a state `s`, `F_s` is the set of non-root value tuples of sweep
//! inputs with a consistent path from the start to `s`, and `A_s` those
//! with a consistent start-to-accept path through `s`; `A_s = F_s ∩ B_s`
//! where `B_s` is the backward analogue, because a consistent prefix and a
//! consistent suffix concatenate to a consistent accepting path in an
//! acyclic program.
//!
//! Over the hard input family the edge-consistency predicates touch at most
//! three tuple coordinates, so the sets are computed exactly by a
//! topological sweep on a factored representation: explicit combinations
//! over a small constrained support, times the full alphabet on every other
//! coordinate. Coordinates on which a set factors completely are dropped
//! eagerly, which keeps the supports small on the compiled programs even
//! when the sweep itself is astronomically large.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bp::{BranchingProgram, StateLabel};
use crate::budget::Budget;
use crate::tree::{
    enumerate_all_instances, enumerate_hard_inputs, hard_input_count, TepInstance, Value,
};
use crate::analyze::oracle::sample_instance_tuple;
use crate::analyze::AnalyzeError;

/// Which inputs a computation swept over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweep {
    /// The full hard input family `E` (exact, factored).
    HardInputs,
    /// A seeded uniform sample from `E` (per-instance).
    SampledHardInputs { seed: u64, count: u64 },
    /// Every instance of the problem (per-instance, budget-capped).
    AllInstances,
}

/// Serializable record of the sweep actually used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepDescriptor {
    pub kind: String,
    pub count: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Advances a mixed-radix counter over `[k]`; false when it wraps around.
fn next_combo(values: &mut [Value], k: u32) -> bool {
    for i in (0..values.len()).rev() {
        values[i] += 1;
        if (values[i] as u32) < k {
            return true;
        }
        values[i] = 0;
    }
    false
}

/// A set of `[k]^N` tuples in factored form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredSet {
    k: u32,
    n_nodes: usize,
    /// Constrained non-root node indices, ascending.
    support: Vec<usize>,
    /// Explicit combinations over `support`, in its order.
    tuples: BTreeSet<Vec<Value>>,
}

impl FactoredSet {
    pub fn full(k: u32, n_nodes: usize) -> Self {
        let mut tuples = BTreeSet::new();
        tuples.insert(Vec::new());
        FactoredSet {
            k,
            n_nodes,
            support: Vec::new(),
            tuples,
        }
    }

    pub fn empty(k: u32, n_nodes: usize) -> Self {
        FactoredSet {
            k,
            n_nodes,
            support: Vec::new(),
            tuples: BTreeSet::new(),
        }
    }

    /// Builds an explicit set over the full support.
    pub fn from_tuples(k: u32, n_nodes: usize, tuples: BTreeSet<Vec<Value>>) -> Self {
        let mut set = FactoredSet {
            k,
            n_nodes,
            support: (2..2 + n_nodes).collect(),
            tuples,
        };
        set.canonicalize();
        set
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn cardinality(&self) -> u128 {
        if self.tuples.is_empty() {
            return 0;
        }
        let free = (self.n_nodes - self.support.len()) as u32;
        self.tuples.len() as u128 * (self.k as u128).pow(free)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn explicit_tuples(&self) -> &BTreeSet<Vec<Value>> {
        &self.tuples
    }

    /// Values occurring at a node (node index, not tuple slot).
    pub fn project(&self, node: usize) -> BTreeSet<Value> {
        if self.tuples.is_empty() {
            return BTreeSet::new();
        }
        match self.support.binary_search(&node) {
            Ok(slot) => self.tuples.iter().map(|t| t[slot]).collect(),
            Err(_) => (0..self.k as Value).collect(),
        }
    }

    pub fn contains(&self, full_tuple: &[Value]) -> bool {
        debug_assert_eq!(full_tuple.len(), self.n_nodes);
        let restricted: Vec<Value> = self.support.iter().map(|&n| full_tuple[n - 2]).collect();
        self.tuples.contains(&restricted)
    }

    /// Some member, with free coordinates set to 0.
    pub fn witness(&self) -> Option<Vec<Value>> {
        let first = self.tuples.iter().next()?;
        let mut tuple = vec![0 as Value; self.n_nodes];
        for (slot, &node) in self.support.iter().enumerate() {
            tuple[node - 2] = first[slot];
        }
        Some(tuple)
    }

    /// Every member as a full tuple; respects the tuple budget.
    pub fn materialize(&self, budget: &Budget) -> Result<BTreeSet<Vec<Value>>, AnalyzeError> {
        budget.check_tuples(self.cardinality().min(u64::MAX as u128) as u64)?;
        let mut out = BTreeSet::new();
        let free: Vec<usize> = (2..2 + self.n_nodes)
            .filter(|n| self.support.binary_search(n).is_err())
            .collect();
        for combo in &self.tuples {
            let mut tuple = vec![0 as Value; self.n_nodes];
            for (slot, &node) in self.support.iter().enumerate() {
                tuple[node - 2] = combo[slot];
            }
            let mut values = vec![0 as Value; free.len()];
            loop {
                for (i, &node) in free.iter().enumerate() {
                    tuple[node - 2] = values[i];
                }
                out.insert(tuple.clone());
                if !next_combo(&mut values, self.k) {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Re-expresses the tuples over a superset of the support.
    fn expand(&self, target: &[usize]) -> BTreeSet<Vec<Value>> {
        debug_assert!(self.support.iter().all(|n| target.contains(n)));
        let new_slots: Vec<Option<usize>> = target
            .iter()
            .map(|n| self.support.binary_search(n).ok())
            .collect();
        let fresh: Vec<usize> = (0..target.len()).filter(|&i| new_slots[i].is_none()).collect();
        let mut out = BTreeSet::new();
        for combo in &self.tuples {
            let mut base: Vec<Value> = new_slots
                .iter()
                .map(|slot| slot.map(|s| combo[s]).unwrap_or(0))
                .collect();
            let mut values = vec![0 as Value; fresh.len()];
            loop {
                for (i, &slot) in fresh.iter().enumerate() {
                    base[slot] = values[i];
                }
                out.insert(base.clone());
                if !next_combo(&mut values, self.k) {
                    break;
                }
            }
        }
        out
    }

    fn merged_support(&self, other: &FactoredSet) -> Vec<usize> {
        let mut support: Vec<usize> = self
            .support
            .iter()
            .chain(other.support.iter())
            .copied()
            .collect();
        support.sort_unstable();
        support.dedup();
        support
    }

    pub fn union(&self, other: &FactoredSet) -> FactoredSet {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let support = self.merged_support(other);
        let mut tuples = self.expand(&support);
        tuples.extend(other.expand(&support));
        let mut set = FactoredSet {
            k: self.k,
            n_nodes: self.n_nodes,
            support,
            tuples,
        };
        set.canonicalize();
        set
    }

    pub fn intersect(&self, other: &FactoredSet) -> FactoredSet {
        if self.is_empty() || other.is_empty() {
            return FactoredSet::empty(self.k, self.n_nodes);
        }
        let support = self.merged_support(other);
        let left = self.expand(&support);
        let right = other.expand(&support);
        let tuples: BTreeSet<Vec<Value>> = left.intersection(&right).cloned().collect();
        let mut set = FactoredSet {
            k: self.k,
            n_nodes: self.n_nodes,
            support,
            tuples,
        };
        set.canonicalize();
        set
    }

    /// Intersection with the constraint `pred` over the given nodes.
    pub fn filter_on(&self, nodes: &[usize], pred: impl Fn(&[Value]) -> bool) -> FactoredSet {
        if self.is_empty() {
            return self.clone();
        }
        let mut support: Vec<usize> = self.support.iter().chain(nodes.iter()).copied().collect();
        support.sort_unstable();
        support.dedup();
        let slots: Vec<usize> = nodes
            .iter()
            .map(|n| support.binary_search(n).unwrap())
            .collect();
        let expanded = self.expand(&support);
        let mut scratch = vec![0 as Value; nodes.len()];
        let tuples: BTreeSet<Vec<Value>> = expanded
            .into_iter()
            .filter(|combo| {
                for (i, &slot) in slots.iter().enumerate() {
                    scratch[i] = combo[slot];
                }
                pred(&scratch)
            })
            .collect();
        let mut set = FactoredSet {
            k: self.k,
            n_nodes: self.n_nodes,
            support,
            tuples,
        };
        set.canonicalize();
        set
    }

    /// Drops every coordinate on which the set factors as the full
    /// alphabet.
    fn canonicalize(&mut self) {
        if self.tuples.is_empty() {
            self.support.clear();
            return;
        }
        loop {
            let mut dropped = None;
            for slot in 0..self.support.len() {
                if self.tuples.len() % self.k as usize != 0 {
                    continue;
                }
                let mut groups: BTreeMap<Vec<Value>, u32> = BTreeMap::new();
                for combo in &self.tuples {
                    let mut rest: Vec<Value> = combo.clone();
                    let v = rest.remove(slot);
                    *groups.entry(rest).or_insert(0) |= 1u32 << v.min(31);
                }
                // A coordinate is free iff every residual group carries all
                // k values (k <= 31 handled via the bitmask; larger k falls
                // back to never dropping, which is only a performance loss).
                if self.k <= 31 {
                    let full = (1u32 << self.k) - 1;
                    if groups.values().all(|&m| m == full) {
                        dropped = Some(slot);
                        break;
                    }
                }
            }
            match dropped {
                Some(slot) => {
                    self.support.remove(slot);
                    self.tuples = self
                        .tuples
                        .iter()
                        .map(|combo| {
                            let mut rest = combo.clone();
                            rest.remove(slot);
                            rest
                        })
                        .collect();
                }
                None => break,
            }
        }
    }
}

/// Per-state `F_s` and `A_s` for one sweep.
#[derive(Debug, Clone)]
pub struct StateSets {
    pub descriptor: SweepDescriptor,
    pub k: u32,
    pub n_nodes: usize,
    /// Indexed by state position.
    pub forward: Vec<FactoredSet>,
    pub accepting: Vec<FactoredSet>,
}

impl StateSets {
    pub fn f(&self, pos: usize) -> &FactoredSet {
        &self.forward[pos]
    }

    pub fn a(&self, pos: usize) -> &FactoredSet {
        &self.accepting[pos]
    }
}

/// Consistency constraint of one edge over the hard input family, as a
/// predicate on at most three tuple coordinates.
enum EdgeConstraint {
    Always,
    Never,
    LeafEq { node: usize, value: Value },
    FuncOutcome { node: usize, x: Value, y: Value, v: Value },
}

fn edge_constraint(label: &StateLabel, edge_label: Option<Value>) -> EdgeConstraint {
    match *label {
        StateLabel::Guess => EdgeConstraint::Always,
        StateLabel::Leaf { node } => EdgeConstraint::LeafEq {
            node,
            value: edge_label.expect("query edges are labelled"),
        },
        StateLabel::Func { node, x, y } => {
            let v = edge_label.expect("query edges are labelled");
            if node == 1 {
                // On hard inputs the root table is constantly 1.
                if v == 1 {
                    EdgeConstraint::Always
                } else {
                    EdgeConstraint::Never
                }
            } else {
                EdgeConstraint::FuncOutcome { node, x, y, v }
            }
        }
        StateLabel::Final { .. } | StateLabel::Accept => unreachable!("no out-edges"),
    }
}

fn apply_constraint(set: &FactoredSet, constraint: &EdgeConstraint) -> FactoredSet {
    match *constraint {
        EdgeConstraint::Always => set.clone(),
        EdgeConstraint::Never => FactoredSet::empty(set.k, set.n_nodes),
        EdgeConstraint::LeafEq { node, value } => {
            set.filter_on(&[node], move |vals| vals[0] == value)
        }
        EdgeConstraint::FuncOutcome { node, x, y, v } => {
            let coords = [2 * node, 2 * node + 1, node];
            if v != 0 {
                // Only the correct child pair produces a nonzero value.
                set.filter_on(&coords, move |vals| {
                    vals[0] == x && vals[1] == y && vals[2] == v
                })
            } else {
                // Zero arises off the correct pair, or on it when the free
                // value is itself zero.
                set.filter_on(&coords, move |vals| {
                    !(vals[0] == x && vals[1] == y && vals[2] != 0)
                })
            }
        }
    }
}

/// Exact factored computation over the full hard input family.
fn hard_input_state_sets(
    bp: &BranchingProgram,
    budget: &Budget,
) -> Result<StateSets, AnalyzeError> {
    let k = bp.k();
    let n = bp.shape().non_root_count();

    let mut forward = vec![FactoredSet::empty(k, n); bp.state_count()];
    forward[bp.start()] = FactoredSet::full(k, n);
    for &pos in bp.topo_order() {
        if forward[pos].is_empty() {
            continue;
        }
        let label = &bp.state(pos).label;
        for &eidx in bp.out_edges(pos) {
            let edge = bp.edge(eidx);
            let constraint = edge_constraint(label, edge.label);
            let contribution = apply_constraint(&forward[pos], &constraint);
            if contribution.is_empty() {
                continue;
            }
            forward[edge.to] = forward[edge.to].union(&contribution);
            budget.check_tuples(forward[edge.to].tuples.len() as u64)?;
        }
    }

    let mut backward = vec![FactoredSet::empty(k, n); bp.state_count()];
    if let Some(accept) = bp.accept_position() {
        backward[accept] = FactoredSet::full(k, n);
        for &pos in bp.topo_order().iter().rev() {
            if pos == accept {
                continue;
            }
            let label = &bp.state(pos).label;
            let mut acc = FactoredSet::empty(k, n);
            for &eidx in bp.out_edges(pos) {
                let edge = bp.edge(eidx);
                if backward[edge.to].is_empty() {
                    continue;
                }
                let constraint = edge_constraint(label, edge.label);
                acc = acc.union(&apply_constraint(&backward[edge.to], &constraint));
                budget.check_tuples(acc.tuples.len() as u64)?;
            }
            backward[pos] = acc;
        }
    }

    let accepting = forward
        .iter()
        .zip(backward.iter())
        .map(|(f, b)| f.intersect(b))
        .collect();

    Ok(StateSets {
        descriptor: SweepDescriptor {
            kind: "hard_inputs".into(),
            count: hard_input_count(bp.h(), k).unwrap_or(u128::MAX),
            seed: None,
        },
        k,
        n_nodes: n,
        forward,
        accepting,
    })
}

/// Per-instance fallback used by the sampled and all-instance sweeps.
fn per_instance_state_sets(
    bp: &BranchingProgram,
    instances: impl Iterator<Item = TepInstance>,
    descriptor: SweepDescriptor,
    budget: &Budget,
) -> Result<StateSets, AnalyzeError> {
    let k = bp.k();
    let n = bp.shape().non_root_count();
    let mut forward: Vec<BTreeSet<Vec<Value>>> = vec![BTreeSet::new(); bp.state_count()];
    let mut accepting: Vec<BTreeSet<Vec<Value>>> = vec![BTreeSet::new(); bp.state_count()];
    let mut count: u128 = 0;
    for instance in instances {
        count += 1;
        budget.check_instances(count)?;
        let tuple = instance.evaluate().non_root_tuple();
        let fwd = crate::bp::consistent_forward(bp, &instance);
        let bwd = crate::bp::consistent_backward(bp, &instance);
        for pos in 0..bp.state_count() {
            if fwd[pos] {
                forward[pos].insert(tuple.clone());
                budget.check_tuples(forward[pos].len() as u64)?;
                if bwd[pos] {
                    accepting[pos].insert(tuple.clone());
                }
            }
        }
    }
    let mut descriptor = descriptor;
    descriptor.count = count;
    Ok(StateSets {
        descriptor,
        k,
        n_nodes: n,
        forward: forward
            .into_iter()
            .map(|t| FactoredSet::from_tuples(k, n, t))
            .collect(),
        accepting: accepting
            .into_iter()
            .map(|t| FactoredSet::from_tuples(k, n, t))
            .collect(),
    })
}

/// Computes `F_s` and `A_s` for every state over the declared sweep.
pub fn compute_state_sets(
    bp: &BranchingProgram,
    sweep: &Sweep,
    budget: &Budget,
) -> Result<StateSets, AnalyzeError> {
    match sweep {
        Sweep::HardInputs => hard_input_state_sets(bp, budget),
        Sweep::SampledHardInputs { seed, count } => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let shape = bp.shape();
            let k = bp.k();
            let instances =
                (0..*count).map(move |_| sample_instance_tuple(shape, k, &mut rng));
            per_instance_state_sets(
                bp,
                instances,
                SweepDescriptor {
                    kind: "sampled_hard_inputs".into(),
                    count: *count as u128,
                    seed: Some(*seed),
                },
                budget,
            )
        }
        Sweep::AllInstances => {
            let instances =
                enumerate_all_instances(bp.h(), bp.k(), bp.problem(), budget)?;
            per_instance_state_sets(
                bp,
                instances,
                SweepDescriptor {
                    kind: "all_instances".into(),
                    count: 0,
                    seed: None,
                },
                budget,
            )
        }
    }
}

/// Iterator over the sweep's instances, for per-input analyses.
pub fn sweep_instances(
    bp: &BranchingProgram,
    sweep: &Sweep,
    budget: &Budget,
) -> Result<(SweepDescriptor, Box<dyn Iterator<Item = TepInstance>>), AnalyzeError> {
    let shape = bp.shape();
    let k = bp.k();
    match sweep {
        Sweep::HardInputs => {
            let count = hard_input_count(bp.h(), k).unwrap_or(u128::MAX);
            budget.check_instances(count)?;
            Ok((
                SweepDescriptor {
                    kind: "hard_inputs".into(),
                    count,
                    seed: None,
                },
                Box::new(enumerate_hard_inputs(bp.h(), k)),
            ))
        }
        Sweep::SampledHardInputs { seed, count } => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let count = *count;
            Ok((
                SweepDescriptor {
                    kind: "sampled_hard_inputs".into(),
                    count: count as u128,
                    seed: Some(*seed),
                },
                Box::new((0..count).map(move |_| sample_instance_tuple(shape, k, &mut rng))),
            ))
        }
        Sweep::AllInstances => {
            let iter = enumerate_all_instances(bp.h(), k, bp.problem(), budget)?;
            Ok((
                SweepDescriptor {
                    kind: "all_instances".into(),
                    count: iter.len(),
                    seed: None,
                },
                Box::new(iter),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile_black_to_dtbp, compile_wbw_to_ntbp};
    use crate::pebbling::{generate_black_strategy, generate_ro_wbw_strategy};

    #[test]
    fn factored_set_basics() {
        let full = FactoredSet::full(2, 4);
        assert_eq!(full.cardinality(), 16);
        assert_eq!(full.project(3).len(), 2);

        let constrained = full.filter_on(&[3], |v| v[0] == 1);
        assert_eq!(constrained.cardinality(), 8);
        assert_eq!(
            constrained.project(3).into_iter().collect::<Vec<_>>(),
            vec![1]
        );
        assert_eq!(constrained.project(2).len(), 2);

        let other = full.filter_on(&[3], |v| v[0] == 0);
        let union = constrained.union(&other);
        assert_eq!(union.cardinality(), 16);
        assert!(union.support().is_empty(), "free coordinate not dropped");

        let inter = constrained.intersect(&other);
        assert!(inter.is_empty());
        assert_eq!(inter.cardinality(), 0);
    }

    #[test]
    fn factored_membership_and_materialize() {
        let set = FactoredSet::full(2, 3).filter_on(&[2, 4], |v| v[0] != v[1]);
        assert_eq!(set.cardinality(), 4);
        assert!(set.contains(&[0, 1, 1]));
        assert!(!set.contains(&[0, 1, 0]));
        let all = set.materialize(&Budget::default()).unwrap();
        assert_eq!(all.len(), 4);
        for t in &all {
            assert!(set.contains(t));
        }
    }

    /// The factored sweep must agree exactly with brute-force per-instance
    /// reachability over E.
    fn crosscheck(bp: &BranchingProgram) {
        let budget = Budget::default();
        let sets = compute_state_sets(bp, &Sweep::HardInputs, &budget).unwrap();
        let mut brute_f: Vec<BTreeSet<Vec<Value>>> = vec![BTreeSet::new(); bp.state_count()];
        let mut brute_a: Vec<BTreeSet<Vec<Value>>> = vec![BTreeSet::new(); bp.state_count()];
        for instance in enumerate_hard_inputs(bp.h(), bp.k()) {
            let tuple = instance.evaluate().non_root_tuple();
            let fwd = crate::bp::consistent_forward(bp, &instance);
            let bwd = crate::bp::consistent_backward(bp, &instance);
            for pos in 0..bp.state_count() {
                if fwd[pos] {
                    brute_f[pos].insert(tuple.clone());
                    if bwd[pos] {
                        brute_a[pos].insert(tuple.clone());
                    }
                }
            }
        }
        for pos in 0..bp.state_count() {
            assert_eq!(
                sets.f(pos).materialize(&budget).unwrap(),
                brute_f[pos],
                "F mismatch at state {pos}"
            );
            assert_eq!(
                sets.a(pos).materialize(&budget).unwrap(),
                brute_a[pos],
                "A mismatch at state {pos}"
            );
        }
    }

    #[test]
    fn factored_matches_brute_force_on_compiled_programs() {
        let budget = Budget::default();
        let wbw2 = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        crosscheck(&wbw2);
        let wbw3 = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(3), 2, false, &budget).unwrap();
        crosscheck(&wbw3);
        let black3 = compile_black_to_dtbp(&generate_black_strategy(3), 2, &budget).unwrap();
        crosscheck(&black3);
    }

    #[test]
    fn start_state_sees_every_hard_input() {
        let budget = Budget::default();
        let bp = compile_wbw_to_ntbp(&generate_ro_wbw_strategy(2), 2, false, &budget).unwrap();
        let sets = compute_state_sets(&bp, &Sweep::HardInputs, &budget).unwrap();
        assert_eq!(sets.f(bp.start()).cardinality(), 4); // k^N = 2^2
        // Every state of the pruned compiled program lies on an accepting path.
        for pos in 0..bp.state_count() {
            assert!(sets.a(pos).cardinality() >= 1, "dead state {pos}");
        }
    }
}
