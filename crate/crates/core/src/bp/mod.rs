//! k-way branching programs over tree evaluation instances.
//!
//! A program is a directed acyclic multigraph. Non-final states query a
//! leaf symbol or a single function-table entry and carry edges labelled by
//! the query outcome; guess states are unlabelled and carry unlabelled
//! edges. `BT` programs have a designated accepting state without outgoing
//! edges; `FT` programs end in final states labelled by output values.
//! Size is the number of non-final states.
//!
//! Cyclic graphs are rejected at construction: every construction in scope
//! is layered, and acyclicity is what makes path semantics and the
//! analyzers terminate.

mod io;
mod run;

pub use io::dot_export;
pub use run::{
    accepts, consistent_backward, consistent_forward, enumerate_accepting_paths,
    lex_first_accepting_path, run_deterministic, ComputationPath, PathEnumeration, RunOutcome,
};

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::BudgetError;
use crate::tree::{TepInstance, TepVariant, TreeShape, Value};

pub type StateId = u32;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BpError {
    #[error("duplicate state id {0}")]
    DuplicateStateId(StateId),
    #[error("edge references unknown state id {0}")]
    UnknownState(StateId),
    #[error("start state id {0} not present")]
    UnknownStart(StateId),
    #[error("state graph contains a cycle")]
    Cyclic,
    #[error("state {0} queries node {1} outside the tree")]
    QueryOutOfTree(StateId, usize),
    #[error("state {0} queries f_{1} at values outside [k]")]
    QueryValueOutOfRange(StateId, usize),
    #[error("edge from query state {0} must carry a label")]
    UnlabeledQueryEdge(StateId),
    #[error("edge from guess state {0} must be unlabelled")]
    LabeledGuessEdge(StateId),
    #[error("edge label {label} out of range at state {state}")]
    LabelOutOfRange { state: StateId, label: Value },
    #[error("final or accepting state {0} has outgoing edges")]
    EdgeFromFinal(StateId),
    #[error("accepting states belong to BT programs only")]
    AcceptInFt,
    #[error("program is not deterministic: {0}")]
    NotDeterministic(String),
    #[error("no edge for outcome {value} at state {state}")]
    MissingEdge { state: StateId, value: Value },
    #[error("program solves ({h},{k}) but instance is ({ih},{ik})")]
    ParamMismatch { h: u32, k: u32, ih: u32, ik: u32 },
    #[error("deterministic run ended in a non-final state {0}")]
    DeadEnd(StateId),
    #[error("program parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BpVariant {
    #[serde(rename = "deterministic")]
    Deterministic,
    #[serde(rename = "nondeterministic")]
    Nondeterministic,
}

/// State label: what the state asks about the instance, or how it ends the
/// computation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Query the symbol of a leaf node.
    Leaf { node: usize },
    /// Query one entry `f_node(x, y)` of an internal node's table.
    Func { node: usize, x: Value, y: Value },
    /// Unlabelled state (guess or forget); every out-edge is consistent.
    Guess,
    /// Output state labelled with a value; `BT` uses `Final(0)` as the
    /// explicit reject sink of deterministic programs.
    Final { value: u32 },
    /// The designated accepting state of a `BT` program.
    Accept,
}

impl StateLabel {
    pub fn is_terminal(&self) -> bool {
        matches!(self, StateLabel::Final { .. } | StateLabel::Accept)
    }

    pub fn is_query(&self) -> bool {
        matches!(self, StateLabel::Leaf { .. } | StateLabel::Func { .. })
    }

    /// The tree node this state queries, if any.
    pub fn queried_node(&self) -> Option<usize> {
        match self {
            StateLabel::Leaf { node } | StateLabel::Func { node, .. } => Some(*node),
            _ => None,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Leaf { node } => write!(f, "l{node}"),
            StateLabel::Func { node, x, y } => write!(f, "f{node}({x},{y})"),
            StateLabel::Guess => write!(f, "guess"),
            StateLabel::Final { value } => write!(f, "out:{value}"),
            StateLabel::Accept => write!(f, "accept"),
        }
    }
}

/// Provenance tag attached by compilers; analyzers never read it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTag {
    pub layer: usize,
    /// Whole-value tags: node -> known value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<usize, Value>,
    /// Bit-level tags: node -> (bit mask, bit values) under the encoding.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bits: BTreeMap<usize, (u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub id: StateId,
    pub label: StateLabel,
    pub tag: Option<StateTag>,
}

/// Directed edge between state positions (not ids).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: Option<Value>,
}

/// Edge endpoints by public state id, used at the construction boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEdge {
    pub from: StateId,
    pub to: StateId,
    pub label: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingProgram {
    h: u32,
    k: u32,
    variant: BpVariant,
    problem: TepVariant,
    start: usize,
    states: Vec<State>,
    edges: Vec<Edge>,
    /// Per state position, its out-edge indices in file order. The second
    /// component of a path step ("edge index") is a position in this list.
    out: Vec<Vec<usize>>,
    /// State positions in topological order.
    topo: Vec<usize>,
}

impl BranchingProgram {
    pub fn new(
        h: u32,
        k: u32,
        variant: BpVariant,
        problem: TepVariant,
        start: StateId,
        states: Vec<State>,
        raw_edges: Vec<RawEdge>,
    ) -> Result<Self, BpError> {
        let shape = TreeShape::new(h).map_err(|e| BpError::Parse(e.to_string()))?;
        let mut index: HashMap<StateId, usize> = HashMap::with_capacity(states.len());
        for (pos, state) in states.iter().enumerate() {
            if index.insert(state.id, pos).is_some() {
                return Err(BpError::DuplicateStateId(state.id));
            }
        }
        let start = *index.get(&start).ok_or(BpError::UnknownStart(start))?;

        for state in &states {
            match state.label {
                StateLabel::Leaf { node } => {
                    if !shape.contains(node) || !shape.is_leaf(node) {
                        return Err(BpError::QueryOutOfTree(state.id, node));
                    }
                }
                StateLabel::Func { node, x, y } => {
                    if !shape.contains(node) || shape.is_leaf(node) {
                        return Err(BpError::QueryOutOfTree(state.id, node));
                    }
                    if x as u32 >= k || y as u32 >= k {
                        return Err(BpError::QueryValueOutOfRange(state.id, node));
                    }
                }
                StateLabel::Accept => {
                    if problem == TepVariant::Ft {
                        return Err(BpError::AcceptInFt);
                    }
                }
                _ => {}
            }
        }

        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut out = vec![Vec::new(); states.len()];
        for raw in &raw_edges {
            let from = *index.get(&raw.from).ok_or(BpError::UnknownState(raw.from))?;
            let to = *index.get(&raw.to).ok_or(BpError::UnknownState(raw.to))?;
            let state = &states[from];
            match state.label {
                StateLabel::Leaf { .. } | StateLabel::Func { node: _, .. } => {
                    let label = raw.label.ok_or(BpError::UnlabeledQueryEdge(state.id))?;
                    let bound = match state.label {
                        // BT root queries answer in {0,1}.
                        StateLabel::Func { node: 1, .. } if problem == TepVariant::Bt => 2,
                        _ => k,
                    };
                    if label as u32 >= bound {
                        return Err(BpError::LabelOutOfRange {
                            state: state.id,
                            label,
                        });
                    }
                }
                StateLabel::Guess => {
                    if raw.label.is_some() {
                        return Err(BpError::LabeledGuessEdge(state.id));
                    }
                }
                StateLabel::Final { .. } | StateLabel::Accept => {
                    return Err(BpError::EdgeFromFinal(state.id));
                }
            }
            out[from].push(edges.len());
            edges.push(Edge {
                from,
                to,
                label: raw.label,
            });
        }

        // Kahn toposort; rejects cycles.
        let mut indegree = vec![0usize; states.len()];
        for e in &edges {
            indegree[e.to] += 1;
        }
        let mut queue: Vec<usize> = (0..states.len()).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(states.len());
        while let Some(i) = queue.pop() {
            topo.push(i);
            for &eidx in &out[i] {
                let to = edges[eidx].to;
                indegree[to] -= 1;
                if indegree[to] == 0 {
                    queue.push(to);
                }
            }
        }
        if topo.len() != states.len() {
            return Err(BpError::Cyclic);
        }

        let bp = BranchingProgram {
            h,
            k,
            variant,
            problem,
            start,
            states,
            edges,
            out,
            topo,
        };
        if variant == BpVariant::Deterministic {
            bp.check_deterministic()?;
        }
        Ok(bp)
    }

    fn check_deterministic(&self) -> Result<(), BpError> {
        for (pos, state) in self.states.iter().enumerate() {
            match state.label {
                StateLabel::Guess => {
                    return Err(BpError::NotDeterministic(format!(
                        "guess state {}",
                        state.id
                    )))
                }
                StateLabel::Leaf { .. } | StateLabel::Func { .. } => {
                    let expected: u32 = match state.label {
                        StateLabel::Func { node: 1, .. } if self.problem == TepVariant::Bt => 2,
                        _ => self.k,
                    };
                    let mut seen = vec![false; expected as usize];
                    for &eidx in &self.out[pos] {
                        let label = self.edges[eidx].label.unwrap() as usize;
                        if seen[label] {
                            return Err(BpError::NotDeterministic(format!(
                                "state {} has two edges labelled {label}",
                                state.id
                            )));
                        }
                        seen[label] = true;
                    }
                    if !seen.iter().all(|&s| s) {
                        return Err(BpError::NotDeterministic(format!(
                            "state {} is missing an outcome edge",
                            state.id
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape::new(self.h).expect("validated at construction")
    }

    pub fn variant(&self) -> BpVariant {
        self.variant
    }

    pub fn problem(&self) -> TepVariant {
        self.problem
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, pos: usize) -> &State {
        &self.states[pos]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Edge {
        self.edges[idx]
    }

    pub fn out_edges(&self, pos: usize) -> &[usize] {
        &self.out[pos]
    }

    /// State positions in topological order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Position of the accepting state, if any.
    pub fn accept_position(&self) -> Option<usize> {
        self.states
            .iter()
            .position(|s| s.label == StateLabel::Accept)
    }

    /// Number of non-final states.
    pub fn size(&self) -> usize {
        self.states.iter().filter(|s| !s.label.is_terminal()).count()
    }

    pub fn check_instance(&self, instance: &TepInstance) -> Result<(), BpError> {
        if instance.shape().height() != self.h || instance.k() != self.k {
            return Err(BpError::ParamMismatch {
                h: self.h,
                k: self.k,
                ih: instance.shape().height(),
                ik: instance.k(),
            });
        }
        Ok(())
    }

    /// The value the instance assigns to a query label; `None` for
    /// non-query labels.
    pub fn answer(&self, label: &StateLabel, instance: &TepInstance) -> Option<Value> {
        match *label {
            StateLabel::Leaf { node } => Some(instance.leaf_value(node)),
            StateLabel::Func { node, x, y } => Some(instance.func_value(node, x, y)),
            _ => None,
        }
    }

    /// Whether the edge is consistent with the instance at its source.
    pub fn edge_consistent(&self, eidx: usize, instance: &TepInstance) -> bool {
        let edge = self.edges[eidx];
        match self.answer(&self.states[edge.from].label, instance) {
            Some(answer) => edge.label == Some(answer),
            None => true, // guess edges are always consistent
        }
    }

    /// Keeps only the states in `keep` (by position), preserving order and
    /// renumbering ids to 0..n in that order.
    pub fn restrict_to(&self, keep: &[bool]) -> Result<BranchingProgram, BpError> {
        debug_assert!(keep[self.start], "start state must be kept");
        let mut new_ids: HashMap<usize, StateId> = HashMap::new();
        let mut states = Vec::new();
        for (pos, state) in self.states.iter().enumerate() {
            if keep[pos] {
                let id = states.len() as StateId;
                new_ids.insert(pos, id);
                states.push(State {
                    id,
                    label: state.label.clone(),
                    tag: state.tag.clone(),
                });
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.from] && keep[e.to])
            .map(|e| RawEdge {
                from: new_ids[&e.from],
                to: new_ids[&e.to],
                label: e.label,
            })
            .collect();
        BranchingProgram::new(
            self.h,
            self.k,
            self.variant,
            self.problem,
            new_ids[&self.start],
            states,
            edges,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_state(id: StateId, node: usize) -> State {
        State {
            id,
            label: StateLabel::Leaf { node },
            tag: None,
        }
    }

    fn accept_state(id: StateId) -> State {
        State {
            id,
            label: StateLabel::Accept,
            tag: None,
        }
    }

    #[test]
    fn cycles_are_rejected() {
        let states = vec![leaf_state(0, 2), leaf_state(1, 3), accept_state(2)];
        let edges = vec![
            RawEdge {
                from: 0,
                to: 1,
                label: Some(0),
            },
            RawEdge {
                from: 1,
                to: 0,
                label: Some(0),
            },
        ];
        let err = BranchingProgram::new(
            2,
            2,
            BpVariant::Nondeterministic,
            TepVariant::Bt,
            0,
            states,
            edges,
        )
        .unwrap_err();
        assert_eq!(err, BpError::Cyclic);
    }

    #[test]
    fn query_edges_must_be_labelled() {
        let states = vec![leaf_state(0, 2), accept_state(1)];
        let edges = vec![RawEdge {
            from: 0,
            to: 1,
            label: None,
        }];
        let err = BranchingProgram::new(
            2,
            2,
            BpVariant::Nondeterministic,
            TepVariant::Bt,
            0,
            states,
            edges,
        )
        .unwrap_err();
        assert_eq!(err, BpError::UnlabeledQueryEdge(0));
    }

    #[test]
    fn size_counts_non_final_states() {
        let states = vec![
            leaf_state(0, 2),
            accept_state(1),
            State {
                id: 2,
                label: StateLabel::Final { value: 0 },
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
                from: 0,
                to: 2,
                label: Some(0),
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
        assert_eq!(bp.size(), 1);
        assert_eq!(bp.state_count(), 3);
    }
}
