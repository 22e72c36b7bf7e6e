//! Removal of unlabelled states.
//!
//! Whenever an edge (labelled or not) enters an unlabelled state, the edge
//! is redirected to the state's out-neighbours, keeping the incoming label.
//! Processing states in reverse topological order makes a single bypass per
//! edge sufficient, including across chains of unlabelled states. The
//! accepted set is unchanged: an unlabelled state relays every computation
//! unconditionally.

use crate::bp::{BpError, BranchingProgram, RawEdge, State, StateId, StateLabel};
use crate::tree::Value;

pub fn eliminate_guess_states(bp: &BranchingProgram) -> Result<BranchingProgram, BpError> {
    // Per state position, its out list after bypassing unlabelled targets.
    let mut rewritten: Vec<Vec<(usize, Option<Value>)>> = vec![Vec::new(); bp.state_count()];
    for &pos in bp.topo_order().iter().rev() {
        let mut out = Vec::new();
        for &eidx in bp.out_edges(pos) {
            let edge = bp.edge(eidx);
            if bp.state(edge.to).label == StateLabel::Guess {
                for &(target, _) in &rewritten[edge.to] {
                    out.push((target, edge.label));
                }
            } else {
                out.push((edge.to, edge.label));
            }
        }
        rewritten[pos] = out;
    }

    let keep: Vec<bool> = bp
        .states()
        .iter()
        .enumerate()
        .map(|(pos, s)| s.label != StateLabel::Guess || pos == bp.start())
        .collect();

    let mut new_ids = vec![StateId::MAX; bp.state_count()];
    let mut states = Vec::new();
    for (pos, state) in bp.states().iter().enumerate() {
        if keep[pos] {
            new_ids[pos] = states.len() as StateId;
            states.push(State {
                id: states.len() as StateId,
                label: state.label.clone(),
                tag: state.tag.clone(),
            });
        }
    }
    let mut edges = Vec::new();
    for (pos, out) in rewritten.iter().enumerate() {
        if !keep[pos] {
            continue;
        }
        for &(target, label) in out {
            debug_assert!(keep[target], "bypassed edges point at labelled states");
            edges.push(RawEdge {
                from: new_ids[pos],
                to: new_ids[target],
                label,
            });
        }
    }
    BranchingProgram::new(
        bp.h(),
        bp.k(),
        bp.variant(),
        bp.problem(),
        new_ids[bp.start()],
        states,
        edges,
    )
}
