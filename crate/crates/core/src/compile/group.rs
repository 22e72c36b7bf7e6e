//! Layered program for single-function instances whose shared operation is
//! a group operation.
//!
//! Associativity lets the program evaluate the root value as the
//! left-associative product of the leaves, carrying only the running
//! product between layers. With a fixed operation the program queries the
//! leaves left to right (width k); when the operation is part of the input
//! it additionally queries one table entry per step (width k^2).

use crate::bp::{BpError, BpVariant, BranchingProgram, RawEdge, State, StateId, StateLabel};
use crate::tree::{FuncTable, TepVariant, TreeShape, Value};

use super::CompileError;

/// Checks the table is a group operation: associative, with identity and
/// inverses.
pub fn check_group(table: &FuncTable) -> Result<(), CompileError> {
    let k = table.k() as Value;
    let identity = (0..k)
        .find(|&e| (0..k).all(|x| table.get(e, x) == x && table.get(x, e) == x))
        .ok_or(CompileError::NotAGroup("no identity element"))?;
    for x in 0..k {
        for y in 0..k {
            for z in 0..k {
                if table.get(table.get(x, y), z) != table.get(x, table.get(y, z)) {
                    return Err(CompileError::NotAGroup("operation is not associative"));
                }
            }
        }
    }
    for x in 0..k {
        if !(0..k).any(|y| table.get(x, y) == identity) {
            return Err(CompileError::NotAGroup("missing inverse"));
        }
    }
    Ok(())
}

/// Builds the layered deterministic program computing the root value of
/// single-function instances over the given group operation, reading the
/// leaves left to right.
pub fn compile_group_sft(
    h: u32,
    k: u32,
    table: &FuncTable,
    fixed: bool,
) -> Result<BranchingProgram, CompileError> {
    check_group(table)?;
    if table.k() != k {
        return Err(CompileError::NotAGroup("table alphabet differs from k"));
    }
    let shape =
        TreeShape::new(h).map_err(|e| CompileError::Bp(BpError::Parse(e.to_string())))?;
    let leaves: Vec<usize> = shape.leaves().collect();

    let mut states: Vec<State> = Vec::new();
    let mut edges: Vec<RawEdge> = Vec::new();
    let mut fresh = |label: StateLabel, states: &mut Vec<State>| -> StateId {
        let id = states.len() as StateId;
        states.push(State {
            id,
            label,
            tag: None,
        });
        id
    };

    // After reading the first leaf the carry is the leaf value itself.
    let start = fresh(StateLabel::Leaf { node: leaves[0] }, &mut states);
    // Edges waiting for the next layer: (from, outcome label, next carry).
    let mut pending: Vec<(StateId, Value, Value)> = (0..k as Value)
        .map(|v| (start, v, v))
        .collect();

    for &leaf in &leaves[1..] {
        let carry_states: Vec<StateId> = (0..k)
            .map(|_| fresh(StateLabel::Leaf { node: leaf }, &mut states))
            .collect();
        for (from, label, carry) in pending.drain(..) {
            edges.push(RawEdge {
                from,
                to: carry_states[carry as usize],
                label: Some(label),
            });
        }
        if fixed {
            for r in 0..k as Value {
                for x in 0..k as Value {
                    pending.push((carry_states[r as usize], x, table.get(r, x)));
                }
            }
        } else {
            // The operation is part of the input: query f(r, x) before
            // moving to the next carry.
            for r in 0..k as Value {
                for x in 0..k as Value {
                    let q = fresh(StateLabel::Func { node: 1, x: r, y: x }, &mut states);
                    edges.push(RawEdge {
                        from: carry_states[r as usize],
                        to: q,
                        label: Some(x),
                    });
                    for v in 0..k as Value {
                        pending.push((q, v, v));
                    }
                }
            }
        }
    }

    let finals: Vec<StateId> = (0..k)
        .map(|v| fresh(StateLabel::Final { value: v }, &mut states))
        .collect();
    for (from, label, carry) in pending {
        edges.push(RawEdge {
            from,
            to: finals[carry as usize],
            label: Some(label),
        });
    }

    Ok(BranchingProgram::new(
        h,
        k,
        BpVariant::Deterministic,
        TepVariant::Ft,
        start,
        states,
        edges,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::run_deterministic;
    use crate::tree::{TepInstance, TepVariant};

    /// All single-function instances with the given shared table.
    fn sft_instances(h: u32, k: u32, table: &FuncTable) -> Vec<TepInstance> {
        let shape = TreeShape::new(h).unwrap();
        let leaf_count = shape.leaves().count();
        let total = (k as u64).pow(leaf_count as u32);
        (0..total)
            .map(|mut idx| {
                let mut leaves = vec![0 as Value; leaf_count];
                for v in leaves.iter_mut().rev() {
                    *v = (idx % k as u64) as Value;
                    idx /= k as u64;
                }
                let tables = vec![table.clone(); shape.internal_nodes().count()];
                TepInstance::new(shape, k, TepVariant::Ft, leaves, tables).unwrap()
            })
            .collect()
    }

    #[test]
    fn xor_h3_is_exhaustively_correct_and_small() {
        let table = FuncTable::xor(2);
        let bp = compile_group_sft(3, 2, &table, true).unwrap();
        assert!(bp.size() <= 16, "size {}", bp.size());
        assert!(bp.size() >= 4);
        for instance in sft_instances(3, 2, &table) {
            let (outcome, _) = run_deterministic(&bp, &instance).unwrap();
            assert_eq!(
                outcome,
                crate::bp::RunOutcome::Final(instance.evaluate().root() as u32)
            );
        }
    }

    #[test]
    fn queried_variant_is_correct_for_cyclic_groups() {
        for k in [2u32, 3] {
            let table = FuncTable::modular_addition(k);
            let bp = compile_group_sft(3, k, &table, false).unwrap();
            for instance in sft_instances(3, k, &table) {
                let (outcome, _) = run_deterministic(&bp, &instance).unwrap();
                assert_eq!(
                    outcome,
                    crate::bp::RunOutcome::Final(instance.evaluate().root() as u32)
                );
            }
        }
    }

    #[test]
    fn group_size_bounds() {
        for h in [3u32, 4, 5] {
            for k in [2u32, 3, 4] {
                let table = FuncTable::modular_addition(k);
                let bp = compile_group_sft(h, k, &table, true).unwrap();
                let size = bp.size() as u64;
                let lo = (1u64 << (h - 2)) * k as u64;
                let hi = (1u64 << h) * k as u64;
                assert!(size >= lo && size <= hi, "h={h} k={k}: {size}");
                let queried = compile_group_sft(h, k, &table, false).unwrap();
                assert!(queried.size() as u64 <= (1u64 << h) * (k as u64) * (k as u64));
            }
        }
    }

    #[test]
    fn non_groups_are_rejected() {
        // AND is associative but has no inverses.
        let mut and = FuncTable::constant(2, 0);
        and.set(1, 1, 1);
        assert!(matches!(
            compile_group_sft(3, 2, &and, true),
            Err(CompileError::NotAGroup(_))
        ));
        // A non-associative table with an identity.
        let mut t = FuncTable::modular_addition(3);
        t.set(1, 1, 1);
        assert!(matches!(
            compile_group_sft(3, 3, &t, true),
            Err(CompileError::NotAGroup(_))
        ));
    }
}
