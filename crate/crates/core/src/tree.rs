//! Instances of the tree evaluation problem.
//!
//! A height-`h` complete binary tree is numbered heap-style: the root is
//! node 1, node `i` has children `2i` and `2i+1`, and the leaves are
//! `2^(h-1) .. 2^h - 1`. Each leaf carries a value in `[k]`, each internal
//! node a total function `[k] x [k] -> [k]`. The function version `FT` asks
//! for the root value; the boolean version `BT` restricts the root function
//! to `{0,1}` and asks whether the root evaluates to 1.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Budget, BudgetError};

/// A single k-ary value.
pub type Value = u16;

/// Alphabet sizes above this would need function tables too large to store
/// densely; desk-scale checks never get near it.
pub const MAX_K: u32 = 1 << 16;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree height must be at least 2, got {0}")]
    HeightTooSmall(u32),
    #[error("alphabet size must be in 2..={MAX_K}, got {0}")]
    AlphabetOutOfRange(u32),
    #[error("node index {index} out of range 1..={max}")]
    NodeOutOfRange { index: usize, max: usize },
    #[error("value {value} out of range for k={k}")]
    ValueOutOfRange { value: Value, k: u32 },
    #[error("expected {expected} leaf values, got {got}")]
    LeafCountMismatch { expected: usize, got: usize },
    #[error("missing function table for internal node {0}")]
    MissingTable(usize),
    #[error("function table for node {node} has wrong shape for k={k}")]
    TableShape { node: usize, k: u32 },
    #[error("BT instance requires root table entries in {{0,1}}, found {0}")]
    RootNotBoolean(Value),
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

/// Function version (root value in `[k]`) or boolean version (root value in
/// `{0,1}`). `BT` is `FT` plus an output-range invariant on the root table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TepVariant {
    #[serde(rename = "FT")]
    Ft,
    #[serde(rename = "BT")]
    Bt,
}

impl fmt::Display for TepVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TepVariant::Ft => write!(f, "FT"),
            TepVariant::Bt => write!(f, "BT"),
        }
    }
}

/// Shape of the complete binary tree of height `h` in heap numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeShape {
    h: u32,
}

/// Parent, children and sibling of a node, with `None` at the boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRelations {
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
    pub sibling: Option<usize>,
}

impl TreeShape {
    pub fn new(h: u32) -> Result<Self, TreeError> {
        if h < 2 {
            return Err(TreeError::HeightTooSmall(h));
        }
        Ok(TreeShape { h })
    }

    pub fn height(&self) -> u32 {
        self.h
    }

    /// Total number of nodes, `2^h - 1`.
    pub fn node_count(&self) -> usize {
        (1usize << self.h) - 1
    }

    /// Number of non-root nodes, `N = 2^h - 2`.
    pub fn non_root_count(&self) -> usize {
        (1usize << self.h) - 2
    }

    /// Index of the leftmost leaf, `2^(h-1)`.
    pub fn first_leaf(&self) -> usize {
        1usize << (self.h - 1)
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        i >= self.first_leaf()
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= 1 && i <= self.node_count()
    }

    /// All nodes, root first.
    pub fn nodes(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.node_count()
    }

    /// Internal nodes `1 .. 2^(h-1)`.
    pub fn internal_nodes(&self) -> std::ops::Range<usize> {
        1..self.first_leaf()
    }

    /// Leaf nodes `2^(h-1) .. 2^h - 1`.
    pub fn leaves(&self) -> std::ops::RangeInclusive<usize> {
        self.first_leaf()..=self.node_count()
    }

    /// Non-root nodes `2 ..= 2^h - 1` in index order; the tuple order used
    /// everywhere for state sets and hard-input enumeration.
    pub fn non_root_nodes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.node_count()
    }

    fn check_node(&self, i: usize) -> Result<(), TreeError> {
        if !self.contains(i) {
            return Err(TreeError::NodeOutOfRange {
                index: i,
                max: self.node_count(),
            });
        }
        Ok(())
    }
}

/// Heap-arithmetic relations of node `i`: parent `floor(i/2)`, children
/// `(2i, 2i+1)` for internal nodes.
pub fn node_relations(shape: TreeShape, i: usize) -> Result<NodeRelations, TreeError> {
    shape.check_node(i)?;
    let parent = if i > 1 { Some(i / 2) } else { None };
    let children = if shape.is_leaf(i) {
        None
    } else {
        Some((2 * i, 2 * i + 1))
    };
    let sibling = if i > 1 { Some(i ^ 1) } else { None };
    Ok(NodeRelations {
        parent,
        children,
        sibling,
    })
}

/// Dense total function `[k] x [k] -> [k]`, row-major in the first argument.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuncTable {
    k: u32,
    entries: Vec<Value>,
}

impl FuncTable {
    pub fn new(k: u32, entries: Vec<Value>) -> Result<Self, TreeError> {
        if entries.len() != (k as usize) * (k as usize) {
            return Err(TreeError::TableShape { node: 0, k });
        }
        for &v in &entries {
            if v as u32 >= k {
                return Err(TreeError::ValueOutOfRange { value: v, k });
            }
        }
        Ok(FuncTable { k, entries })
    }

    pub fn constant(k: u32, v: Value) -> Self {
        FuncTable {
            k,
            entries: vec![v; (k as usize) * (k as usize)],
        }
    }

    /// Table of `(x, y) -> (x + y) mod k`; the canonical group operation.
    pub fn modular_addition(k: u32) -> Self {
        let mut entries = Vec::with_capacity((k as usize) * (k as usize));
        for x in 0..k {
            for y in 0..k {
                entries.push(((x + y) % k) as Value);
            }
        }
        FuncTable { k, entries }
    }

    /// Table of `(x, y) -> x XOR y`; requires `k` to be a power of two.
    pub fn xor(k: u32) -> Self {
        debug_assert!(k.is_power_of_two());
        let mut entries = Vec::with_capacity((k as usize) * (k as usize));
        for x in 0..k {
            for y in 0..k {
                entries.push((x ^ y) as Value);
            }
        }
        FuncTable { k, entries }
    }

    pub fn get(&self, x: Value, y: Value) -> Value {
        self.entries[(x as usize) * (self.k as usize) + y as usize]
    }

    pub fn set(&mut self, x: Value, y: Value, v: Value) {
        self.entries[(x as usize) * (self.k as usize) + y as usize] = v;
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn entries(&self) -> &[Value] {
        &self.entries
    }
}

/// One instance of the tree evaluation problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TepInstance {
    shape: TreeShape,
    k: u32,
    variant: TepVariant,
    /// Leaf values in heap order; leaf `i` is at `i - first_leaf`.
    leaves: Vec<Value>,
    /// Function tables in heap order; internal node `i` is at `i - 1`.
    tables: Vec<FuncTable>,
}

/// All node values of an evaluated instance; `values[i]` is `v_i`
/// (index 0 unused).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeValues {
    values: Vec<Value>,
}

impl NodeValues {
    pub fn get(&self, i: usize) -> Value {
        self.values[i]
    }

    pub fn root(&self) -> Value {
        self.values[1]
    }

    /// The non-root tuple `(v_2, .., v_{N+1})` in node order.
    pub fn non_root_tuple(&self) -> Vec<Value> {
        self.values[2..].to_vec()
    }
}

impl TepInstance {
    pub fn new(
        shape: TreeShape,
        k: u32,
        variant: TepVariant,
        leaves: Vec<Value>,
        tables: Vec<FuncTable>,
    ) -> Result<Self, TreeError> {
        if k < 2 || k > MAX_K {
            return Err(TreeError::AlphabetOutOfRange(k));
        }
        let leaf_count = shape.node_count() - shape.first_leaf() + 1;
        if leaves.len() != leaf_count {
            return Err(TreeError::LeafCountMismatch {
                expected: leaf_count,
                got: leaves.len(),
            });
        }
        for &v in &leaves {
            if v as u32 >= k {
                return Err(TreeError::ValueOutOfRange { value: v, k });
            }
        }
        if tables.len() != shape.first_leaf() - 1 {
            return Err(TreeError::MissingTable(tables.len() + 1));
        }
        for (idx, t) in tables.iter().enumerate() {
            if t.k != k {
                return Err(TreeError::TableShape { node: idx + 1, k });
            }
        }
        if variant == TepVariant::Bt {
            for &v in tables[0].entries() {
                if v > 1 {
                    return Err(TreeError::RootNotBoolean(v));
                }
            }
        }
        Ok(TepInstance {
            shape,
            k,
            variant,
            leaves,
            tables,
        })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn variant(&self) -> TepVariant {
        self.variant
    }

    pub fn leaf_value(&self, i: usize) -> Value {
        debug_assert!(self.shape.is_leaf(i));
        self.leaves[i - self.shape.first_leaf()]
    }

    pub fn table(&self, i: usize) -> &FuncTable {
        debug_assert!(!self.shape.is_leaf(i));
        &self.tables[i - 1]
    }

    pub fn func_value(&self, i: usize, x: Value, y: Value) -> Value {
        self.table(i).get(x, y)
    }

    /// Bottom-up evaluation of every node value.
    pub fn evaluate(&self) -> NodeValues {
        let count = self.shape.node_count();
        let mut values = vec![0 as Value; count + 1];
        for i in (1..=count).rev() {
            values[i] = if self.shape.is_leaf(i) {
                self.leaf_value(i)
            } else {
                self.func_value(i, values[2 * i], values[2 * i + 1])
            };
        }
        NodeValues { values }
    }

    /// Whether the instance is a "yes" instance (root evaluates to 1).
    pub fn is_yes(&self) -> bool {
        self.evaluate().root() == 1
    }
}

// ---------------------------------------------------------------------------
// Hard input family E

/// Number of hard inputs, `k^N`; `None` on overflow.
pub fn hard_input_count(h: u32, k: u32) -> Option<u128> {
    let n = (1u32 << h) - 2;
    (k as u128).checked_pow(n)
}

/// Decodes the index-th free-value tuple in the canonical enumeration
/// order: lexicographic over `(t_2, .., t_{N+1})` with node 2 most
/// significant.
pub fn hard_tuple_from_index(h: u32, k: u32, mut index: u128) -> Vec<Value> {
    let n = (1usize << h) - 2;
    let mut tuple = vec![0 as Value; n];
    for slot in (0..n).rev() {
        tuple[slot] = (index % k as u128) as Value;
        index /= k as u128;
    }
    tuple
}

/// Builds the member of `E` with the given free values. `tuple[j]` is the
/// value of node `j + 2`: the leaf symbol for leaves, and the single
/// nonzero table entry (at the correct child pair) for internal nodes. The
/// root function is constantly 1, other entries are 0.
pub fn hard_input_from_tuple(shape: TreeShape, k: u32, tuple: &[Value]) -> TepInstance {
    debug_assert_eq!(tuple.len(), shape.non_root_count());
    let value = |node: usize| tuple[node - 2];
    let leaves: Vec<Value> = shape.leaves().map(value).collect();
    let mut tables = vec![FuncTable::constant(k, 1)];
    for i in shape.internal_nodes().skip(1) {
        let mut t = FuncTable::constant(k, 0);
        t.set(value(2 * i), value(2 * i + 1), value(i));
        tables.push(t);
    }
    TepInstance::new(shape, k, TepVariant::Bt, leaves, tables)
        .expect("hard inputs are well-formed by construction")
}

/// Streams the hard input set `E` in the canonical order.
pub fn enumerate_hard_inputs(h: u32, k: u32) -> impl Iterator<Item = TepInstance> {
    let shape = TreeShape::new(h).expect("h >= 2");
    let count = hard_input_count(h, k).expect("hard input count overflow");
    (0..count).map(move |idx| {
        let tuple = hard_tuple_from_index(h, k, idx);
        hard_input_from_tuple(shape, k, &tuple)
    })
}

// ---------------------------------------------------------------------------
// Exhaustive instance enumeration (correctness oracle)

/// Number of instances of `FT/BT(h,2,k)`; `None` on overflow.
pub fn instance_count(h: u32, k: u32, variant: TepVariant) -> Option<u128> {
    let shape = TreeShape::new(h).ok()?;
    let leaf_digits = shape.leaves().count() as u32;
    let table_entries = (k as u128).checked_mul(k as u128)?;
    if table_entries > u32::MAX as u128 {
        return None;
    }
    let table_entries = table_entries as u32;
    let internal = shape.internal_nodes().count() as u32;

    let root_base: u128 = match variant {
        TepVariant::Bt => 2,
        TepVariant::Ft => k as u128,
    };
    let mut total = root_base.checked_pow(table_entries)?;
    for _ in 1..internal {
        total = total.checked_mul((k as u128).checked_pow(table_entries)?)?;
    }
    total.checked_mul((k as u128).checked_pow(leaf_digits)?)
}

/// Streams every instance of `FT/BT(h,2,k)` exactly once.
///
/// The order is lexicographic over the digit string formed by the leaf
/// values in heap order followed by the table entries of each internal node
/// in heap order (row-major in the first argument); the first digit is most
/// significant. Root table digits range over `{0,1}` for `BT` and `[k]`
/// for `FT`.
pub fn enumerate_all_instances(
    h: u32,
    k: u32,
    variant: TepVariant,
    budget: &Budget,
) -> Result<AllInstances, TreeError> {
    let shape = TreeShape::new(h)?;
    if k < 2 || k > MAX_K {
        return Err(TreeError::AlphabetOutOfRange(k));
    }
    let count = instance_count(h, k, variant).unwrap_or(u128::MAX);
    budget.check_instances(count)?;
    Ok(AllInstances {
        shape,
        k,
        variant,
        next: 0,
        count,
    })
}

#[derive(Debug)]
pub struct AllInstances {
    shape: TreeShape,
    k: u32,
    variant: TepVariant,
    next: u128,
    count: u128,
}

impl AllInstances {
    pub fn len(&self) -> u128 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Decodes the instance at a given position in the documented order.
    pub fn instance_at(&self, mut index: u128) -> TepInstance {
        let shape = self.shape;
        let k = self.k as u128;
        let table_len = (self.k as usize) * (self.k as usize);
        let internal = shape.internal_nodes().count();
        let leaf_count = shape.leaves().count();

        // Digits are decoded least significant first, i.e. starting from
        // the last table entry of the last internal node.
        let mut tables_rev: Vec<FuncTable> = Vec::with_capacity(internal);
        for node in shape.internal_nodes().rev() {
            let base = if node == 1 && self.variant == TepVariant::Bt {
                2u128
            } else {
                k
            };
            let mut entries = vec![0 as Value; table_len];
            for e in entries.iter_mut().rev() {
                *e = (index % base) as Value;
                index /= base;
            }
            tables_rev.push(FuncTable {
                k: self.k,
                entries,
            });
        }
        tables_rev.reverse();

        let mut leaves = vec![0 as Value; leaf_count];
        for v in leaves.iter_mut().rev() {
            *v = (index % k) as Value;
            index /= k;
        }

        TepInstance::new(shape, self.k, self.variant, leaves, tables_rev)
            .expect("enumerated instances are well-formed")
    }
}

impl Iterator for AllInstances {
    type Item = TepInstance;

    fn next(&mut self) -> Option<TepInstance> {
        if self.next >= self.count {
            return None;
        }
        let inst = self.instance_at(self.next);
        self.next += 1;
        Some(inst)
    }
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    h: u32,
    k: u32,
    leaves: Vec<Value>,
    tables: BTreeMap<String, Vec<Vec<Value>>>,
    variant: TepVariant,
}

impl TepInstance {
    /// Canonical JSON: fields in a fixed order, table keys sorted
    /// lexicographically, integers only.
    pub fn to_canonical_json(&self) -> String {
        let mut tables = BTreeMap::new();
        for i in self.shape.internal_nodes() {
            let t = self.table(i);
            let rows: Vec<Vec<Value>> = (0..self.k)
                .map(|x| (0..self.k).map(|y| t.get(x as Value, y as Value)).collect())
                .collect();
            tables.insert(i.to_string(), rows);
        }
        let file = InstanceFile {
            h: self.shape.height(),
            k: self.k,
            leaves: self.leaves.clone(),
            tables,
            variant: self.variant,
        };
        serde_json::to_string(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| TreeError::Parse(e.to_string()))?;
        let shape = TreeShape::new(file.h)?;
        if file.k < 2 || file.k > MAX_K {
            return Err(TreeError::AlphabetOutOfRange(file.k));
        }
        let mut tables = Vec::new();
        for i in shape.internal_nodes() {
            let rows = file
                .tables
                .get(&i.to_string())
                .ok_or(TreeError::MissingTable(i))?;
            if rows.len() != file.k as usize {
                return Err(TreeError::TableShape { node: i, k: file.k });
            }
            let mut entries = Vec::with_capacity((file.k as usize) * (file.k as usize));
            for row in rows {
                if row.len() != file.k as usize {
                    return Err(TreeError::TableShape { node: i, k: file.k });
                }
                entries.extend_from_slice(row);
            }
            tables.push(FuncTable::new(file.k, entries).map_err(|_| TreeError::TableShape {
                node: i,
                k: file.k,
            })?);
        }
        TepInstance::new(shape, file.k, file.variant, file.leaves, tables)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_relations() {
        let h3 = TreeShape::new(3).unwrap();
        let h2 = TreeShape::new(2).unwrap();

        let root = node_relations(h3, 1).unwrap();
        assert_eq!(root.parent, None);
        assert_eq!(root.children, Some((2, 3)));
        assert_eq!(root.sibling, None);
        assert_eq!(node_relations(h2, 1).unwrap().children, Some((2, 3)));

        let three = node_relations(h3, 3).unwrap();
        assert_eq!(three.parent, Some(1));
        assert_eq!(three.children, Some((6, 7)));
        assert_eq!(three.sibling, Some(2));

        let seven = node_relations(h3, 7).unwrap();
        assert_eq!(seven.parent, Some(3));
        assert_eq!(seven.children, None);
        assert_eq!(seven.sibling, Some(6));

        assert!(node_relations(h3, 8).is_err());
        assert!(node_relations(h3, 0).is_err());
    }

    #[test]
    fn shape_counts() {
        for h in 2..=6 {
            let s = TreeShape::new(h).unwrap();
            assert_eq!(s.node_count(), (1 << h) - 1);
            assert_eq!(s.non_root_count(), (1 << h) - 2);
            assert_eq!(s.leaves().count(), 1 << (h - 1));
        }
    }

    #[test]
    fn evaluate_xor_height_2() {
        let shape = TreeShape::new(2).unwrap();
        let inst = TepInstance::new(
            shape,
            2,
            TepVariant::Bt,
            vec![0, 1],
            vec![FuncTable::xor(2)],
        )
        .unwrap();
        let values = inst.evaluate();
        assert_eq!(values.root(), 1);
        assert_eq!(values.get(2), 0);
        assert_eq!(values.get(3), 1);
    }

    #[test]
    fn evaluate_constant_zero() {
        let shape = TreeShape::new(3).unwrap();
        let inst = TepInstance::new(
            shape,
            2,
            TepVariant::Bt,
            vec![0; 4],
            vec![FuncTable::constant(2, 0); 3],
        )
        .unwrap();
        assert_eq!(inst.evaluate().root(), 0);
    }

    #[test]
    fn hard_input_counts() {
        assert_eq!(hard_input_count(2, 2), Some(4));
        assert_eq!(hard_input_count(3, 2), Some(64));
        assert_eq!(hard_input_count(2, 3), Some(9));
        assert_eq!(enumerate_hard_inputs(2, 2).count(), 4);
        assert_eq!(enumerate_hard_inputs(3, 2).count(), 64);
    }

    #[test]
    fn hard_inputs_are_yes_instances_with_zero_off_pair() {
        for (h, k) in [(2u32, 2u32), (2, 3), (3, 2)] {
            for inst in enumerate_hard_inputs(h, k) {
                let values = inst.evaluate();
                assert_eq!(values.root(), 1);
                // Non-root internal tables are 0 except at the correct pair.
                for i in inst.shape().internal_nodes().skip(1) {
                    let (cx, cy) = (values.get(2 * i), values.get(2 * i + 1));
                    for x in 0..k as Value {
                        for y in 0..k as Value {
                            if (x, y) != (cx, cy) {
                                assert_eq!(inst.func_value(i, x, y), 0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hard_input_values_match_tuple() {
        let shape = TreeShape::new(3).unwrap();
        for idx in 0..hard_input_count(3, 2).unwrap() {
            let tuple = hard_tuple_from_index(3, 2, idx);
            let inst = hard_input_from_tuple(shape, 2, &tuple);
            assert_eq!(inst.evaluate().non_root_tuple(), tuple);
        }
    }

    #[test]
    fn hard_input_enumeration_is_lexicographic() {
        let tuples: Vec<Vec<Value>> = (0..hard_input_count(2, 3).unwrap())
            .map(|i| hard_tuple_from_index(2, 3, i))
            .collect();
        let mut sorted = tuples.clone();
        sorted.sort();
        assert_eq!(tuples, sorted);
        assert_eq!(tuples[0], vec![0, 0]);
        assert_eq!(tuples[1], vec![0, 1]);
    }

    #[test]
    fn all_instance_counts() {
        // One table with 4 entries over {0,1} plus two binary leaves.
        assert_eq!(instance_count(2, 2, TepVariant::Bt), Some(64));
        assert_eq!(instance_count(2, 2, TepVariant::Ft), Some(64));
        assert_eq!(instance_count(3, 2, TepVariant::Bt), Some(65536));

        let budget = Budget::default();
        let all: Vec<_> = enumerate_all_instances(2, 2, TepVariant::Bt, &budget)
            .unwrap()
            .collect();
        assert_eq!(all.len(), 64);
        // Exactly once: canonical serializations are pairwise distinct.
        let mut seen: std::collections::HashSet<String> =
            all.iter().map(|i| i.to_canonical_json()).collect();
        assert_eq!(seen.len(), 64);
        seen.clear();
    }

    #[test]
    fn all_instances_budget_exceeded() {
        let budget = Budget {
            max_instances: 1000,
            ..Budget::default()
        };
        let err = enumerate_all_instances(4, 4, TepVariant::Bt, &budget).unwrap_err();
        assert!(matches!(err, TreeError::Budget(_)));
    }

    #[test]
    fn canonical_json_round_trip() {
        for inst in enumerate_hard_inputs(3, 2).take(8) {
            let text = inst.to_canonical_json();
            let back = TepInstance::from_json(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(back.to_canonical_json(), text);
        }
    }

    #[test]
    fn json_shape_is_canonical() {
        let shape = TreeShape::new(2).unwrap();
        let inst = TepInstance::new(
            shape,
            2,
            TepVariant::Bt,
            vec![0, 1],
            vec![FuncTable::xor(2)],
        )
        .unwrap();
        assert_eq!(
            inst.to_canonical_json(),
            r#"{"h":2,"k":2,"leaves":[0,1],"tables":{"1":[[0,1],[1,0]]},"variant":"BT"}"#
        );
    }

    #[test]
    fn bt_rejects_non_boolean_root() {
        let shape = TreeShape::new(2).unwrap();
        let err = TepInstance::new(
            shape,
            3,
            TepVariant::Bt,
            vec![0, 1],
            vec![FuncTable::constant(3, 2)],
        )
        .unwrap_err();
        assert_eq!(err, TreeError::RootNotBoolean(2));
    }
}
