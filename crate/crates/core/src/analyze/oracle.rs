//! Master correctness oracle: a compiled program must agree with the tree
//! evaluator on whether each instance is a "yes" instance, exhaustively
//! where the instance count permits and on uniform seeded samples
//! otherwise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{accepts, BranchingProgram};
use crate::budget::Budget;
use crate::tree::{
    enumerate_all_instances, hard_input_from_tuple, FuncTable, TepInstance, TepVariant, TreeShape,
    Value,
};

use super::AnalyzeError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: String,
    pub checked: u64,
    pub disagreements: u64,
    /// Canonical JSON of the first few disagreeing instances.
    pub witnesses: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.disagreements == 0
    }
}

/// Sweeps every instance of the program's problem, in parallel, comparing
/// `accepts` with the evaluator.
pub fn check_exhaustive_agreement(
    bp: &BranchingProgram,
    budget: &Budget,
) -> Result<OracleReport, AnalyzeError> {
    let space = enumerate_all_instances(bp.h(), bp.k(), bp.problem(), budget)?;
    let total = space.len();
    let count = u64::try_from(total).expect("budget-checked count fits u64");

    let found: Vec<u128> = (0..count)
        .into_par_iter()
        .filter_map(|idx| {
            let instance = space.instance_at(idx as u128);
            let expected = instance.is_yes();
            (accepts(bp, &instance) != expected).then_some(idx as u128)
        })
        .collect();
    let mut found = found;
    found.sort_unstable();

    Ok(OracleReport {
        mode: "exhaustive".into(),
        checked: count,
        disagreements: found.len() as u64,
        witnesses: found
            .iter()
            .take(5)
            .map(|&idx| space.instance_at(idx).to_canonical_json())
            .collect(),
        seed: None,
    })
}

/// Uniformly random instance of the problem (all tables and leaves drawn
/// independently).
pub fn sample_instance(
    shape: TreeShape,
    k: u32,
    variant: TepVariant,
    rng: &mut impl Rng,
) -> TepInstance {
    let leaves: Vec<Value> = shape
        .leaves()
        .map(|_| rng.random_range(0..k) as Value)
        .collect();
    let mut tables = Vec::new();
    for node in shape.internal_nodes() {
        let bound = if node == 1 && variant == TepVariant::Bt {
            2
        } else {
            k
        };
        let entries: Vec<Value> = (0..k * k)
            .map(|_| rng.random_range(0..bound) as Value)
            .collect();
        tables.push(FuncTable::new(k, entries).expect("sampled tables are well-formed"));
    }
    TepInstance::new(shape, k, variant, leaves, tables).expect("sampled instances are well-formed")
}

/// Uniformly random member of the hard input family.
pub fn sample_instance_tuple(shape: TreeShape, k: u32, rng: &mut impl Rng) -> TepInstance {
    let tuple: Vec<Value> = (0..shape.non_root_count())
        .map(|_| rng.random_range(0..k) as Value)
        .collect();
    hard_input_from_tuple(shape, k, &tuple)
}

/// Seeded uniform sampling sweep of the full instance space.
pub fn check_sampled_agreement(
    bp: &BranchingProgram,
    samples: u64,
    seed: u64,
) -> Result<OracleReport, AnalyzeError> {
    let shape = bp.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disagreements = 0;
    let mut witnesses = Vec::new();
    for _ in 0..samples {
        let instance = sample_instance(shape, bp.k(), bp.problem(), &mut rng);
        if accepts(bp, &instance) != instance.is_yes() {
            disagreements += 1;
            if witnesses.len() < 5 {
                witnesses.push(instance.to_canonical_json());
            }
        }
    }
    Ok(OracleReport {
        mode: "sampled".into(),
        checked: samples,
        disagreements,
        witnesses,
        seed: Some(seed),
    })
}
