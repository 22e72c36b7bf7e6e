//! Caps on exhaustive work: instance sweeps, configuration searches and
//! path enumerations all refuse to start when the projected effort exceeds
//! the budget, instead of running forever.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable overriding the default instance/configuration caps.
pub const BUDGET_ENV: &str = "PEBBLETEP_BUDGET";

pub const DEFAULT_INSTANCE_CAP: u64 = 20_000_000;
pub const DEFAULT_CONFIG_CAP: u64 = 20_000_000;
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;
/// Cap on the number of tuples stored in a single factored state set.
pub const DEFAULT_TUPLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of instances an exhaustive sweep may visit.
    pub max_instances: u64,
    /// Maximum number of pebbling configurations a search may expand.
    pub max_configs: u64,
    /// Maximum number of computation paths an enumeration may collect.
    pub max_paths: u64,
    /// Maximum number of explicit tuples per factored state set.
    pub max_tuples: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_instances: DEFAULT_INSTANCE_CAP,
            max_configs: DEFAULT_CONFIG_CAP,
            max_paths: DEFAULT_PATH_CAP,
            max_tuples: DEFAULT_TUPLE_CAP,
        }
    }
}

impl Budget {
    /// Default budget, with `PEBBLETEP_BUDGET` (a single number applied to
    /// the instance and configuration caps) taken into account.
    pub fn from_env() -> Self {
        let mut budget = Budget::default();
        if let Ok(raw) = std::env::var(BUDGET_ENV) {
            if let Ok(v) = raw.trim().parse::<u64>() {
                budget.max_instances = v;
                budget.max_configs = v;
            }
        }
        budget
    }

    pub fn unlimited() -> Self {
        Budget {
            max_instances: u64::MAX,
            max_configs: u64::MAX,
            max_paths: u64::MAX,
            max_tuples: u64::MAX,
        }
    }

    pub fn check_instances(&self, needed: u128) -> Result<(), BudgetError> {
        if needed > self.max_instances as u128 {
            return Err(BudgetError {
                what: "instances",
                needed,
                cap: self.max_instances,
            });
        }
        Ok(())
    }

    pub fn check_configs(&self, visited: u64) -> Result<(), BudgetError> {
        if visited > self.max_configs {
            return Err(BudgetError {
                what: "configurations",
                needed: visited as u128,
                cap: self.max_configs,
            });
        }
        Ok(())
    }

    pub fn check_tuples(&self, count: u64) -> Result<(), BudgetError> {
        if count > self.max_tuples {
            return Err(BudgetError {
                what: "state-set tuples",
                needed: count as u128,
                cap: self.max_tuples,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("budget exceeded: {needed} {what} requested, cap is {cap}")]
pub struct BudgetError {
    pub what: &'static str,
    pub needed: u128,
    pub cap: u64,
}
