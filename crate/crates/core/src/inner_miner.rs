//! One inner rule-mining run: an optimizer searches rule vectors against the
//! weighted metric fitness, and every distinct rule with positive fitness it
//! evaluates along the way is collected into an archive.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::TransactionDatabase;
use crate::metrics::{FitnessWeights, MetricKind, MetricVector, RuleCounts, INVALID_FITNESS};
use crate::optimizers::{
    optimize_with, OptimizerBudget, OptimizerKind, OptimizerParams, RunOptions,
};
use crate::rules::{decode_rule, rule_dimension, Rule};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub rule: Rule,
    pub metrics: MetricVector,
    pub fitness: f64,
}

/// Distinct rules found during one run, in discovery order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleArchive {
    entries: Vec<ArchiveEntry>,
    seen: HashSet<Rule>,
}

impl RuleArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a rule unless it is already present or its fitness is not
    /// positive. Returns whether it was inserted.
    pub fn insert(&mut self, rule: Rule, metrics: MetricVector, fitness: f64) -> bool {
        if fitness.is_nan() || fitness <= 0.0 || self.seen.contains(&rule) {
            return false;
        }
        self.seen.insert(rule.clone());
        self.entries.push(ArchiveEntry {
            rule,
            metrics,
            fitness,
        });
        true
    }

    pub fn contains(&self, rule: &Rule) -> bool {
        self.seen.contains(rule)
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn mean_of(&self, kind: MetricKind) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries
            .iter()
            .map(|e| e.metrics.get(kind))
            .sum::<f64>()
            / self.entries.len() as f64
    }

    pub fn mean_support(&self) -> f64 {
        self.mean_of(MetricKind::Support)
    }

    pub fn mean_confidence(&self) -> f64 {
        self.mean_of(MetricKind::Confidence)
    }
}

/// Mines `db` with default optimizer parameters.
pub fn mine(
    db: &TransactionDatabase,
    kind: OptimizerKind,
    budget: &OptimizerBudget,
    selected: &BTreeSet<MetricKind>,
    weights: &BTreeMap<MetricKind, f64>,
) -> Result<RuleArchive> {
    let weights = FitnessWeights::new(selected, weights)?;
    mine_with(db, kind, budget, &weights, &OptimizerParams::published())
}

pub fn mine_with(
    db: &TransactionDatabase,
    kind: OptimizerKind,
    budget: &OptimizerBudget,
    weights: &FitnessWeights,
    params: &OptimizerParams,
) -> Result<RuleArchive> {
    let objective = |_: usize, x: &[f64]| match decode_rule(x, db).expect("dimension fixed") {
        None => INVALID_FITNESS,
        Some(rule) => weights.fitness(&RuleCounts::count(&rule, db)),
    };
    let mut archive = RuleArchive::new();
    let mut observe = |_: usize, x: &[f64], f: f64| {
        if f > 0.0 {
            if let Some(rule) = decode_rule(x, db).expect("dimension fixed") {
                if !archive.contains(&rule) {
                    let metrics = RuleCounts::count(&rule, db).metrics();
                    archive.insert(rule, metrics, f);
                }
            }
        }
    };
    optimize_with(
        kind,
        &objective,
        rule_dimension(db),
        budget,
        params,
        RunOptions::default(),
        Some(&mut observe),
    )?;
    Ok(archive)
}
