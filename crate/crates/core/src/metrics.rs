//! Rule quality metrics and the weighted-sum fitness the inner miner maximizes.
//!
//! All supports are fractions of the transaction count. With `s(C)` the
//! fraction of transactions satisfying condition list `C`:
//!
//! | metric            | value                        |
//! |-------------------|------------------------------|
//! | Support           | `s(XY)`                      |
//! | Confidence        | `s(XY) / s(X)`               |
//! | Coverage          | `s(Y)`                       |
//! | Amplitude         | `Confidence - s(Y)`          |
//! | Inclusion         | `s(XY) / s(X)`               |
//! | Comprehensibility | `s(XY) / s(Y)`               |
//!
//! A zero denominator yields 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TransactionDatabase;
use crate::rules::{satisfies, Rule};

/// Fitness assigned to vectors that decode to no rule.
pub const INVALID_FITNESS: f64 = -1.0;

/// Labels of the convention above, recorded in reports.
pub const METRIC_CONVENTION: &str =
    "supports as fractions; Cover=s(Y); Amp=Conf-s(Y); Incl=s(XY)/s(X); Comp=s(XY)/s(Y); zero denominators give 0";

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric selection is empty")]
    EmptySelection,
    #[error("no weight given for selected metric {0}")]
    MissingWeight(MetricKind),
    #[error("weight for {0} must be a positive finite number, got {1}")]
    InvalidWeight(MetricKind, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "Supp")]
    Support,
    #[serde(rename = "Conf")]
    Confidence,
    #[serde(rename = "Cover")]
    Coverage,
    #[serde(rename = "Amp")]
    Amplitude,
    #[serde(rename = "Incl")]
    Inclusion,
    #[serde(rename = "Comp")]
    Comprehensibility,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Support,
        MetricKind::Confidence,
        MetricKind::Coverage,
        MetricKind::Amplitude,
        MetricKind::Inclusion,
        MetricKind::Comprehensibility,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Support => "Supp",
            MetricKind::Confidence => "Conf",
            MetricKind::Coverage => "Cover",
            MetricKind::Amplitude => "Amp",
            MetricKind::Inclusion => "Incl",
            MetricKind::Comprehensibility => "Comp",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        MetricKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s) || format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown metric '{s}' (expected Supp, Conf, Cover, Amp, Incl or Comp)")
            })
    }
}

/// Transaction counts a rule's metrics are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleCounts {
    pub n: usize,
    pub antecedent: usize,
    pub consequent: usize,
    pub both: usize,
}

impl RuleCounts {
    pub fn count(rule: &Rule, db: &TransactionDatabase) -> Self {
        let mut counts = RuleCounts {
            n: db.n_transactions(),
            antecedent: 0,
            consequent: 0,
            both: 0,
        };
        for row in db.rows() {
            let x = satisfies(&rule.antecedent, row);
            let y = satisfies(&rule.consequent, row);
            counts.antecedent += x as usize;
            counts.consequent += y as usize;
            counts.both += (x && y) as usize;
        }
        counts
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn metric(&self, kind: MetricKind) -> f64 {
        let confidence = Self::ratio(self.both, self.antecedent);
        match kind {
            MetricKind::Support => Self::ratio(self.both, self.n),
            MetricKind::Confidence | MetricKind::Inclusion => confidence,
            MetricKind::Coverage => Self::ratio(self.consequent, self.n),
            MetricKind::Amplitude => confidence - Self::ratio(self.consequent, self.n),
            MetricKind::Comprehensibility => Self::ratio(self.both, self.consequent),
        }
    }

    pub fn metrics(&self) -> MetricVector {
        MetricVector {
            values: MetricKind::ALL.map(|k| self.metric(k)),
        }
    }
}

/// Values of all six metrics for one rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricVector {
    values: [f64; 6],
}

impl MetricVector {
    /// Values in [`MetricKind::ALL`] order.
    pub fn new(values: [f64; 6]) -> Self {
        MetricVector { values }
    }

    pub fn get(&self, kind: MetricKind) -> f64 {
        self.values[kind.index()]
    }
}

impl Serialize for MetricVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<MetricKind, f64> = MetricKind::ALL
            .into_iter()
            .map(|k| (k, self.get(k)))
            .collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<MetricKind, f64>::deserialize(deserializer)?;
        let mut values = [0.0; 6];
        for k in MetricKind::ALL {
            values[k.index()] = *map
                .get(&k)
                .ok_or_else(|| serde::de::Error::custom(format!("missing metric {k}")))?;
        }
        Ok(MetricVector { values })
    }
}

pub fn evaluate_metric(kind: MetricKind, rule: &Rule, db: &TransactionDatabase) -> f64 {
    RuleCounts::count(rule, db).metric(kind)
}

pub fn evaluate_all(rule: &Rule, db: &TransactionDatabase) -> MetricVector {
    RuleCounts::count(rule, db).metrics()
}

/// A validated, non-empty set of metrics with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessWeights {
    terms: Vec<(MetricKind, f64)>,
    total: f64,
}

impl FitnessWeights {
    pub fn new(
        selected: &BTreeSet<MetricKind>,
        weights: &BTreeMap<MetricKind, f64>,
    ) -> Result<Self, MetricsError> {
        if selected.is_empty() {
            return Err(MetricsError::EmptySelection);
        }
        let mut terms = Vec::with_capacity(selected.len());
        for &k in selected {
            let w = *weights.get(&k).ok_or(MetricsError::MissingWeight(k))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(MetricsError::InvalidWeight(k, w));
            }
            terms.push((k, w));
        }
        let total = terms.iter().map(|(_, w)| w).sum();
        Ok(FitnessWeights { terms, total })
    }

    /// Every selected metric with weight 1.
    pub fn uniform(selected: &BTreeSet<MetricKind>) -> Result<Self, MetricsError> {
        let weights = selected.iter().map(|&k| (k, 1.0)).collect();
        Self::new(selected, &weights)
    }

    pub fn fitness(&self, counts: &RuleCounts) -> f64 {
        self.terms
            .iter()
            .map(|&(k, w)| w * counts.metric(k))
            .sum::<f64>()
            / self.total
    }
}

/// Weighted mean of the selected metrics, or [`INVALID_FITNESS`] when there is
/// no rule.
pub fn inner_fitness(
    rule: Option<&Rule>,
    db: &TransactionDatabase,
    selected: &BTreeSet<MetricKind>,
    weights: &BTreeMap<MetricKind, f64>,
) -> Result<f64, MetricsError> {
    let w = FitnessWeights::new(selected, weights)?;
    Ok(match rule {
        None => INVALID_FITNESS,
        Some(rule) => w.fitness(&RuleCounts::count(rule, db)),
    })
}
