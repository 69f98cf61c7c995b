//! Association rules over a transaction database and the codec that turns a
//! real-valued vector in the unit box into a rule.
//!
//! Layout of a rule vector for a database with `A` attributes: four genes per
//! attribute `(order, v1, v2, gate)` followed by one cut gene, for
//! `4 * A + 1` genes in total. An attribute takes part in the rule when its
//! gate exceeds 0.5. Participating attributes are ranked by their order gene
//! (descending, ties by attribute index) and the cut gene splits the ranking
//! into antecedent and consequent, leaving at least one condition on each
//! side.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Domain, TransactionDatabase, Value};

/// Version tag of the rule vector layout, recorded in reports.
pub const RULE_CODEC: &str = "rule-codec/1: (order, v1, v2, gate) per attribute + cut; gate > 0.5";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule vector has {found} genes, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionForm {
    /// Closed numeric interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Equality with the category at this index of the attribute's domain.
    Equals { category: usize },
}

impl ConditionForm {
    pub fn category(self) -> Option<usize> {
        match self {
            ConditionForm::Equals { category } => Some(category),
            ConditionForm::Interval { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: usize,
    pub form: ConditionForm,
}

// Equality is bitwise on interval endpoints so that it agrees with `Hash`.
impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.attribute == other.attribute
            && match (self.form, other.form) {
                (
                    ConditionForm::Interval { lo: a, hi: b },
                    ConditionForm::Interval { lo: c, hi: d },
                ) => a.to_bits() == c.to_bits() && b.to_bits() == d.to_bits(),
                (ConditionForm::Equals { category: a }, ConditionForm::Equals { category: b }) => {
                    a == b
                }
                _ => false,
            }
    }
}

impl Eq for Condition {}

impl Hash for Condition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.attribute.hash(state);
        match self.form {
            ConditionForm::Interval { lo, hi } => {
                0u8.hash(state);
                lo.to_bits().hash(state);
                hi.to_bits().hash(state);
            }
            ConditionForm::Equals { category } => {
                1u8.hash(state);
                category.hash(state);
            }
        }
    }
}

impl Condition {
    pub fn holds(&self, row: &[Value]) -> bool {
        match (self.form, row[self.attribute]) {
            (ConditionForm::Interval { lo, hi }, Value::Num(v)) => lo <= v && v <= hi,
            (ConditionForm::Equals { category }, Value::Cat(c)) => c == category,
            _ => false,
        }
    }
}

/// `antecedent ⟹ consequent`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<Condition>,
    pub consequent: Vec<Condition>,
}

impl Rule {
    pub fn display<'a>(&'a self, db: &'a TransactionDatabase) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, db }
    }
}

/// Renders a rule as `A ∈ [lo, hi] ∧ B = cat ⟹ C ∈ [lo, hi]`.
pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    db: &'a TransactionDatabase,
}

impl RuleDisplay<'_> {
    fn side(&self, f: &mut fmt::Formatter<'_>, conditions: &[Condition]) -> fmt::Result {
        for (i, c) in conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            let attr = &self.db.attributes()[c.attribute];
            match (c.form, &attr.domain) {
                (ConditionForm::Interval { lo, hi }, _) => {
                    write!(f, "{} ∈ [{lo}, {hi}]", attr.name)?
                }
                (ConditionForm::Equals { category }, Domain::Categorical { categories }) => {
                    write!(f, "{} = {}", attr.name, categories[category])?
                }
                (ConditionForm::Equals { category }, _) => {
                    write!(f, "{} = #{category}", attr.name)?
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.side(f, &self.rule.antecedent)?;
        f.write_str(" ⟹ ")?;
        self.side(f, &self.rule.consequent)
    }
}

pub fn rule_dimension(db: &TransactionDatabase) -> usize {
    4 * db.n_attributes() + 1
}

/// Non-finite genes read as 0, everything else is clamped onto [0, 1].
fn gene(x: f64) -> f64 {
    if x.is_finite() {
        x.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Decodes a rule vector. `Ok(None)` means the vector encodes no valid rule
/// (fewer than two participating attributes).
pub fn decode_rule(x: &[f64], db: &TransactionDatabase) -> Result<Option<Rule>, RuleError> {
    let expected = rule_dimension(db);
    if x.len() != expected {
        return Err(RuleError::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    let mut included: Vec<(f64, Condition)> = Vec::new();
    for (j, attr) in db.attributes().iter().enumerate() {
        let genes = &x[4 * j..4 * j + 4];
        let (order, v1, v2, gate) = (
            gene(genes[0]),
            gene(genes[1]),
            gene(genes[2]),
            gene(genes[3]),
        );
        if gate <= 0.5 {
            continue;
        }
        let form = match &attr.domain {
            Domain::Numeric { min, max } => {
                let span = max - min;
                let at = |t: f64| (min + t * span).clamp(*min, *max) + 0.0;
                ConditionForm::Interval {
                    lo: at(v1.min(v2)),
                    hi: at(v1.max(v2)),
                }
            }
            Domain::Categorical { categories } => {
                let k = categories.len();
                ConditionForm::Equals {
                    category: ((v1 * k as f64).floor() as usize).min(k - 1),
                }
            }
        };
        included.push((order, Condition { attribute: j, form }));
    }
    let m = included.len();
    if m < 2 {
        return Ok(None);
    }
    // stable sort keeps attribute order among equal order genes
    included.sort_by(|a, b| b.0.total_cmp(&a.0));
    let cut = gene(x[expected - 1]);
    let split = ((cut * m as f64).round() as usize).clamp(1, m - 1);
    let mut conditions = included.into_iter().map(|(_, c)| c);
    let antecedent: Vec<Condition> = conditions.by_ref().take(split).collect();
    let consequent: Vec<Condition> = conditions.collect();
    Ok(Some(Rule {
        antecedent,
        consequent,
    }))
}

/// True iff every condition holds for `row`. An empty list always holds.
pub fn satisfies(conditions: &[Condition], row: &[Value]) -> bool {
    conditions.iter().all(|c| c.holds(row))
}
