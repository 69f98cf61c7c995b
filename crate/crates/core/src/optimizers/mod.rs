//! Population-based maximizers over the unit box `[0, 1]^D`.
//!
//! Six algorithms share one entry point, [`optimize`]. Every algorithm
//! produces its candidates a generation at a time and hands the whole batch
//! to an internal evaluator, which clamps points into the box, enforces the
//! evaluation budget, tracks the best point and feeds the optional observer in
//! evaluation order. Candidate generation is driven by a single seeded stream,
//! so the result is bit-identical for a given seed whether the batch is
//! evaluated sequentially or in parallel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod de;
mod ga;
mod pso;
mod shade;

pub use de::{DeParams, JdeParams};
pub use ga::GaParams;
pub use pso::PsoParams;
pub use shade::ShadeParams;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OptimizerError {
    #[error("evaluation budget {maxfes} is smaller than the population size {np}")]
    BudgetTooSmall { np: usize, maxfes: usize },
    #[error("population size must be at least 4, got {0}")]
    PopulationTooSmall(usize),
    #[error("problem dimension must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    PSO,
    DE,
    GA,
    ILSHADE,
    LSHADE,
    #[serde(rename = "jDE")]
    JDE,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::PSO,
        OptimizerKind::DE,
        OptimizerKind::GA,
        OptimizerKind::ILSHADE,
        OptimizerKind::LSHADE,
        OptimizerKind::JDE,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::PSO => "PSO",
            OptimizerKind::DE => "DE",
            OptimizerKind::GA => "GA",
            OptimizerKind::ILSHADE => "ILSHADE",
            OptimizerKind::LSHADE => "LSHADE",
            OptimizerKind::JDE => "jDE",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown algorithm '{s}' (expected PSO, DE, GA, ILSHADE, LSHADE or jDE)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerBudget {
    pub np: usize,
    pub maxfes: usize,
    pub seed: u64,
}

impl OptimizerBudget {
    pub fn new(np: usize, maxfes: usize, seed: u64) -> Self {
        OptimizerBudget { np, maxfes, seed }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.np < 4 {
            return Err(OptimizerError::PopulationTooSmall(self.np));
        }
        if self.maxfes < self.np {
            return Err(OptimizerError::BudgetTooSmall {
                np: self.np,
                maxfes: self.maxfes,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub evaluation: usize,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evaluations_used: usize,
    /// One entry per strict improvement of the best fitness.
    pub trace: Vec<TracePoint>,
}

/// A function to maximize. `index` is the zero-based evaluation counter,
/// which lets stochastic objectives derive per-evaluation seeds.
pub trait Objective: Sync {
    fn evaluate(&self, index: usize, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    fn evaluate(&self, index: usize, x: &[f64]) -> f64 {
        self(index, x)
    }
}

/// Called once per evaluation, in evaluation order.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &[f64], f64);

/// Algorithm tunables. Defaults are the published defaults of each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub pso: PsoParams,
    pub de: DeParams,
    pub ga: GaParams,
    pub jde: JdeParams,
    pub lshade: ShadeParams,
    pub ilshade: ShadeParams,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self::published()
    }
}

impl OptimizerParams {
    pub fn published() -> Self {
        OptimizerParams {
            pso: PsoParams::default(),
            de: DeParams::default(),
            ga: GaParams::default(),
            jde: JdeParams::default(),
            lshade: ShadeParams::lshade(),
            ilshade: ShadeParams::ilshade(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Evaluate each generation's batch on the rayon pool.
    pub parallel: bool,
}

pub(crate) struct Evaluator<'a, O: ?Sized> {
    objective: &'a O,
    observer: Option<Observer<'a>>,
    parallel: bool,
    maxfes: usize,
    used: usize,
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<TracePoint>,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    fn new(
        objective: &'a O,
        maxfes: usize,
        options: RunOptions,
        observer: Option<Observer<'a>>,
    ) -> Self {
        Evaluator {
            objective,
            observer,
            parallel: options.parallel,
            maxfes,
            used: 0,
            best_x: Vec::new(),
            best_f: f64::NEG_INFINITY,
            trace: Vec::new(),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.maxfes - self.used
    }

    pub(crate) fn used(&self) -> usize {
        self.used
    }

    pub(crate) fn maxfes(&self) -> usize {
        self.maxfes
    }

    /// Clamps the points into the box and evaluates them. The batch must fit
    /// in the remaining budget.
    pub(crate) fn evaluate(&mut self, points: &mut [Vec<f64>]) -> Vec<f64> {
        assert!(
            points.len() <= self.remaining(),
            "batch exceeds evaluation budget"
        );
        for p in points.iter_mut() {
            clamp_unit(p);
        }
        let start = self.used;
        let objective = self.objective;
        let values: Vec<f64> = if self.parallel && points.len() > 1 {
            points
                .par_iter()
                .enumerate()
                .map(|(k, x)| objective.evaluate(start + k, x))
                .collect()
        } else {
            points
                .iter()
                .enumerate()
                .map(|(k, x)| objective.evaluate(start + k, x))
                .collect()
        };
        for (k, (x, &f)) in points.iter().zip(&values).enumerate() {
            let index = start + k;
            if let Some(obs) = self.observer.as_mut() {
                obs(index, x, f);
            }
            if f > self.best_f || self.best_x.is_empty() {
                self.best_f = f;
                self.best_x.clone_from(x);
                self.trace.push(TracePoint {
                    evaluation: index,
                    fitness: f,
                });
            }
        }
        self.used += points.len();
        values
    }

    fn finish(self) -> OptimizeResult {
        OptimizeResult {
            best_x: self.best_x,
            best_f: self.best_f,
            evaluations_used: self.used,
            trace: self.trace,
        }
    }
}

pub(crate) fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    }
}

/// Maximizes `objective` over `[0, 1]^dim` with published default parameters.
pub fn optimize<'a, O: Objective + ?Sized>(
    kind: OptimizerKind,
    objective: &'a O,
    dim: usize,
    budget: &OptimizerBudget,
    observer: Option<Observer<'a>>,
) -> Result<OptimizeResult, OptimizerError> {
    optimize_with(
        kind,
        objective,
        dim,
        budget,
        &OptimizerParams::published(),
        RunOptions::default(),
        observer,
    )
}

pub fn optimize_with<'a, O: Objective + ?Sized>(
    kind: OptimizerKind,
    objective: &'a O,
    dim: usize,
    budget: &OptimizerBudget,
    params: &OptimizerParams,
    options: RunOptions,
    observer: Option<Observer<'a>>,
) -> Result<OptimizeResult, OptimizerError> {
    if dim == 0 {
        return Err(OptimizerError::ZeroDimension);
    }
    budget.validate()?;
    let mut rng = crate::seed::rng(budget.seed);
    let mut ev = Evaluator::new(objective, budget.maxfes, options, observer);
    match kind {
        OptimizerKind::PSO => pso::run(&params.pso, dim, budget.np, &mut rng, &mut ev),
        OptimizerKind::DE => de::run_de(&params.de, dim, budget.np, &mut rng, &mut ev),
        OptimizerKind::GA => ga::run(&params.ga, dim, budget.np, &mut rng, &mut ev),
        OptimizerKind::ILSHADE => shade::run(&params.ilshade, dim, budget.np, &mut rng, &mut ev),
        OptimizerKind::LSHADE => shade::run(&params.lshade, dim, budget.np, &mut rng, &mut ev),
        OptimizerKind::JDE => de::run_jde(&params.jde, dim, budget.np, &mut rng, &mut ev),
    }
    Ok(ev.finish())
}

pub(crate) fn random_population(
    rng: &mut crate::seed::Rng,
    np: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    use rand::Rng;
    (0..np)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// `count` distinct indices in `0..n`, all different from `exclude`.
pub(crate) fn distinct_indices(
    rng: &mut crate::seed::Rng,
    n: usize,
    count: usize,
    exclude: &[usize],
) -> Vec<usize> {
    use rand::Rng;
    let mut out: Vec<usize> = Vec::with_capacity(count);
    while out.len() < count {
        let r = rng.random_range(0..n);
        if !exclude.contains(&r) && !out.contains(&r) {
            out.push(r);
        }
    }
    out
}
