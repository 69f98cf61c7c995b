//! The outer search: an optimizer over pipeline genotypes, repeated over
//! independently seeded runs and summarized.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TransactionDatabase;
use crate::metrics::{MetricKind, MetricVector, METRIC_CONVENTION};
use crate::optimizers::{optimize_with, OptimizerBudget, OptimizerKind, RunOptions, TracePoint};
use crate::pipeline::{
    evaluate_pipeline, PipelineGenotype, PipelineResult, PipelineSpec, SearchConfig,
};
use crate::preprocess::PreprocessKind;
use crate::rules::{Rule, RULE_CODEC};
use crate::{seed, Result};

/// Version of the report layout.
pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("run {run}: every evaluated pipeline was discarded")]
    AllDiscarded { run: usize },
    #[error("invalid outer configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterConfig {
    pub outer_kind: OptimizerKind,
    pub outer_np: usize,
    pub outer_maxfes: usize,
    pub runs: usize,
    pub base_seed: u64,
    /// Store wall-clock time per run. Off by default so that reports are
    /// reproducible byte for byte.
    #[serde(default)]
    pub record_time: bool,
    /// Evaluate runs and pipelines on the rayon pool. Results do not depend on it.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for OuterConfig {
    fn default() -> Self {
        OuterConfig {
            outer_kind: OptimizerKind::DE,
            outer_np: 30,
            outer_maxfes: 1000,
            runs: 30,
            base_seed: 0,
            record_time: false,
            parallel: false,
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        OptimizerBudget::new(self.outer_np, self.outer_maxfes, 0)
            .validate()
            .map_err(|e| SearchError::InvalidConfig(e.to_string()))?;
        if self.runs == 0 {
            return Err(SearchError::InvalidConfig(
                "at least one run is required".into(),
            ));
        }
        Ok(())
    }

    pub fn run_seed(&self, run_index: usize) -> u64 {
        seed::derive(self.base_seed, run_index as u64)
    }
}

/// Seed handed to the pipeline evaluated at `eval_index` within a run.
pub fn evaluation_seed(run_seed: u64, eval_index: usize) -> u64 {
    seed::derive(run_seed, eval_index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub text: String,
    pub rule: Rule,
    pub metrics: MetricVector,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_index: usize,
    pub seed: u64,
    pub best_genotype: PipelineGenotype,
    pub best_spec: PipelineSpec,
    pub best_fitness: f64,
    /// Evaluation that produced the best pipeline and the seed it ran with.
    pub best_evaluation: usize,
    pub best_evaluation_seed: u64,
    /// Best fitness among the initial outer population.
    pub initial_best_fitness: f64,
    pub evaluations: usize,
    pub discarded_evaluations: usize,
    pub rule_count: usize,
    pub mean_support: f64,
    pub mean_confidence: f64,
    /// Strict improvements of the best-so-far fitness.
    pub fitness_trace: Vec<TracePoint>,
    pub rules: Vec<RuleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

/// Archive entries of a pipeline run with their text rendering.
pub fn rule_records(result: &PipelineResult) -> Vec<RuleRecord> {
    let Some(db) = result.prepared.as_ref() else {
        return Vec::new();
    };
    result
        .archive
        .entries()
        .iter()
        .map(|e| RuleRecord {
            text: e.rule.display(db).to_string(),
            rule: e.rule.clone(),
            metrics: e.metrics,
            fitness: e.fitness,
        })
        .collect()
}

/// One outer search run.
pub fn search(
    db: &TransactionDatabase,
    cfg: &SearchConfig,
    outer: &OuterConfig,
    run_index: usize,
) -> Result<RunReport> {
    cfg.validate()?;
    outer.validate()?;
    let started = Instant::now();
    let run_seed = outer.run_seed(run_index);

    // the lowest-index failure wins so that errors do not depend on scheduling
    let failure: Mutex<Option<(usize, crate::Error)>> = Mutex::new(None);
    let objective = |index: usize, x: &[f64]| {
        let g = PipelineGenotype(x.to_vec());
        match evaluate_pipeline(&g, db, cfg, evaluation_seed(run_seed, index)) {
            Ok(r) => r.fitness,
            Err(e) => {
                let mut slot = failure.lock().unwrap();
                if slot.as_ref().is_none_or(|(i, _)| index < *i) {
                    *slot = Some((index, e));
                }
                crate::pipeline::DISCARDED_FITNESS
            }
        }
    };
    let mut initial_best = f64::NEG_INFINITY;
    let mut discarded = 0;
    let mut observe = |index: usize, _: &[f64], f: f64| {
        if index < outer.outer_np {
            initial_best = initial_best.max(f);
        }
        if f == crate::pipeline::DISCARDED_FITNESS {
            discarded += 1;
        }
    };
    let result = optimize_with(
        outer.outer_kind,
        &objective,
        cfg.dimension(),
        &OptimizerBudget::new(outer.outer_np, outer.outer_maxfes, run_seed),
        &cfg.optimizer_params,
        RunOptions {
            parallel: outer.parallel,
        },
        Some(&mut observe),
    )?;
    if let Some((_, e)) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let best = result.trace.last().expect("at least one evaluation");
    if result.best_f == crate::pipeline::DISCARDED_FITNESS {
        return Err(SearchError::AllDiscarded { run: run_index }.into());
    }

    // Evaluation is a pure function of genotype and seed, so re-running the
    // winning evaluation recovers its archive.
    let best_seed = evaluation_seed(run_seed, best.evaluation);
    let genotype = PipelineGenotype(result.best_x.clone());
    let best_run = evaluate_pipeline(&genotype, db, cfg, best_seed)?;
    debug_assert_eq!(best_run.fitness, result.best_f);

    Ok(RunReport {
        run_index,
        seed: run_seed,
        best_genotype: genotype,
        best_spec: best_run
            .spec
            .clone()
            .expect("non-discarded pipeline has a spec"),
        best_fitness: result.best_f,
        best_evaluation: best.evaluation,
        best_evaluation_seed: best_seed,
        initial_best_fitness: initial_best,
        evaluations: result.evaluations_used,
        discarded_evaluations: discarded,
        rule_count: best_run.archive.len(),
        mean_support: best_run.archive.mean_support(),
        mean_confidence: best_run.archive.mean_confidence(),
        rules: rule_records(&best_run),
        fitness_trace: result.trace,
        wall_time: outer.record_time.then(|| started.elapsed().as_secs_f64()),
    })
}

/// Best fitness among `samples` uniformly random genotypes. A baseline for
/// the outer search with the same evaluation budget.
pub fn random_search(
    db: &TransactionDatabase,
    cfg: &SearchConfig,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let mut rng = seed::rng(seed);
    let mut best = f64::NEG_INFINITY;
    for index in 0..samples {
        let g = PipelineGenotype((0..cfg.dimension()).map(|_| rng.random::<f64>()).collect());
        let r = evaluate_pipeline(&g, db, cfg, evaluation_seed(seed, index))?;
        best = best.max(r.fitness);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub name: String,
    pub count: usize,
    /// `count / runs`.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricUsage {
    pub metric: MetricKind,
    pub used_in: usize,
    /// Weight statistics over the runs whose best pipeline selected the metric.
    pub weight: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub best_fitness: MeanStd,
    pub rule_count: MeanStd,
    pub np: MeanStd,
    pub maxfes: MeanStd,
    pub algorithms: Vec<Frequency>,
    /// Per method plus `none` for pipelines without preprocessing.
    pub preprocessing: Vec<Frequency>,
    /// Each distinct combination of methods, joined with `+`.
    pub preprocessing_combinations: Vec<Frequency>,
    pub metrics: Vec<MetricUsage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: Option<String>,
    pub transactions: usize,
    pub attributes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub format: u32,
    pub rule_codec: String,
    pub metric_convention: String,
    pub dataset: DatasetSummary,
    pub search: SearchConfig,
    pub outer: OuterConfig,
    pub runs: Vec<RunReport>,
    pub summary: Summary,
}

/// Label of a preprocessing combination, `none` when empty.
pub fn combination_label(methods: &[PreprocessKind]) -> String {
    if methods.is_empty() {
        "none".to_string()
    } else {
        methods
            .iter()
            .map(|m| m.label())
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn frequencies(counts: impl IntoIterator<Item = (String, usize)>, runs: usize) -> Vec<Frequency> {
    counts
        .into_iter()
        .map(|(name, count)| Frequency {
            name,
            count,
            frequency: count as f64 / runs as f64,
        })
        .collect()
}

pub fn summarize(cfg: &SearchConfig, runs: &[RunReport]) -> Summary {
    let n = runs.len();
    let stat = |f: &dyn Fn(&RunReport) -> f64| {
        MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>()).unwrap_or(MeanStd {
            mean: 0.0,
            std: 0.0,
        })
    };

    let algorithms = cfg.algorithm_pool.iter().map(|&k| {
        let c = runs.iter().filter(|r| r.best_spec.algorithm == k).count();
        (k.label().to_string(), c)
    });

    let mut preprocessing: Vec<(String, usize)> = cfg
        .preprocess_pool
        .iter()
        .map(|&k| {
            let c = runs
                .iter()
                .filter(|r| r.best_spec.preprocessing.contains(&k))
                .count();
            (k.label().to_string(), c)
        })
        .collect();
    let none = runs
        .iter()
        .filter(|r| r.best_spec.preprocessing.is_empty())
        .count();
    preprocessing.push(("none".to_string(), none));

    let mut combos: BTreeMap<Vec<PreprocessKind>, usize> = BTreeMap::new();
    for r in runs {
        *combos.entry(r.best_spec.preprocessing.clone()).or_default() += 1;
    }

    let metrics = cfg
        .metric_pool
        .iter()
        .map(|&k| {
            let weights: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.best_spec.weights.get(&k).copied())
                .collect();
            MetricUsage {
                metric: k,
                used_in: weights.len(),
                weight: MeanStd::of(&weights),
            }
        })
        .collect();

    Summary {
        best_fitness: stat(&|r| r.best_fitness),
        rule_count: stat(&|r| r.rule_count as f64),
        np: stat(&|r| r.best_spec.np as f64),
        maxfes: stat(&|r| r.best_spec.maxfes as f64),
        algorithms: frequencies(algorithms, n),
        preprocessing: frequencies(preprocessing, n),
        preprocessing_combinations: frequencies(
            combos.into_iter().map(|(k, c)| (combination_label(&k), c)),
            n,
        ),
        metrics,
    }
}

/// Runs `outer.runs` independent searches and aggregates them.
pub fn run_experiment(
    db: &TransactionDatabase,
    cfg: &SearchConfig,
    outer: &OuterConfig,
) -> Result<AggregateReport> {
    cfg.validate()?;
    outer.validate()?;
    let runs: Vec<RunReport> = if outer.parallel {
        (0..outer.runs)
            .into_par_iter()
            .map(|i| search(db, cfg, outer, i))
            .collect::<Result<_>>()?
    } else {
        (0..outer.runs)
            .map(|i| search(db, cfg, outer, i))
            .collect::<Result<_>>()?
    };
    Ok(AggregateReport {
        format: REPORT_FORMAT,
        rule_codec: RULE_CODEC.to_string(),
        metric_convention: METRIC_CONVENTION.to_string(),
        dataset: DatasetSummary {
            name: None,
            transactions: db.n_transactions(),
            attributes: db.n_attributes(),
        },
        search: cfg.clone(),
        outer: outer.clone(),
        summary: summarize(cfg, &runs),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_csv;

    fn toy() -> TransactionDatabase {
        parse_csv("A,B\n2,r\n5,r\n7,g\n9,b\n".as_bytes(), true).unwrap()
    }

    fn small() -> (SearchConfig, OuterConfig) {
        let cfg = SearchConfig {
            np_range: (10, 12),
            maxfes_range: (100, 200),
            ..SearchConfig::default()
        };
        let outer = OuterConfig {
            outer_np: 6,
            outer_maxfes: 18,
            runs: 3,
            base_seed: 11,
            ..OuterConfig::default()
        };
        (cfg, outer)
    }

    #[test]
    fn mean_std() {
        assert_eq!(MeanStd::of(&[]), None);
        assert_eq!(
            MeanStd::of(&[0.4]),
            Some(MeanStd {
                mean: 0.4,
                std: 0.0
            })
        );
        let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn run_is_elitist_and_rematerialized() {
        let (cfg, outer) = small();
        let r = search(&toy(), &cfg, &outer, 0).unwrap();
        assert!(r.best_fitness >= r.initial_best_fitness);
        assert_eq!(r.evaluations, 18);
        assert_eq!(r.fitness_trace.last().unwrap().fitness, r.best_fitness);
        let again =
            evaluate_pipeline(&r.best_genotype, &toy(), &cfg, r.best_evaluation_seed).unwrap();
        assert_eq!(again.fitness, r.best_fitness);
        assert_eq!(again.archive.len(), r.rule_count);
        assert_eq!(r.rules.len(), r.rule_count);
        assert!(r.wall_time.is_none());
    }

    #[test]
    fn experiment_is_deterministic_and_parallel_safe() {
        let (cfg, outer) = small();
        let a = run_experiment(&toy(), &cfg, &outer).unwrap();
        let b = run_experiment(
            &toy(),
            &cfg,
            &OuterConfig {
                parallel: true,
                ..outer.clone()
            },
        )
        .unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.runs.len(), 3);
        let combos: usize = a
            .summary
            .preprocessing_combinations
            .iter()
            .map(|f| f.count)
            .sum();
        assert_eq!(combos, 3);
        let algs: usize = a.summary.algorithms.iter().map(|f| f.count).sum();
        assert_eq!(algs, 3);
    }

    #[test]
    fn single_run_summary_has_zero_spread() {
        let (cfg, outer) = small();
        let a = run_experiment(&toy(), &cfg, &OuterConfig { runs: 1, ..outer }).unwrap();
        assert_eq!(a.summary.best_fitness.mean, a.runs[0].best_fitness);
        assert_eq!(a.summary.best_fitness.std, 0.0);
    }

    #[test]
    fn invalid_outer_budget() {
        let (cfg, outer) = small();
        let bad = OuterConfig {
            outer_maxfes: 3,
            ..outer
        };
        assert!(matches!(
            search(&toy(), &cfg, &bad, 0),
            Err(crate::Error::Search(SearchError::InvalidConfig(_)))
        ));
    }
}
