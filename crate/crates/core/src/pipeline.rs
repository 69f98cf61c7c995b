//! Pipeline genotypes and their evaluation.
//!
//! A genotype is a vector in `[0, 1]^D`, `D = 3 + P + 2M`, laid out as
//!
//! ```text
//! algorithm | np, maxfes | p_1 .. p_P | z_1 .. z_M | w_1 .. w_M
//! ```
//!
//! where `P` and `M` are the sizes of the preprocessing and metric pools.
//! The algorithm gene indexes the algorithm pool, the two hyper-parameter
//! genes are mapped affinely onto their integer ranges, a preprocessing
//! method or metric is selected when its gene exceeds 0.5, and the weight
//! genes become metric weights when weight adaptation is on (all weights are
//! 1 otherwise).
//!
//! A decoded pipeline is scored by running it: the preprocessing chain is
//! applied, the inner miner runs, and the fitness is the `alpha`/`beta`
//! blend of the archive's mean support and mean confidence. Pipelines that
//! select no metric or produce no rule are discarded with fitness -1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::TransactionDatabase;
use crate::inner_miner::{mine_with, RuleArchive};
use crate::metrics::{FitnessWeights, MetricKind};
use crate::optimizers::{OptimizerBudget, OptimizerKind, OptimizerParams};
use crate::preprocess::{apply_chain, PreprocessKind, PreprocessParams};
use crate::seed;
use crate::Result;

/// Fitness of a discarded pipeline.
pub const DISCARDED_FITNESS: f64 = -1.0;

/// Smallest metric weight; zero weight genes are raised to it.
pub const MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("genotype has {found} genes, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm_pool: Vec<OptimizerKind>,
    pub preprocess_pool: Vec<PreprocessKind>,
    pub metric_pool: Vec<MetricKind>,
    pub np_range: (usize, usize),
    pub maxfes_range: (usize, usize),
    pub weight_adaptation: bool,
    pub alpha: f64,
    pub beta: f64,
    /// Most preprocessing methods one pipeline may apply.
    pub max_preprocess: usize,
    pub preprocess_params: PreprocessParams,
    pub optimizer_params: OptimizerParams,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm_pool: OptimizerKind::ALL.to_vec(),
            preprocess_pool: PreprocessKind::ALL.to_vec(),
            metric_pool: MetricKind::ALL.to_vec(),
            np_range: (10, 30),
            maxfes_range: (2000, 10000),
            weight_adaptation: false,
            alpha: 1.0,
            beta: 1.0,
            max_preprocess: PreprocessKind::ALL.len(),
            preprocess_params: PreprocessParams::default(),
            optimizer_params: OptimizerParams::published(),
        }
    }
}

fn has_duplicates<T: Ord>(items: &[T]) -> bool {
    let set: BTreeSet<&T> = items.iter().collect();
    set.len() != items.len()
}

impl SearchConfig {
    pub fn dimension(&self) -> usize {
        3 + self.preprocess_pool.len() + 2 * self.metric_pool.len()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.algorithm_pool.is_empty() || self.metric_pool.is_empty() {
            return bad("algorithm and metric pools must be non-empty".into());
        }
        if has_duplicates(&self.algorithm_pool)
            || has_duplicates(&self.preprocess_pool)
            || has_duplicates(&self.metric_pool)
        {
            return bad("pools must not contain duplicates".into());
        }
        let (np_lo, np_hi) = self.np_range;
        let (fes_lo, fes_hi) = self.maxfes_range;
        if np_lo > np_hi || fes_lo > fes_hi {
            return bad(format!(
                "ranges must be ordered: np {np_lo}..{np_hi}, maxfes {fes_lo}..{fes_hi}"
            ));
        }
        if np_lo < 4 {
            return bad(format!(
                "inner population size must be at least 4, got {np_lo}"
            ));
        }
        if fes_lo < np_hi {
            return bad(format!(
                "inner maxfes lower bound {fes_lo} is below the largest population size {np_hi}"
            ));
        }
        let weight_ok = |w: f64| w.is_finite() && w >= 0.0;
        if !(weight_ok(self.alpha) && weight_ok(self.beta) && self.alpha + self.beta > 0.0) {
            return bad(format!(
                "alpha and beta must be non-negative with a positive sum, got {} and {}",
                self.alpha, self.beta
            ));
        }
        self.preprocess_params
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }
}

/// A point of the pipeline search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PipelineGenotype(pub Vec<f64>);

impl PipelineGenotype {
    pub fn genes(&self) -> &[f64] {
        &self.0
    }
}

/// A decoded pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub algorithm: OptimizerKind,
    pub np: usize,
    pub maxfes: usize,
    /// Selected methods in application order.
    pub preprocessing: Vec<PreprocessKind>,
    pub metrics: BTreeSet<MetricKind>,
    pub weights: BTreeMap<MetricKind, f64>,
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Maps a gene onto an index of a pool with `pool_size` members.
pub fn map_scalar_to_pool(x: f64, pool_size: usize) -> usize {
    assert!(pool_size >= 1, "empty pool");
    ((unit(x) * pool_size as f64).floor() as usize).min(pool_size - 1)
}

/// Maps a gene onto the integer range `[lo, hi]`, rounding half up.
pub fn map_hyperparam(y: f64, lo: usize, hi: usize) -> usize {
    assert!(lo <= hi, "unordered range");
    let v = (lo as f64 + unit(y) * (hi - lo) as f64 + 0.5).floor() as usize;
    v.clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeOutcome {
    Pipeline(PipelineSpec),
    /// No metric selected.
    Failure,
}

pub fn decode_pipeline(
    g: &PipelineGenotype,
    cfg: &SearchConfig,
) -> Result<DecodeOutcome, PipelineError> {
    let genes = g.genes();
    let expected = cfg.dimension();
    if genes.len() != expected {
        return Err(PipelineError::DimensionMismatch {
            expected,
            found: genes.len(),
        });
    }
    let p = cfg.preprocess_pool.len();
    let m = cfg.metric_pool.len();
    let prep_genes = &genes[3..3 + p];
    let metric_genes = &genes[3 + p..3 + p + m];
    let weight_genes = &genes[3 + p + m..];

    let metrics: BTreeSet<MetricKind> = cfg
        .metric_pool
        .iter()
        .zip(metric_genes)
        .filter(|(_, &z)| unit(z) > 0.5)
        .map(|(&k, _)| k)
        .collect();
    if metrics.is_empty() {
        return Ok(DecodeOutcome::Failure);
    }
    let weights = cfg
        .metric_pool
        .iter()
        .zip(weight_genes)
        .filter(|(k, _)| metrics.contains(k))
        .map(|(&k, &w)| {
            let w = if cfg.weight_adaptation {
                unit(w).max(MIN_WEIGHT)
            } else {
                1.0
            };
            (k, w)
        })
        .collect();

    let mut chosen: Vec<(f64, PreprocessKind)> = cfg
        .preprocess_pool
        .iter()
        .zip(prep_genes)
        .map(|(&k, &x)| (unit(x), k))
        .filter(|(x, _)| *x > 0.5)
        .collect();
    if chosen.len() > cfg.max_preprocess {
        // strongest genes win; the sort is stable so pool order breaks ties
        chosen.sort_by(|a, b| b.0.total_cmp(&a.0));
        chosen.truncate(cfg.max_preprocess);
    }
    let mut preprocessing: Vec<PreprocessKind> = chosen.into_iter().map(|(_, k)| k).collect();
    preprocessing.sort_unstable();

    Ok(DecodeOutcome::Pipeline(PipelineSpec {
        algorithm: cfg.algorithm_pool[map_scalar_to_pool(genes[0], cfg.algorithm_pool.len())],
        np: map_hyperparam(genes[1], cfg.np_range.0, cfg.np_range.1),
        maxfes: map_hyperparam(genes[2], cfg.maxfes_range.0, cfg.maxfes_range.1),
        preprocessing,
        metrics,
        weights,
    }))
}

/// `(alpha * support + beta * confidence) / (alpha + beta)`.
pub fn surrogate_fitness(mean_support: f64, mean_confidence: f64, alpha: f64, beta: f64) -> f64 {
    (alpha * mean_support + beta * mean_confidence) / (alpha + beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// `None` when the genotype failed to decode.
    pub spec: Option<PipelineSpec>,
    pub archive: RuleArchive,
    /// The database the rules were mined from, after preprocessing.
    pub prepared: Option<TransactionDatabase>,
    pub fitness: f64,
    pub discarded: bool,
}

impl PipelineResult {
    fn discarded(spec: Option<PipelineSpec>) -> Self {
        PipelineResult {
            spec,
            archive: RuleArchive::new(),
            prepared: None,
            fitness: DISCARDED_FITNESS,
            discarded: true,
        }
    }
}

/// Decodes, runs and scores one pipeline. All randomness is derived from `seed`.
pub fn evaluate_pipeline(
    g: &PipelineGenotype,
    db: &TransactionDatabase,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<PipelineResult> {
    match decode_pipeline(g, cfg)? {
        DecodeOutcome::Failure => Ok(PipelineResult::discarded(None)),
        DecodeOutcome::Pipeline(spec) => run_spec(spec, db, cfg, seed),
    }
}

/// Runs an already decoded pipeline. Only the preprocessing parameters,
/// optimizer parameters and `alpha`/`beta` of `cfg` are used.
pub fn run_spec(
    spec: PipelineSpec,
    db: &TransactionDatabase,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<PipelineResult> {
    let prepared = apply_chain(
        db,
        &spec.preprocessing,
        &cfg.preprocess_params,
        seed::derive(seed, 0),
    )?;
    let weights = FitnessWeights::new(&spec.metrics, &spec.weights)?;
    let budget = OptimizerBudget::new(spec.np, spec.maxfes, seed::derive(seed, 1));
    let archive = mine_with(
        &prepared,
        spec.algorithm,
        &budget,
        &weights,
        &cfg.optimizer_params,
    )?;
    if archive.is_empty() {
        return Ok(PipelineResult::discarded(Some(spec)));
    }
    let fitness = surrogate_fitness(
        archive.mean_support(),
        archive.mean_confidence(),
        cfg.alpha,
        cfg.beta,
    );
    Ok(PipelineResult {
        spec: Some(spec),
        archive,
        prepared: Some(prepared),
        fitness,
        discarded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_csv;
    use proptest::prelude::*;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    /// D = 3 + 5 + 12 = 20 with the default pools.
    fn genotype(alg: f64, prep: [f64; 5], z: [f64; 6], w: [f64; 6]) -> PipelineGenotype {
        let mut g = vec![alg, 0.5, 0.5];
        g.extend(prep);
        g.extend(z);
        g.extend(w);
        PipelineGenotype(g)
    }

    #[test]
    fn pool_mapping() {
        assert_eq!(map_scalar_to_pool(0.0, 6), 0);
        assert_eq!(map_scalar_to_pool(1.0, 6), 5);
        assert_eq!(map_scalar_to_pool(0.34, 6), 2);
        assert_eq!(
            OptimizerKind::ALL[map_scalar_to_pool(0.34, 6)],
            OptimizerKind::GA
        );
        assert_eq!(map_scalar_to_pool(0.999, 1), 0);
    }

    #[test]
    fn hyperparam_mapping() {
        assert_eq!(map_hyperparam(0.0, 10, 30), 10);
        assert_eq!(map_hyperparam(1.0, 2000, 10000), 10000);
        assert_eq!(map_hyperparam(0.5, 10, 30), 20);
        // 10 + 0.025 * 20 = 10.5 rounds up
        assert_eq!(map_hyperparam(0.025, 10, 30), 11);
        assert_eq!(map_hyperparam(0.3, 7, 7), 7);
    }

    #[test]
    fn dimension_layout() {
        assert_eq!(cfg().dimension(), 20);
    }

    #[test]
    fn no_metric_is_decode_failure() {
        let g = genotype(0.1, [0.9; 5], [0.5, 0.1, 0.2, 0.3, 0.4, 0.0], [1.0; 6]);
        assert_eq!(decode_pipeline(&g, &cfg()).unwrap(), DecodeOutcome::Failure);
    }

    #[test]
    fn pso_without_preprocessing() {
        let g = genotype(
            0.0,
            [0.4, 0.1, 0.2, 0.3, 0.5],
            [0.9, 0.9, 0.1, 0.1, 0.1, 0.6],
            [0.3; 6],
        );
        let DecodeOutcome::Pipeline(spec) = decode_pipeline(&g, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(spec.algorithm, OptimizerKind::PSO);
        assert!(spec.preprocessing.is_empty());
        assert_eq!(spec.np, 20);
        assert_eq!(spec.maxfes, 6000);
        let expected: BTreeSet<_> = [
            MetricKind::Support,
            MetricKind::Confidence,
            MetricKind::Comprehensibility,
        ]
        .into();
        assert_eq!(spec.metrics, expected);
        assert!(spec.weights.values().all(|&w| w == 1.0));
    }

    #[test]
    fn adapted_weights_are_floored() {
        let c = SearchConfig {
            weight_adaptation: true,
            ..cfg()
        };
        let g = genotype(
            0.0,
            [0.0; 5],
            [0.9, 0.9, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.25, 0.7, 0.7, 0.7, 0.7],
        );
        let DecodeOutcome::Pipeline(spec) = decode_pipeline(&g, &c).unwrap() else {
            panic!()
        };
        assert_eq!(spec.weights[&MetricKind::Support], MIN_WEIGHT);
        assert_eq!(spec.weights[&MetricKind::Confidence], 0.25);
        assert_eq!(spec.weights.len(), 2);
    }

    #[test]
    fn preprocessing_cap_keeps_strongest_genes() {
        let c = SearchConfig {
            max_preprocess: 1,
            ..cfg()
        };
        let g = genotype(0.0, [0.6, 0.9, 0.0, 0.95, 0.0], [0.9; 6], [1.0; 6]);
        let DecodeOutcome::Pipeline(spec) = decode_pipeline(&g, &c).unwrap() else {
            panic!()
        };
        assert_eq!(spec.preprocessing, vec![PreprocessKind::RHC]);
        let DecodeOutcome::Pipeline(spec) = decode_pipeline(&g, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(
            spec.preprocessing,
            vec![PreprocessKind::MM, PreprocessKind::ZS, PreprocessKind::RHC]
        );
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            decode_pipeline(&PipelineGenotype(vec![0.5; 4]), &cfg()),
            Err(PipelineError::DimensionMismatch {
                expected: 20,
                found: 4
            })
        );
    }

    #[test]
    fn surrogate_arithmetic() {
        assert_eq!(surrogate_fitness(0.5, 1.0, 1.0, 1.0), 0.75);
        assert_eq!(surrogate_fitness(0.3, 0.9, 1.0, 0.0), 0.3);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(SearchConfig {
            alpha: 1.0,
            beta: 0.0,
            ..cfg()
        }
        .validate()
        .is_ok());
        assert!(SearchConfig {
            alpha: 0.0,
            beta: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            metric_pool: vec![],
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            np_range: (30, 10),
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            maxfes_range: (20, 100),
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            algorithm_pool: vec![OptimizerKind::DE, OptimizerKind::DE],
            ..cfg()
        }
        .validate()
        .is_err());
    }

    fn toy() -> TransactionDatabase {
        parse_csv("A,B\n2,r\n5,r\n7,g\n9,b\n".as_bytes(), true).unwrap()
    }

    fn small_cfg() -> SearchConfig {
        SearchConfig {
            maxfes_range: (200, 400),
            ..cfg()
        }
    }

    #[test]
    fn evaluation_discards_failures_and_scores_archives() {
        let db = toy();
        let bad = genotype(0.0, [0.0; 5], [0.0; 6], [1.0; 6]);
        let r = evaluate_pipeline(&bad, &db, &small_cfg(), 1).unwrap();
        assert!(r.discarded);
        assert_eq!(r.fitness, -1.0);

        let good = genotype(0.0, [0.0; 5], [0.9, 0.9, 0.0, 0.0, 0.0, 0.0], [1.0; 6]);
        let r = evaluate_pipeline(&good, &db, &small_cfg(), 1).unwrap();
        assert!(!r.discarded);
        let a = &r.archive;
        assert_eq!(r.fitness, (a.mean_support() + a.mean_confidence()) / 2.0);
        assert!((0.0..=1.0).contains(&r.fitness));
        assert_eq!(r, evaluate_pipeline(&good, &db, &small_cfg(), 1).unwrap());

        let support_only = SearchConfig {
            beta: 0.0,
            ..small_cfg()
        };
        let r = evaluate_pipeline(&good, &db, &support_only, 1).unwrap();
        assert_eq!(r.fitness, r.archive.mean_support());
    }

    proptest! {
        #[test]
        fn decode_total_and_spec_valid(genes in proptest::collection::vec(prop_oneof![0.0f64..=1.0, -1.0f64..2.0, Just(f64::NAN)], 20), adapt: bool) {
            let c = SearchConfig { weight_adaptation: adapt, ..cfg() };
            let g = PipelineGenotype(genes);
            let once = decode_pipeline(&g, &c).unwrap();
            prop_assert_eq!(&once, &decode_pipeline(&g, &c).unwrap());
            if let DecodeOutcome::Pipeline(s) = once {
                prop_assert!((10..=30).contains(&s.np));
                prop_assert!((2000..=10000).contains(&s.maxfes));
                prop_assert!(!s.metrics.is_empty());
                prop_assert_eq!(s.weights.keys().copied().collect::<BTreeSet<_>>(), s.metrics.clone());
                for &w in s.weights.values() {
                    if adapt {
                        prop_assert!((MIN_WEIGHT..=1.0).contains(&w));
                    } else {
                        prop_assert_eq!(w, 1.0);
                    }
                }
            }
        }

        #[test]
        fn selected_gene_perturbation_keeps_set(genes in proptest::collection::vec(0.0f64..=1.0, 20), j in 0usize..5, v in 0.5001f64..=1.0) {
            let mut g = genes.clone();
            g[3 + j] = 0.75;
            let mut h = g.clone();
            h[3 + j] = v;
            let a = decode_pipeline(&PipelineGenotype(g), &cfg()).unwrap();
            let b = decode_pipeline(&PipelineGenotype(h), &cfg()).unwrap();
            match (a, b) {
                (DecodeOutcome::Pipeline(a), DecodeOutcome::Pipeline(b)) => prop_assert_eq!(a.preprocessing, b.preprocessing),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }
}
