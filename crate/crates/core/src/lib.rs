//! Automated construction of numerical association rule mining pipelines.
//!
//! An outer population-based optimizer searches a real-valued encoding of
//! complete mining pipelines (inner algorithm, its population size and
//! evaluation budget, a preprocessing chain, a metric selection and metric
//! weights). Each candidate is scored by decoding it and running the inner
//! rule miner it describes on the dataset.
//!
//! Module map:
//!
//! * [`dataset`]: CSV loading and schema inference.
//! * [`preprocess`]: the preprocessing pool.
//! * [`rules`]: rules and the rule vector codec.
//! * [`metrics`]: rule quality metrics and the inner fitness.
//! * [`optimizers`]: the six population-based maximizers.
//! * [`inner_miner`]: one rule-mining run producing a rule archive.
//! * [`pipeline`]: the pipeline genotype, its decoding and its fitness.
//! * [`search`]: the outer search loop and multi-run experiments.
//! * [`report`]: Wilcoxon signed-rank test and report serialization.
//! * [`config`]: the flat `key = value` configuration format.

pub mod config;
pub mod dataset;
pub mod inner_miner;
pub mod metrics;
pub mod optimizers;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod rules;
pub mod search;
pub mod seed;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error(transparent)]
    Rule(#[from] rules::RuleError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Optimizer(#[from] optimizers::OptimizerError),
    #[error(transparent)]
    Pipeline(#[from] pipeline::PipelineError),
    #[error(transparent)]
    Search(#[from] search::SearchError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
