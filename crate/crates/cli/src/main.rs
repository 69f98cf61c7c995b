//! `armpipe` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime errors (bad data, I/O, failed
//! runs), 2 on usage errors (bad flags or configuration file).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use armpipe::config::{check_keys, load_config};
use armpipe::dataset::{load_csv, Domain, TransactionDatabase};
use armpipe::metrics::MetricKind;
use armpipe::optimizers::{OptimizerKind, OptimizerParams};
use armpipe::pipeline::{run_spec, PipelineSpec, SearchConfig};
use armpipe::preprocess::{PreprocessKind, PreprocessParams};
use armpipe::report::{
    emit_report, load_run_fitness, render_summary, wilcoxon_signed_rank, write_csv, write_json,
    ReportFormat,
};
use armpipe::search::{rule_records, run_experiment, search, OuterConfig, RuleRecord};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "armpipe",
    version,
    about = "Search for numerical association rule mining pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a dataset loads and print its schema.
    Validate(ValidateArgs),
    /// Run one explicitly specified pipeline and print its rules.
    Mine(MineArgs),
    /// Run a single outer search.
    Search(SearchArgs),
    /// Run repeated outer searches and aggregate them into a report.
    Experiment(SearchArgs),
    /// Wilcoxon signed-rank test on the per-run best fitness of two reports.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Read further options from a `key = value` file; command-line flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with one transaction per row.
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// The first row holds data, not column names.
    #[arg(long)]
    no_header: bool,
    /// Columns to remove after loading, e.g. a class label.
    #[arg(long, value_name = "NAMES", value_delimiter = ',')]
    drop: Vec<String>,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<TransactionDatabase> {
        let db = load_csv(&self.dataset, !self.no_header)
            .with_context(|| format!("loading {}", self.dataset.display()))?;
        if self.drop.is_empty() {
            Ok(db)
        } else {
            Ok(db.drop_columns(&self.drop)?)
        }
    }
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Fraction of transactions kept by data squashing.
    #[arg(long, default_value_t = 0.5)]
    squash_ratio: f64,
    /// Absolute Pearson correlation at which a column is removed.
    #[arg(long, default_value_t = 0.95)]
    rhc_threshold: f64,
    /// Number of bins for k-means discretization.
    #[arg(long, default_value_t = 5)]
    dk_k: usize,
}

impl PreprocessArgs {
    fn params(&self) -> PreprocessParams {
        PreprocessParams {
            squash_ratio: self.squash_ratio,
            rhc_threshold: self.rhc_threshold,
            dk_k: self.dk_k,
        }
    }
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prep: PreprocessArgs,
    /// Inner algorithm: PSO, DE, GA, ILSHADE, LSHADE or jDE.
    #[arg(long)]
    algorithm: OptimizerKind,
    #[arg(long, default_value_t = 20)]
    np: usize,
    #[arg(long, default_value_t = 5000)]
    maxfes: usize,
    /// Preprocessing methods (MM, ZS, DS, RHC, DK) or `none`.
    #[arg(long, value_name = "METHODS", default_value = "none")]
    preprocess: String,
    /// Metrics of the rule fitness.
    #[arg(long, value_delimiter = ',', default_value = "Supp,Conf")]
    metrics: Vec<MetricKind>,
    /// One weight per metric, in the same order. All 1 when omitted.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prep: PreprocessArgs,
    /// Outer optimizer.
    #[arg(long, default_value = "de")]
    outer: OptimizerKind,
    #[arg(long, default_value_t = 30)]
    outer_np: usize,
    /// Pipeline evaluations per run.
    #[arg(long, default_value_t = 1000)]
    outer_fes: usize,
    /// Independent runs (experiment only).
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Run index (search only); selects the run seed.
    #[arg(long, default_value_t = 0)]
    run_index: usize,
    /// Inner algorithms the search may choose from.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "PSO,DE,GA,ILSHADE,LSHADE,jDE"
    )]
    algorithms: Vec<OptimizerKind>,
    /// Preprocessing methods the search may choose from.
    #[arg(long, value_delimiter = ',', default_value = "MM,ZS,DS,RHC,DK")]
    preprocessing: Vec<PreprocessKind>,
    /// Metrics the search may choose from.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "Supp,Conf,Cover,Amp,Incl,Comp"
    )]
    metrics: Vec<MetricKind>,
    #[arg(long, default_value_t = 10)]
    np_min: usize,
    #[arg(long, default_value_t = 30)]
    np_max: usize,
    #[arg(long, default_value_t = 2000)]
    maxfes_min: usize,
    #[arg(long, default_value_t = 10000)]
    maxfes_max: usize,
    /// Let the search choose metric weights.
    #[arg(long, default_value_t = false, action = ArgAction::Set, value_name = "BOOL")]
    weight_adaptation: bool,
    /// Most preprocessing methods in one pipeline.
    #[arg(long, default_value_t = 5)]
    max_preprocess: usize,
    /// Weight of mean support in the pipeline fitness.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Weight of mean confidence in the pipeline fitness.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall-clock time per run (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Report of the first experiment (JSON, or CSV with a best_fitness column).
    first: PathBuf,
    /// Report of the second experiment.
    second: PathBuf,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

impl SearchArgs {
    fn configs(&self) -> (SearchConfig, OuterConfig) {
        let cfg = SearchConfig {
            algorithm_pool: self.algorithms.clone(),
            preprocess_pool: self.preprocessing.clone(),
            metric_pool: self.metrics.clone(),
            np_range: (self.np_min, self.np_max),
            maxfes_range: (self.maxfes_min, self.maxfes_max),
            weight_adaptation: self.weight_adaptation,
            alpha: self.alpha,
            beta: self.beta,
            max_preprocess: self.max_preprocess,
            preprocess_params: self.prep.params(),
            optimizer_params: OptimizerParams::published(),
        };
        let outer = OuterConfig {
            outer_kind: self.outer,
            outer_np: self.outer_np,
            outer_maxfes: self.outer_fes,
            runs: self.runs,
            base_seed: self.seed,
            record_time: self.timing,
            parallel: self.jobs != 1,
        };
        (cfg, outer)
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()?)
    }
}

fn write_output(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(path)
                    .with_context(|| format!("creating {}", path.display()))?,
            );
            write(&mut f)?;
            f.flush()?;
        }
        None => write(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> anyhow::Result<()> {
    let db = args.data.load()?;
    println!(
        "{} transactions, {} attributes",
        db.n_transactions(),
        db.n_attributes()
    );
    for a in db.attributes() {
        match &a.domain {
            Domain::Numeric { min, max } => {
                println!("  {:<24} numeric      [{min}, {max}]", a.name)
            }
            Domain::Categorical { categories } => {
                println!("  {:<24} categorical  {} values", a.name, categories.len())
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MineOutput {
    spec: PipelineSpec,
    fitness: f64,
    discarded: bool,
    rule_count: usize,
    mean_support: f64,
    mean_confidence: f64,
    rules: Vec<RuleRecord>,
}

fn parse_preprocess(text: &str) -> anyhow::Result<Vec<PreprocessKind>> {
    if text.trim().eq_ignore_ascii_case("none") || text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut methods = text
        .split(',')
        .map(|m| m.parse::<PreprocessKind>().map_err(anyhow::Error::msg))
        .collect::<anyhow::Result<Vec<_>>>()?;
    methods.sort_unstable();
    methods.dedup();
    Ok(methods)
}

fn mine(args: &MineArgs) -> anyhow::Result<()> {
    let db = args.data.load()?;
    let metrics: BTreeSet<MetricKind> = args.metrics.iter().copied().collect();
    let weights: BTreeMap<MetricKind, f64> = if args.weights.is_empty() {
        metrics.iter().map(|&m| (m, 1.0)).collect()
    } else if args.weights.len() == args.metrics.len() {
        args.metrics
            .iter()
            .copied()
            .zip(args.weights.iter().copied())
            .collect()
    } else {
        bail!(
            "{} weights given for {} metrics",
            args.weights.len(),
            args.metrics.len()
        );
    };
    let spec = PipelineSpec {
        algorithm: args.algorithm,
        np: args.np,
        maxfes: args.maxfes,
        preprocessing: parse_preprocess(&args.preprocess)?,
        metrics,
        weights,
    };
    let cfg = SearchConfig {
        preprocess_params: args.prep.params(),
        ..SearchConfig::default()
    };
    let result = run_spec(spec.clone(), &db, &cfg, args.seed)?;
    let output = MineOutput {
        spec,
        fitness: result.fitness,
        discarded: result.discarded,
        rule_count: result.archive.len(),
        mean_support: result.archive.mean_support(),
        mean_confidence: result.archive.mean_confidence(),
        rules: rule_records(&result),
    };
    write_output(args.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &output)?;
        writeln!(w)?;
        Ok(())
    })
}

fn search_once(args: &SearchArgs) -> anyhow::Result<()> {
    let db = args.data.load()?;
    let (cfg, outer) = args.configs();
    let report = args
        .pool()?
        .install(|| search(&db, &cfg, &outer, args.run_index))?;
    write_output(args.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })
}

fn experiment(args: &SearchArgs) -> anyhow::Result<()> {
    let db = args.data.load()?;
    let (cfg, outer) = args.configs();
    let mut report = args.pool()?.install(|| run_experiment(&db, &cfg, &outer))?;
    report.dataset.name = args
        .data
        .dataset
        .file_name()
        .map(|n| n.to_string_lossy().into_owned());
    let format = match args.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    match &args.out {
        Some(path) => {
            emit_report(&report, format, path)
                .with_context(|| format!("writing {}", path.display()))?;
            print!("{}", render_summary(&report));
        }
        None => {
            let stdout = std::io::stdout().lock();
            match format {
                ReportFormat::Json => write_json(&report, stdout)?,
                ReportFormat::Csv => write_csv(&report, stdout)?,
            }
        }
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> anyhow::Result<()> {
    let a = load_run_fitness(&args.first)
        .with_context(|| format!("reading {}", args.first.display()))?;
    let b = load_run_fitness(&args.second)
        .with_context(|| format!("reading {}", args.second.display()))?;
    let r = wilcoxon_signed_rank(&a, &b)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        println!(
            "W = {} (W+ = {}, W- = {}), n = {}, p = {:.6} ({:?})",
            r.statistic, r.w_plus, r.w_minus, r.n_effective, r.p_value, r.method
        );
    }
    Ok(())
}

/// Finds `--config PATH` (or `--config=PATH`) after the subcommand.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Splices configuration file entries in front of the command-line flags so
/// that later occurrences, i.e. those typed by the user, override them.
fn merge_config(cmd: &clap::Command, args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(pos) = args.iter().position(|a| cmd.find_subcommand(a).is_some()) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&args[pos]).expect("found above");
    let entries = load_config(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let options: Vec<&clap::Arg> = sub
        .get_arguments()
        .filter(|a| a.get_long().is_some_and(|l| l != "config"))
        .collect();
    let known: Vec<&str> = options.iter().filter_map(|a| a.get_long()).collect();
    check_keys(&entries, &known).map_err(|e| format!("{}: {e}", path.display()))?;

    let mut injected = Vec::new();
    for e in &entries {
        let arg = options
            .iter()
            .find(|a| a.get_long() == Some(e.key.as_str()))
            .expect("checked");
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => injected.push(OsString::from(format!("--{}", e.key))),
                "false" | "no" | "0" => {}
                v => {
                    return Err(format!(
                        "{}: line {}: `{}` expects true or false, got `{v}`",
                        path.display(),
                        e.line,
                        e.key
                    ))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{}={}", e.key, e.value)));
        }
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|s| s.args_override_self(true))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Mine(a) => mine(a),
        Command::Search(a) => search_once(a),
        Command::Experiment(a) => experiment(a),
        Command::Compare(a) => compare(a),
    }
}

fn main() -> ExitCode {
    let mut cmd = command();
    let args = match merge_config(&cmd, std::env::args_os().collect()) {
        Ok(args) => args,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match cmd
        .try_get_matches_from_mut(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
