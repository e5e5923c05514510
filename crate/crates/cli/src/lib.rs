//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! failures while running.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgroups::cluster::{InitStrategy, SolverConfig};
use kgroups::datagen::{generate, Builtin, VarianceConvention};
use kgroups::eval::LabelComparison;
use kgroups::experiment::{run_experiment, run_method, DatasetSource, ExperimentConfig, Method};
use kgroups::io::{
    load_csv, parse_key_values, write_dataset, write_gram, CsvOptions, LabelColumn, MissingPolicy, RawTable,
};
use kgroups::kernels::{gram_matrix, KernelSpec, SemimetricFamily, SemimetricSpec};
use kgroups::solve_exact_2class;
use serde_json::json;

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<kgroups::Error> for CliError {
    fn from(e: kgroups::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "kgroups", version, about = "Energy-statistics clustering in kernel spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster one dataset and report labels and objective.
    Cluster(ClusterArgs),
    /// Monte-Carlo benchmark over trials.
    Benchmark(BenchmarkArgs),
    /// Write a builtin synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Exact two-class solver for one-dimensional data.
    Exact1d(Exact1dArgs),
    /// Write the Gram matrix of a dataset.
    Gram(GramArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Kmeanspp,
    Random,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// CSV file, one observation per row.
    #[arg(long)]
    input: PathBuf,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
    /// Truth label column, by zero-based index or header name.
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, default_value = "?")]
    missing_token: String,
}

impl InputArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.header,
            label_column: label_column(self.label_column.as_deref()),
            missing_token: self.missing_token.clone(),
        }
    }
}

fn label_column(arg: Option<&str>) -> LabelColumn {
    match arg {
        None => LabelColumn::None,
        Some(s) => s.parse().map_or_else(|_| LabelColumn::Name(s.to_string()), LabelColumn::Index),
    }
}

#[derive(Args, Debug, Clone)]
struct KernelArgs {
    /// Semimetric family: alpha, expabs or expsquare.
    #[arg(long, default_value = "alpha")]
    kernel: String,
    /// Family parameter (alpha or sigma).
    #[arg(long, default_value_t = 1.0)]
    param: f64,
}

impl KernelArgs {
    fn spec(&self) -> CliResult<KernelSpec> {
        kernel_spec(&self.kernel, self.param)
    }
}

fn kernel_spec(family: &str, param: f64) -> CliResult<KernelSpec> {
    let family = SemimetricFamily::from_str(family).map_err(|e| config_err(e.to_string()))?;
    let semimetric = SemimetricSpec::new(family, param).map_err(|e| config_err(e.to_string()))?;
    Ok(KernelSpec::new(semimetric))
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    k: i64,
    /// kgroups, kernelkmeans (or kmeans), spectral or exact1d.
    #[arg(long, default_value = "kgroups")]
    algorithm: String,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Kmeanspp)]
    init: InitArg,
    #[arg(long, default_value_t = 100)]
    max_passes: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// gauss1, gauss2, gauss20, loggauss20, unbalanced, cigars, circles, normal1d or lognormal1d.
    #[arg(long)]
    name: String,
    /// Sample size; the benchmark's own size when absent.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of gauss1 and gauss2.
    #[arg(long)]
    dim: Option<usize>,
    /// Imbalance of the unbalanced mixture.
    #[arg(long)]
    m: Option<usize>,
    /// Reading of N(a, b) in the one-dimensional mixtures: stddev or variance.
    #[arg(long, default_value = "stddev")]
    variance_convention: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Exact1dArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct GramArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Every field is optional so values from `--config` can fill the gaps.
#[derive(Args, Debug, Default)]
struct BenchmarkArgs {
    /// Flat `key = value` file using the long flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    variance_convention: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    header: Option<bool>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    missing_token: Option<String>,
    /// Dermatology data file; replaces --input.
    #[arg(long)]
    dermatology: Option<PathBuf>,
    #[arg(long)]
    drop_missing: Option<bool>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    param: Option<f64>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    max_passes: Option<usize>,
    /// Directory for trials.csv and summary.json.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Record wall-clock seconds per trial.
    #[arg(long)]
    timing: Option<bool>,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Exact1d(args) => cmd_exact1d(&args),
        Command::Gram(args) => cmd_gram(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_k(k: i64) -> CliResult<usize> {
    if k < 2 {
        return Err(config_err(format!("--k must be at least 2, got {k}")));
    }
    Ok(k as usize)
}

fn parse_method(s: &str) -> CliResult<Method> {
    s.parse().map_err(|_| config_err(format!("unknown algorithm {s:?}")))
}

fn parse_init(s: &str) -> CliResult<InitStrategy> {
    match s {
        "kmeanspp" => Ok(InitStrategy::KMeansPlusPlus),
        "random" => Ok(InitStrategy::Random),
        other => Err(config_err(format!("unknown init {other:?}"))),
    }
}

fn solver_config(restarts: usize, seed: u64, init: InitStrategy, max_passes: usize) -> CliResult<SolverConfig> {
    let config = SolverConfig { restarts, seed, init, max_passes, ..Default::default() };
    config.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(config)
}

fn truth_of(table: &RawTable) -> CliResult<Option<Vec<usize>>> {
    Ok(match table.labels {
        Some(_) => Some(table.encoded_labels()?),
        None => None,
    })
}

fn cmd_cluster(args: &ClusterArgs) -> CliResult<()> {
    let k = parse_k(args.k)?;
    let method = parse_method(&args.algorithm)?;
    let kernel = args.kernel.spec()?;
    let init = match args.init {
        InitArg::Kmeanspp => InitStrategy::KMeansPlusPlus,
        InitArg::Random => InitStrategy::Random,
    };
    let solver = solver_config(args.restarts, args.seed, init, args.max_passes)?;
    if method == Method::Exact1D && k != 2 {
        return Err(config_err("exact1d solves k = 2 only"));
    }

    let table = load_csv(&args.input.input, &args.input.options())?;
    let points = table.dense()?;
    let truth = truth_of(&table)?;
    let gram = match method {
        Method::Exact1D => None,
        _ => Some(gram_matrix(&kernel, &points)?),
    };
    let outcome = run_method(method, gram.as_ref(), &points, k, &solver)?;
    let labels = outcome.assignment.labels();
    let scores = match &truth {
        Some(t) => {
            let cmp = LabelComparison::new(labels, t)?;
            Some((cmp.accuracy(), cmp.adjusted_rand()))
        }
        None => None,
    };

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => {
            writeln!(out, "label")?;
            for l in labels {
                writeln!(out, "{l}")?;
            }
        }
        Format::Json => {
            let mut doc = json!({
                "algorithm": method.name(),
                "k": k,
                "objective": outcome.objective,
                "passes": outcome.passes,
                "labels": labels,
            });
            if let Some((acc, ari)) = scores {
                doc["accuracy"] = json!(acc);
                doc["arand"] = json!(ari);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("plain json"))?;
        }
    }
    out.flush()?;
    let mut summary = format!("objective={} passes={}", outcome.objective, outcome.passes);
    if let Some((acc, ari)) = scores {
        summary.push_str(&format!(" accuracy={acc} arand={ari}"));
    }
    eprintln!("{summary}");
    Ok(())
}

fn convention(s: &str) -> CliResult<VarianceConvention> {
    s.parse().map_err(|_| config_err(format!("unknown variance convention {s:?}")))
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let builtin =
        Builtin::from_name(&args.name, args.dim, args.m).map_err(|_| config_err(format!("unknown dataset {:?}", args.name)))?;
    let conv = convention(&args.variance_convention)?;
    builtin.generator(conv).map_err(|e| config_err(e.to_string()))?;
    let n = args.n.unwrap_or_else(|| builtin.default_size());
    if n == 0 {
        return Err(config_err("--n must be at least 1"));
    }
    let data = generate(builtin, conv, n, args.seed)?;
    let out = open_output(args.output.as_deref())?;
    write_dataset(out, &data.points, Some(data.labels.labels()))?;
    Ok(())
}

fn cmd_exact1d(args: &Exact1dArgs) -> CliResult<()> {
    let table = load_csv(&args.input.input, &args.input.options())?;
    if table.cols() != 1 {
        return Err(CliError::Runtime(format!("exact1d needs one data column, found {}", table.cols())));
    }
    let values: Vec<f64> = table.dense()?.into_iter().map(|r| r[0]).collect();
    let result = solve_exact_2class(&values)?;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let (below, above) = (sorted[result.split - 1], sorted[result.split]);
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => {
            writeln!(out, "label")?;
            for l in result.partition.labels() {
                writeln!(out, "{l}")?;
            }
        }
        Format::Json => {
            let doc = json!({
                "split": result.split,
                "within": result.within,
                "threshold": [below, above],
                "labels": result.partition.labels(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("plain json"))?;
        }
    }
    out.flush()?;
    eprintln!("split={} within={} between {below} and {above}", result.split, result.within);
    Ok(())
}

fn cmd_gram(args: &GramArgs) -> CliResult<()> {
    let kernel = args.kernel.spec()?;
    let table = load_csv(&args.input.input, &args.input.options())?;
    let gram = gram_matrix(&kernel, &table.dense()?)?;
    let out = open_output(args.output.as_deref())?;
    write_gram(out, &gram)?;
    Ok(())
}

/// Flag values, falling back to the config file.
struct Merged {
    file: BTreeMap<String, String>,
}

impl Merged {
    const KEYS: [&'static str; 23] = [
        "name", "n", "dim", "m", "variance_convention", "input", "header", "label_column", "missing_token",
        "dermatology", "drop_missing", "kernel", "param", "k", "algorithm", "trials", "restarts", "seed", "init",
        "max_passes", "output", "format", "timing",
    ];

    fn new(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                let map = parse_key_values(&text).map_err(|e| config_err(e.to_string()))?;
                map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect()
            }
        };
        if let Some(bad) = file.keys().find(|k| !Self::KEYS.contains(&k.as_str())) {
            return Err(config_err(format!("unknown config key {bad:?}")));
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| config_err(format!("invalid value {raw:?} for {key}"))),
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

fn cmd_benchmark(args: BenchmarkArgs) -> CliResult<()> {
    let cfg = Merged::new(args.config.as_deref())?;
    let name: Option<String> = cfg.get(args.name, "name")?;
    let input: Option<PathBuf> = cfg.get(args.input, "input")?;
    let dermatology: Option<PathBuf> = cfg.get(args.dermatology, "dermatology")?;
    let source = match (name, input, dermatology) {
        (Some(name), None, None) => {
            let builtin = Builtin::from_name(&name, cfg.get(args.dim, "dim")?, cfg.get(args.m, "m")?)
                .map_err(|_| config_err(format!("unknown dataset {name:?}")))?;
            let conv = convention(&cfg.get(args.variance_convention, "variance_convention")?.unwrap_or("stddev".into()))?;
            builtin.generator(conv).map_err(|e| config_err(e.to_string()))?;
            let n = cfg.get(args.n, "n")?.unwrap_or_else(|| builtin.default_size());
            if n == 0 {
                return Err(config_err("n must be at least 1"));
            }
            DatasetSource::Builtin { builtin, n, convention: conv }
        }
        (None, Some(path), None) => {
            let label = cfg.get(args.label_column, "label_column")?;
            if label.is_none() {
                return Err(config_err("a benchmark on a CSV file needs --label-column"));
            }
            DatasetSource::Csv {
                path,
                options: CsvOptions {
                    has_header: cfg.get(args.header, "header")?.unwrap_or(false),
                    label_column: label_column(label.as_deref()),
                    missing_token: cfg.get(args.missing_token, "missing_token")?.unwrap_or("?".into()),
                },
            }
        }
        (None, None, Some(path)) => {
            let policy = if cfg.get(args.drop_missing, "drop_missing")?.unwrap_or(false) {
                MissingPolicy::DropMissing
            } else {
                MissingPolicy::MeanImpute
            };
            DatasetSource::Dermatology { path, policy }
        }
        _ => return Err(config_err("give exactly one of --name, --input or --dermatology")),
    };
    let kernel = kernel_spec(
        &cfg.get(args.kernel, "kernel")?.unwrap_or("alpha".into()),
        cfg.get(args.param, "param")?.unwrap_or(1.0),
    )?;
    let k = parse_k(cfg.get(args.k, "k")?.ok_or_else(|| config_err("--k is required"))?)?;
    let method = parse_method(&cfg.get(args.algorithm, "algorithm")?.unwrap_or("kgroups".into()))?;
    if method == Method::Exact1D && k != 2 {
        return Err(config_err("exact1d solves k = 2 only"));
    }
    let init = parse_init(&cfg.get(args.init, "init")?.unwrap_or("kmeanspp".into()))?;
    let seed = cfg.get(args.seed, "seed")?.unwrap_or(0);
    let solver = solver_config(
        cfg.get(args.restarts, "restarts")?.unwrap_or(5),
        seed,
        init,
        cfg.get(args.max_passes, "max_passes")?.unwrap_or(100),
    )?;
    let trials = cfg.get(args.trials, "trials")?.unwrap_or(10);
    if trials == 0 {
        return Err(config_err("trials must be at least 1"));
    }
    let format = cfg.get(args.format, "format")?.unwrap_or(Format::Json);
    let config = ExperimentConfig {
        source,
        kernel,
        method,
        k,
        solver,
        trials,
        seed,
        output: cfg.get(args.output, "output")?,
        timing: cfg.get(args.timing, "timing")?.unwrap_or(true),
    };
    let record = run_experiment(&config)?;
    let mut out = io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&record).expect("plain json"))?,
        Format::Csv => {
            writeln!(out, "trial,seed,accuracy,arand,objective,passes,seconds")?;
            for t in &record.trials {
                writeln!(out, "{},{},{},{},{},{},{}", t.trial, t.seed, t.accuracy, t.arand, t.objective, t.passes, t.seconds)?;
            }
        }
    }
    eprintln!(
        "{} trials: accuracy {:.4} +/- {:.4}, arand {:.4} +/- {:.4}",
        record.trials.len(),
        record.accuracy.mean,
        record.accuracy.sem,
        record.arand.mean,
        record.arand.sem
    );
    Ok(())
}
