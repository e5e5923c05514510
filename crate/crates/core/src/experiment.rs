//! Monte-Carlo benchmark harness.
//!
//! Trial `t` uses the seed `derive_seed(config.seed, t)`. A builtin source
//! draws a fresh sample from that seed; a fixed dataset is loaded once and
//! only the solver initialization changes between trials. Each dataset gets
//! exactly one Gram matrix.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{solve, Algorithm, SolverConfig};
use crate::datagen::{generate, Builtin, VarianceConvention};
use crate::energy::{Partition, Weights};
use crate::error::{Error, Result};
use crate::eval::{monte_carlo_summary, LabelComparison, MonteCarloSummary};
use crate::exact1d::solve_exact_2class;
use crate::io::{load_csv, load_dermatology, preprocess_dermatology, CsvOptions, MissingPolicy};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec};
use crate::seed::derive_seed;
use crate::spectral::spectral_cluster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    KGroups,
    KernelKMeans,
    Spectral,
    /// One-dimensional, two clusters, `|x - y|`; ignores the kernel.
    Exact1D,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KGroups => "kgroups",
            Self::KernelKMeans => "kernelkmeans",
            Self::Spectral => "spectral",
            Self::Exact1D => "exact1d",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kgroups" => Ok(Self::KGroups),
            "kernelkmeans" | "kmeans" => Ok(Self::KernelKMeans),
            "spectral" => Ok(Self::Spectral),
            "exact1d" => Ok(Self::Exact1D),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Builtin { builtin: Builtin, n: usize, convention: VarianceConvention },
    /// Truth labels must be configured in `options`.
    Csv { path: PathBuf, options: CsvOptions },
    Dermatology { path: PathBuf, policy: MissingPolicy },
    InMemory { points: Vec<Vec<f64>>, labels: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub kernel: KernelSpec,
    pub method: Method,
    pub k: usize,
    /// `solver.seed` is ignored; each trial derives its own.
    pub solver: SolverConfig,
    pub trials: usize,
    pub seed: u64,
    /// Directory for `trials.csv` and `summary.json`.
    pub output: Option<PathBuf>,
    /// Record wall-clock seconds; when off every trial reports 0 and the
    /// artifacts are reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.method == Method::Exact1D {
            if self.k != 2 {
                return Err(Error::InvalidParameter("exact1d solves k = 2 only".into()));
            }
        } else if self.k < 2 {
            return Err(Error::InvalidParameter(format!("k = {} must be >= 2", self.k)));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub arand: f64,
    /// `Q` for the kernel methods; minimal within dispersion for exact1d.
    pub objective: f64,
    pub passes: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: Method,
    pub k: usize,
    pub trials: Vec<TrialRecord>,
    pub accuracy: MonteCarloSummary,
    pub arand: MonteCarloSummary,
    pub gram_builds: usize,
}

impl ResultRecord {
    fn from_trials(method: Method, k: usize, trials: Vec<TrialRecord>, gram_builds: usize) -> Result<Self> {
        let acc: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
        let ari: Vec<f64> = trials.iter().map(|t| t.arand).collect();
        Ok(Self {
            method,
            k,
            accuracy: monte_carlo_summary(&acc)?,
            arand: monte_carlo_summary(&ari)?,
            trials,
            gram_builds,
        })
    }

    /// Writes `trials.csv` and `summary.json` into `dir`, creating it if needed.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut wtr = csv::Writer::from_path(dir.join("trials.csv"))?;
        for t in &self.trials {
            wtr.serialize(t)?;
        }
        wtr.flush()?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), json + "\n")?;
        Ok(())
    }
}

/// Labels and score of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub assignment: Partition,
    pub objective: f64,
    pub passes: usize,
}

/// Runs `method` once with unit weights. `gram` is required for every
/// method except exact1d, which reads the one-dimensional `points`.
pub fn run_method(
    method: Method,
    gram: Option<&GramMatrix>,
    points: &[Vec<f64>],
    k: usize,
    solver: &SolverConfig,
) -> Result<Outcome> {
    let need_gram = || gram.ok_or_else(|| Error::InvalidParameter(format!("{method} needs a Gram matrix")));
    let result = match method {
        Method::KGroups => solve(need_gram()?, &Weights::unit(points.len()), k, solver, Algorithm::KGroups)?,
        Method::KernelKMeans => solve(need_gram()?, &Weights::unit(points.len()), k, solver, Algorithm::KernelKMeans)?,
        Method::Spectral => spectral_cluster(need_gram()?, &Weights::unit(points.len()), k, solver)?,
        Method::Exact1D => {
            if k != 2 {
                return Err(Error::InvalidParameter("exact1d solves k = 2 only".into()));
            }
            let values = one_dimensional(points)?;
            let r = solve_exact_2class(&values)?;
            return Ok(Outcome { assignment: r.partition, objective: r.within, passes: 0 });
        }
    };
    Ok(Outcome { assignment: result.assignment, objective: result.objective, passes: result.passes })
}

fn one_dimensional(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| match p.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::DimensionMismatch { expected: 1, got: p.len() }),
        })
        .collect()
}

struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

fn load_fixed(source: &DatasetSource) -> Result<Option<Dataset>> {
    Ok(match source {
        DatasetSource::Builtin { .. } => None,
        DatasetSource::Csv { path, options } => {
            let table = load_csv(path, options)?;
            Some(Dataset { points: table.dense()?, labels: table.encoded_labels()? })
        }
        DatasetSource::Dermatology { path, policy } => {
            let prepared = preprocess_dermatology(&load_dermatology(path)?, *policy)?;
            Some(Dataset { points: prepared.points, labels: prepared.labels })
        }
        DatasetSource::InMemory { points, labels } => {
            if points.len() != labels.len() {
                return Err(Error::LengthMismatch { left: points.len(), right: labels.len() });
            }
            Some(Dataset { points: points.clone(), labels: labels.clone() })
        }
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let builds = AtomicUsize::new(0);
    let build = |points: &[Vec<f64>]| -> Result<Option<GramMatrix>> {
        if config.method == Method::Exact1D {
            return Ok(None);
        }
        builds.fetch_add(1, Ordering::Relaxed);
        gram_matrix(&config.kernel, points).map(Some)
    };
    let fixed = load_fixed(&config.source)?;
    let fixed_gram = match &fixed {
        Some(d) => build(&d.points)?,
        None => None,
    };

    let trial = |t: usize| -> Result<TrialRecord> {
        let seed = derive_seed(config.seed, t as u64);
        let solver = SolverConfig { seed, ..config.solver.clone() };
        let start = Instant::now();
        let sampled;
        let sampled_gram;
        let (data, gram) = match (&fixed, &config.source) {
            (Some(d), _) => (d, fixed_gram.as_ref()),
            (None, DatasetSource::Builtin { builtin, n, convention }) => {
                let ds = generate(*builtin, *convention, *n, seed)?;
                sampled = Dataset { labels: ds.labels.into_labels(), points: ds.points };
                sampled_gram = build(&sampled.points)?;
                (&sampled, sampled_gram.as_ref())
            }
            (None, _) => unreachable!("non-builtin sources are loaded up front"),
        };
        let outcome = run_method(config.method, gram, &data.points, config.k, &solver)?;
        let seconds = if config.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        let cmp = LabelComparison::new(outcome.assignment.labels(), &data.labels)?;
        Ok(TrialRecord {
            trial: t,
            seed,
            accuracy: cmp.accuracy(),
            arand: cmp.adjusted_rand(),
            objective: outcome.objective,
            passes: outcome.passes,
            seconds,
        })
    };
    let trials: Vec<TrialRecord> = (0..config.trials).into_par_iter().map(trial).collect::<Result<_>>()?;

    let gram_builds = builds.load(Ordering::Relaxed);
    let datasets = if fixed.is_some() { 1 } else { config.trials };
    debug_assert!(
        config.method == Method::Exact1D || gram_builds == datasets,
        "{gram_builds} Gram builds for {datasets} datasets"
    );
    let record = ResultRecord::from_trials(config.method, config.k, trials, gram_builds)?;
    if let Some(dir) = &config.output {
        record.write_artifacts(dir)?;
    }
    Ok(record)
}
