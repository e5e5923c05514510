//! Energy-statistics clustering in reproducing-kernel spaces.
//!
//! The clustering problem is to maximize `Q = sum_j q_j / s_j` over
//! partitions, where `q_j` sums weighted kernel values inside cluster `j`.
//! Maximizing `Q` is the same as minimizing the within energy dispersion `W`
//! and maximizing the between-sample energy statistic `S`.
//!
//! - [`kernels`]: semimetrics of negative type, induced kernels, Gram matrices.
//! - [`energy`]: weighted `g`, `W`, `S` and the energy distance.
//! - [`cluster`]: kernel k-groups (Hartigan) and weighted kernel k-means (Lloyd).
//! - [`spectral`]: the spectral relaxation baseline.
//! - [`exact1d`]: the exact two-class solver for one-dimensional data.
//! - [`eval`]: accuracy, adjusted Rand index, Monte-Carlo summaries.
//! - [`datagen`]: seeded synthetic benchmark generators.
//! - [`io`] and [`experiment`]: CSV ingestion and the benchmark harness.

pub mod cluster;
pub mod datagen;
pub mod energy;
pub mod error;
pub mod eval;
pub mod exact1d;
pub mod experiment;
pub mod io;
pub mod kernels;
pub mod matrix;
pub mod seed;
pub mod spectral;

pub use cluster::{solve, Algorithm, ClusteringResult, InitStrategy, SolverConfig};
pub use energy::{Partition, SemimetricMatrix, Weights};
pub use error::{Error, Result};
pub use eval::{accuracy, adjusted_rand, monte_carlo_summary};
pub use exact1d::solve_exact_2class;
pub use experiment::{run_experiment, ExperimentConfig, Method};
pub use kernels::{gram_matrix, GramMatrix, KernelSpec, SemimetricFamily, SemimetricSpec};
pub use spectral::spectral_cluster;
