//! Iterative solvers for `max_Z Q = sum_j q_j / s_j`.
//!
//! Two sweeps share one [`ClusterState`]:
//!
//! - [`kgroups_sweep`] (kernel k-groups, Hartigan's method): each point moves
//!   to the cluster with the largest exact objective gain, if that gain is
//!   positive. `Q` never decreases.
//! - [`kmeans_sweep`] (weighted kernel k-means, Lloyd's method): each point
//!   moves to the nearest cluster mean in feature space.
//!
//! Points are visited in index order; ties between clusters go to the lowest
//! index. A move that would empty its source cluster is never made.

mod hmatrix;
mod init;
mod state;

pub use hmatrix::{build_h_matrix, kernel_kmeans_objective_j, HMatrix};
pub use init::{init_assignment, InitStrategy};
pub use state::{delta_q, objective_q, point_cost, ClusterState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{Partition, Weights};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::seed::derive_seed;

/// Relative tolerance of the cache self-check run after every pass in debug builds.
pub const CACHE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    KGroups,
    KernelKMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_passes: usize,
    /// A k-groups move is accepted only when its gain exceeds this.
    pub move_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_passes: 100,
            move_tolerance: 0.0,
            restarts: 5,
            seed: 0,
            init: InitStrategy::KMeansPlusPlus,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.move_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("move_tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignment: Partition,
    /// Final `Q`, recomputed from the labels.
    pub objective: f64,
    pub passes: usize,
    pub moves: usize,
    /// The last pass made no moves.
    pub converged: bool,
    /// Cached `Q` after each pass.
    pub objective_trace: Vec<f64>,
}

/// One accepted move, reported to sweep observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveRecord {
    pub point: usize,
    pub from: usize,
    pub to: usize,
    /// Closed-form change in `Q`.
    pub gain: f64,
}

/// One Hartigan pass; returns the number of accepted moves.
pub fn kgroups_sweep(state: &mut ClusterState, gram: &GramMatrix, weights: &Weights, config: &SolverConfig) -> usize {
    kgroups_sweep_with(state, gram, weights, config, |_| {})
}

pub fn kgroups_sweep_with<F>(
    state: &mut ClusterState,
    gram: &GramMatrix,
    weights: &Weights,
    config: &SolverConfig,
    mut on_move: F,
) -> usize
where
    F: FnMut(&MoveRecord),
{
    let k = state.k();
    let mut costs = vec![0.0; k];
    let mut moves = 0;
    for i in 0..state.n() {
        let wi = weights.get(i);
        if !state.can_leave(i, wi) {
            continue;
        }
        let from = state.label(i);
        state.point_costs_into(gram, weights, i, &mut costs);
        let mut best: Option<(usize, f64)> = None;
        for to in (0..k).filter(|&l| l != from) {
            let gain = state.move_gain(i, wi, from, to, costs[from], costs[to]);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((to, gain));
            }
        }
        if let Some((to, gain)) = best {
            if gain > config.move_tolerance {
                state.apply_move(i, wi, to, costs[from], costs[to]);
                moves += 1;
                on_move(&MoveRecord { point: i, from, to, gain });
            }
        }
    }
    moves
}

/// One Lloyd pass with immediate updates of the moved clusters.
///
/// Point `i` goes to `argmin_l J_l = q_l / s_l^2 - 2 Q_l(x_i) / s_l`. It stays
/// put when its current cluster attains the minimum.
pub fn kmeans_sweep(state: &mut ClusterState, gram: &GramMatrix, weights: &Weights, config: &SolverConfig) -> usize {
    kmeans_sweep_with(state, gram, weights, config, |_| {})
}

pub fn kmeans_sweep_with<F>(
    state: &mut ClusterState,
    gram: &GramMatrix,
    weights: &Weights,
    _config: &SolverConfig,
    mut on_move: F,
) -> usize
where
    F: FnMut(&MoveRecord),
{
    let k = state.k();
    let mut costs = vec![0.0; k];
    let mut moves = 0;
    for i in 0..state.n() {
        let wi = weights.get(i);
        if !state.can_leave(i, wi) {
            continue;
        }
        let from = state.label(i);
        state.point_costs_into(gram, weights, i, &mut costs);
        let score = |l: usize| {
            let s = state.weight_sums()[l];
            state.internal_costs()[l] / (s * s) - 2.0 * costs[l] / s
        };
        let current = score(from);
        let mut best = from;
        let mut best_score = current;
        for l in 0..k {
            let v = score(l);
            if v < best_score {
                best = l;
                best_score = v;
            }
        }
        if best != from {
            let gain = state.move_gain(i, wi, from, best, costs[from], costs[best]);
            state.apply_move(i, wi, best, costs[from], costs[best]);
            moves += 1;
            on_move(&MoveRecord { point: i, from, to: best, gain });
        }
    }
    moves
}

/// Iterates sweeps from `start` until a pass makes no moves or
/// `max_passes` is reached.
pub fn run_from(
    gram: &GramMatrix,
    weights: &Weights,
    start: &Partition,
    config: &SolverConfig,
    algorithm: Algorithm,
) -> Result<ClusteringResult> {
    config.validate()?;
    let mut state = ClusterState::new(gram, weights, start)?;
    let mut passes = 0;
    let mut moves = 0;
    let mut converged = false;
    let mut objective_trace = Vec::new();
    while passes < config.max_passes {
        let made = match algorithm {
            Algorithm::KGroups => kgroups_sweep(&mut state, gram, weights, config),
            Algorithm::KernelKMeans => kmeans_sweep(&mut state, gram, weights, config),
        };
        passes += 1;
        moves += made;
        debug_assert!(
            state.cache_deviation(gram, weights) <= CACHE_TOLERANCE,
            "cache drift {}",
            state.cache_deviation(gram, weights)
        );
        objective_trace.push(state.objective());
        if made == 0 {
            converged = true;
            break;
        }
    }
    let assignment = state.partition();
    let objective = objective_q(gram, weights, &assignment)?;
    Ok(ClusteringResult { assignment, objective, passes, moves, converged, objective_trace })
}

/// Best of `config.restarts` independent runs, by final `Q`.
///
/// Restart `r` draws its initialization from `derive_seed(config.seed, r)`;
/// runs execute in parallel but the selection is order-independent, with
/// ties going to the lowest restart index.
pub fn solve(
    gram: &GramMatrix,
    weights: &Weights,
    k: usize,
    config: &SolverConfig,
    algorithm: Algorithm,
) -> Result<ClusteringResult> {
    config.validate()?;
    let n = gram.n();
    if k < 2 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    if weights.len() != n {
        return Err(Error::LengthMismatch { left: weights.len(), right: n });
    }
    let runs: Vec<ClusteringResult> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, r as u64));
            let start = init_assignment(gram, weights, k, &config.init, &mut rng)?;
            run_from(gram, weights, &start, config, algorithm)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<ClusteringResult> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
