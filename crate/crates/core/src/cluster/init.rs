use rand::Rng;

use crate::energy::{Partition, Weights};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// How a solver run picks its starting partition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// k-means++ seeding in feature space.
    #[default]
    KMeansPlusPlus,
    /// Uniform labels, resampled until no cluster is empty.
    Random,
    /// Caller-supplied labels.
    Provided(Vec<usize>),
}

const RANDOM_INIT_ATTEMPTS: usize = 100;

/// Starting partition for a solver run.
///
/// k-means++ picks centers with probability proportional to the squared
/// feature-space distance `k(x,x) + k(c,c) - 2 k(x,c)` to the nearest chosen
/// center, then assigns every point to its nearest center. Each center keeps
/// its own cluster, so no cluster starts empty.
pub fn init_assignment<R: Rng + ?Sized>(
    gram: &GramMatrix,
    weights: &Weights,
    k: usize,
    strategy: &InitStrategy,
    rng: &mut R,
) -> Result<Partition> {
    let n = gram.n();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    if weights.len() != n {
        return Err(Error::LengthMismatch { left: weights.len(), right: n });
    }
    if k == 1 {
        return Partition::new(vec![0; n], 1);
    }
    match strategy {
        InitStrategy::KMeansPlusPlus => Ok(kmeans_plus_plus(gram, k, rng)),
        InitStrategy::Random => Ok(random_labels(n, k, rng)),
        InitStrategy::Provided(labels) => {
            if labels.len() != n {
                return Err(Error::LengthMismatch { left: labels.len(), right: n });
            }
            Partition::new(labels.clone(), k)
        }
    }
}

fn feature_distance(gram: &GramMatrix, x: usize, c: usize) -> f64 {
    (gram.get(x, x) + gram.get(c, c) - 2.0 * gram.get(x, c)).max(0.0)
}

/// Indices of the chosen k-means++ centers, in selection order.
pub(crate) fn plus_plus_centers<R: Rng + ?Sized>(gram: &GramMatrix, k: usize, rng: &mut R) -> Vec<usize> {
    let n = gram.n();
    let mut centers = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    centers.push(first);
    chosen[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|x| feature_distance(gram, x, first)).collect();

    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (x, &d) in nearest.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                pick = Some(x);
                if target < d {
                    break;
                }
                target -= d;
            }
            pick.expect("positive total has a positive entry")
        } else {
            // every point coincides with a center
            let free: Vec<usize> = (0..n).filter(|&x| !chosen[x]).collect();
            free[rng.random_range(0..free.len())]
        };
        centers.push(pick);
        chosen[pick] = true;
        for (x, d) in nearest.iter_mut().enumerate() {
            *d = d.min(feature_distance(gram, x, pick));
        }
        nearest[pick] = 0.0;
    }
    centers
}

fn kmeans_plus_plus<R: Rng + ?Sized>(gram: &GramMatrix, k: usize, rng: &mut R) -> Partition {
    let centers = plus_plus_centers(gram, k, rng);
    let mut labels: Vec<usize> = (0..gram.n())
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = feature_distance(gram, x, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect();
    for (j, &c) in centers.iter().enumerate() {
        labels[c] = j;
    }
    Partition::new(labels, k).expect("each center owns its cluster")
}

fn random_labels<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Partition {
    for _ in 0..RANDOM_INIT_ATTEMPTS {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if let Ok(part) = Partition::new(labels, k) {
            return part;
        }
    }
    // n close to k: seed every cluster with one random point, rest uniform
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut labels = vec![0; n];
    for (rank, &x) in order.iter().enumerate() {
        labels[x] = if rank < k { rank } else { rng.random_range(0..k) };
    }
    Partition::new(labels, k).expect("every cluster seeded")
}
