//! Weighted energy statistics over a partition: the pairwise dispersion `g`,
//! the within dispersion `W` and the between-sample statistic `S`.
//!
//! All functions take the pairwise semimetric values as a precomputed
//! [`SemimetricMatrix`]; build one from points or recover it from a Gram
//! matrix via `rho_ij = G_ii + G_jj - 2 G_ij`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{common_dim, GramMatrix, SemimetricSpec};
use crate::matrix::{pairwise_sum, SymMatrix};

/// Strictly positive per-point weights together with their total.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    values: Vec<f64>,
    total: f64,
    unit: bool,
}

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("no weights"));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        let total = pairwise_sum(&values);
        let unit = values.iter().all(|&w| w == 1.0);
        Ok(Self { values, total, unit })
    }

    /// `w(x) = 1` for every point.
    pub fn unit(n: usize) -> Self {
        Self { values: vec![1.0; n], total: n as f64, unit: true }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Cluster labels in `[0, k)`.
///
/// [`Partition::new`] requires every cluster to be non-empty;
/// [`Partition::allow_empty`] only checks the label range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        let part = Self::allow_empty(labels, k)?;
        if let Some(j) = part.counts().iter().position(|&c| c == 0) {
            return Err(Error::EmptyCluster(j));
        }
        Ok(part)
    }

    pub fn allow_empty(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidClusterCount { k, n: labels.len() });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::LabelOutOfRange { index, label, k });
        }
        Ok(Self { labels, k })
    }

    /// Builds a partition whose `k` is one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::allow_empty(labels, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == cluster).then_some(i))
            .collect()
    }

    /// Per-cluster weight sums `s_j`.
    pub fn weight_sums(&self, weights: &Weights) -> Vec<f64> {
        (0..self.k)
            .map(|j| {
                let terms: Vec<f64> = self.members(j).into_iter().map(|i| weights.get(i)).collect();
                pairwise_sum(&terms)
            })
            .collect()
    }
}

/// Pairwise semimetric values `rho(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemimetricMatrix {
    inner: SymMatrix,
}

impl SemimetricMatrix {
    pub fn from_points(spec: &SemimetricSpec, points: &[Vec<f64>]) -> Result<Self> {
        common_dim(points)?;
        Ok(Self {
            inner: SymMatrix::from_pair_fn(points.len(), |i, j| {
                if i == j {
                    0.0
                } else {
                    spec.eval_unchecked(&points[i], &points[j])
                }
            }),
        })
    }

    /// `rho_ij = G_ii + G_jj - 2 G_ij`.
    pub fn from_gram(gram: &GramMatrix) -> Self {
        Self {
            inner: SymMatrix::from_pair_fn(gram.n(), |i, j| {
                if i == j {
                    0.0
                } else {
                    gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j)
                }
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }
}

fn check_instance(weights: &Weights, part: &Partition, rho: &SemimetricMatrix) -> Result<()> {
    if part.len() != rho.n() {
        return Err(Error::LengthMismatch { left: part.len(), right: rho.n() });
    }
    if weights.len() != rho.n() {
        return Err(Error::LengthMismatch { left: weights.len(), right: rho.n() });
    }
    Ok(())
}

/// `sum_{x in A, y in B} w(x) w(y) rho(x, y)` with pairwise summation.
fn weighted_block_sum(a: &[usize], b: &[usize], weights: &Weights, rho: &SemimetricMatrix) -> f64 {
    let mut row_terms = Vec::with_capacity(b.len());
    let rows: Vec<f64> = a
        .iter()
        .map(|&x| {
            row_terms.clear();
            row_terms.extend(b.iter().map(|&y| weights.get(y) * rho.get(x, y)));
            weights.get(x) * pairwise_sum(&row_terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Unweighted energy distance between two samples,
/// `2 g(X, Y) - g(X, X) - g(Y, Y)`.
pub fn energy_distance(x: &[Vec<f64>], y: &[Vec<f64>], spec: &SemimetricSpec) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("energy distance needs two non-empty samples"));
    }
    let dim = common_dim(x)?;
    let ydim = common_dim(y)?;
    if dim != ydim {
        return Err(Error::DimensionMismatch { expected: dim, got: ydim });
    }
    let mean_rho = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        let rows: Vec<f64> = a
            .iter()
            .map(|p| {
                let terms: Vec<f64> = b.iter().map(|q| spec.eval_unchecked(p, q)).collect();
                pairwise_sum(&terms)
            })
            .collect();
        pairwise_sum(&rows) / (a.len() as f64 * b.len() as f64)
    };
    Ok(2.0 * mean_rho(x, y) - mean_rho(x, x) - mean_rho(y, y))
}

/// `g(C_i, C_j) = 1/(s_i s_j) sum_{x in C_i} sum_{y in C_j} w(x) w(y) rho(x, y)`.
pub fn g_dispersion(
    weights: &Weights,
    part: &Partition,
    i: usize,
    j: usize,
    rho: &SemimetricMatrix,
) -> Result<f64> {
    check_instance(weights, part, rho)?;
    for c in [i, j] {
        if c >= part.k() {
            return Err(Error::IndexOutOfRange { index: c, n: part.k() });
        }
    }
    let (a, b) = (part.members(i), part.members(j));
    if a.is_empty() {
        return Err(Error::EmptyCluster(i));
    }
    if b.is_empty() {
        return Err(Error::EmptyCluster(j));
    }
    let s = part.weight_sums(weights);
    // canonical order keeps g(i, j) == g(j, i) bitwise
    let sum = if i <= j { weighted_block_sum(&a, &b, weights, rho) } else { weighted_block_sum(&b, &a, weights, rho) };
    Ok(sum / (s[i.min(j)] * s[i.max(j)]))
}

/// All `g(C_i, C_j)` at once, plus the cluster weights.
fn dispersion_table(
    weights: &Weights,
    part: &Partition,
    rho: &SemimetricMatrix,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    check_instance(weights, part, rho)?;
    let members: Vec<Vec<usize>> = (0..part.k()).map(|j| part.members(j)).collect();
    if let Some(j) = members.iter().position(|m| m.is_empty()) {
        return Err(Error::EmptyCluster(j));
    }
    let s = part.weight_sums(weights);
    let k = part.k();
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = weighted_block_sum(&members[i], &members[j], weights, rho) / (s[i] * s[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok((g, s))
}

/// `W = sum_j (s_j / 2) g(C_j, C_j)`.
pub fn within_dispersion(weights: &Weights, part: &Partition, rho: &SemimetricMatrix) -> Result<f64> {
    let (g, s) = dispersion_table(weights, part, rho)?;
    let terms: Vec<f64> = (0..part.k()).map(|j| 0.5 * s[j] * g[j][j]).collect();
    Ok(pairwise_sum(&terms))
}

/// `S = sum_{i<j} (s_i s_j / 2s) [2 g(C_i, C_j) - g(C_i, C_i) - g(C_j, C_j)]`.
pub fn between_statistic(weights: &Weights, part: &Partition, rho: &SemimetricMatrix) -> Result<f64> {
    if part.k() < 2 {
        return Err(Error::InvalidClusterCount { k: part.k(), n: part.len() });
    }
    let (g, s) = dispersion_table(weights, part, rho)?;
    Ok(between_from_table(&g, &s))
}

fn between_from_table(g: &[Vec<f64>], s: &[f64]) -> f64 {
    let total: f64 = pairwise_sum(s);
    let k = s.len();
    let mut terms = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
    for i in 0..k {
        for j in i + 1..k {
            terms.push(s[i] * s[j] / (2.0 * total) * (2.0 * g[i][j] - g[i][i] - g[j][j]));
        }
    }
    pairwise_sum(&terms)
}

/// `S + W - (s/2) g(X, X)`, which vanishes for every partition.
///
/// With a single cluster `S` is the empty sum.
pub fn lemma1_residual(weights: &Weights, part: &Partition, rho: &SemimetricMatrix) -> Result<f64> {
    let (g, s) = dispersion_table(weights, part, rho)?;
    let within = pairwise_sum(&(0..part.k()).map(|j| 0.5 * s[j] * g[j][j]).collect::<Vec<_>>());
    let between = between_from_table(&g, &s);
    let all: Vec<usize> = (0..rho.n()).collect();
    let total = weights.total();
    let g_all = weighted_block_sum(&all, &all, weights, rho) / (total * total);
    Ok(between + within - 0.5 * total * g_all)
}
