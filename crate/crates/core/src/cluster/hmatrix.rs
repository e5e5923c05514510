use crate::energy::{Partition, Weights};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::matrix::pairwise_sum;

use super::state::internal_cost;

/// `H = W^{1/2} Y` with `Y_ij = Z_ij / sqrt(s_j)`, stored row-major `n x k`.
///
/// Every partition with non-empty clusters maps to an `H` satisfying
/// `H >= 0`, `H^T H = I` and `H H^T omega = omega` with `omega = W^{1/2} e`, and
/// `Tr[H^T W^{1/2} G W^{1/2} H]` equals the clustering objective `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

pub fn build_h_matrix(part: &Partition, weights: &Weights) -> Result<HMatrix> {
    if part.len() != weights.len() {
        return Err(Error::LengthMismatch { left: part.len(), right: weights.len() });
    }
    if let Some(j) = part.counts().iter().position(|&c| c == 0) {
        return Err(Error::EmptyCluster(j));
    }
    let s = part.weight_sums(weights);
    let (n, k) = (part.len(), part.k());
    let mut data = vec![0.0; n * k];
    for i in 0..n {
        let j = part.label(i);
        data[i * k + j] = (weights.get(i) / s[j]).sqrt();
    }
    Ok(HMatrix { n, k, data })
}

impl HMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |H^T H - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.k {
            for b in 0..self.k {
                let dot: f64 = (0..self.n).map(|i| self.get(i, a) * self.get(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max |H H^T omega - omega|` for `omega = W^{1/2} e`.
    ///
    /// With non-unit weights `H H^T (W e) != W e` in general; the fixed point
    /// of `H H^T` is `W^{1/2} e`. The two coincide for unit weights.
    pub fn balance_error(&self, weights: &Weights) -> f64 {
        let omega: Vec<f64> = weights.as_slice().iter().map(|w| w.sqrt()).collect();
        self.projection_error(&omega)
    }

    /// `max |H H^T v - v|`.
    pub fn projection_error(&self, v: &[f64]) -> f64 {
        let projected: Vec<f64> = (0..self.k)
            .map(|j| (0..self.n).map(|i| self.get(i, j) * v[i]).sum())
            .collect();
        (0..self.n)
            .map(|i| {
                let hv: f64 = (0..self.k).map(|j| self.get(i, j) * projected[j]).sum();
                (hv - v[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `Tr[H^T W^{1/2} G W^{1/2} H]` by explicit matrix products.
    pub fn trace_objective(&self, gram: &GramMatrix, weights: &Weights) -> f64 {
        let sqrt_w: Vec<f64> = weights.as_slice().iter().map(|w| w.sqrt()).collect();
        let mut terms = Vec::with_capacity(self.n);
        let cols: Vec<f64> = (0..self.k)
            .map(|c| {
                let rows: Vec<f64> = (0..self.n)
                    .map(|p| {
                        let row = gram.row(p);
                        terms.clear();
                        terms.extend((0..self.n).map(|q| row[q] * sqrt_w[q] * self.get(q, c)));
                        self.get(p, c) * sqrt_w[p] * pairwise_sum(&terms)
                    })
                    .collect();
                pairwise_sum(&rows)
            })
            .collect();
        pairwise_sum(&cols)
    }
}

/// Weighted kernel k-means cost
/// `J = sum_j sum_{x in C_j} || w(x) phi(x) - phi(mu_j) ||^2`, with
/// `phi(mu_j) = (1/s_j) sum_{y in C_j} w(y) phi(y)`, expanded through the
/// kernel only.
///
/// With unit weights `J = sum_i k(x_i, x_i) - Q`.
pub fn kernel_kmeans_objective_j(part: &Partition, gram: &GramMatrix, weights: &Weights) -> Result<f64> {
    if part.len() != gram.n() || weights.len() != gram.n() {
        return Err(Error::LengthMismatch { left: part.len(), right: gram.n() });
    }
    let s = part.weight_sums(weights);
    let mut per_cluster = Vec::with_capacity(part.k());
    for (j, &sj) in s.iter().enumerate() {
        let members = part.members(j);
        if members.is_empty() {
            return Err(Error::EmptyCluster(j));
        }
        let qj = internal_cost(gram, weights, &members);
        let mean_norm = qj / (sj * sj);
        let terms: Vec<f64> = members
            .iter()
            .map(|&x| {
                let wx = weights.get(x);
                let cross: f64 =
                    pairwise_sum(&members.iter().map(|&y| weights.get(y) * gram.get(x, y)).collect::<Vec<_>>());
                wx * wx * gram.get(x, x) - 2.0 * wx * cross / sj + mean_norm
            })
            .collect();
        per_cluster.push(pairwise_sum(&terms));
    }
    Ok(pairwise_sum(&per_cluster))
}
