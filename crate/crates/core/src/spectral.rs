//! Spectral relaxation of the clustering problem.
//!
//! Dropping the discreteness constraints on `H` leaves
//! `max Tr[H^T G~ H]` subject to `H^T H = I`, with `G~ = W^{1/2} G W^{1/2}`.
//! Its maximizers are `H* = U R` where `U` holds the top-k eigenvectors of
//! `G~`; the maximum is the sum of the top-k eigenvalues, an upper bound on
//! `Q` for every partition. A discrete partition is recovered by normalizing
//! the rows of `U` and clustering them with classical k-means.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cluster::{objective_q, solve, Algorithm, ClusteringResult, SolverConfig};
use crate::energy::Weights;
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// Top-k eigenpairs of `G~`, eigenvalues in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    /// `vectors` is `n x k`; column `i` pairs with `eigenvalues[i]`.
    pub fn new(vectors: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if vectors.ncols() != eigenvalues.len() {
            return Err(Error::LengthMismatch { left: vectors.ncols(), right: eigenvalues.len() });
        }
        Ok(Self { vectors, eigenvalues })
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Optimal value of the relaxed problem.
    pub fn eigenvalue_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `U R` for a `k x k` matrix `R`; eigenvalues are carried over unchanged.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        if r.nrows() != self.k() || r.ncols() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: r.nrows().max(r.ncols()) });
        }
        Ok(Self { vectors: &self.vectors * r, eigenvalues: self.eigenvalues.clone() })
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        (gram - DMatrix::identity(self.k(), self.k())).amax()
    }

    /// `max_i ||G~ u_i - lambda_i u_i|| / ||G~||_inf`.
    pub fn relative_residual(&self, gram: &GramMatrix, weights: &Weights) -> Result<f64> {
        let gt = weighted_gram(gram, weights)?;
        let scale = row_sum_norm(&gt).max(f64::MIN_POSITIVE);
        let worst = (0..self.k())
            .map(|i| {
                let u = self.vectors.column(i);
                (&gt * u - u * self.eigenvalues[i]).norm()
            })
            .fold(0.0, f64::max);
        Ok(worst / scale)
    }

    /// Rows of `U`, each scaled to unit length; zero rows stay zero.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        self.vectors
            .row_iter()
            .map(|row| {
                let norm = row.norm();
                if norm > 0.0 {
                    row.iter().map(|v| v / norm).collect()
                } else {
                    vec![0.0; self.k()]
                }
            })
            .collect()
    }
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `G~ = W^{1/2} G W^{1/2}` as a dense matrix.
pub fn weighted_gram(gram: &GramMatrix, weights: &Weights) -> Result<DMatrix<f64>> {
    let n = gram.n();
    if weights.len() != n {
        return Err(Error::LengthMismatch { left: weights.len(), right: n });
    }
    let sqrt_w: Vec<f64> = weights.as_slice().iter().map(|w| w.sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * gram.get(i, j) * sqrt_w[j]))
}

/// Top-k eigenpairs of `G~` by a dense symmetric eigensolver (`R = I`).
///
/// Equal eigenvalues keep the solver's order. Each eigenvector is signed so
/// that its largest-magnitude entry is positive.
pub fn relaxed_solution(gram: &GramMatrix, weights: &Weights, k: usize) -> Result<SpectralEmbedding> {
    let n = gram.n();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    let eig = SymmetricEigen::new(weighted_gram(gram, weights)?);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(c, &(col * sign));
    }
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(SpectralEmbedding { vectors, eigenvalues })
}

/// Classical k-means (linear kernel, unit weights) on the normalized rows.
///
/// The returned objective is the k-means `Q` of the rows, not of the
/// original problem.
pub fn cluster_rows(embedding: &SpectralEmbedding, k: usize, config: &SolverConfig) -> Result<ClusteringResult> {
    let rows = embedding.normalized_rows();
    let linear = GramMatrix::linear(&rows)?;
    solve(&linear, &Weights::unit(rows.len()), k, config, Algorithm::KernelKMeans)
}

/// Spectral clustering baseline.
///
/// `passes`, `moves` and `objective_trace` describe the row k-means stage;
/// `objective` is `Q` of the returned partition on `(G, w)`.
pub fn spectral_cluster(
    gram: &GramMatrix,
    weights: &Weights,
    k: usize,
    config: &SolverConfig,
) -> Result<ClusteringResult> {
    config.validate()?;
    let n = gram.n();
    if k < 2 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    let embedding = relaxed_solution(gram, weights, k)?;
    let mut result = cluster_rows(&embedding, k, config)?;
    result.objective = objective_q(gram, weights, &result.assignment)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::build_h_matrix;
    use crate::energy::Partition;
    use crate::kernels::{gram_matrix, KernelSpec, SemimetricSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag_gram(values: &[f64]) -> GramMatrix {
        let n = values.len();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect()).collect();
        GramMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn identity_gram() {
        let g = diag_gram(&[1.0; 5]);
        for k in 1..=5 {
            let e = relaxed_solution(&g, &Weights::unit(5), k).unwrap();
            assert!(e.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-12));
            assert_relative_eq!(e.eigenvalue_sum(), k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_gram() {
        let g = diag_gram(&[3.0, 2.0, 1.0]);
        let e = relaxed_solution(&g, &Weights::unit(3), 2).unwrap();
        assert_relative_eq!(e.eigenvalues()[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.eigenvalues()[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(e.eigenvalue_sum(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn k_larger_than_n() {
        let g = diag_gram(&[1.0, 2.0]);
        assert_eq!(relaxed_solution(&g, &Weights::unit(2), 3), Err(Error::InvalidClusterCount { k: 3, n: 2 }));
        assert!(spectral_cluster(&g, &Weights::unit(2), 3, &SolverConfig::default()).is_err());
    }

    #[test]
    fn embedding_invariants_and_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let g = gram_matrix(&KernelSpec::new(SemimetricSpec::exp_square(1.0).unwrap()), &pts).unwrap();
        let w = Weights::new((0..n).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap();
        let e = relaxed_solution(&g, &w, 3).unwrap();
        assert!(e.orthonormality_error() <= 1e-10);
        assert!(e.relative_residual(&g, &w).unwrap() <= 1e-8);
        assert!(e.eigenvalues().windows(2).all(|p| p[0] >= p[1]));
        let gt = weighted_gram(&g, &w).unwrap();
        for _ in 0..200 {
            let labels: Vec<usize> = (0..n).map(|i| if i < 3 { i } else { rng.random_range(0..3) }).collect();
            let part = Partition::new(labels, 3).unwrap();
            let h = build_h_matrix(&part, &w).unwrap();
            let hm = DMatrix::from_fn(n, 3, |i, j| h.get(i, j));
            let trace = (hm.transpose() * &gt * &hm).trace();
            assert!(e.eigenvalue_sum() >= trace - 1e-8 * trace.abs().max(1.0));
        }
    }

    #[test]
    fn block_diagonal_recovered() {
        // two disconnected identical blocks
        let n = 8;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if (i < 4) == (j < 4) { 1.0 } else { 0.0 }).collect())
            .collect();
        let g = GramMatrix::from_rows(&rows).unwrap();
        let r = spectral_cluster(&g, &Weights::unit(n), 2, &SolverConfig::default()).unwrap();
        let l = r.assignment.labels();
        assert!(l[..4].iter().all(|&x| x == l[0]));
        assert!(l[4..].iter().all(|&x| x == l[4]));
        assert_ne!(l[0], l[4]);
        assert_relative_eq!(r.objective, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_rows_stay_zero() {
        let e = SpectralEmbedding::new(DMatrix::from_row_slice(3, 2, &[3.0, 4.0, 0.0, 0.0, 0.0, -2.0]), vec![1.0, 0.5])
            .unwrap();
        assert_eq!(e.normalized_rows(), vec![vec![0.6, 0.8], vec![0.0, 0.0], vec![0.0, -1.0]]);
    }
}
