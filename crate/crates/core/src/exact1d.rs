//! Exact two-class solver for one-dimensional data with `rho(x, y) = |x - y|`
//! and unit weights.
//!
//! On sorted data `x_1 <= ... <= x_n` the mean pairwise distance has the
//! closed form `g = (2/n^2) sum_l (2l - 1 - n) x_l`, so every contiguous
//! split can be scored in `O(n)`. The solver tries all `n - 1` splits that
//! leave both sides non-empty.

use crate::energy::Partition;
use crate::error::{Error, Result};

/// Values in non-decreasing order plus the position each came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample1D {
    values: Vec<f64>,
    original_indices: Vec<usize>,
}

impl SortedSample1D {
    /// Stable sort: equal values keep their input order.
    pub fn new(data: &[f64]) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("value {i} is not finite")));
        }
        let mut original_indices: Vec<usize> = (0..data.len()).collect();
        original_indices.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
        let values = original_indices.iter().map(|&i| data[i]).collect();
        Ok(Self { values, original_indices })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `original_indices()[p]` is the input position of sorted position `p`.
    pub fn original_indices(&self) -> &[usize] {
        &self.original_indices
    }
}

/// `sum_l (2l - 1 - n) x_l` over a sorted segment, `l` counted from 1.
fn weighted_rank_sum(segment: &[f64]) -> f64 {
    let n = segment.len() as f64;
    segment.iter().enumerate().map(|(l, &x)| (2.0 * (l as f64 + 1.0) - 1.0 - n) * x).sum()
}

/// Mean pairwise distance `(1/n^2) sum_{i,j} |x_i - x_j|` of a sorted segment.
pub fn g_sorted(segment: &[f64]) -> Result<f64> {
    if segment.is_empty() {
        return Err(Error::EmptyInput("segment"));
    }
    let n = segment.len() as f64;
    Ok(2.0 / (n * n) * weighted_rank_sum(segment))
}

/// Within dispersion `W = sum_j (n_j / 2) g(C_j, C_j)` of sorted segments.
pub fn within_1d(segments: &[&[f64]]) -> Result<f64> {
    if segments.is_empty() {
        return Err(Error::EmptyInput("segments"));
    }
    let mut total = 0.0;
    for seg in segments {
        if seg.is_empty() {
            return Err(Error::EmptyInput("segment"));
        }
        total += weighted_rank_sum(seg) / seg.len() as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exact1DResult {
    /// Cluster 0 holds the smaller values.
    pub partition: Partition,
    /// Number of sorted values in cluster 0, in `1..n`.
    pub split: usize,
    /// Minimal within dispersion.
    pub within: f64,
}

/// Minimizes `W` over all contiguous two-cluster splits of the sorted data.
///
/// Ties go to the smallest split.
pub fn solve_exact_2class(data: &[f64]) -> Result<Exact1DResult> {
    if data.len() < 2 {
        return Err(Error::InvalidClusterCount { k: 2, n: data.len() });
    }
    let sorted = SortedSample1D::new(data)?;
    let x = sorted.values();
    let n = x.len();
    let mut best = (0, f64::INFINITY);
    for j in 1..n {
        let w = within_1d(&[&x[..j], &x[j..]])?;
        if w < best.1 {
            best = (j, w);
        }
    }
    let (split, within) = best;
    let mut labels = vec![0; n];
    for (p, &orig) in sorted.original_indices().iter().enumerate() {
        labels[orig] = usize::from(p >= split);
    }
    Ok(Exact1DResult { partition: Partition::new(labels, 2)?, split, within })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_g(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        x.iter().map(|a| x.iter().map(|b| (a - b).abs()).sum::<f64>()).sum::<f64>() / (n * n)
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_sorted(&[4.2]).unwrap(), 0.0);
        assert_eq!(g_sorted(&[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(g_sorted(&[]), Err(Error::EmptyInput("segment")));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        x.sort_by(f64::total_cmp);
        assert_relative_eq!(g_sorted(&x).unwrap(), brute_g(&x), max_relative = 1e-10);
    }

    #[test]
    fn within_examples() {
        assert_eq!(within_1d(&[&[1.0], &[2.0], &[7.0]]).unwrap(), 0.0);
        let seg = [0.0, 1.0];
        assert_eq!(within_1d(&[&seg]).unwrap(), 0.5);
        assert_eq!(within_1d(&[&seg]).unwrap(), 1.0 * g_sorted(&seg).unwrap());
        assert!(within_1d(&[&seg, &[]]).is_err());
    }

    #[test]
    fn four_points() {
        let r = solve_exact_2class(&[10.0, 0.0, 11.0, 1.0]).unwrap();
        assert_eq!(r.split, 2);
        assert_eq!(r.within, 1.0);
        assert_eq!(r.partition.labels(), &[1, 0, 1, 0]);
    }

    #[test]
    fn two_points() {
        let r = solve_exact_2class(&[3.0, -1.0]).unwrap();
        assert_eq!(r.split, 1);
        assert_eq!(r.within, 0.0);
        assert_eq!(r.partition.labels(), &[1, 0]);
    }

    #[test]
    fn too_few_points() {
        assert!(solve_exact_2class(&[1.0]).is_err());
        assert!(solve_exact_2class(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn ties_take_smallest_split() {
        // every split of constant data gives W = 0
        let r = solve_exact_2class(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r.split, 1);
        assert_eq!(r.within, 0.0);
    }

    #[test]
    fn stable_sort_keeps_input_order() {
        let s = SortedSample1D::new(&[2.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(s.original_indices(), &[1, 3, 0, 2]);
    }
}
