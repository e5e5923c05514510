//! Clustering quality metrics and Monte-Carlo aggregation.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contingency table of predicted against true labels.
///
/// The table is square with side `max(k_pred, k_true)`; missing labels give
/// zero rows or columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelComparison {
    n: usize,
    /// `confusion[p][t]` counts points with predicted `p` and true `t`.
    confusion: Vec<Vec<u64>>,
}

impl LabelComparison {
    pub fn new(predicted: &[usize], truth: &[usize]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::LengthMismatch { left: predicted.len(), right: truth.len() });
        }
        if predicted.is_empty() {
            return Err(Error::EmptyInput("labels"));
        }
        let side = predicted.iter().chain(truth).copied().max().unwrap_or(0) + 1;
        let mut confusion = vec![vec![0u64; side]; side];
        for (&p, &t) in predicted.iter().zip(truth) {
            confusion[p][t] += 1;
        }
        Ok(Self { n: predicted.len(), confusion })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn confusion(&self) -> &[Vec<u64>] {
        &self.confusion
    }

    /// Largest number of points on the diagonal over all relabelings of the
    /// predicted clusters, found by optimal assignment.
    pub fn matched(&self) -> u64 {
        let side = self.confusion.len();
        let weights = Matrix::from_fn(side, side, |(p, t)| self.confusion[p][t] as i64);
        let (total, _) = kuhn_munkres(&weights);
        total as u64
    }

    pub fn accuracy(&self) -> f64 {
        self.matched() as f64 / self.n as f64
    }

    /// Adjusted Rand index. Two trivial partitions that agree (for example
    /// both single-cluster, or a single point) score 1.
    pub fn adjusted_rand(&self) -> f64 {
        let pairs = |c: u64| (c as f64) * (c as f64 - 1.0) / 2.0;
        if self.n < 2 {
            return 1.0;
        }
        let index: f64 = self.confusion.iter().flatten().map(|&c| pairs(c)).sum();
        let rows: f64 = self.confusion.iter().map(|r| pairs(r.iter().sum())).sum();
        let cols: f64 = (0..self.confusion.len())
            .map(|t| pairs(self.confusion.iter().map(|r| r[t]).sum()))
            .sum();
        let expected = rows * cols / pairs(self.n as u64);
        let max = 0.5 * (rows + cols);
        if max == expected {
            return 1.0;
        }
        (index - expected) / (max - expected)
    }
}

/// Fraction of points correctly labeled under the best relabeling.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(LabelComparison::new(predicted, truth)?.accuracy())
}

pub fn adjusted_rand(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(LabelComparison::new(predicted, truth)?.adjusted_rand())
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub mean: f64,
    /// `s / sqrt(n)` with the `n - 1` sample standard deviation; 0 for one trial.
    pub sem: f64,
}

pub fn monte_carlo_summary(values: &[f64]) -> Result<MonteCarloSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("trials"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sem = if values.len() == 1 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(MonteCarloSummary { trials: values.len(), mean, sem })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn accuracy_examples() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[2, 2, 0, 0, 1, 1], &truth).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[0, 1], &[0]), Err(Error::LengthMismatch { left: 2, right: 1 }));
    }

    #[test]
    fn unequal_label_counts_are_padded() {
        let c = LabelComparison::new(&[0, 0, 0, 0], &[0, 1, 2, 2]).unwrap();
        assert_eq!(c.confusion().len(), 3);
        assert_eq!(c.accuracy(), 0.5);
        assert_eq!(accuracy(&[0, 1, 2, 3], &[0, 0, 1, 1]).unwrap(), 0.5);
    }

    #[test]
    fn rand_examples() {
        let truth = [0, 0, 0, 1, 1, 1];
        assert_eq!(adjusted_rand(&truth, &truth).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[1, 1, 1, 0, 0, 0], &truth).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[0; 6], &truth).unwrap(), 0.0);
        assert_eq!(adjusted_rand(&[0; 6], &[0; 6]).unwrap(), 1.0);
        assert_eq!(adjusted_rand(&[3], &[0]).unwrap(), 1.0);
    }

    #[test]
    fn rand_matches_reference_values() {
        // values from scikit-learn's adjusted_rand_score
        assert_relative_eq!(adjusted_rand(&[0, 0, 1, 1, 2, 2], &[0, 0, 1, 2, 2, 2]).unwrap(), 4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(adjusted_rand(&[0, 0, 0, 1, 1, 2], &[0, 0, 1, 1, 2, 2]).unwrap(), 2.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn published_dermatology_confusion() {
        // rows: truth class, columns: predicted class
        let table = [
            [112, 0, 0, 0, 0, 0],
            [0, 50, 0, 11, 0, 0],
            [0, 0, 72, 0, 0, 0],
            [0, 2, 0, 47, 0, 0],
            [0, 0, 0, 1, 51, 0],
            [0, 0, 0, 0, 0, 20],
        ];
        let (mut truth, mut predicted) = (Vec::new(), Vec::new());
        for (t, row) in table.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                truth.extend(std::iter::repeat_n(t, count));
                predicted.extend(std::iter::repeat_n(p, count));
            }
        }
        let c = LabelComparison::new(&predicted, &truth).unwrap();
        assert_eq!(c.n(), 366);
        assert_eq!(c.matched(), 352);
        assert!((c.accuracy() - 0.962).abs() < 5e-4);
        assert!((c.adjusted_rand() - 0.936).abs() < 5e-4);
    }

    #[test]
    fn summary_examples() {
        let s = monte_carlo_summary(&[1.0; 30]).unwrap();
        assert_eq!((s.mean, s.sem), (1.0, 0.0));
        let s = monte_carlo_summary(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_relative_eq!(s.sem, 0.5, epsilon = 1e-15);
        let s = monte_carlo_summary(&[0.7]).unwrap();
        assert_eq!((s.mean, s.sem, s.trials), (0.7, 0.0, 1));
        assert_eq!(monte_carlo_summary(&[]), Err(Error::EmptyInput("trials")));
    }
}
