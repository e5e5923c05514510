//! Semimetrics of negative type, the kernels they induce, and Gram matrices.
//!
//! A semimetric `rho` of negative type and a base point `x0` define the kernel
//!
//! ```text
//! k(x, y) = 1/2 [ rho(x, x0) + rho(y, x0) - rho(x, y) ]
//! ```
//!
//! and conversely `rho(x, y) = k(x, x) + k(y, y) - 2 k(x, y)` for every kernel
//! of that family. All solvers consume the resulting [`GramMatrix`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Semimetric family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemimetricFamily {
    /// `||x - y||^alpha`, `0 < alpha <= 2`.
    Alpha,
    /// `2 - 2 exp(-||x - y|| / (2 sigma))`.
    ExpAbs,
    /// `2 - 2 exp(-||x - y||^2 / (2 sigma^2))`.
    ExpSquare,
}

impl fmt::Display for SemimetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SemimetricFamily::Alpha => "alpha",
            SemimetricFamily::ExpAbs => "expabs",
            SemimetricFamily::ExpSquare => "expsquare",
        };
        f.write_str(name)
    }
}

impl FromStr for SemimetricFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(SemimetricFamily::Alpha),
            "expabs" => Ok(SemimetricFamily::ExpAbs),
            "expsquare" => Ok(SemimetricFamily::ExpSquare),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

/// A validated semimetric: family plus its parameter (`alpha` or `sigma`).
///
/// `alpha = 2` is accepted; it yields the squared Euclidean distance, whose
/// energy distance only compares means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemimetricSpec {
    family: SemimetricFamily,
    parameter: f64,
}

impl SemimetricSpec {
    pub fn new(family: SemimetricFamily, parameter: f64) -> Result<Self> {
        let valid = match family {
            SemimetricFamily::Alpha => parameter > 0.0 && parameter <= 2.0,
            SemimetricFamily::ExpAbs | SemimetricFamily::ExpSquare => {
                parameter > 0.0 && parameter.is_finite()
            }
        };
        if !valid {
            return Err(Error::InvalidParameter(format!(
                "parameter {parameter} out of range for {family}"
            )));
        }
        Ok(Self { family, parameter })
    }

    pub fn alpha(alpha: f64) -> Result<Self> {
        Self::new(SemimetricFamily::Alpha, alpha)
    }

    pub fn exp_abs(sigma: f64) -> Result<Self> {
        Self::new(SemimetricFamily::ExpAbs, sigma)
    }

    pub fn exp_square(sigma: f64) -> Result<Self> {
        Self::new(SemimetricFamily::ExpSquare, sigma)
    }

    /// The energy-distance default, `||x - y||`.
    pub fn euclidean() -> Self {
        Self { family: SemimetricFamily::Alpha, parameter: 1.0 }
    }

    pub fn family(&self) -> SemimetricFamily {
        self.family
    }

    pub fn parameter(&self) -> f64 {
        self.parameter
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Semimetric as a function of the squared Euclidean distance.
    #[inline]
    pub(crate) fn from_squared_distance(&self, d2: f64) -> f64 {
        match self.family {
            SemimetricFamily::Alpha => {
                if self.parameter == 2.0 {
                    d2
                } else if self.parameter == 1.0 {
                    d2.sqrt()
                } else {
                    d2.powf(0.5 * self.parameter)
                }
            }
            SemimetricFamily::ExpAbs => 2.0 - 2.0 * (-d2.sqrt() / (2.0 * self.parameter)).exp(),
            SemimetricFamily::ExpSquare => {
                2.0 - 2.0 * (-d2 / (2.0 * self.parameter * self.parameter)).exp()
            }
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.from_squared_distance(squared_distance(x, y))
    }
}

impl fmt::Display for SemimetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family, self.parameter)
    }
}

/// `rho(x, y)` for the given semimetric.
pub fn semimetric_eval(spec: &SemimetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Kernel induced by a semimetric and a base point.
///
/// `base_point = None` stands for the origin of whatever dimension the data
/// has, which is the convention used throughout the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub semimetric: SemimetricSpec,
    pub base_point: Option<Vec<f64>>,
}

impl KernelSpec {
    pub fn new(semimetric: SemimetricSpec) -> Self {
        Self { semimetric, base_point: None }
    }

    pub fn with_base_point(semimetric: SemimetricSpec, base_point: Vec<f64>) -> Self {
        Self { semimetric, base_point: Some(base_point) }
    }

    /// `rho(x, x0)`.
    fn anchor(&self, x: &[f64]) -> Result<f64> {
        match &self.base_point {
            Some(x0) => self.semimetric.eval(x, x0),
            None => Ok(self.semimetric.from_squared_distance(x.iter().map(|v| v * v).sum())),
        }
    }

    fn check_base_dim(&self, dim: usize) -> Result<()> {
        match &self.base_point {
            Some(x0) => check_dims(x0.len(), dim),
            None => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x.len(), y.len())?;
        self.check_base_dim(x.len())?;
        Ok(0.5 * (self.anchor(x)? + self.anchor(y)? - self.semimetric.eval_unchecked(x, y)))
    }
}

/// `k(x, y) = 1/2 [rho(x, x0) + rho(y, x0) - rho(x, y)]`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Dense symmetric matrix of kernel evaluations over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    inner: SymMatrix,
}

impl GramMatrix {
    /// Builds a Gram matrix from explicit entries; rejects asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_dims(n, row.len())?;
            data.extend_from_slice(row);
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { inner: SymMatrix::from_raw(n, data) })
    }

    /// Linear kernel `x . y`.
    pub fn linear(points: &[Vec<f64>]) -> Result<Self> {
        common_dim(points)?;
        Ok(Self {
            inner: SymMatrix::from_pair_fn(points.len(), |i, j| {
                points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum()
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.inner
    }
}

/// `G_ij = k(x_i, x_j)`, one kernel evaluation per unordered pair.
pub fn gram_matrix(spec: &KernelSpec, data: &[Vec<f64>]) -> Result<GramMatrix> {
    let dim = common_dim(data)?;
    spec.check_base_dim(dim)?;
    let anchors = data.iter().map(|x| spec.anchor(x)).collect::<Result<Vec<_>>>()?;
    let rho = &spec.semimetric;
    let inner = SymMatrix::from_pair_fn(data.len(), |i, j| {
        0.5 * (anchors[i] + anchors[j] - rho.eval_unchecked(&data[i], &data[j]))
    });
    Ok(GramMatrix { inner })
}

/// Gram matrix `W^-1 A W^-1` of a weighted graph, plus whether it passed the
/// PSD check. An indefinite result is returned anyway; the flag is advisory.
#[derive(Debug, Clone)]
pub struct AffinityGram {
    pub gram: GramMatrix,
    pub psd: PsdReport,
}

pub fn kernel_from_affinity(affinity: &[Vec<f64>], node_weights: &[f64]) -> Result<AffinityGram> {
    let n = affinity.len();
    check_dims(n, node_weights.len())?;
    for row in affinity {
        check_dims(n, row.len())?;
    }
    for (i, &w) in node_weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(Error::NonPositiveWeight { index: i, value: w });
        }
    }
    for i in 0..n {
        for j in 0..i {
            if affinity[i][j] != affinity[j][i] {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let inner = SymMatrix::from_pair_fn(n, |i, j| {
        affinity[i][j] / (node_weights[i] * node_weights[j])
    });
    let gram = GramMatrix { inner };
    let psd = check_psd(&gram, DEFAULT_PSD_TOLERANCE);
    Ok(AffinityGram { gram, psd })
}

pub const DEFAULT_PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// `lambda_min(G) >= -tolerance * max(1, ||G||_inf)`.
pub fn check_psd(gram: &GramMatrix, tolerance: f64) -> PsdReport {
    if gram.n() == 0 {
        return PsdReport { is_psd: true, min_eigenvalue: 0.0 };
    }
    let eig = nalgebra::SymmetricEigen::new(gram.matrix().to_nalgebra());
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = gram.matrix().norm_inf().max(1.0);
    PsdReport { is_psd: min_eigenvalue >= -tolerance * scale, min_eigenvalue }
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Shared dimension of a non-empty point set.
pub(crate) fn common_dim(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyInput("no points"))?;
    let dim = first.len();
    for p in points {
        check_dims(dim, p.len())?;
    }
    Ok(dim)
}
