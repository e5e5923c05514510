//! Seeded generators for the synthetic benchmarks.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`. Normal
//! variates come from `rand_distr::StandardNormal` (ziggurat method). For a
//! mixture, each point consumes one uniform `f64` to pick its component and
//! then one standard normal per coordinate, in coordinate order. The same
//! `(generator, n, seed)` therefore gives bit-identical data.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::energy::Partition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Transform {
    #[default]
    None,
    /// `x -> exp(x)` per coordinate, giving lognormal components.
    ExpPointwise,
}

/// A Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix.
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    components: Vec<Component>,
    transform: Transform,
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl MixtureSpec {
    pub fn new(components: Vec<Component>, transform: Transform) -> Result<Self> {
        let first = components.first().ok_or(Error::EmptyInput("components"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        for c in &components {
            if c.mean.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.mean.len() });
            }
            if c.variance.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.variance.len() });
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!("component weight {} must be positive", c.weight)));
            }
            if c.variance.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter("variances must be positive and finite".into()));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidParameter("means must be finite".into()));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("component weights sum to {total}, not 1")));
        }
        Ok(Self { components, transform })
    }

    /// Two equally weighted components.
    pub fn balanced_pair(
        mean1: Vec<f64>,
        var1: Vec<f64>,
        mean2: Vec<f64>,
        var2: Vec<f64>,
        transform: Transform,
    ) -> Result<Self> {
        Self::new(
            vec![
                Component { weight: 0.5, mean: mean1, variance: var1 },
                Component { weight: 0.5, mean: mean2, variance: var2 },
            ],
            transform,
        )
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }
}

/// Points with the index of the component that generated each one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: Vec<Vec<f64>>,
    /// `k` is the number of components; a small sample may leave some empty.
    pub labels: Partition,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::EmptyInput("sample size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = spec.components.len() - 1;
    let sd: Vec<Vec<f64>> = spec.components.iter().map(|c| c.variance.iter().map(|v| v.sqrt()).collect()).collect();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = last;
        for (idx, c) in spec.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                j = idx;
                break;
            }
        }
        let comp = &spec.components[j];
        let point: Vec<f64> = comp
            .mean
            .iter()
            .zip(&sd[j])
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                let x = m + s * z;
                match spec.transform {
                    Transform::None => x,
                    Transform::ExpPointwise => x.exp(),
                }
            })
            .collect();
        points.push(point);
        labels.push(j);
    }
    Ok(LabeledDataset { points, labels: Partition::allow_empty(labels, spec.components.len())?, seed })
}

/// Two noisy concentric circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclesSpec {
    pub radii: [f64; 2],
    /// Scale of the isotropic Gaussian noise.
    pub noise: f64,
}

impl Default for CirclesSpec {
    fn default() -> Self {
        Self { radii: [1.0, 3.0], noise: 0.2 }
    }
}

/// Each point draws its circle with probability 1/2 (one uniform), then
/// `theta` uniform on `[0, 2 pi)`, then two standard normals for the noise.
pub fn sample_circles(spec: &CirclesSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::EmptyInput("sample size"));
    }
    if !(spec.noise >= 0.0) || spec.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive and noise non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let j = usize::from(rng.random::<f64>() >= 0.5);
        let theta = rng.random::<f64>() * TAU;
        let (zx, zy): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let r = spec.radii[j];
        points.push(vec![r * theta.cos() + spec.noise * zx, r * theta.sin() + spec.noise * zy]);
        labels.push(j);
    }
    Ok(LabeledDataset { points, labels: Partition::allow_empty(labels, 2)?, seed })
}

/// How the second parameter of the one-dimensional mixtures `N(a, b)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConvention {
    /// `b` is the variance.
    Variance,
    /// `b` is the standard deviation.
    #[default]
    StdDev,
}

impl std::str::FromStr for VarianceConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(Self::Variance),
            "stddev" => Ok(Self::StdDev),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

impl VarianceConvention {
    fn variance(self, b: f64) -> f64 {
        match self {
            Self::Variance => b,
            Self::StdDev => b * b,
        }
    }
}

/// A named benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    /// Identity covariances, mean shift `0.7` in the first 10 of `dim` coordinates.
    Gauss1 { dim: usize },
    /// Second component has unequal variances in the first 10 coordinates.
    Gauss2 { dim: usize },
    /// 20 dimensions, `2 Sigma_1 = Sigma_2 = I`.
    Gauss20,
    /// Lognormal version of `Gauss20`.
    LogGauss20,
    /// Component weights `(N - m) / 2N` and `(N + m) / 2N` with `N = 300`.
    Unbalanced { m: usize },
    Cigars,
    Circles,
    Normal1d,
    Lognormal1d,
}

pub const UNBALANCED_HALF_SIZE: usize = 300;

/// Variances of the first 10 coordinates of the second `gauss2` component.
pub const GAUSS2_VARIANCES: [f64; 10] = [1.367, 3.175, 3.247, 4.403, 1.249, 1.969, 4.035, 4.237, 2.813, 3.637];

/// A generator ready to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    Mixture(MixtureSpec),
    Circles(CirclesSpec),
}

impl Generator {
    pub fn sample(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        match self {
            Self::Mixture(spec) => sample_mixture(spec, n, seed),
            Self::Circles(spec) => sample_circles(spec, n, seed),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Mixture(spec) => spec.dim(),
            Self::Circles(_) => 2,
        }
    }
}

impl Builtin {
    pub const NAMES: [&'static str; 9] =
        ["gauss1", "gauss2", "gauss20", "loggauss20", "unbalanced", "cigars", "circles", "normal1d", "lognormal1d"];

    /// `dim` is used by `gauss1` and `gauss2` (default 10), `m` by
    /// `unbalanced` (default 0).
    pub fn from_name(name: &str, dim: Option<usize>, m: Option<usize>) -> Result<Self> {
        let dim = dim.unwrap_or(10);
        let m = m.unwrap_or(0);
        Ok(match name {
            "gauss1" => Self::Gauss1 { dim },
            "gauss2" => Self::Gauss2 { dim },
            "gauss20" => Self::Gauss20,
            "loggauss20" => Self::LogGauss20,
            "unbalanced" => Self::Unbalanced { m },
            "cigars" => Self::Cigars,
            "circles" => Self::Circles,
            "normal1d" => Self::Normal1d,
            "lognormal1d" => Self::Lognormal1d,
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gauss1 { .. } => "gauss1",
            Self::Gauss2 { .. } => "gauss2",
            Self::Gauss20 => "gauss20",
            Self::LogGauss20 => "loggauss20",
            Self::Unbalanced { .. } => "unbalanced",
            Self::Cigars => "cigars",
            Self::Circles => "circles",
            Self::Normal1d => "normal1d",
            Self::Lognormal1d => "lognormal1d",
        }
    }

    /// Sample size used by the corresponding experiment.
    pub fn default_size(&self) -> usize {
        match self {
            Self::Gauss1 { .. } | Self::Gauss2 { .. } | Self::Gauss20 | Self::LogGauss20 => 200,
            Self::Unbalanced { .. } => 2 * UNBALANCED_HALF_SIZE,
            Self::Cigars | Self::Circles => 800,
            Self::Normal1d | Self::Lognormal1d => 2000,
        }
    }

    pub fn generator(&self, convention: VarianceConvention) -> Result<Generator> {
        let shifted = |dim: usize, signal: usize, shift: f64| -> Vec<f64> {
            (0..dim).map(|i| if i < signal { shift } else { 0.0 }).collect()
        };
        let spec = match *self {
            Self::Gauss1 { dim } => {
                require_signal_dims(dim)?;
                MixtureSpec::balanced_pair(vec![0.0; dim], vec![1.0; dim], shifted(dim, 10, 0.7), vec![1.0; dim], Transform::None)?
            }
            Self::Gauss2 { dim } => {
                require_signal_dims(dim)?;
                let var2 = (0..dim).map(|i| GAUSS2_VARIANCES.get(i).copied().unwrap_or(1.0)).collect();
                MixtureSpec::balanced_pair(vec![0.0; dim], vec![1.0; dim], shifted(dim, 10, 1.0), var2, Transform::None)?
            }
            Self::Gauss20 | Self::LogGauss20 => {
                let transform = if *self == Self::Gauss20 { Transform::None } else { Transform::ExpPointwise };
                MixtureSpec::balanced_pair(vec![0.0; 20], vec![0.5; 20], shifted(20, 5, 0.5), vec![1.0; 20], transform)?
            }
            Self::Unbalanced { m } => {
                let big_n = UNBALANCED_HALF_SIZE;
                if m >= big_n {
                    return Err(Error::InvalidParameter(format!("m must be < {big_n}")));
                }
                let total = (2 * big_n) as f64;
                MixtureSpec::new(
                    vec![
                        Component { weight: (big_n - m) as f64 / total, mean: vec![0.0; 4], variance: vec![1.0; 4] },
                        Component {
                            weight: (big_n + m) as f64 / total,
                            mean: vec![1.5, 1.5, 0.0, 0.0],
                            variance: vec![0.5, 0.5, 1.0, 1.0],
                        },
                    ],
                    Transform::None,
                )?
            }
            Self::Cigars => {
                MixtureSpec::balanced_pair(vec![0.0, 0.0], vec![1.0, 20.0], vec![6.5, 0.0], vec![1.0, 20.0], Transform::None)?
            }
            Self::Circles => return Ok(Generator::Circles(CirclesSpec::default())),
            Self::Normal1d | Self::Lognormal1d => {
                let transform = if *self == Self::Normal1d { Transform::None } else { Transform::ExpPointwise };
                MixtureSpec::balanced_pair(
                    vec![0.0],
                    vec![convention.variance(1.5)],
                    vec![1.5],
                    vec![convention.variance(0.3)],
                    transform,
                )?
            }
        };
        Ok(Generator::Mixture(spec))
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gauss1 { dim } | Self::Gauss2 { dim } => write!(f, "{}(dim={dim})", self.name()),
            Self::Unbalanced { m } => write!(f, "unbalanced(m={m})"),
            _ => f.write_str(self.name()),
        }
    }
}

fn require_signal_dims(dim: usize) -> Result<()> {
    if dim < 10 {
        return Err(Error::InvalidParameter(format!("dimension {dim} must be >= 10")));
    }
    Ok(())
}

/// Samples `n` points from a builtin benchmark.
pub fn generate(builtin: Builtin, convention: VarianceConvention, n: usize, seed: u64) -> Result<LabeledDataset> {
    builtin.generator(convention)?.sample(n, seed)
}
