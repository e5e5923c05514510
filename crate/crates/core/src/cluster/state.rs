use crate::energy::{Partition, Weights};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::matrix::pairwise_sum;

/// Incremental caches for one solver run.
///
/// For every cluster `j` the state keeps the weight sum `s_j` and the internal
/// cost `q_j = sum_{x, y in C_j} w(x) w(y) k(x, y)`. The objective is
/// `Q = sum_j q_j / s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    labels: Vec<usize>,
    counts: Vec<usize>,
    s: Vec<f64>,
    q: Vec<f64>,
    /// `(W G W)_ii`
    diag: Vec<f64>,
}

impl ClusterState {
    pub fn new(gram: &GramMatrix, weights: &Weights, part: &Partition) -> Result<Self> {
        check_sizes(gram, weights, part.len())?;
        let counts = part.counts();
        if let Some(j) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyCluster(j));
        }
        let (s, q) = fresh_caches(gram, weights, part.labels(), part.k());
        let diag = (0..gram.n())
            .map(|i| weights.get(i) * weights.get(i) * gram.get(i, i))
            .collect();
        Ok(Self { labels: part.labels().to_vec(), counts, s, q, diag })
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn weight_sums(&self) -> &[f64] {
        &self.s
    }

    pub fn internal_costs(&self) -> &[f64] {
        &self.q
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.labels.clone(), self.k()).expect("state keeps clusters non-empty")
    }

    /// `Q = sum_j q_j / s_j` from the cached values.
    pub fn objective(&self) -> f64 {
        self.q.iter().zip(&self.s).map(|(q, s)| q / s).sum()
    }

    /// Writes `Q_l(x_i)` for every cluster `l` into `out` in one pass over row `i`.
    pub(crate) fn point_costs_into(&self, gram: &GramMatrix, weights: &Weights, i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|c| *c = 0.0);
        let row = gram.row(i);
        if weights.is_unit() {
            for (&l, &g) in self.labels.iter().zip(row) {
                out[l] += g;
            }
        } else {
            let w = weights.as_slice();
            for ((&l, &g), &wy) in self.labels.iter().zip(row).zip(w) {
                out[l] += wy * g;
            }
            let wi = weights.get(i);
            out.iter_mut().for_each(|c| *c *= wi);
        }
    }

    /// `Q^{(j -> l)}` gain in closed form from cached quantities.
    ///
    /// `cost_from` and `cost_to` are `Q_j(x_i)` and `Q_l(x_i)`; `j` must hold
    /// more than one point.
    #[inline]
    pub(crate) fn move_gain(&self, i: usize, wi: f64, from: usize, to: usize, cost_from: f64, cost_to: f64) -> f64 {
        let d = self.diag[i];
        let (sj, sl) = (self.s[from], self.s[to]);
        (wi / sj * self.q[from] - 2.0 * cost_from + d) / (sj - wi)
            - (wi / sl * self.q[to] - 2.0 * cost_to - d) / (sl + wi)
    }

    /// Whether point `i` can leave its cluster without emptying it.
    #[inline]
    pub(crate) fn can_leave(&self, i: usize, wi: f64) -> bool {
        let j = self.labels[i];
        self.counts[j] > 1 && self.s[j] - wi > 0.0
    }

    pub(crate) fn apply_move(&mut self, i: usize, wi: f64, to: usize, cost_from: f64, cost_to: f64) {
        let from = self.labels[i];
        debug_assert_ne!(from, to);
        let d = self.diag[i];
        self.s[from] -= wi;
        self.s[to] += wi;
        self.q[from] += d - 2.0 * cost_from;
        self.q[to] += 2.0 * cost_to + d;
        self.counts[from] -= 1;
        self.counts[to] += 1;
        self.labels[i] = to;
    }

    /// Recomputes `s` and `q` from the labels and compares with the caches.
    ///
    /// Returns the largest relative deviation.
    pub fn cache_deviation(&self, gram: &GramMatrix, weights: &Weights) -> f64 {
        let (s, q) = fresh_caches(gram, weights, &self.labels, self.k());
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        s.iter()
            .zip(&self.s)
            .chain(q.iter().zip(&self.q))
            .map(|(&a, &b)| if a == b { 0.0 } else { rel(a, b) })
            .fold(0.0, f64::max)
    }

    /// Replaces the caches with values recomputed from the labels.
    pub fn refresh(&mut self, gram: &GramMatrix, weights: &Weights) {
        let (s, q) = fresh_caches(gram, weights, &self.labels, self.k());
        self.s = s;
        self.q = q;
    }
}

fn check_sizes(gram: &GramMatrix, weights: &Weights, n: usize) -> Result<()> {
    if gram.n() != n {
        return Err(Error::LengthMismatch { left: gram.n(), right: n });
    }
    if weights.len() != n {
        return Err(Error::LengthMismatch { left: weights.len(), right: n });
    }
    Ok(())
}

fn fresh_caches(gram: &GramMatrix, weights: &Weights, labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let s = members
        .iter()
        .map(|m| pairwise_sum(&m.iter().map(|&i| weights.get(i)).collect::<Vec<_>>()))
        .collect();
    let q = members.iter().map(|m| internal_cost(gram, weights, m)).collect();
    (s, q)
}

/// `sum_{x, y in members} w(x) w(y) G_xy`.
pub(crate) fn internal_cost(gram: &GramMatrix, weights: &Weights, members: &[usize]) -> f64 {
    let mut terms = Vec::with_capacity(members.len());
    let rows: Vec<f64> = members
        .iter()
        .map(|&x| {
            let row = gram.row(x);
            terms.clear();
            terms.extend(members.iter().map(|&y| weights.get(y) * row[y]));
            weights.get(x) * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// `Q = sum_j q_j / s_j` recomputed from scratch.
pub fn objective_q(gram: &GramMatrix, weights: &Weights, part: &Partition) -> Result<f64> {
    check_sizes(gram, weights, part.len())?;
    if let Some(j) = part.counts().iter().position(|&c| c == 0) {
        return Err(Error::EmptyCluster(j));
    }
    let (s, q) = fresh_caches(gram, weights, part.labels(), part.k());
    Ok(q.iter().zip(&s).map(|(q, s)| q / s).sum())
}

/// `Q_l(x_i) = sum_{y in C_l} w(x_i) w(y) k(x_i, y)`; zero for an empty cluster.
pub fn point_cost(state: &ClusterState, gram: &GramMatrix, weights: &Weights, i: usize, ell: usize) -> Result<f64> {
    check_point(state, i, ell)?;
    let row = gram.row(i);
    let terms: Vec<f64> = state
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == ell)
        .map(|(y, _)| weights.get(y) * row[y])
        .collect();
    Ok(weights.get(i) * pairwise_sum(&terms))
}

/// Change in `Q` from moving point `i` to cluster `ell`.
///
/// `Ok(None)` means the move is unavailable because it would empty the
/// source cluster.
pub fn delta_q(state: &ClusterState, gram: &GramMatrix, weights: &Weights, i: usize, ell: usize) -> Result<Option<f64>> {
    check_point(state, i, ell)?;
    let from = state.labels[i];
    if from == ell {
        return Err(Error::InvalidParameter(format!("point {i} already belongs to cluster {ell}")));
    }
    let wi = weights.get(i);
    if !state.can_leave(i, wi) {
        return Ok(None);
    }
    let mut costs = vec![0.0; state.k()];
    state.point_costs_into(gram, weights, i, &mut costs);
    Ok(Some(state.move_gain(i, wi, from, ell, costs[from], costs[ell])))
}

fn check_point(state: &ClusterState, i: usize, ell: usize) -> Result<()> {
    if i >= state.n() {
        return Err(Error::IndexOutOfRange { index: i, n: state.n() });
    }
    if ell >= state.k() {
        return Err(Error::IndexOutOfRange { index: ell, n: state.k() });
    }
    Ok(())
}
