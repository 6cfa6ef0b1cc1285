//! Sampled graphs and their modularity matrices.
//!
//! A sampled graph stores the symmetric bivariate distribution `p(u,w)` in
//! compressed sparse rows over dense node indices. The modularity matrix
//! `q(u,w) = p(u,w) - p_U(u) p_W(w)` is never materialized: every product with
//! it is computed as a sparse product minus a rank-one correction.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Symmetric bivariate distribution over node pairs.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
    marginal: Vec<f64>,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl SampledGraph {
    /// Builds a graph over nodes `0..n` from weighted edges.
    ///
    /// `p(u,w) = (weight(u,w) + weight(w,u)) / (2 Σ weights)`; multi-edges are
    /// summed and self-loops land on the diagonal. Nodes without edges are kept
    /// with zero marginal.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        for &(u, w, _) in edges {
            let bad = u.max(w);
            if bad >= n {
                return Err(Error::NodeOutOfRange { index: bad, n });
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::build(labels, edges)
    }

    /// Builds a graph from edges between arbitrary string labels. Dense indices
    /// follow the order in which labels first appear.
    pub fn from_edge_list<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |s: String| -> usize {
            if let Some(&i) = index.get(&s) {
                return i;
            }
            let i = labels.len();
            index.insert(s.clone(), i);
            labels.push(s);
            i
        };
        let mut dense = Vec::new();
        for (u, w, weight) in edges {
            let (u, w) = (intern(u.into()), intern(w.into()));
            dense.push((u, w, weight));
        }
        Self::build(labels, &dense)
    }

    fn build(labels: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut total = 0.0;
        let mut pair_weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(u, w, weight) in edges {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight {
                    u: labels[u].clone(),
                    w: labels[w].clone(),
                    weight,
                });
            }
            total += weight;
            *pair_weight.entry((u.min(w), u.max(w))).or_insert(0.0) += weight;
        }
        if total <= 0.0 {
            return Err(Error::EmptyGraph);
        }

        let mut entries = Vec::with_capacity(2 * pair_weight.len());
        for (&(u, w), &s) in &pair_weight {
            if s == 0.0 {
                continue;
            }
            if u == w {
                entries.push((u, u, s / total));
            } else {
                // computed once and mirrored, so symmetry is exact
                let p = s / (2.0 * total);
                entries.push((u, w, p));
                entries.push((w, u, p));
            }
        }
        Ok(Self::from_sorted_entries(labels, entries))
    }

    /// Maps a bounded similarity matrix to a bivariate distribution by shifting
    /// with its minimum and normalizing. Asymmetric input is symmetrized first.
    pub fn from_similarity(sim: ArrayView2<f64>) -> Result<Self> {
        let n = sim.nrows();
        if n == 0 || sim.ncols() != n {
            return Err(Error::InvalidSimilarity(format!(
                "expected a non-empty square matrix, got {}x{}",
                sim.nrows(),
                sim.ncols()
            )));
        }
        if sim.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSimilarity("non-finite entry".into()));
        }
        let mut s = sim.to_owned();
        let symmetric = (0..n).all(|i| (0..n).all(|j| sim[[i, j]] == sim[[j, i]]));
        if !symmetric {
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = (sim[[i, j]] + sim[[j, i]]) / 2.0;
                    s[[i, j]] = avg;
                    s[[j, i]] = avg;
                }
            }
        }
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let mut denom = 0.0;
        for v in s.iter() {
            denom += v - min;
        }
        if denom.is_nan() || denom <= 0.0 {
            return Err(Error::DegenerateSimilarity);
        }
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let p = (s[[i, j]] - min) / denom;
                if p > 0.0 {
                    entries.push((i, j, p));
                }
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self::from_sorted_entries(labels, entries))
    }

    /// Builds a graph from already-normalized symmetric probabilities.
    pub(crate) fn from_probabilities(n: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_sorted_entries(labels, entries)
    }

    fn from_sorted_entries(labels: Vec<String>, mut entries: Vec<(usize, usize, f64)>) -> Self {
        let n = labels.len();
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut probs = Vec::with_capacity(entries.len());
        for &(u, w, p) in &entries {
            row_ptr[u + 1] += 1;
            cols.push(w);
            probs.push(p);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut marginal = vec![0.0; n];
        for (u, m) in marginal.iter_mut().enumerate() {
            *m = probs[row_ptr[u]..row_ptr[u + 1]].iter().sum();
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self {
            n,
            row_ptr,
            cols,
            probs,
            marginal,
            labels,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored nonzero `p(u,w)` entries (ordered pairs).
    pub fn nnz(&self) -> usize {
        self.probs.len()
    }

    /// Neighbors of `u` with their joint probabilities, in ascending index order.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[u]..self.row_ptr[u + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.probs[range].iter().copied())
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    /// `p(u,w)`; zero for pairs that are not stored.
    pub fn prob(&self, u: usize, w: usize) -> f64 {
        let range = self.row_ptr[u]..self.row_ptr[u + 1];
        match self.cols[range.clone()].binary_search(&w) {
            Ok(pos) => self.probs[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `p_U`, which equals `p_W` because the distribution is symmetric.
    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn marginal_u(&self) -> &[f64] {
        &self.marginal
    }

    pub fn marginal_w(&self) -> &[f64] {
        &self.marginal
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, u: usize) -> &str {
        &self.labels[u]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Undirected edges `(u, w)` with `u < w`, self-loops excluded.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for (w, _) in self.neighbors(u) {
                if u < w {
                    out.push((u, w));
                }
            }
        }
        out
    }

    pub fn modularity(&self) -> ModularityMatrix<'_> {
        ModularityMatrix::new(self)
    }
}

/// A symmetric operator with zero row sums that the clustering and embedding
/// algorithms consume. Implemented by sampled-graph modularity matrices and by
/// the Gram matrix of a centered point cloud.
///
/// The "aggregate" is operator-specific state that makes the off-diagonal
/// product `z_u = Σ_{w≠u} q(w,u) h_w` cost `O(deg(u) + K)` instead of `O(nK)`.
pub trait CovarianceOperator {
    fn n(&self) -> usize;

    fn diag_zeroed(&self) -> bool;

    /// Copy of this operator with the diagonal flag set.
    fn with_diag_zeroed(&self, zeroed: bool) -> Self
    where
        Self: Sized;

    /// The true diagonal entry `q(u,u)`, regardless of the flag.
    fn self_covariance(&self, u: usize) -> f64;

    /// `q(u,w)` honoring the diagonal flag. Panics on out-of-range indices.
    fn entry(&self, u: usize, w: usize) -> f64;

    /// `Q·H`, honoring the diagonal flag.
    fn apply(&self, h: ArrayView2<f64>) -> Result<Array2<f64>>;

    fn aggregate(&self, h: ArrayView2<f64>) -> Array2<f64>;

    /// Writes `Σ_{w≠u} q(w,u) h_w` into `out` and returns the number of
    /// multiply-adds performed.
    fn off_diagonal_product(
        &self,
        h: ArrayView2<f64>,
        aggregate: &Array2<f64>,
        u: usize,
        out: &mut [f64],
    ) -> usize;

    /// Updates the aggregate after row `u` of `H` changed from `old` to `new`.
    fn shift_aggregate(&self, aggregate: &mut Array2<f64>, u: usize, old: &[f64], new: &[f64]);

    /// An upper bound on the spectral radius.
    fn spectral_radius_bound(&self) -> f64;

    fn to_dense(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(u, w)| self.entry(u, w))
    }
}

/// Implicit `Q = P - p_U p_Wᵀ` over a sampled graph.
#[derive(Debug, Clone, Copy)]
pub struct ModularityMatrix<'a> {
    graph: &'a SampledGraph,
    diag_zeroed: bool,
}

impl<'a> ModularityMatrix<'a> {
    pub fn new(graph: &'a SampledGraph) -> Self {
        Self {
            graph,
            diag_zeroed: false,
        }
    }

    pub fn graph(&self) -> &'a SampledGraph {
        self.graph
    }

    fn check(&self, u: usize) -> Result<()> {
        if u >= self.graph.n {
            Err(Error::NodeOutOfRange {
                index: u,
                n: self.graph.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn covariance(&self, u: usize, w: usize) -> Result<f64> {
        self.check(u)?;
        self.check(w)?;
        Ok(self.entry(u, w))
    }

    /// `Σ_k q(S_k, S_k)` for a hard partition, in `O(n + m)`.
    pub fn partition_modularity(&self, partition: &[usize]) -> Result<f64> {
        let g = self.graph;
        if partition.len() != g.n {
            return Err(Error::DimensionMismatch {
                expected: g.n,
                found: partition.len(),
            });
        }
        let k = partition.iter().copied().max().map_or(0, |m| m + 1);
        let mut within = vec![0.0; k];
        let mut mass = vec![0.0; k];
        for u in 0..g.n {
            let cu = partition[u];
            mass[cu] += g.marginal[u];
            for (w, p) in g.neighbors(u) {
                if partition[w] == cu {
                    within[cu] += p;
                }
            }
        }
        let mut q = 0.0;
        for c in 0..k {
            q += within[c] - mass[c] * mass[c];
        }
        if self.diag_zeroed {
            for u in 0..g.n {
                q -= self.self_covariance(u);
            }
        }
        Ok(q)
    }
}

impl CovarianceOperator for ModularityMatrix<'_> {
    fn n(&self) -> usize {
        self.graph.n
    }

    fn diag_zeroed(&self) -> bool {
        self.diag_zeroed
    }

    fn with_diag_zeroed(&self, zeroed: bool) -> Self {
        Self {
            graph: self.graph,
            diag_zeroed: zeroed,
        }
    }

    fn self_covariance(&self, u: usize) -> f64 {
        let pu = self.graph.marginal[u];
        self.graph.prob(u, u) - pu * pu
    }

    fn entry(&self, u: usize, w: usize) -> f64 {
        assert!(u < self.graph.n && w < self.graph.n, "node index out of range");
        if u == w && self.diag_zeroed {
            return 0.0;
        }
        self.graph.prob(u, w) - self.graph.marginal[u] * self.graph.marginal[w]
    }

    fn apply(&self, h: ArrayView2<f64>) -> Result<Array2<f64>> {
        let g = self.graph;
        if h.nrows() != g.n {
            return Err(Error::DimensionMismatch {
                expected: g.n,
                found: h.nrows(),
            });
        }
        let k = h.ncols();
        let projected = self.aggregate(h);
        let mut out = Array2::zeros((g.n, k));
        for u in 0..g.n {
            let pu = g.marginal[u];
            let mut row = out.row_mut(u);
            for (w, p) in g.neighbors(u) {
                for c in 0..k {
                    row[c] += p * h[[w, c]];
                }
            }
            for c in 0..k {
                row[c] -= pu * projected[[0, c]];
            }
            if self.diag_zeroed {
                let quu = self.self_covariance(u);
                for c in 0..k {
                    row[c] -= quu * h[[u, c]];
                }
            }
        }
        Ok(out)
    }

    /// `S = p_Wᵀ H`, a `1 × K` row.
    fn aggregate(&self, h: ArrayView2<f64>) -> Array2<f64> {
        let k = h.ncols();
        let mut s = Array2::zeros((1, k));
        for (w, &pw) in self.graph.marginal.iter().enumerate() {
            for c in 0..k {
                s[[0, c]] += pw * h[[w, c]];
            }
        }
        s
    }

    fn off_diagonal_product(
        &self,
        h: ArrayView2<f64>,
        aggregate: &Array2<f64>,
        u: usize,
        out: &mut [f64],
    ) -> usize {
        let g = self.graph;
        let k = h.ncols();
        out.iter_mut().for_each(|z| *z = 0.0);
        let mut ops = 0;
        for (w, p) in g.neighbors(u) {
            if w == u {
                continue;
            }
            for c in 0..k {
                out[c] += p * h[[w, c]];
            }
            ops += k;
        }
        let pu = g.marginal[u];
        for c in 0..k {
            out[c] -= pu * (aggregate[[0, c]] - pu * h[[u, c]]);
        }
        ops + k
    }

    fn shift_aggregate(&self, aggregate: &mut Array2<f64>, u: usize, old: &[f64], new: &[f64]) {
        let pu = self.graph.marginal[u];
        for c in 0..old.len() {
            aggregate[[0, c]] += pu * (new[c] - old[c]);
        }
    }

    fn spectral_radius_bound(&self) -> f64 {
        // Gershgorin: Σ_w |q(u,w)| ≤ Σ_w p(u,w) + p_U(u) Σ_w p_W(w) = 2 p_U(u)
        2.0 * self.graph.marginal.iter().copied().fold(0.0, f64::max)
    }
}

/// `tr(HᵀQH)` through one operator application.
pub fn trace_objective<Q: CovarianceOperator + ?Sized>(op: &Q, h: ArrayView2<f64>) -> Result<f64> {
    let qh = op.apply(h)?;
    Ok(h.iter().zip(qh.iter()).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn k3() -> SampledGraph {
        SampledGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_probabilities() {
        let g = k3();
        for u in 0..3 {
            for w in 0..3 {
                let expected = if u == w { 0.0 } else { 1.0 / 6.0 };
                assert!((g.prob(u, w) - expected).abs() < 1e-15);
            }
            assert!((g.marginal()[u] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(g.nnz(), 6);
    }

    #[test]
    fn single_edge() {
        let g = SampledGraph::from_edges(2, &[(0, 1, 3.5)]).unwrap();
        assert_eq!(g.prob(0, 1), 0.5);
        assert_eq!(g.prob(1, 0), 0.5);
        assert_eq!(g.marginal(), &[0.5, 0.5]);
    }

    #[test]
    fn multi_edges_and_orientation_are_summed() {
        let g = SampledGraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(g.prob(0, 1), 0.25);
        assert_eq!(g.prob(2, 1), 0.25);
        assert!((g.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_loop_lands_on_diagonal() {
        let g = SampledGraph::from_edges(2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(g.prob(0, 0), 0.5);
        assert_eq!(g.prob(0, 1), 0.25);
        assert!((g.total_mass() - 1.0).abs() < 1e-15);
        assert!((g.marginal()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_negative() {
        assert!(matches!(SampledGraph::from_edges(2, &[]), Err(Error::EmptyGraph)));
        assert!(matches!(
            SampledGraph::from_edges(2, &[(0, 1, -1.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            SampledGraph::from_edges(2, &[(0, 1, f64::NAN)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            SampledGraph::from_edges(2, &[(0, 1, 0.0)]),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn labeled_edges_keep_first_appearance_order() {
        let g = SampledGraph::from_edge_list(vec![("b", "a", 1.0), ("a", "c", 1.0)]).unwrap();
        assert_eq!(g.labels(), &["b", "a", "c"]);
        assert_eq!(g.index_of("c"), Some(2));
        assert_eq!(g.prob(1, 2), 0.25);
    }

    #[test]
    fn similarity_two_by_two() {
        let g = SampledGraph::from_similarity(array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap();
        assert_eq!(g.prob(0, 1), 0.5);
        assert_eq!(g.prob(0, 0), 0.0);
    }

    #[test]
    fn similarity_three_by_three() {
        let sim = array![[0.0, 2.0, 1.0], [2.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let g = SampledGraph::from_similarity(sim.view()).unwrap();
        assert_eq!(g.prob(0, 1), 0.25);
        assert_eq!(g.prob(0, 2), 0.125);
        assert!((g.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn similarity_uniform_off_diagonal() {
        let sim = array![[-1.0, 3.0, 3.0], [3.0, -1.0, 3.0], [3.0, 3.0, -1.0]];
        let g = SampledGraph::from_similarity(sim.view()).unwrap();
        for u in 0..3 {
            for w in 0..3 {
                let expected = if u == w { 0.0 } else { 1.0 / 6.0 };
                assert!((g.prob(u, w) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn similarity_asymmetric_is_symmetrized() {
        let sim = array![[0.0, 2.0], [0.0, 0.0]];
        let g = SampledGraph::from_similarity(sim.view()).unwrap();
        assert_eq!(g.prob(0, 1), g.prob(1, 0));
        assert_eq!(g.prob(0, 1), 0.5);
    }

    #[test]
    fn similarity_constant_is_degenerate() {
        let sim = Array2::from_elem((3, 3), 0.7);
        assert!(matches!(
            SampledGraph::from_similarity(sim.view()),
            Err(Error::DegenerateSimilarity)
        ));
    }

    #[test]
    fn covariance_examples() {
        let g = k3();
        let q = g.modularity();
        assert!((q.covariance(0, 1).unwrap() - 1.0 / 18.0).abs() < 1e-15);
        assert!((q.covariance(1, 1).unwrap() + 1.0 / 9.0).abs() < 1e-15);
        let z = q.with_diag_zeroed(true);
        assert_eq!(z.covariance(1, 1).unwrap(), 0.0);
        for u in 0..3 {
            let s: f64 = (0..3).map(|w| q.covariance(u, w).unwrap()).sum();
            assert!(s.abs() < 1e-15);
        }
        assert!(matches!(q.covariance(3, 0), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn partition_modularity_examples() {
        let g = k3();
        let q = g.modularity();
        assert!(q.partition_modularity(&[0, 0, 0]).unwrap().abs() < 1e-15);
        assert!((q.partition_modularity(&[0, 1, 2]).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(q.partition_modularity(&[0, 1]).is_err());
    }

    #[test]
    fn apply_examples() {
        let g = k3();
        let q = g.modularity();
        let ones = Array2::ones((3, 1));
        let out = q.apply(ones.view()).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));

        let eye = Array2::eye(3);
        let out = q.with_diag_zeroed(true).apply(eye.view()).unwrap();
        for u in 0..3 {
            for w in 0..3 {
                let expected = if u == w { 0.0 } else { 1.0 / 18.0 };
                assert!((out[[u, w]] - expected).abs() < 1e-15);
            }
        }
        assert!(q.apply(Array2::<f64>::zeros((2, 1)).view()).is_err());
    }

    #[test]
    fn isolated_nodes_have_zero_rows() {
        let g = SampledGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let q = g.modularity();
        assert_eq!(g.marginal()[3], 0.0);
        for w in 0..4 {
            assert_eq!(q.entry(3, w), 0.0);
        }
    }
}
