//! Downstream evaluation: node classification and link prediction with a
//! softmax-regression classifier over repeated stratified splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SampledGraph;
use crate::io::parse_label_pairs;

/// Node → class assignment read from a label file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeLabels {
    /// Node index → class index.
    pub by_node: BTreeMap<usize, usize>,
    /// Class names in sorted order; class `i` is `class_names[i]`.
    pub class_names: Vec<String>,
}

impl NodeLabels {
    /// Resolves `(node, class)` pairs against the node labels. Repeated
    /// consistent pairs collapse; conflicting ones and unknown nodes fail.
    pub fn from_pairs(pairs: &[(String, String)], nodes: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut named: BTreeMap<usize, &str> = BTreeMap::new();
        for (node, class) in pairs {
            let &u = index.get(node.as_str()).ok_or_else(|| Error::UnknownNode(node.clone()))?;
            match named.insert(u, class) {
                Some(prev) if prev != class => return Err(Error::ConflictingLabel(node.clone())),
                _ => {}
            }
        }
        let class_names: Vec<String> = named
            .values()
            .map(|s| s.to_string())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let by_node = named
            .into_iter()
            .map(|(u, c)| (u, class_names.iter().position(|s| s == c).expect("collected above")))
            .collect();
        Ok(Self { by_node, class_names })
    }

    pub fn len(&self) -> usize {
        self.by_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    /// `(node, class)` pairs for semi-supervised clustering.
    pub fn pins(&self) -> Vec<(usize, usize)> {
        self.by_node.iter().map(|(&u, &c)| (u, c)).collect()
    }

    /// Class of every node, if all `n` nodes are labeled.
    pub fn complete(&self, n: usize) -> Option<Vec<usize>> {
        (self.by_node.len() == n && self.by_node.keys().copied().eq(0..n)).then(|| self.by_node.values().copied().collect())
    }
}

/// Reads a `node<TAB>class` file, rejecting nodes not in `nodes`.
pub fn load_labels(path: impl AsRef<Path>, nodes: &[String]) -> Result<NodeLabels> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    NodeLabels::from_pairs(&parse_label_pairs(&text, &path.display().to_string())?, nodes)
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub embeddings: Array2<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl LabeledDataset {
    pub fn new(embeddings: Array2<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if embeddings.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: embeddings.nrows(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= classes) {
            return Err(Error::Evaluation(format!("class {bad} out of range for {classes} classes")));
        }
        Ok(Self {
            embeddings,
            labels,
            classes,
        })
    }

    /// Keeps only labeled rows of a full embedding.
    pub fn from_node_labels(embeddings: ArrayView2<f64>, labels: &NodeLabels) -> Result<Self> {
        let rows: Vec<usize> = labels.by_node.keys().copied().collect();
        if let Some(&bad) = rows.iter().find(|&&u| u >= embeddings.nrows()) {
            return Err(Error::NodeOutOfRange {
                index: bad,
                n: embeddings.nrows(),
            });
        }
        Self::new(
            embeddings.select(Axis(0), &rows),
            labels.by_node.values().copied().collect(),
            labels.classes(),
        )
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.classes];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3}±{:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub accuracy: Stat,
    pub macro_f1: Stat,
    /// `None` when some class has a single member.
    pub roc_auc_ovr: Option<Stat>,
    pub repetitions: usize,
    /// Classes too small to split, kept entirely in the training set.
    pub flagged_classes: Vec<usize>,
}

impl MetricSummary {
    /// `metric<TAB>mean<TAB>std`, one line per metric.
    pub fn to_tsv(&self) -> String {
        let line = |name: &str, s: Option<Stat>| match s {
            Some(s) => format!("{name}\t{:.16e}\t{:.16e}\n", s.mean, s.std),
            None => format!("{name}\tNA\tNA\n"),
        };
        line("accuracy", Some(self.accuracy)) + &line("macro_f1", Some(self.macro_f1)) + &line("roc_auc_ovr", self.roc_auc_ovr)
    }

    fn aggregate(reps: Vec<RepMetrics>, auc_defined: bool, flagged_classes: Vec<usize>) -> Self {
        let acc: Vec<f64> = reps.iter().map(|r| r.accuracy).collect();
        let f1: Vec<f64> = reps.iter().map(|r| r.macro_f1).collect();
        let auc: Option<Vec<f64>> = reps.iter().map(|r| r.roc_auc).collect();
        MetricSummary {
            accuracy: Stat::of(&acc),
            macro_f1: Stat::of(&f1),
            roc_auc_ovr: auc.filter(|_| auc_defined).map(|a| Stat::of(&a)),
            repetitions: reps.len(),
            flagged_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with fewer than two members, placed entirely in train.
    pub flagged: Vec<usize>,
}

/// Per class, `round(fraction · size)` members (at least one, and leaving at
/// least one for testing) go to train. Both index lists are sorted.
pub fn stratified_split<R: Rng>(labels: &[usize], classes: usize, train_fraction: f64, rng: &mut R) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Evaluation(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
        flagged: Vec::new(),
    };
    for (c, mut m) in members.into_iter().enumerate() {
        match m.len() {
            0 => continue,
            1 => {
                split.flagged.push(c);
                split.train.extend(m);
                continue;
            }
            size => {
                m.shuffle(rng);
                let take = ((train_fraction * size as f64).round() as usize).clamp(1, size - 1);
                split.train.extend_from_slice(&m[..take]);
                split.test.extend_from_slice(&m[take..]);
            }
        }
    }
    if split.test.is_empty() {
        return Err(Error::Evaluation("split leaves no test examples".into()));
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub l2: f64,
    pub iterations: usize,
    pub step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            iterations: 500,
            step: 0.1,
        }
    }
}

/// Multinomial logistic regression on standardized features, fit by
/// full-batch gradient descent.
#[derive(Debug, Clone)]
pub struct SoftmaxRegression {
    weights: Array2<f64>,
    bias: Array1<f64>,
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl SoftmaxRegression {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], classes: usize, config: &FitConfig) -> Self {
        let (n, d) = x.dim();
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
        let scale = x.var_axis(Axis(0), 0.0).mapv(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
        let mut model = Self {
            weights: Array2::zeros((d, classes)),
            bias: Array1::zeros(classes),
            mean,
            scale,
        };
        let xs = model.standardize(x);
        let mut onehot = Array2::<f64>::zeros((n, classes));
        for (i, &c) in y.iter().enumerate() {
            onehot[[i, c]] = 1.0;
        }
        let inv_n = 1.0 / n.max(1) as f64;
        for _ in 0..config.iterations {
            let mut residual = model.probabilities(xs.view());
            residual -= &onehot;
            let mut grad = xs.t().dot(&residual) * inv_n;
            grad.scaled_add(config.l2, &model.weights);
            let grad_b = residual.sum_axis(Axis(0)) * inv_n;
            model.weights.scaled_add(-config.step, &grad);
            model.bias.scaled_add(-config.step, &grad_b);
        }
        model
    }

    fn standardize(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }

    fn probabilities(&self, xs: ArrayView2<f64>) -> Array2<f64> {
        let mut z = xs.dot(&self.weights) + &self.bias;
        for mut row in z.rows_mut() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row /= total;
        }
        z
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.probabilities(self.standardize(x).view())
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        crate::softmax::hardmax(self.predict_proba(x).view())
    }
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Unweighted mean of per-class F1 over classes that occur in either list.
pub fn macro_f1(truth: &[usize], predicted: &[usize], classes: usize) -> f64 {
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let scores: Vec<f64> = (0..classes)
        .filter(|&c| tp[c] + fp[c] + fneg[c] > 0)
        .map(|c| 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fneg[c]) as f64)
        .collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` without both classes.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over ties
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return None;
    }
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    Some((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Mean one-vs-rest AUC over classes with both positives and negatives.
pub fn roc_auc_ovr(probabilities: ArrayView2<f64>, truth: &[usize]) -> Option<f64> {
    let aucs: Vec<f64> = (0..probabilities.ncols())
        .filter_map(|c| {
            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            roc_auc(&probabilities.column(c).to_vec(), &positive)
        })
        .collect();
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[derive(Debug, Clone, Copy)]
struct RepMetrics {
    accuracy: f64,
    macro_f1: f64,
    roc_auc: Option<f64>,
}

fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn evaluate_split(x: ArrayView2<f64>, y: &[usize], classes: usize, split: &Split) -> RepMetrics {
    let xtr = x.select(Axis(0), &split.train);
    let ytr: Vec<usize> = split.train.iter().map(|&i| y[i]).collect();
    let xte = x.select(Axis(0), &split.test);
    let yte: Vec<usize> = split.test.iter().map(|&i| y[i]).collect();
    let model = SoftmaxRegression::fit(xtr.view(), &ytr, classes, &FitConfig::default());
    let proba = model.predict_proba(xte.view());
    let pred = crate::softmax::hardmax(proba.view());
    RepMetrics {
        accuracy: accuracy(&yte, &pred),
        macro_f1: macro_f1(&yte, &pred, classes),
        roc_auc: roc_auc_ovr(proba.view(), &yte),
    }
}

fn check_reps(repetitions: usize) -> Result<()> {
    if repetitions == 0 {
        return Err(Error::Evaluation("at least one repetition is required".into()));
    }
    Ok(())
}

/// Repeated stratified train/test evaluation of node classification.
/// Repetition `r` draws its split from stream `r` of the seeded generator.
pub fn classify(dataset: &LabeledDataset, train_fraction: f64, repetitions: usize, seed: u64) -> Result<MetricSummary> {
    check_reps(repetitions)?;
    let sizes = dataset.class_sizes();
    let auc_defined = sizes.iter().all(|&s| s != 1);
    // validates the fraction and test-set size before fanning out
    let first = stratified_split(&dataset.labels, dataset.classes, train_fraction, &mut rep_rng(seed, 0))?;
    let flagged = first.flagged.clone();
    let reps: Vec<RepMetrics> = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let split = if r == 0 {
                first.clone()
            } else {
                stratified_split(&dataset.labels, dataset.classes, train_fraction, &mut rep_rng(seed, r))
                    .expect("same inputs as the first split")
            };
            evaluate_split(dataset.embeddings.view(), &dataset.labels, dataset.classes, &split)
        })
        .collect();
    Ok(MetricSummary::aggregate(reps, auc_defined, flagged))
}

/// How a node pair becomes a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFeatures {
    /// `[h_u ‖ h_w]`.
    Concat,
    /// `[h_u ‖ h_w ‖ h_u ⊙ h_w]`.
    ConcatProduct,
}

impl PairFeatures {
    fn width(self, c: usize) -> usize {
        match self {
            PairFeatures::Concat => 2 * c,
            PairFeatures::ConcatProduct => 3 * c,
        }
    }
}

/// Feature rows for pairs, each taken in `(min, max)` order.
pub fn pair_features(h: ArrayView2<f64>, pairs: &[(usize, usize)], kind: PairFeatures) -> Array2<f64> {
    let c = h.ncols();
    let mut out = Array2::zeros((pairs.len(), kind.width(c)));
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let (u, w) = (a.min(b), a.max(b));
        let mut row = out.row_mut(i);
        for k in 0..c {
            row[k] = h[[u, k]];
            row[c + k] = h[[w, k]];
            if kind == PairFeatures::ConcatProduct {
                row[2 * c + k] = h[[u, k]] * h[[w, k]];
            }
        }
    }
    out
}

/// Uniformly sampled distinct non-edges `(u, w)`, `u < w`.
pub fn sample_non_edges<R: Rng>(n: usize, edges: &HashSet<(usize, usize)>, count: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let total = n * n.saturating_sub(1) / 2;
    let available = total - edges.len().min(total);
    if available < count {
        return Err(Error::Evaluation(format!(
            "graph too dense: {available} non-edges for {count} negatives"
        )));
    }
    if available < 4 * count {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |w| (u, w)))
            .filter(|p| !edges.contains(p))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if !edges.contains(&pair) && chosen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub features: PairFeatures,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
            repetitions: 100,
            seed: 0,
            features: PairFeatures::ConcatProduct,
        }
    }
}

/// Link prediction with [`PairFeatures::ConcatProduct`] features.
pub fn link_predict(
    graph: &SampledGraph,
    embeddings: ArrayView2<f64>,
    train_fraction: f64,
    repetitions: usize,
    seed: u64,
) -> Result<MetricSummary> {
    link_predict_with(
        graph,
        embeddings,
        &LinkConfig {
            train_fraction,
            repetitions,
            seed,
            ..Default::default()
        },
    )
}

/// Edges are positives, an equal number of uniformly sampled non-edges are
/// negatives (resampled per repetition), and a binary classifier is trained
/// on a stratified split of the pairs.
pub fn link_predict_with(graph: &SampledGraph, embeddings: ArrayView2<f64>, config: &LinkConfig) -> Result<MetricSummary> {
    check_reps(config.repetitions)?;
    if embeddings.nrows() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            found: embeddings.nrows(),
        });
    }
    let edges = graph.edges();
    if edges.len() < 10 {
        return Err(Error::Evaluation(format!("link prediction needs at least 10 edges, found {}", edges.len())));
    }
    let edge_set: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let labels: Vec<usize> = std::iter::repeat_n(1, edges.len()).chain(std::iter::repeat_n(0, edges.len())).collect();
    // fail fast on density and split problems
    sample_non_edges(graph.n(), &edge_set, edges.len(), &mut rep_rng(config.seed, 0))?;
    stratified_split(&labels, 2, config.train_fraction, &mut rep_rng(config.seed, 0))?;

    let reps: Vec<RepMetrics> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rng = rep_rng(config.seed, r);
            let negatives = sample_non_edges(graph.n(), &edge_set, edges.len(), &mut rng).expect("checked above");
            let pairs: Vec<(usize, usize)> = edges.iter().copied().chain(negatives).collect();
            let x = pair_features(embeddings, &pairs, config.features);
            let split = stratified_split(&labels, 2, config.train_fraction, &mut rng).expect("checked above");
            evaluate_split(x.view(), &labels, 2, &split)
        })
        .collect();
    Ok(MetricSummary::aggregate(reps, true, Vec::new()))
}
