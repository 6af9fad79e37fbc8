//! Extremely randomized regression trees.
//!
//! Every tree sees the full training sample (no bootstrap). At each node a
//! random subset of the non-constant features is drawn, each candidate gets
//! one cut-point drawn uniformly inside the feature's range over the node,
//! and the candidate with the largest variance reduction wins. Ensemble
//! predictions are the mean of the per-tree leaf values.
//!
//! Tree `i` draws from [`Rng::for_stream`]`(seed, i)`, so a fitted model does
//! not depend on how many threads built it.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::timeseries::FeatureTable;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    /// Features drawn per split; `None` means all of them.
    pub k_features: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            k_features: None,
            min_samples_split: 5,
            seed: 0,
        }
    }
}

impl ExtraTreesParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParams("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParams(format!(
                "min_samples_split must be at least 2, got {}",
                self.min_samples_split
            )));
        }
        if let Some(k) = self.k_features {
            if k == 0 || k > n_features {
                return Err(Error::InvalidParams(format!(
                    "k_features must be in 1..={n_features}, got {k}"
                )));
            }
        }
        Ok(())
    }

    fn resolved_k(&self, n_features: usize) -> usize {
        self.k_features.unwrap_or(n_features)
    }
}

/// Tree node stored in pre-order; children always follow their parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `row[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Training rows that reached the tree, i.e. the sum of leaf counts.
    pub fn n_samples(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { count, .. } => *count,
                Node::Split { .. } => 0,
            })
            .sum()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] < threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    fn check(&self, n_features: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let mut referenced = vec![false; self.nodes.len()];
        referenced[0] = true;
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { value, count } => {
                    if !value.is_finite() || count == 0 {
                        return bad(format!("leaf {i} must have a finite value and count >= 1"));
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features || !threshold.is_finite() {
                        return bad(format!("split {i} has an invalid feature or threshold"));
                    }
                    for child in [left, right] {
                        if child <= i || child >= self.nodes.len() || referenced[child] {
                            return bad(format!("split {i} has an invalid child {child}"));
                        }
                        referenced[child] = true;
                    }
                }
            }
        }
        if referenced.iter().any(|r| !r) {
            return bad("tree has unreachable nodes".into());
        }
        Ok(())
    }
}

/// Source of the random choices made while growing a tree.
pub trait SplitSampler {
    /// Picks up to `k` distinct entries of `candidates`; the returned order is
    /// the candidate order used for tie-breaking.
    fn choose_features(&mut self, candidates: &[usize], k: usize) -> Vec<usize>;

    /// A cut-point strictly inside `(min, max)` whenever one is representable.
    fn threshold(&mut self, feature: usize, min: f64, max: f64) -> f64;
}

/// Draws choices from [`Rng`]: a partial Fisher–Yates shuffle for features and
/// `min + u * (max - min)` with `u` open-uniform for thresholds.
#[derive(Debug, Clone)]
pub struct RngSampler(Rng);

impl RngSampler {
    pub fn new(rng: Rng) -> Self {
        Self(rng)
    }
}

impl SplitSampler for RngSampler {
    fn choose_features(&mut self, candidates: &[usize], k: usize) -> Vec<usize> {
        let mut pool = candidates.to_vec();
        let take = k.min(pool.len());
        for i in 0..take {
            let j = i + self.0.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(take);
        pool
    }

    fn threshold(&mut self, _feature: usize, min: f64, max: f64) -> f64 {
        let t = self.0.uniform(min, max);
        if t > min && t < max {
            return t;
        }
        // rounding collapsed onto an endpoint
        let mid = min + (max - min) / 2.0;
        if mid > min && mid < max {
            mid
        } else {
            max
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Features(Vec<usize>),
    Threshold { feature: usize, value: f64 },
}

/// Wraps a sampler and records every choice it makes, in call order.
#[derive(Debug, Clone)]
pub struct RecordingSampler<S> {
    inner: S,
    trace: Vec<TraceEvent>,
}

impl<S> RecordingSampler<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            trace: Vec::new(),
        }
    }

    pub fn into_trace(self) -> Vec<TraceEvent> {
        self.trace
    }
}

impl<S: SplitSampler> SplitSampler for RecordingSampler<S> {
    fn choose_features(&mut self, candidates: &[usize], k: usize) -> Vec<usize> {
        let chosen = self.inner.choose_features(candidates, k);
        self.trace.push(TraceEvent::Features(chosen.clone()));
        chosen
    }

    fn threshold(&mut self, feature: usize, min: f64, max: f64) -> f64 {
        let value = self.inner.threshold(feature, min, max);
        self.trace.push(TraceEvent::Threshold { feature, value });
        value
    }
}

/// Column-major training data.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub columns: &'a [Vec<f64>],
    pub target: &'a [f64],
}

/// A grown tree plus its per-feature sum of `variance reduction * node size`.
#[derive(Debug, Clone)]
pub struct GrownTree {
    pub tree: Tree,
    pub weighted_reduction: Vec<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (sum / n as f64, n)
}

fn variance(target: &[f64], rows: &[usize]) -> f64 {
    let (m, n) = mean(rows.iter().map(|&r| target[r]));
    rows.iter().map(|&r| (target[r] - m).powi(2)).sum::<f64>() / n as f64
}

enum Slot {
    Root,
    Left(usize),
    Right(usize),
}

/// Grows one tree over every row of `data`, depth-first, left child first.
pub fn grow_tree(
    data: TrainingData<'_>,
    k_features: usize,
    min_samples_split: usize,
    sampler: &mut dyn SplitSampler,
) -> GrownTree {
    let n_features = data.columns.len();
    let mut nodes: Vec<Node> = Vec::new();
    let mut weighted_reduction = vec![0.0; n_features];
    let mut stack = vec![(Slot::Root, (0..data.target.len()).collect::<Vec<usize>>())];

    while let Some((slot, rows)) = stack.pop() {
        let index = nodes.len();
        match slot {
            Slot::Root => {}
            Slot::Left(parent) | Slot::Right(parent) => {
                if let Node::Split { left, right, .. } = &mut nodes[parent] {
                    match slot {
                        Slot::Left(_) => *left = index,
                        _ => *right = index,
                    }
                }
            }
        }

        let leaf = || {
            let (value, count) = mean(rows.iter().map(|&r| data.target[r]));
            Node::Leaf { value, count }
        };

        let first = data.target[rows[0]];
        if rows.len() < min_samples_split || rows.iter().all(|&r| data.target[r] == first) {
            nodes.push(leaf());
            continue;
        }

        let mut non_constant = Vec::new();
        let mut ranges = vec![(0.0, 0.0); n_features];
        for (f, column) in data.columns.iter().enumerate() {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    (lo.min(column[r]), hi.max(column[r]))
                });
            if lo < hi {
                non_constant.push(f);
                ranges[f] = (lo, hi);
            }
        }
        if non_constant.is_empty() {
            nodes.push(leaf());
            continue;
        }

        let parent_var = variance(data.target, &rows);
        let n = rows.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in sampler.choose_features(&non_constant, k_features) {
            let (lo, hi) = ranges[feature];
            let threshold = sampler.threshold(feature, lo, hi);
            let column = &data.columns[feature];
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| column[r] < threshold);
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let child = (left.len() as f64 * variance(data.target, &left)
                + right.len() as f64 * variance(data.target, &right))
                / n;
            let score = parent_var - child;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, feature, threshold));
            }
        }

        let Some((score, feature, threshold)) = best else {
            nodes.push(leaf());
            continue;
        };
        weighted_reduction[feature] += score * n;
        let column = &data.columns[feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| column[r] < threshold);
        nodes.push(Node::Split {
            feature,
            threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        stack.push((Slot::Right(index), right));
        stack.push((Slot::Left(index), left));
    }

    GrownTree {
        tree: Tree { nodes },
        weighted_reduction,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreesModel {
    params: ExtraTreesParams,
    feature_names: Vec<String>,
    importances: Vec<f64>,
    trees: Vec<Tree>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    #[serde(flatten)]
    model: ExtraTreesModel,
}

/// Fits an ensemble on every non-target column of `table`.
pub fn fit(table: &FeatureTable, params: &ExtraTreesParams) -> Result<ExtraTreesModel> {
    let target_name = table.target().ok_or(Error::NoTarget)?.to_string();
    let target = table.target_values()?.to_vec();
    let feature_names = table.feature_names();
    if feature_names.is_empty() {
        return Err(Error::InvalidParams("table has no feature columns".into()));
    }
    if table.len() < 2 {
        return Err(Error::TooShort(format!(
            "fit needs at least 2 rows, got {}",
            table.len()
        )));
    }
    params.validate(feature_names.len())?;

    let columns: Vec<Vec<f64>> = feature_names
        .iter()
        .map(|name| {
            table
                .column(name)
                .expect("feature name from table")
                .to_vec()
        })
        .collect();
    for (name, values) in feature_names
        .iter()
        .zip(&columns)
        .chain([(&target_name, &target)])
    {
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                column: name.clone(),
                row,
            });
        }
    }

    let data = TrainingData {
        columns: &columns,
        target: &target,
    };
    let k = params.resolved_k(feature_names.len());
    let grown: Vec<GrownTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut sampler = RngSampler::new(Rng::for_stream(params.seed, i as u64));
            grow_tree(data, k, params.min_samples_split, &mut sampler)
        })
        .collect();

    let n_total = target.len() as f64;
    let mut importances = vec![0.0; feature_names.len()];
    for g in &grown {
        for (acc, r) in importances.iter_mut().zip(&g.weighted_reduction) {
            *acc += r / n_total;
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        importances.iter_mut().for_each(|v| *v = 0.0);
    }

    Ok(ExtraTreesModel {
        params: *params,
        feature_names,
        importances,
        trees: grown.into_iter().map(|g| g.tree).collect(),
    })
}

impl ExtraTreesModel {
    pub fn params(&self) -> &ExtraTreesParams {
        &self.params
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of the tree predictions for each row of `rows`.
    pub fn predict(&self, rows: &FeatureTable) -> Result<Vec<f64>> {
        let columns: Vec<&[f64]> = self
            .feature_names
            .iter()
            .map(|name| {
                rows.column(name)
                    .ok_or_else(|| Error::MissingFeature(name.clone()))
            })
            .collect::<Result<_>>()?;
        let mut row = vec![0.0; columns.len()];
        Ok((0..rows.len())
            .map(|i| {
                for (slot, column) in row.iter_mut().zip(&columns) {
                    *slot = column[i];
                }
                self.predict_row(&row)
            })
            .collect())
    }

    /// Prediction for one row ordered like [`Self::feature_names`].
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn feature_importances(&self) -> IndexMap<String, f64> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.importances.iter().copied())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and structurally validates a model document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let model = doc.model;
        let n_features = model.feature_names.len();
        if n_features == 0 {
            return Err(Error::InvalidModel("no feature names".into()));
        }
        model
            .params
            .validate(n_features)
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        if model.trees.len() != model.params.n_trees {
            return Err(Error::InvalidModel(format!(
                "expected {} trees, found {}",
                model.params.n_trees,
                model.trees.len()
            )));
        }
        if model.importances.len() != n_features
            || model.importances.iter().any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidModel(
                "importances must be finite, nonnegative, one per feature".into(),
            ));
        }
        for tree in &model.trees {
            tree.check(n_features)?;
        }
        Ok(model)
    }
}
