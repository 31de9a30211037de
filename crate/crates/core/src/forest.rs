//! Honest random forest producing similarity weights.
//!
//! Two split rules are available: quantile splitting (responses relabelled
//! by the inter-quantile segment of the parent node they fall in, split by
//! multi-class Gini decrease) and plain regression splitting (variance
//! reduction). Each tree is grown on a subsample drawn without replacement;
//! with honesty on, half of it chooses the splits and the other half
//! populates the leaves.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::BlockMaxSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Quantile,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    pub min_node_size: usize,
    /// Candidate features per node; `None` means `min(p, ceil(sqrt p) + 20)`.
    pub mtry: Option<usize>,
    pub subsample_fraction: f64,
    pub honesty: bool,
    pub split_quantile_levels: Vec<f64>,
    pub split_mode: SplitMode,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            num_trees: 2000,
            min_node_size: 5,
            mtry: None,
            subsample_fraction: 0.5,
            honesty: true,
            split_quantile_levels: vec![0.1, 0.5, 0.9],
            split_mode: SplitMode::Quantile,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn effective_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| p.min((p as f64).sqrt().ceil() as usize + 20))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::invalid("num_trees must be at least 1"));
        }
        if self.min_node_size == 0 {
            return Err(Error::invalid("min_node_size must be at least 1"));
        }
        let mtry = self.effective_mtry(p);
        if mtry == 0 || mtry > p {
            return Err(Error::invalid(format!("mtry = {mtry} must lie in 1..={p}")));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::invalid("subsample_fraction must lie in (0, 1]"));
        }
        let levels = &self.split_quantile_levels;
        if self.split_mode == SplitMode::Quantile && levels.is_empty() {
            return Err(Error::invalid(
                "quantile splitting needs at least one level",
            ));
        }
        if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) || levels.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "split quantile levels must be strictly increasing inside (0, 1)",
            ));
        }
        Ok(())
    }

    fn subsample_size(&self, n: usize) -> usize {
        ((self.subsample_fraction * n as f64).ceil() as usize).clamp(1, n)
    }
}

/// A node of a flattened tree; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows (sorted) that populate this leaf.
    Leaf { rows: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates the node structure: every child index points forward, every
    /// node is reached once, and leaves are non-empty.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a tree needs at least one node"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("node {i} is reachable twice")));
            }
            match &nodes[i] {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if !threshold.is_finite() {
                        return Err(Error::invalid(format!(
                            "node {i} has a non-finite threshold"
                        )));
                    }
                    for &c in [left, right] {
                        if c <= i || c >= nodes.len() {
                            return Err(Error::invalid(format!("node {i} has bad child {c}")));
                        }
                        stack.push(c);
                    }
                }
                Node::Leaf { rows } => {
                    if rows.is_empty() {
                        return Err(Error::invalid(format!("leaf {i} is empty")));
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("node {i} is unreachable")));
        }
        Ok(Self { nodes })
    }

    pub fn single_leaf(rows: Vec<u32>) -> Result<Self> {
        Self::from_nodes(vec![Node::Leaf { rows }])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root_split_feature(&self) -> Option<usize> {
        match self.nodes[0] {
            Node::Split { feature, .. } => Some(feature),
            Node::Leaf { .. } => None,
        }
    }

    /// Rows of the leaf that `x` falls into (`x[f] <= threshold` goes left).
    pub fn leaf_rows(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf { rows } => return rows,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { rows } => Some(rows.as_slice()),
            Node::Split { .. } => None,
        })
    }
}

/// Trained ensemble; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    params: ForestParams,
    n_train: usize,
    p: usize,
}

impl ForestModel {
    /// Assembles a forest from explicit trees. Leaf rows must index into
    /// `0..n_train` and split features into `0..p`.
    pub fn from_trees(
        trees: Vec<Tree>,
        params: ForestParams,
        n_train: usize,
        p: usize,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        for tree in &trees {
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, .. } if *feature >= p => {
                        return Err(Error::invalid(format!(
                            "split feature {feature} >= p = {p}"
                        )));
                    }
                    Node::Leaf { rows } if rows.iter().any(|&r| r as usize >= n_train) => {
                        return Err(Error::invalid("leaf row index out of range"));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            trees,
            params,
            n_train,
            p,
        })
    }

    /// `num_trees` single-leaf trees holding every training row.
    pub fn single_leaf(n_train: usize, p: usize, num_trees: usize) -> Result<Self> {
        let all: Vec<u32> = (0..n_train as u32).collect();
        let trees = (0..num_trees)
            .map(|_| Tree::single_leaf(all.clone()))
            .collect::<Result<_>>()?;
        let params = ForestParams {
            num_trees,
            ..ForestParams::default()
        };
        Self::from_trees(trees, params, n_train, p)
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `w_i(x) = (1/B) sum_b 1{i in leaf_b(x)} / |leaf_b(x)|` for every
    /// training row `i`.
    pub fn similarity_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.p {
            return Err(Error::invalid(format!(
                "query has {} coordinates, forest expects {}",
                x.len(),
                self.p
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("query point must be finite"));
        }
        let mut w = vec![0.0; self.n_train];
        for tree in &self.trees {
            let rows = tree.leaf_rows(x);
            let share = 1.0 / rows.len() as f64;
            for &r in rows {
                w[r as usize] += share;
            }
        }
        let b = self.trees.len() as f64;
        w.iter_mut().for_each(|v| *v /= b);
        Ok(w)
    }

    /// Rows of the honest half drawn for tree `b` (the whole subsample when
    /// honesty is off). Only meaningful for forests built by [`fit_forest`].
    pub fn leaf_population_rows(&self, b: usize) -> Vec<u32> {
        let mut rng = tree_rng(self.params.seed, b);
        let (split, honest) = draw_subsample(&mut rng, self.n_train, &self.params);
        if self.params.honesty {
            honest
        } else {
            split
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.to_document())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(serde_json::from_str(&text)?)
    }
}

fn tree_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

/// Subsample without replacement, split into (split half, honest half). With
/// honesty off the whole subsample is returned as the split set.
fn draw_subsample(rng: &mut ChaCha8Rng, n: usize, params: &ForestParams) -> (Vec<u32>, Vec<u32>) {
    let s = params.subsample_size(n);
    let drawn: Vec<u32> = index::sample(rng, n, s)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    let (mut split, mut honest) = if params.honesty {
        let half = s / 2;
        (drawn[..half].to_vec(), drawn[half..].to_vec())
    } else {
        (drawn, Vec::new())
    };
    split.sort_unstable();
    honest.sort_unstable();
    (split, honest)
}

/// Grows `params.num_trees` trees on the block sample. Tree `b` uses its own
/// random stream derived from `(params.seed, b)`, so the result does not
/// depend on how trees are scheduled across threads.
pub fn fit_forest(bm: &BlockMaxSample, params: &ForestParams) -> Result<ForestModel> {
    let n = bm.n();
    let p = bm.p();
    params.validate(p)?;
    if n < 2 * params.min_node_size {
        return Err(Error::invalid(format!(
            "forest needs at least 2 * min_node_size = {} rows, got {n}",
            2 * params.min_node_size
        )));
    }
    let s = params.subsample_size(n);
    if params.min_node_size >= s {
        return Err(Error::invalid(format!(
            "min_node_size = {} must be below the subsample size {s}",
            params.min_node_size
        )));
    }
    let x = TrainingData {
        features: bm.rows().flatten().copied().collect(),
        p,
        y: bm.maxima(),
    };
    let mtry = params.effective_mtry(p);
    let trees = (0..params.num_trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = tree_rng(params.seed, b);
            grow_tree(&x, params, mtry, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: params.clone(),
        n_train: n,
        p,
    })
}

struct TrainingData<'a> {
    features: Vec<f64>,
    p: usize,
    y: &'a [f64],
}

impl TrainingData<'_> {
    fn value(&self, row: u32, feature: usize) -> f64 {
        self.features[row as usize * self.p + feature]
    }
}

enum Grow {
    Leaf(Vec<u32>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Grow>,
        right: Box<Grow>,
    },
}

fn grow_tree(
    x: &TrainingData<'_>,
    params: &ForestParams,
    mtry: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let (split_rows, honest_rows) = draw_subsample(rng, x.y.len(), params);
    let mut root = grow_node(x, params, mtry, rng, split_rows);
    if params.honesty {
        populate(&mut root, x, honest_rows);
    }
    let root = prune(root);
    let mut nodes = Vec::new();
    flatten(root, &mut nodes);
    Tree { nodes }
}

fn grow_node(
    x: &TrainingData<'_>,
    params: &ForestParams,
    mtry: usize,
    rng: &mut ChaCha8Rng,
    rows: Vec<u32>,
) -> Grow {
    if rows.len() < 2 * params.min_node_size {
        return Grow::Leaf(rows);
    }
    let mut features: Vec<usize> = index::sample(rng, x.p, mtry).into_iter().collect();
    features.sort_unstable();
    let Some((feature, threshold)) = best_split(x, params, &rows, &features) else {
        return Grow::Leaf(rows);
    };
    let (left, right): (Vec<u32>, Vec<u32>) = rows
        .iter()
        .partition(|&&r| x.value(r, feature) <= threshold);
    Grow::Split {
        feature,
        threshold,
        left: Box::new(grow_node(x, params, mtry, rng, left)),
        right: Box::new(grow_node(x, params, mtry, rng, right)),
    }
}

/// Generalized inverse of the empirical CDF of `sorted` at `level`.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let k = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Best `(feature, threshold)` by impurity decrease, or `None` when no split
/// leaves `min_node_size` rows on both sides with a positive decrease. Ties
/// keep the lowest feature index, then the lowest threshold.
fn best_split(
    x: &TrainingData<'_>,
    params: &ForestParams,
    rows: &[u32],
    features: &[usize],
) -> Option<(usize, f64)> {
    let n = rows.len();
    let min = params.min_node_size;
    let ys: Vec<f64> = rows.iter().map(|&r| x.y[r as usize]).collect();

    // Quantile mode scores by class counts, regression mode by sums of
    // centered responses; both maximise sum_child S^2/n_child - S^2/n.
    let labels: Vec<usize>;
    let n_classes;
    let targets: Vec<f64>;
    match params.split_mode {
        SplitMode::Quantile => {
            let mut sorted = ys.clone();
            sorted.sort_by(f64::total_cmp);
            let cuts: Vec<f64> = params
                .split_quantile_levels
                .iter()
                .map(|&l| empirical_quantile(&sorted, l))
                .collect();
            labels = ys
                .iter()
                .map(|&y| cuts.iter().filter(|&&c| y > c).count())
                .collect();
            n_classes = cuts.len() + 1;
            targets = Vec::new();
        }
        SplitMode::Regression => {
            let mean = ys.iter().sum::<f64>() / n as f64;
            targets = ys.iter().map(|y| y - mean).collect();
            labels = Vec::new();
            n_classes = 0;
        }
    }

    let parent_score = match params.split_mode {
        SplitMode::Quantile => {
            let mut counts = vec![0usize; n_classes];
            labels.iter().for_each(|&c| counts[c] += 1);
            counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
        }
        SplitMode::Regression => targets.iter().sum::<f64>().powi(2) / n as f64,
    };

    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    let mut left_counts = vec![0usize; n_classes];
    let mut right_counts = vec![0usize; n_classes];
    for &f in features {
        let values: Vec<f64> = rows.iter().map(|&r| x.value(r, f)).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        if values[order[0]] == values[order[n - 1]] {
            continue;
        }
        match params.split_mode {
            SplitMode::Quantile => {
                left_counts.iter_mut().for_each(|c| *c = 0);
                right_counts.iter_mut().for_each(|c| *c = 0);
                labels.iter().for_each(|&c| right_counts[c] += 1);
            }
            SplitMode::Regression => {}
        }
        let total: f64 = targets.iter().sum();
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            let idx = order[i];
            match params.split_mode {
                SplitMode::Quantile => {
                    left_counts[labels[idx]] += 1;
                    right_counts[labels[idx]] -= 1;
                }
                SplitMode::Regression => left_sum += targets[idx],
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min {
                continue;
            }
            if n_right < min {
                break;
            }
            let (lo, hi) = (values[idx], values[order[i + 1]]);
            if lo == hi {
                continue;
            }
            let score = match params.split_mode {
                SplitMode::Quantile => {
                    let sq = |c: &Vec<usize>| c.iter().map(|&k| (k * k) as f64).sum::<f64>();
                    sq(&left_counts) / n_left as f64 + sq(&right_counts) / n_right as f64
                }
                SplitMode::Regression => {
                    let right_sum = total - left_sum;
                    left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64
                }
            } - parent_score;
            if score > 1e-12 * n as f64 && best.is_none_or(|(s, _, _)| score > s) {
                let mid = 0.5 * (lo + hi);
                let threshold = if mid < hi { mid } else { lo };
                best = Some((score, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn populate(node: &mut Grow, x: &TrainingData<'_>, rows: Vec<u32>) {
    match node {
        Grow::Leaf(leaf) => *leaf = rows,
        Grow::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let (l, r): (Vec<u32>, Vec<u32>) = rows
                .iter()
                .partition(|&&i| x.value(i, *feature) <= *threshold);
            populate(left, x, l);
            populate(right, x, r);
        }
    }
}

fn collect_rows(node: Grow, out: &mut Vec<u32>) {
    match node {
        Grow::Leaf(rows) => out.extend(rows),
        Grow::Split { left, right, .. } => {
            collect_rows(*left, out);
            collect_rows(*right, out);
        }
    }
}

/// Collapses any split with an empty child leaf into a single leaf holding
/// the rows of its whole subtree.
fn prune(node: Grow) -> Grow {
    match node {
        Grow::Leaf(rows) => Grow::Leaf(rows),
        Grow::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let left = prune(*left);
            let right = prune(*right);
            let empty = |g: &Grow| matches!(g, Grow::Leaf(r) if r.is_empty());
            if empty(&left) || empty(&right) {
                let mut rows = Vec::new();
                collect_rows(left, &mut rows);
                collect_rows(right, &mut rows);
                rows.sort_unstable();
                Grow::Leaf(rows)
            } else {
                Grow::Split {
                    feature,
                    threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
        }
    }
}

fn flatten(node: Grow, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    match node {
        Grow::Leaf(mut rows) => {
            rows.sort_unstable();
            nodes.push(Node::Leaf { rows });
        }
        Grow::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            nodes.push(Node::Leaf { rows: Vec::new() });
            let l = flatten(*left, nodes);
            let r = flatten(*right, nodes);
            nodes[id] = Node::Split {
                feature,
                threshold,
                left: l,
                right: r,
            };
        }
    }
    id
}

/// `inf { y in responses : sum_i w_i 1{responses_i <= y} >= tau }`.
pub fn weighted_empirical_quantile(weights: &[f64], responses: &[f64], tau: f64) -> Result<f64> {
    if weights.len() != responses.len() {
        return Err(Error::invalid("weights and responses differ in length"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {tau} is outside (0, 1)"
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("all weights are zero"));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let mut mass: Vec<(f64, f64)> = responses
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&y, &w)| (y, w))
        .collect();
    mass.sort_by(|a, b| a.0.total_cmp(&b.0));
    let target = tau * total - 1e-12;
    let mut cum = 0.0;
    for (i, &(y, w)) in mass.iter().enumerate() {
        cum += w;
        let last_of_value = mass.get(i + 1).is_none_or(|next| next.0 != y);
        if last_of_value && cum >= target {
            return Ok(y);
        }
    }
    Ok(mass[mass.len() - 1].0)
}

const FOREST_FORMAT: &str = "geverf-forest/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    /// Split feature per node, `-1` for leaves.
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    /// Leaf slot per node (index into `leaf_rows`), `-1` for splits.
    pub leaf: Vec<i64>,
    pub leaf_rows: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestDocument {
    pub format: String,
    pub params: ForestParams,
    pub n_train: usize,
    pub p: usize,
    pub trees: Vec<TreeDocument>,
}

impl ForestModel {
    pub fn to_document(&self) -> ForestDocument {
        let trees = self
            .trees
            .iter()
            .map(|tree| {
                let mut doc = TreeDocument {
                    feature: Vec::new(),
                    threshold: Vec::new(),
                    left: Vec::new(),
                    right: Vec::new(),
                    leaf: Vec::new(),
                    leaf_rows: Vec::new(),
                };
                for node in &tree.nodes {
                    match node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            doc.feature.push(*feature as i64);
                            doc.threshold.push(*threshold);
                            doc.left.push(*left as u32);
                            doc.right.push(*right as u32);
                            doc.leaf.push(-1);
                        }
                        Node::Leaf { rows } => {
                            doc.feature.push(-1);
                            doc.threshold.push(0.0);
                            doc.left.push(0);
                            doc.right.push(0);
                            doc.leaf.push(doc.leaf_rows.len() as i64);
                            doc.leaf_rows.push(rows.clone());
                        }
                    }
                }
                doc
            })
            .collect();
        ForestDocument {
            format: FOREST_FORMAT.to_string(),
            params: self.params.clone(),
            n_train: self.n_train,
            p: self.p,
            trees,
        }
    }

    pub fn from_document(doc: ForestDocument) -> Result<Self> {
        if doc.format != FOREST_FORMAT {
            return Err(Error::UnsupportedFormat {
                expected: FOREST_FORMAT.to_string(),
                found: doc.format,
            });
        }
        let mut trees = Vec::with_capacity(doc.trees.len());
        for t in doc.trees {
            let len = t.feature.len();
            if [t.threshold.len(), t.left.len(), t.right.len(), t.leaf.len()]
                .iter()
                .any(|&l| l != len)
            {
                return Err(Error::invalid("tree document arrays differ in length"));
            }
            let mut nodes = Vec::with_capacity(len);
            for i in 0..len {
                if t.feature[i] < 0 {
                    let slot = usize::try_from(t.leaf[i])
                        .ok()
                        .filter(|&s| s < t.leaf_rows.len())
                        .ok_or_else(|| Error::invalid("leaf slot out of range"))?;
                    nodes.push(Node::Leaf {
                        rows: t.leaf_rows[slot].clone(),
                    });
                } else {
                    nodes.push(Node::Split {
                        feature: t.feature[i] as usize,
                        threshold: t.threshold[i],
                        left: t.left[i] as usize,
                        right: t.right[i] as usize,
                    });
                }
            }
            trees.push(Tree::from_nodes(nodes)?);
        }
        Self::from_trees(trees, doc.params, doc.n_train, doc.p)
    }
}
