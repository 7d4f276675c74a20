//! Random-forest regression surrogate.
//!
//! Standard bagged regression trees tailored for small tuning datasets:
//! every tree trains on a bootstrap resample of the full data (same size,
//! with replacement), splits greedily by variance reduction *considering
//! all features at every node* (no feature subsampling — with a few dozen
//! samples in ~13 dimensions there is nothing to spare), grows to purity
//! (minimum leaf size 1, unlimited depth), and predicts the mean of its
//! leaf. The forest predicts the mean over trees, clamped to the training
//! target range.
//!
//! Determinism: each tree's bootstrap RNG seed is derived from the master
//! seed and the tree index before any training starts, so training in
//! parallel (the default) or sequentially produces bit-identical forests.
//! Split ties break toward the lowest dimension index, then the lowest
//! threshold; candidate thresholds are midpoints between adjacent distinct
//! feature values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed::{sub_seed, Purpose};
use crate::space::fnv1a64;

const FORMAT: &str = "tunebed-forest";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    /// Terminal node carrying the mean target of its training rows.
    Leaf { value: f64 },
    /// `x[dim] <= threshold` goes left, otherwise right.
    Split { dim: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { dim, threshold, left, right } => {
                    at = if x[*dim as usize] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }
}

/// A trained forest plus enough metadata to audit and reuse it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    format: String,
    version: u32,
    dim: usize,
    /// Per-tree bootstrap seeds, fixed before training.
    tree_seeds: Vec<u64>,
    /// Training target range; predictions are clamped into it.
    target_min: f64,
    target_max: f64,
    /// FNV-1a fingerprint of the training matrix, for audit trails.
    training_fingerprint: u64,
    trees: Vec<Tree>,
}

fn check_training_data(xs: &[Vec<f64>], ys: &[f64]) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "forest training needs at least 2 samples, got {}",
            xs.len()
        )));
    }
    let dim = xs[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("samples need at least one feature".into()));
    }
    for x in xs {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("non-finite target value".into()));
    }
    Ok(dim)
}

fn training_fingerprint(xs: &[Vec<f64>], ys: &[f64]) -> u64 {
    let mut bytes = Vec::with_capacity(8 * (xs.len() * (xs[0].len() + 1) + 2));
    bytes.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&(xs[0].len() as u64).to_le_bytes());
    for (x, y) in xs.iter().zip(ys) {
        for v in x {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        bytes.extend_from_slice(&y.to_bits().to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// Best split of `rows` (indices into xs/ys): returns
/// `(dim, threshold, gain)` maximizing SSE reduction, or None when every
/// feature is constant on these rows.
fn best_split(xs: &[Vec<f64>], ys: &[f64], rows: &[usize], scratch: &mut Vec<usize>) -> Option<(usize, f64, f64)> {
    let dim = xs[0].len();
    let total_n = rows.len() as f64;
    let total_sum: f64 = rows.iter().map(|&i| ys[i]).sum();
    let total_sq: f64 = rows.iter().map(|&i| ys[i] * ys[i]).sum();
    let parent_sse = total_sq - total_sum * total_sum / total_n;

    let mut best: Option<(usize, f64, f64)> = None;
    for d in 0..dim {
        scratch.clear();
        scratch.extend_from_slice(rows);
        scratch.sort_by(|&a, &b| xs[a][d].total_cmp(&xs[b][d]));
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for (k, &i) in scratch.iter().enumerate().take(rows.len() - 1) {
            left_sum += ys[i];
            left_sq += ys[i] * ys[i];
            let here = xs[i][d];
            let next = xs[scratch[k + 1]][d];
            if next <= here {
                continue; // not a boundary between distinct values
            }
            let ln = (k + 1) as f64;
            let rn = total_n - ln;
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / ln) + (right_sq - right_sum * right_sum / rn);
            let gain = parent_sse - sse;
            let threshold = 0.5 * (here + next);
            // Strict improvement keeps the first (lowest dim, lowest
            // threshold) among equal-gain splits.
            if gain > 0.0 && best.map_or(true, |(_, _, g)| gain > g) {
                best = Some((d, threshold, gain));
            }
        }
    }
    best
}

fn build_tree(xs: &[Vec<f64>], ys: &[f64], bootstrap: Vec<usize>) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut pending = vec![(0usize, bootstrap)];
    let mut scratch: Vec<usize> = Vec::new();
    while let Some((slot, rows)) = pending.pop() {
        let n = rows.len() as f64;
        let mean = rows.iter().map(|&i| ys[i]).sum::<f64>() / n;
        let pure = rows.iter().all(|&i| ys[i] == ys[rows[0]]);
        if rows.len() < 2 || pure {
            nodes[slot] = Node::Leaf { value: mean };
            continue;
        }
        match best_split(xs, ys, &rows, &mut scratch) {
            None => nodes[slot] = Node::Leaf { value: mean },
            Some((d, threshold, _)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&i| xs[i][d] <= threshold);
                let left = nodes.len() as u32;
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len() as u32;
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split { dim: d as u32, threshold, left, right };
                pending.push((left as usize, left_rows));
                pending.push((right as usize, right_rows));
            }
        }
    }
    Tree { nodes }
}

fn train_with<FMap>(xs: &[Vec<f64>], ys: &[f64], tree_count: usize, seed: u64, map: FMap) -> Result<Forest>
where
    FMap: Fn(&[u64], &(dyn Fn(&u64) -> Tree + Sync)) -> Vec<Tree>,
{
    let dim = check_training_data(xs, ys)?;
    if tree_count == 0 {
        return Err(Error::InvalidInput("tree count must be at least 1".into()));
    }
    let n = xs.len();
    let tree_seeds: Vec<u64> =
        (0..tree_count).map(|t| sub_seed(seed, Purpose::Tree, t as u64)).collect();
    let build = |tree_seed: &u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(*tree_seed);
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        build_tree(xs, ys, bootstrap)
    };
    let trees = map(&tree_seeds, &build);
    let target_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let target_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Forest {
        format: FORMAT.into(),
        version: VERSION,
        dim,
        tree_seeds,
        target_min,
        target_max,
        training_fingerprint: training_fingerprint(xs, ys),
        trees,
    })
}

/// Train a forest of `tree_count` trees (parallel across trees when the
/// `parallel` feature is enabled; the result is identical either way).
pub fn train(xs: &[Vec<f64>], ys: &[f64], tree_count: usize, seed: u64) -> Result<Forest> {
    train_with(xs, ys, tree_count, seed, |seeds, build| par::map_collect(seeds, build))
}

/// Sequential reference lane of [`train`]; produces a bit-identical forest.
pub fn train_sequential(xs: &[Vec<f64>], ys: &[f64], tree_count: usize, seed: u64) -> Result<Forest> {
    train_with(xs, ys, tree_count, seed, |seeds, build| par::map_collect_seq(seeds, build))
}

impl Forest {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn training_fingerprint(&self) -> u64 {
        self.training_fingerprint
    }

    /// Mean prediction over all trees, clamped to the training range.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok((sum / self.trees.len() as f64).clamp(self.target_min, self.target_max))
    }

    /// Predict a batch (parallel over candidates when enabled).
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        for x in xs {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
            }
        }
        Ok(par::map_collect(xs, |x| {
            let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
            (sum / self.trees.len() as f64).clamp(self.target_min, self.target_max)
        }))
    }

    /// Sequential reference lane of [`predict_batch`].
    pub fn predict_batch_sequential(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        for x in xs {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
            }
        }
        Ok(par::map_collect_seq(xs, |x| {
            let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
            (sum / self.trees.len() as f64).clamp(self.target_min, self.target_max)
        }))
    }

    /// Index of the candidate with the smallest prediction; ties go to the
    /// earliest candidate.
    pub fn argbest(&self, candidates: &[Vec<f64>]) -> Result<usize> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("argbest needs at least one candidate".into()));
        }
        let preds = self.predict_batch(candidates)?;
        let mut best = 0usize;
        for (i, &p) in preds.iter().enumerate().skip(1) {
            if p < preds[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Serialize to the versioned on-disk JSON format.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Load a forest, validating format, version, and structure.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let forest: Forest = serde_json::from_str(&text)?;
        if forest.format != FORMAT {
            return Err(Error::InvalidInput(format!(
                "not a forest file (format {:?})",
                forest.format
            )));
        }
        if forest.version != VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported forest version {} (expected {VERSION})",
                forest.version
            )));
        }
        if forest.dim == 0 || forest.trees.is_empty() || forest.trees.len() != forest.tree_seeds.len() {
            return Err(Error::InvalidInput("forest structure is inconsistent".into()));
        }
        for tree in &forest.trees {
            for node in &tree.nodes {
                if let Node::Split { dim, left, right, .. } = node {
                    let n = tree.nodes.len() as u32;
                    if *dim as usize >= forest.dim || *left >= n || *right >= n {
                        return Err(Error::InvalidInput("forest node out of range".into()));
                    }
                }
            }
        }
        Ok(forest)
    }
}
