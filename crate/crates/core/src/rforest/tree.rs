//! Single decision tree: node layout, deterministic growth, prediction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Sample;

/// One node of a binary decision tree.
///
/// Serialized as JSON with compact field names; the two variants are
/// distinguished structurally (a split has `f`/`t`/`l`/`r`, a leaf has
/// `counts`/`pred`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    /// Interior node: samples with `feature[f] <= t` go left, the rest right.
    Split {
        f: usize,
        t: f64,
        l: Box<TreeNode>,
        r: Box<TreeNode>,
    },
    /// Terminal node: per-class training counts and the predicted class.
    Leaf { counts: Vec<u64>, pred: u8 },
}

impl TreeNode {
    /// Class prediction for one feature vector.
    pub fn predict(&self, x: &[f64]) -> u8 {
        match self {
            TreeNode::Split { f, t, l, r } => {
                if x[*f] <= *t {
                    l.predict(x)
                } else {
                    r.predict(x)
                }
            }
            TreeNode::Leaf { pred, .. } => *pred,
        }
    }

    /// Number of nodes in this subtree (splits and leaves).
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Split { l, r, .. } => 1 + l.node_count() + r.node_count(),
            TreeNode::Leaf { .. } => 1,
        }
    }

    /// Maximum depth of this subtree; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { l, r, .. } => 1 + l.depth().max(r.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Lowest class index with the maximal count.
pub(super) fn argmax_class(counts: &[u64]) -> u8 {
    let mut best = 0usize;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best as u8
}

fn class_counts(samples: &[Sample], idxs: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &i in idxs {
        counts[samples[i].label as usize] += 1;
    }
    counts
}

fn is_pure(counts: &[u64]) -> bool {
    counts.iter().filter(|&&n| n > 0).count() <= 1
}

/// Best split over one feature, as (sum-of-squares numerator, denominator)
/// of the score `S_l/n_l + S_r/n_r` where `S = sum of squared class counts`.
/// Keeping the score as an exact integer fraction makes comparisons — and
/// therefore tie-breaking and the grown tree — independent of evaluation
/// order and floating-point rounding.
struct FeatureSplit {
    threshold: f64,
    score_num: u128,
    score_den: u128,
}

/// Scan all candidate thresholds of `feature` for the node's samples.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values, computed as `lo + (hi - lo) / 2` and clamped to `[lo, hi)` so the
/// induced partition is never empty on either side even when the midpoint
/// rounds up to `hi`.
fn best_split_on_feature(
    samples: &[Sample],
    idxs: &[usize],
    feature: usize,
    n_classes: usize,
    total_counts: &[u64],
) -> Option<FeatureSplit> {
    let mut order: Vec<(f64, u8)> = idxs
        .iter()
        .map(|&i| (samples[i].features[feature], samples[i].label))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let n = order.len() as u128;
    let mut left = vec![0u64; n_classes];
    let mut best: Option<FeatureSplit> = None;

    for k in 0..order.len() - 1 {
        left[order[k].1 as usize] += 1;
        let (lo, hi) = (order[k].0, order[k + 1].0);
        if lo == hi {
            continue;
        }
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }

        let n_l = (k + 1) as u128;
        let n_r = n - n_l;
        let mut s_l = 0u128;
        let mut s_r = 0u128;
        for c in 0..n_classes {
            let cl = left[c] as u128;
            let cr = total_counts[c] as u128 - cl;
            s_l += cl * cl;
            s_r += cr * cr;
        }
        // S_l/n_l + S_r/n_r  ==  (S_l*n_r + S_r*n_l) / (n_l*n_r)
        let num = s_l * n_r + s_r * n_l;
        let den = n_l * n_r;

        let better = match &best {
            None => true,
            // Strictly greater only: ties keep the earlier (lower) threshold.
            Some(b) => num * b.score_den > b.score_num * den,
        };
        if better {
            best = Some(FeatureSplit {
                threshold,
                score_num: num,
                score_den: den,
            });
        }
    }
    best
}

pub(super) struct GrowParams {
    pub n_features: usize,
    pub n_classes: usize,
    pub mtry: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

/// Draw `mtry` distinct feature indices (partial Fisher–Yates over
/// `0..n_features`), then sort them ascending so candidate features are
/// always evaluated in index order regardless of draw order.
fn sample_features(rng: &mut ChaCha8Rng, n_features: usize, mtry: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n_features).collect();
    for k in 0..mtry {
        let j = rng.random_range(k..n_features);
        pool.swap(k, j);
    }
    pool.truncate(mtry);
    pool.sort_unstable();
    pool
}

/// Recursively grow a tree over `idxs` (indices into `samples`).
pub(super) fn grow(
    samples: &[Sample],
    idxs: Vec<usize>,
    depth: usize,
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let counts = class_counts(samples, &idxs, params.n_classes);
    let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
    if is_pure(&counts) || idxs.len() < params.min_samples_split || at_depth_limit {
        return leaf(counts);
    }

    let features = sample_features(rng, params.n_features, params.mtry);

    // Parent score as an exact fraction, for the strict-improvement test.
    let n_p = idxs.len() as u128;
    let s_p: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();

    let mut best: Option<(usize, FeatureSplit)> = None;
    for f in features {
        let Some(cand) = best_split_on_feature(samples, &idxs, f, params.n_classes, &counts)
        else {
            continue;
        };
        let better = match &best {
            None => true,
            // Strictly greater only: ties keep the earlier (lower) feature.
            Some((_, b)) => cand.score_num * b.score_den > b.score_num * cand.score_den,
        };
        if better {
            best = Some((f, cand));
        }
    }

    // Accept only splits that strictly beat the parent's own score,
    // i.e. strictly reduce weighted Gini impurity.
    let Some((f, split)) = best else {
        return leaf(counts);
    };
    if split.score_num * n_p <= s_p * split.score_den {
        return leaf(counts);
    }

    let (mut left_idx, mut right_idx) = (Vec::new(), Vec::new());
    for i in idxs {
        if samples[i].features[f] <= split.threshold {
            left_idx.push(i);
        } else {
            right_idx.push(i);
        }
    }
    debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

    TreeNode::Split {
        f,
        t: split.threshold,
        l: Box::new(grow(samples, left_idx, depth + 1, params, rng)),
        r: Box::new(grow(samples, right_idx, depth + 1, params, rng)),
    }
}

fn leaf(counts: Vec<u64>) -> TreeNode {
    let pred = argmax_class(&counts);
    TreeNode::Leaf { counts, pred }
}
