//! Random-forest classifier with fully deterministic, seeded training.
//!
//! Every source of randomness is a [`rand_chacha::ChaCha8Rng`] derived from
//! the training seed: tree `i` draws its bootstrap sample and its per-node
//! feature subsets from stream `i + 1` (stream 0 is reserved for the
//! train/validation shuffle). Split scoring compares exact integer fractions,
//! so the grown trees do not depend on floating-point summation order or on
//! how work is scheduled across threads. Training the same data with the
//! same seed yields a bit-identical model, byte-identical on disk.

mod tree;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tree::TreeNode;

use crate::builtmask::MaskLayer;
use crate::classmap::{Class, ClassMap};
use crate::labels::LabelSet;
use crate::msr::Extras;
use crate::raster::Raster;
use crate::{Error, Result};

/// Number of classes the classifier distinguishes (non-tree = 0, tree = 1).
pub const N_CLASSES: usize = 2;

/// Current on-disk model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One labeled training example: a feature vector and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    /// Number of trees in the ensemble.
    pub n_trees: usize,
    /// Features considered per split; `None` means `floor(sqrt(n_features))`,
    /// minimum 1.
    pub mtry: Option<usize>,
    /// Maximum tree depth; `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_samples_split: usize,
    /// Seed for all training randomness.
    pub seed: u64,
    /// Names recorded in the model, matched against raster bands at
    /// classification time; `None` generates `f0..f{n-1}`.
    pub feature_names: Option<Vec<String>>,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            n_trees: 100,
            mtry: None,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
            feature_names: None,
        }
    }
}

/// A trained forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub seed: u64,
    pub n_features: usize,
    pub mtry: usize,
    pub feature_names: Vec<String>,
    pub n_classes: usize,
    pub trees: Vec<TreeNode>,
}

/// [`train_forest`] plus the bootstrap sample drawn for each tree
/// (indices into the training slice, with repeats).
pub struct TrainOutput {
    pub forest: Forest,
    pub bootstraps: Vec<Vec<usize>>,
}

fn effective_mtry(requested: Option<usize>, n_features: usize) -> Result<usize> {
    match requested {
        Some(0) => Err(Error::validation("mtry must be at least 1")),
        Some(m) if m > n_features => Err(Error::validation(format!(
            "mtry {m} exceeds feature count {n_features}"
        ))),
        Some(m) => Ok(m),
        None => Ok(((n_features as f64).sqrt().floor() as usize).max(1)),
    }
}

fn validate_training_set(samples: &[Sample]) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let n_features = samples[0].features.len();
    if n_features == 0 {
        return Err(Error::validation("samples have zero features"));
    }
    let mut seen = [false; N_CLASSES];
    for (i, s) in samples.iter().enumerate() {
        if s.features.len() != n_features {
            return Err(Error::validation(format!(
                "sample {i} has {} features, expected {n_features}",
                s.features.len()
            )));
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "sample {i} has a non-finite feature value"
            )));
        }
        if (s.label as usize) >= N_CLASSES {
            return Err(Error::validation(format!(
                "sample {i} has label {}, expected 0 or 1",
                s.label
            )));
        }
        seen[s.label as usize] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::validation(
            "training set contains only one class; need both tree and non-tree examples",
        ));
    }
    Ok(n_features)
}

/// Train a forest. Same samples + same params ⇒ bit-identical model.
pub fn train_forest(samples: &[Sample], params: &TrainParams) -> Result<Forest> {
    Ok(train_forest_detailed(samples, params)?.forest)
}

/// [`train_forest`], also returning each tree's bootstrap indices.
pub fn train_forest_detailed(samples: &[Sample], params: &TrainParams) -> Result<TrainOutput> {
    let n_features = validate_training_set(samples)?;
    if params.n_trees == 0 {
        return Err(Error::validation("n_trees must be at least 1"));
    }
    if params.min_samples_split < 2 {
        return Err(Error::validation("min_samples_split must be at least 2"));
    }
    let mtry = effective_mtry(params.mtry, n_features)?;
    let feature_names = match &params.feature_names {
        Some(names) => {
            if names.len() != n_features {
                return Err(Error::validation(format!(
                    "{} feature names for {n_features} features",
                    names.len()
                )));
            }
            names.clone()
        }
        None => (0..n_features).map(|i| format!("f{i}")).collect(),
    };

    let grow_params = tree::GrowParams {
        n_features,
        n_classes: N_CLASSES,
        mtry,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
    };

    // Each tree owns an independent ChaCha stream keyed by its index, so the
    // result is the same whether trees are grown serially or in parallel.
    let grown: Vec<(TreeNode, Vec<usize>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(tree_index as u64 + 1);
            let n = samples.len();
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let root = tree::grow(samples, bootstrap.clone(), 0, &grow_params, &mut rng);
            (root, bootstrap)
        })
        .collect();

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut bootstraps = Vec::with_capacity(params.n_trees);
    for (root, bootstrap) in grown {
        trees.push(root);
        bootstraps.push(bootstrap);
    }

    Ok(TrainOutput {
        forest: Forest {
            seed: params.seed,
            n_features,
            mtry,
            feature_names,
            n_classes: N_CLASSES,
            trees,
        },
        bootstraps,
    })
}

impl Forest {
    fn validate_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::validation(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("feature vector has a non-finite value"));
        }
        Ok(())
    }

    /// Per-class vote counts across all trees.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<u64>> {
        self.validate_input(x)?;
        let mut votes = vec![0u64; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x) as usize] += 1;
        }
        Ok(votes)
    }

    /// Majority-vote prediction; ties go to the lower class index.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(tree::argmax_class(&self.votes(x)?))
    }

    fn validate_structure(&self) -> Result<()> {
        if self.n_classes != N_CLASSES {
            return Err(Error::validation(format!(
                "model has {} classes, expected {N_CLASSES}",
                self.n_classes
            )));
        }
        if self.n_features == 0 {
            return Err(Error::validation("model has zero features"));
        }
        if self.feature_names.len() != self.n_features {
            return Err(Error::validation(format!(
                "model lists {} feature names for {} features",
                self.feature_names.len(),
                self.n_features
            )));
        }
        if self.mtry == 0 || self.mtry > self.n_features {
            return Err(Error::validation(format!(
                "model mtry {} is outside 1..={}",
                self.mtry, self.n_features
            )));
        }
        if self.trees.is_empty() {
            return Err(Error::validation("model has no trees"));
        }
        for (i, t) in self.trees.iter().enumerate() {
            validate_node(t, i, self.n_features, self.n_classes)?;
        }
        Ok(())
    }
}

fn validate_node(node: &TreeNode, tree: usize, n_features: usize, n_classes: usize) -> Result<()> {
    match node {
        TreeNode::Split { f, t, l, r } => {
            if *f >= n_features {
                return Err(Error::validation(format!(
                    "tree {tree}: split feature {f} out of range 0..{n_features}"
                )));
            }
            if !t.is_finite() {
                return Err(Error::validation(format!(
                    "tree {tree}: non-finite split threshold"
                )));
            }
            validate_node(l, tree, n_features, n_classes)?;
            validate_node(r, tree, n_features, n_classes)
        }
        TreeNode::Leaf { counts, pred } => {
            if counts.len() != n_classes {
                return Err(Error::validation(format!(
                    "tree {tree}: leaf has {} counts, expected {n_classes}",
                    counts.len()
                )));
            }
            if counts.iter().all(|&c| c == 0) {
                return Err(Error::validation(format!("tree {tree}: empty leaf")));
            }
            if *pred != tree::argmax_class(counts) {
                return Err(Error::validation(format!(
                    "tree {tree}: leaf prediction {pred} does not match its counts"
                )));
            }
            Ok(())
        }
    }
}

/// Parameters for [`split_train_validation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of samples assigned to the training side, in (0, 1).
    pub train_fraction: f64,
    /// Seed for the shuffle (drawn from ChaCha stream 0).
    pub seed: u64,
    /// Shuffle and split each class separately, preserving class balance.
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

/// Split samples into (train, validation).
///
/// Stratified mode shuffles each class separately (classes in ascending
/// order, one shared RNG) and takes `round(train_fraction * n_class)` from
/// each, so the class balance of the whole set carries over to both sides.
pub fn split_train_validation(
    samples: &[Sample],
    spec: &SplitSpec,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !spec.train_fraction.is_finite()
        || spec.train_fraction <= 0.0
        || spec.train_fraction >= 1.0
    {
        return Err(Error::validation(format!(
            "train fraction {} is outside (0, 1)",
            spec.train_fraction
        )));
    }
    if samples.is_empty() {
        return Err(Error::validation("cannot split an empty sample set"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);

    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            by_class.entry(s.label).or_default().push(i);
        }
        by_class.into_values().collect()
    } else {
        vec![(0..samples.len()).collect()]
    };

    let mut train = Vec::new();
    let mut validation = Vec::new();
    for mut idxs in groups {
        // Fisher–Yates shuffle.
        for k in (1..idxs.len()).rev() {
            let j = rng.random_range(0..=k);
            idxs.swap(k, j);
        }
        let n_train = (spec.train_fraction * idxs.len() as f64).round() as usize;
        for (pos, &i) in idxs.iter().enumerate() {
            if pos < n_train {
                train.push(samples[i].clone());
            } else {
                validation.push(samples[i].clone());
            }
        }
    }
    Ok((train, validation))
}

/// Gather labeled samples from a feature raster.
///
/// Each labeled pixel becomes one sample whose features are the raster's
/// bands in order. Pixels where any band is nodata are skipped; the second
/// return value counts them. Out-of-bounds coordinates are an error.
pub fn extract_samples(features: &Raster, labels: &LabelSet) -> Result<(Vec<Sample>, usize)> {
    let mut samples = Vec::with_capacity(labels.entries.len());
    let mut skipped = 0usize;
    for (i, p) in labels.entries.iter().enumerate() {
        let (row, col) = (p.row as usize, p.col as usize);
        if row >= features.height() || col >= features.width() {
            return Err(Error::validation(format!(
                "label {i} at ({}, {}) is outside the {}x{} raster",
                p.row, p.col, features.width(), features.height()
            )));
        }
        let mut x = Vec::with_capacity(features.bands().len());
        let mut any_nodata = false;
        for b in 0..features.bands().len() {
            let v = features.get(b, row, col);
            if features.is_nodata(v) {
                any_nodata = true;
                break;
            }
            x.push(v as f64);
        }
        if any_nodata {
            skipped += 1;
        } else {
            samples.push(Sample {
                features: x,
                label: p.label,
            });
        }
    }
    Ok((samples, skipped))
}

/// Classify every pixel of a feature raster.
///
/// Band names must match the model's feature names exactly and in order.
/// Pixels excluded by `mask`, or with any nodata feature, come back as
/// [`Class::Masked`]. Rows are classified in parallel; per-pixel work is
/// independent, so thread count cannot change the result.
pub fn classify_raster(
    forest: &Forest,
    features: &Raster,
    mask: Option<&MaskLayer>,
) -> Result<ClassMap> {
    let band_names: Vec<&str> = features.bands().iter().map(|b| b.name.as_str()).collect();
    let model_names: Vec<&str> = forest.feature_names.iter().map(|s| s.as_str()).collect();
    if band_names != model_names {
        return Err(Error::validation(format!(
            "raster bands {band_names:?} do not match model features {model_names:?}"
        )));
    }
    if let Some(m) = mask {
        if m.width != features.width() || m.height != features.height() {
            return Err(Error::validation(format!(
                "mask is {}x{} but raster is {}x{}",
                m.width, m.height, features.width(), features.height()
            )));
        }
    }

    let (w, h, nb) = (features.width(), features.height(), features.bands().len());
    let mut classes = vec![Class::Masked; w * h];
    classes
        .par_chunks_mut(w)
        .enumerate()
        .try_for_each(|(row, out_row)| -> Result<()> {
            let mut x = vec![0f64; nb];
            for (col, out) in out_row.iter_mut().enumerate() {
                if mask.is_some_and(|m| m.is_excluded(row, col)) {
                    continue;
                }
                let mut any_nodata = false;
                for (b, slot) in x.iter_mut().enumerate() {
                    let v = features.get(b, row, col);
                    if features.is_nodata(v) {
                        any_nodata = true;
                        break;
                    }
                    *slot = v as f64;
                }
                if any_nodata {
                    continue;
                }
                *out = Class::from_label(forest.predict(&x)?)?;
            }
            Ok(())
        })?;

    ClassMap::with_geometry(w, h, classes, features.pixel_size_m(), features.origin())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    seed: u64,
    n_features: usize,
    mtry: usize,
    feature_names: Vec<String>,
    n_classes: usize,
    trees: Vec<TreeNode>,
    #[serde(flatten)]
    extras: Extras,
}

/// Write a model as pretty-printed JSON.
pub fn save_model(forest: &Forest, path: &Path) -> Result<()> {
    save_model_with_extras(forest, path, &Extras::new())
}

/// Write a model as JSON with extra top-level metadata keys.
pub fn save_model_with_extras(forest: &Forest, path: &Path, extras: &Extras) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        seed: forest.seed,
        n_features: forest.n_features,
        mtry: forest.mtry,
        feature_names: forest.feature_names.clone(),
        n_classes: forest.n_classes,
        trees: forest.trees.clone(),
        extras: extras.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &file)?;
    Ok(())
}

/// Read a model back, checking the format version and that the tree
/// structure is internally consistent.
pub fn load_model(path: &Path) -> Result<Forest> {
    Ok(load_model_with_extras(path)?.0)
}

/// [`load_model`], also returning any extra metadata keys in the file.
pub fn load_model_with_extras(path: &Path) -> Result<(Forest, Extras)> {
    let r = BufReader::new(File::open(path)?);
    let file: ModelFile = serde_json::from_reader(r)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::format(format!(
            "unsupported model format version {}, expected {MODEL_FORMAT_VERSION}",
            file.format_version
        )));
    }
    let forest = Forest {
        seed: file.seed,
        n_features: file.n_features,
        mtry: file.mtry,
        feature_names: file.feature_names,
        n_classes: file.n_classes,
        trees: file.trees,
    };
    forest.validate_structure()?;
    Ok((forest, file.extras))
}
