//! `canopy train` — fit a random forest to labeled pixels, holding out a
//! validation split for honest metrics.

use std::path::PathBuf;

use canopy_core::evalmetrics::ConfusionMatrix;
use canopy_core::labels::load_labels;
use canopy_core::msr::load_raster;
use canopy_core::rforest::{
    extract_samples, split_train_validation, train_forest, save_model_with_extras, Forest,
    Sample, SplitSpec, TrainParams,
};
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::features::parse_feature_set;
use crate::provenance;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature raster the labels refer to.
    #[arg(long)]
    pub features: PathBuf,

    /// Training labels CSV (row,col,label).
    #[arg(long)]
    pub labels: PathBuf,

    /// Output model file (JSON).
    #[arg(long)]
    pub out: PathBuf,

    /// Train on a subset of bands, e.g. "bands" or "bands+NDVI+NDBI".
    #[arg(long)]
    pub feature_set: Option<String>,

    /// Trees in the ensemble.
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,

    /// Features tried per split (default: floor(sqrt(n_features))).
    #[arg(long)]
    pub mtry: Option<usize>,

    /// Maximum tree depth (default: grow to purity).
    #[arg(long)]
    pub max_depth: Option<usize>,

    /// Minimum samples a node needs to be split further.
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,

    /// Seed for bootstrap sampling and feature selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fraction of samples used for training; the rest validate.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,

    /// Seed for the train/validation shuffle.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,

    /// Shuffle all samples together instead of per class.
    #[arg(long)]
    pub no_stratify: bool,
}

/// Validation-side metrics, or None when the split left it empty.
pub fn validation_metrics(forest: &Forest, validation: &[Sample]) -> CliResult<Option<(f64, Option<f64>)>> {
    if validation.is_empty() {
        return Ok(None);
    }
    let mut confusion = ConfusionMatrix::new();
    for s in validation {
        confusion.add(s.label, forest.predict(&s.features)?)?;
    }
    Ok(Some(confusion.accuracy_and_kappa()?))
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let mut stack = load_raster(&args.features)?;
    if let Some(expr) = &args.feature_set {
        stack = stack.select_bands(&parse_feature_set(expr)?)?;
    }
    let labels = load_labels(&args.labels)?;
    let (samples, skipped) = extract_samples(&stack, &labels)?;

    let split = SplitSpec {
        train_fraction: args.train_fraction,
        seed: args.split_seed,
        stratified: !args.no_stratify,
    };
    let (train, validation) = split_train_validation(&samples, &split)?;

    let params = TrainParams {
        n_trees: args.n_trees,
        mtry: args.mtry,
        max_depth: args.max_depth,
        min_samples_split: args.min_samples_split,
        seed: args.seed,
        feature_names: Some(stack.band_names().iter().map(|s| s.to_string()).collect()),
    };
    let forest = train_forest(&train, &params)?;

    let metrics = validation_metrics(&forest, &validation)?;
    let validation_json = match metrics {
        Some((accuracy, kappa)) => json!({
            "n_train": train.len(),
            "n_validation": validation.len(),
            "accuracy": accuracy,
            "kappa": kappa,
            "skipped_labels": skipped,
        }),
        None => json!(null),
    };

    let mut extras = provenance::extras(
        "train",
        json!({
            "features": args.features.display().to_string(),
            "labels": args.labels.display().to_string(),
            "feature_set": args.feature_set,
            "params": params,
            "split": split,
        }),
    );
    extras.insert("validation".into(), validation_json);
    save_model_with_extras(&forest, &args.out, &extras)?;

    println!(
        "trained {} tree(s) on {} sample(s) ({} features, mtry {})",
        forest.trees.len(),
        train.len(),
        forest.n_features,
        forest.mtry
    );
    if skipped > 0 {
        println!("skipped {skipped} label(s) on nodata pixels");
    }
    match metrics {
        Some((accuracy, kappa)) => {
            let kappa = match kappa {
                Some(k) => format!("{k:.4}"),
                None => "undefined".to_string(),
            };
            println!(
                "validation: {} sample(s), accuracy {accuracy:.4}, kappa {kappa}",
                validation.len()
            );
        }
        None => println!("validation split is empty; no held-out metrics"),
    }
    println!("wrote model to {}", args.out.display());
    Ok(())
}
