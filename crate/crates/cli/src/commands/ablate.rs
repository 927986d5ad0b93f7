//! `canopy ablate` — train one model per feature set on an identical
//! train/validation split and compare held-out metrics side by side.
//!
//! Samples are extracted once from the full stack and split once, then each
//! set projects the same sample vectors onto its own features. Differences
//! between rows therefore come from the features alone, not from sampling.

use std::path::PathBuf;

use canopy_core::evalmetrics::ConfusionMatrix;
use canopy_core::labels::load_labels;
use canopy_core::msr::load_raster;
use canopy_core::rforest::{
    extract_samples, split_train_validation, train_forest, Sample, SplitSpec, TrainParams,
};
use canopy_core::Error;
use clap::Args;
use serde::Serialize;
use serde_json::json;

use crate::errors::{CliError, CliResult};
use crate::features::parse_feature_set;
use crate::provenance;

/// Compared when no `--set` is given: bands with NDVI only, bands with the
/// four strongest indices, and the full stack.
pub const DEFAULT_SETS: [&str; 3] = [
    "bands+NDVI",
    "bands+NDVI+NDWI+NDBI+EVI",
    "all",
];

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Feature raster holding every band any set needs.
    #[arg(long)]
    pub features: PathBuf,

    /// Training labels CSV (row,col,label).
    #[arg(long)]
    pub labels: PathBuf,

    /// Feature-set expression to compare (repeatable). Defaults to three
    /// sets: bands+NDVI, bands+NDVI+NDWI+NDBI+EVI, all.
    #[arg(long = "set")]
    pub sets: Vec<String>,

    /// Also write the comparison as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Trees per model.
    #[arg(long, default_value_t = 50)]
    pub n_trees: usize,

    /// Seed for every model's training randomness.
    #[arg(long, default_value_t = 0)]
    pub train_seed: u64,

    /// Seed for the shared train/validation shuffle.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,

    /// Fraction of samples used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct SetResult {
    pub expression: String,
    pub features: Vec<String>,
    pub n_features: usize,
    pub accuracy: f64,
    pub kappa: Option<f64>,
}

fn project(samples: &[Sample], idxs: &[usize]) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| Sample {
            features: idxs.iter().map(|&i| s.features[i]).collect(),
            label: s.label,
        })
        .collect()
}

pub fn run(args: &AblateArgs) -> CliResult<()> {
    let stack = load_raster(&args.features)?;
    let labels = load_labels(&args.labels)?;

    let expressions: Vec<String> = if args.sets.is_empty() {
        DEFAULT_SETS.iter().map(|s| s.to_string()).collect()
    } else {
        args.sets.clone()
    };

    // Resolve every expression against the stack up front so a typo fails
    // before any training starts.
    let band_names = stack.band_names();
    let mut resolved: Vec<(String, Vec<&'static str>, Vec<usize>)> = Vec::new();
    for expr in &expressions {
        let names = parse_feature_set(expr)?;
        let idxs = names
            .iter()
            .map(|n| {
                band_names.iter().position(|b| b == n).ok_or_else(|| {
                    Error::validation(format!(
                        "feature set {expr:?} needs band {n:?}, which {} does not have; \
                         build the full stack with `canopy indices` first",
                        args.features.display()
                    ))
                })
            })
            .collect::<canopy_core::Result<Vec<_>>>()?;
        resolved.push((expr.clone(), names, idxs));
    }

    let (samples, skipped) = extract_samples(&stack, &labels)?;
    let split = SplitSpec {
        train_fraction: args.train_fraction,
        seed: args.split_seed,
        stratified: true,
    };
    let (train, validation) = split_train_validation(&samples, &split)?;
    if validation.is_empty() {
        return Err(Error::validation(
            "validation split is empty; lower --train-fraction or add labels",
        )
        .into());
    }

    let mut results = Vec::new();
    for (expr, names, idxs) in &resolved {
        let train_set = project(&train, idxs);
        let val_set = project(&validation, idxs);
        let forest = train_forest(
            &train_set,
            &TrainParams {
                n_trees: args.n_trees,
                seed: args.train_seed,
                feature_names: Some(names.iter().map(|s| s.to_string()).collect()),
                ..TrainParams::default()
            },
        )
        .map_err(CliError::stage("ablate"))?;

        let mut confusion = ConfusionMatrix::new();
        for s in &val_set {
            confusion.add(s.label, forest.predict(&s.features)?)?;
        }
        let (accuracy, kappa) = confusion.accuracy_and_kappa()?;
        results.push(SetResult {
            expression: expr.clone(),
            features: names.iter().map(|s| s.to_string()).collect(),
            n_features: names.len(),
            accuracy,
            kappa,
        });
    }

    println!(
        "feature-set comparison ({} train / {} validation samples, {} skipped)",
        train.len(),
        validation.len(),
        skipped
    );
    println!("{:<32} {:>10} {:>10} {:>10}", "set", "features", "accuracy", "kappa");
    for r in &results {
        let kappa = match r.kappa {
            Some(k) => format!("{k:.4}"),
            None => "undef".to_string(),
        };
        println!(
            "{:<32} {:>10} {:>10.4} {:>10}",
            r.expression, r.n_features, r.accuracy, kappa
        );
    }

    if let Some(out) = &args.out {
        let value = json!({
            "provenance": provenance::record(
                "ablate",
                json!({
                    "features": args.features.display().to_string(),
                    "labels": args.labels.display().to_string(),
                    "sets": expressions,
                    "n_trees": args.n_trees,
                    "train_seed": args.train_seed,
                    "split_seed": args.split_seed,
                    "train_fraction": args.train_fraction,
                }),
            ),
            "n_train": train.len(),
            "n_validation": validation.len(),
            "results": results,
        });
        std::fs::write(out, serde_json::to_string_pretty(&value).map_err(Error::from)?)
            .map_err(Error::from)?;
        println!("wrote comparison to {}", out.display());
    }
    Ok(())
}
