//! `canopy run` — the whole pipeline, from a scene spec to a classified
//! map with evaluation and area reports, in one deterministic command.
//!
//! Stages: synthesize the scene, cloud-screen and reject observations,
//! median-composite, build the feature stack, build the exclusion mask,
//! sample training labels from truth, train a forest on a stratified
//! split, classify the full frame, evaluate against truth, estimate area,
//! and write every artifact into the output directory. Rerunning with the
//! same inputs reproduces every output byte for byte.

use std::path::{Path, PathBuf};

use canopy_core::builtmask::{build_mask, CombineMode};
use canopy_core::classmap::Class;
use canopy_core::evalmetrics::{area_estimate, evaluate_maps, write_ppm};
use canopy_core::msr::save_raster_with_extras;
use canopy_core::raster::{apply_cloud_mask, median_composite, Raster};
use canopy_core::rforest::{
    classify_raster, extract_samples, split_train_validation, train_forest,
    save_model_with_extras, SplitSpec, TrainParams,
};
use canopy_core::scenegen::{generate_scene, sample_labels, SceneSpec};
use canopy_core::spectra::{build_feature_stack_with, IndexBandRoles, IndexOptions};
use canopy_core::Error;
use clap::Args;
use serde_json::json;

use crate::commands::mask::parse_combine;
use crate::commands::train::validation_metrics;
use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};
use crate::features::parse_feature_set;
use crate::provenance;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,

    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// Pipeline configuration file (JSON). Flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Labeled pixels to sample per class from the ground truth.
    #[arg(long)]
    pub labels_per_class: Option<usize>,
    /// Seed for label sampling.
    #[arg(long)]
    pub label_seed: Option<u64>,
    /// Seed for the train/validation shuffle.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Fraction of samples used for training; the rest validate.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Shuffle all samples together instead of per class.
    #[arg(long)]
    pub no_stratify: bool,
    /// Trees in the ensemble.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Features tried per split (default: floor(sqrt(n_features))).
    #[arg(long)]
    pub mtry: Option<usize>,
    /// Maximum tree depth (default: grow to purity).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Seed for bootstrap sampling and feature selection.
    #[arg(long)]
    pub train_seed: Option<u64>,
    /// Feature-set expression, e.g. "all", "bands", "bands+NDVI+NDBI".
    #[arg(long)]
    pub features: Option<String>,
    /// Classify every pixel; skip the exclusion mask.
    #[arg(long)]
    pub no_mask: bool,
    /// Low-vegetation threshold for the exclusion mask.
    #[arg(long)]
    pub veg_threshold: Option<f32>,
    /// Built-up threshold for the exclusion mask.
    #[arg(long)]
    pub ndbi_threshold: Option<f32>,
    /// How the mask rules combine: "and" or "or".
    #[arg(long, value_parser = parse_combine)]
    pub combine: Option<CombineMode>,
    /// Drop observations whose cloud mask covers more than this fraction.
    #[arg(long)]
    pub max_cloud_fraction: Option<f64>,
    /// Score masked pixels as non-tree when evaluating.
    #[arg(long)]
    pub masked_as_nontree: bool,
    /// Use the standard soil factor (1.5) in SAVI.
    #[arg(long)]
    pub savi_standard: bool,
}

impl RunArgs {
    fn resolve_config(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone(); })*
            };
        }
        take!(
            labels_per_class, label_seed, split_seed, train_fraction, n_trees,
            train_seed, features, veg_threshold, ndbi_threshold, combine,
            max_cloud_fraction
        );
        // mtry/max_depth are themselves optional in the config; a flag sets them.
        if self.mtry.is_some() {
            c.mtry = self.mtry;
        }
        if self.max_depth.is_some() {
            c.max_depth = self.max_depth;
        }
        if self.no_stratify {
            c.stratified = false;
        }
        if self.no_mask {
            c.use_mask = false;
        }
        if self.masked_as_nontree {
            c.masked_as_nontree = true;
        }
        if self.savi_standard {
            c.savi_standard = true;
        }
        c.validate()?;
        Ok(c)
    }
}

/// The in-memory pipeline shared by `run` and the test suite: scene spec
/// in, classified map and reports out.
pub struct PipelineOutput {
    pub forest: canopy_core::rforest::Forest,
    pub classmap: canopy_core::classmap::ClassMap,
    pub eval: canopy_core::evalmetrics::EvalReport,
    pub area: canopy_core::evalmetrics::AreaReport,
    pub validation: Option<(f64, Option<f64>)>,
    pub observations_used: usize,
    pub observations_rejected: usize,
}

pub fn execute(spec: &SceneSpec, config: &RunConfig) -> CliResult<PipelineOutput> {
    let stage = CliError::stage;

    let scene = generate_scene(spec).map_err(stage("scene"))?;

    let mut kept: Vec<Raster> = Vec::new();
    let mut rejected = 0usize;
    for (obs, cloud) in scene.observations.iter().zip(&scene.cloud_masks) {
        if cloud.cloud_fraction() > config.max_cloud_fraction {
            rejected += 1;
        } else {
            kept.push(apply_cloud_mask(obs, cloud).map_err(stage("screen"))?);
        }
    }
    if kept.is_empty() {
        return Err(stage("screen")(Error::validation(format!(
            "all {rejected} observation(s) exceeded the cloud limit {}",
            config.max_cloud_fraction
        ))));
    }
    let composite = median_composite(&kept).map_err(stage("composite"))?;

    let full_stack = build_feature_stack_with(
        &composite,
        &IndexBandRoles::default(),
        IndexOptions { savi_standard: config.savi_standard },
    )
    .map_err(stage("features"))?;
    let feature_names = parse_feature_set(&config.features).map_err(stage("features"))?;
    let stack = full_stack.select_bands(&feature_names).map_err(stage("features"))?;

    let mask = if config.use_mask {
        Some(
            build_mask(
                &full_stack,
                config.veg_threshold,
                config.ndbi_threshold,
                config.combine,
            )
            .map_err(stage("mask"))?,
        )
    } else {
        None
    };

    let labels = sample_labels(&scene.truth, config.labels_per_class, config.label_seed)
        .map_err(stage("labels"))?;
    let (samples, _skipped) = extract_samples(&stack, &labels).map_err(stage("extract"))?;
    let (train, validation) = split_train_validation(
        &samples,
        &SplitSpec {
            train_fraction: config.train_fraction,
            seed: config.split_seed,
            stratified: config.stratified,
        },
    )
    .map_err(stage("split"))?;

    let forest = train_forest(
        &train,
        &TrainParams {
            n_trees: config.n_trees,
            mtry: config.mtry,
            max_depth: config.max_depth,
            min_samples_split: 2,
            seed: config.train_seed,
            feature_names: Some(feature_names.iter().map(|s| s.to_string()).collect()),
        },
    )
    .map_err(stage("train"))?;
    let val_metrics = validation_metrics(&forest, &validation)?;

    let classmap =
        classify_raster(&forest, &stack, mask.as_ref()).map_err(stage("classify"))?;
    let eval = evaluate_maps(&scene.truth, &classmap, config.masked_as_nontree)
        .map_err(stage("evaluate"))?;
    let area = area_estimate(&classmap);

    Ok(PipelineOutput {
        forest,
        classmap,
        eval,
        area,
        validation: val_metrics,
        observations_used: kept.len(),
        observations_rejected: rejected,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).map_err(Error::from)?)
        .map_err(Error::from)?;
    Ok(())
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let config = args.resolve_config()?;
    let text = std::fs::read_to_string(&args.scene).map_err(Error::from)?;
    let spec: SceneSpec = serde_json::from_str(&text).map_err(Error::from)?;

    let output = execute(&spec, &config)?;

    std::fs::create_dir_all(&args.out).map_err(Error::from)?;
    let params = json!({
        "scene": args.scene.display().to_string(),
        "config_file": args.config.as_ref().map(|p| p.display().to_string()),
        "config": config,
    });

    write_json(
        &args.out.join("config.json"),
        &json!({
            "provenance": provenance::record("run", params.clone()),
            "scene": spec,
            "config": config,
        }),
    )?;

    save_model_with_extras(
        &output.forest,
        &args.out.join("model.json"),
        &provenance::extras("run", params.clone()),
    )?;

    save_raster_with_extras(
        &output.classmap.to_raster()?,
        args.out.join("classmap.msr"),
        &provenance::extras("run", params.clone()),
    )?;
    write_ppm(
        &output.classmap,
        &args.out.join("classmap.ppm"),
        Some(&provenance::comment("run", params.clone())),
    )?;

    let mut eval_json = serde_json::to_value(&output.eval).map_err(Error::from)?;
    eval_json
        .as_object_mut()
        .expect("report serializes to an object")
        .insert("provenance".into(), provenance::record("run", params.clone()));
    write_json(&args.out.join("eval_report.json"), &eval_json)?;

    let mut area_json = serde_json::to_value(&output.area).map_err(Error::from)?;
    area_json
        .as_object_mut()
        .expect("report serializes to an object")
        .insert("provenance".into(), provenance::record("run", params.clone()));
    write_json(&args.out.join("area_report.json"), &area_json)?;

    let validation_line = match output.validation {
        Some((acc, Some(kappa))) => {
            format!("held-out validation: accuracy {acc:.4}, kappa {kappa:.4}\n")
        }
        Some((acc, None)) => {
            format!("held-out validation: accuracy {acc:.4}, kappa undefined\n")
        }
        None => "held-out validation: (empty split)\n".to_string(),
    };
    let report_text = format!(
        "canopy run report\n\
         =================\n\
         scene: {}x{} pixels, {} observation(s) ({} rejected for cloud cover)\n\
         features: {}\n\
         exclusion mask: {}\n\
         {}\n{}\n{}",
        spec.width,
        spec.height,
        output.observations_used,
        output.observations_rejected,
        config.features,
        if config.use_mask { "on" } else { "off" },
        validation_line,
        output.eval.text_table(),
        output.area.text_summary(),
    );
    std::fs::write(args.out.join("report.txt"), &report_text).map_err(Error::from)?;

    print!("{report_text}");
    println!(
        "map: {} tree, {} non-tree, {} masked pixel(s)",
        output.classmap.count(Class::Tree),
        output.classmap.count(Class::NonTree),
        output.classmap.count(Class::Masked),
    );
    println!("wrote outputs to {}", args.out.display());
    Ok(())
}
