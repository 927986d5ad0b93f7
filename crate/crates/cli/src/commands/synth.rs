//! `canopy synth` — render a scene spec to observation files plus truth
//! and training labels.

use std::path::PathBuf;

use canopy_core::labels::save_labels;
use canopy_core::msr::save_raster_with_extras;
use canopy_core::scenegen::{generate_scene, sample_labels, SceneSpec};
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene description (JSON, see the README for the schema).
    #[arg(long)]
    pub spec: PathBuf,

    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// Labeled pixels to sample per class from the ground truth.
    #[arg(long, default_value_t = 200)]
    pub labels_per_class: usize,

    /// Seed for label sampling (independent of the scene seed).
    #[arg(long, default_value_t = 1)]
    pub label_seed: u64,
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(canopy_core::Error::from)?;
    let spec: SceneSpec = serde_json::from_str(&text).map_err(canopy_core::Error::from)?;
    let scene = generate_scene(&spec)?;
    let labels = sample_labels(&scene.truth, args.labels_per_class, args.label_seed)?;

    std::fs::create_dir_all(&args.out).map_err(canopy_core::Error::from)?;
    let params = json!({
        "spec": spec,
        "labels_per_class": args.labels_per_class,
        "label_seed": args.label_seed,
    });
    let extras = provenance::extras("synth", params);

    for (i, (obs, cloud)) in scene
        .observations
        .iter()
        .zip(&scene.cloud_masks)
        .enumerate()
    {
        save_raster_with_extras(obs, args.out.join(format!("obs_{i:02}.msr")), &extras)?;
        save_raster_with_extras(
            &cloud.to_raster(Some(obs))?,
            args.out.join(format!("cloud_{i:02}.msr")),
            &extras,
        )?;
    }
    save_raster_with_extras(&scene.truth.to_raster()?, args.out.join("truth.msr"), &extras)?;
    save_labels(&labels, args.out.join("labels.csv"))?;

    println!(
        "synthesized {} observation(s) of {}x{} pixels into {}",
        scene.observations.len(),
        spec.width,
        spec.height,
        args.out.display()
    );
    println!(
        "wrote truth.msr and labels.csv ({} labels, {} per class)",
        labels.entries.len(),
        args.labels_per_class
    );
    Ok(())
}
