//! `canopy classify` — apply a trained model to every pixel of a feature
//! raster, optionally honoring an exclusion mask.

use std::path::PathBuf;

use canopy_core::builtmask::load_mask;
use canopy_core::classmap::Class;
use canopy_core::evalmetrics::write_ppm;
use canopy_core::msr::{load_raster, save_raster_with_extras};
use canopy_core::rforest::{classify_raster, load_model};
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Feature raster. May contain extra bands: the model picks the ones
    /// it was trained on by name.
    #[arg(long)]
    pub features: PathBuf,

    /// Trained model (JSON).
    #[arg(long)]
    pub model: PathBuf,

    /// Exclusion mask; excluded pixels come out as class "masked".
    #[arg(long)]
    pub mask: Option<PathBuf>,

    /// Output classification raster.
    #[arg(long)]
    pub out: PathBuf,

    /// Also render the map to this PPM image.
    #[arg(long)]
    pub ppm: Option<PathBuf>,
}

pub fn run(args: &ClassifyArgs) -> CliResult<()> {
    let forest = load_model(&args.model)?;
    let mut stack = load_raster(&args.features)?;

    // Reorder/subset bands to the model's features when they all exist;
    // a genuine mismatch still fails inside classify_raster.
    let model_names: Vec<&str> = forest.feature_names.iter().map(|s| s.as_str()).collect();
    if stack.band_names() != model_names
        && model_names.iter().all(|n| stack.band_index(n).is_some())
    {
        stack = stack.select_bands(&model_names)?;
    }

    let mask = match &args.mask {
        Some(p) => Some(load_mask(p)?),
        None => None,
    };
    let classmap = classify_raster(&forest, &stack, mask.as_ref())?;

    let params = json!({
        "features": args.features.display().to_string(),
        "model": args.model.display().to_string(),
        "mask": args.mask.as_ref().map(|p| p.display().to_string()),
    });
    save_raster_with_extras(
        &classmap.to_raster()?,
        &args.out,
        &provenance::extras("classify", params.clone()),
    )?;
    if let Some(ppm) = &args.ppm {
        write_ppm(&classmap, ppm, Some(&provenance::comment("classify", params)))?;
    }

    println!(
        "classified {}x{} pixels: {} tree, {} non-tree, {} masked -> {}",
        classmap.width,
        classmap.height,
        classmap.count(Class::Tree),
        classmap.count(Class::NonTree),
        classmap.count(Class::Masked),
        args.out.display()
    );
    Ok(())
}
