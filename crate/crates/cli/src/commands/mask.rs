//! `canopy mask` — build the built-up / low-vegetation exclusion mask from
//! a feature raster containing EVI, NDVI and NDBI bands.

use std::path::PathBuf;
use std::str::FromStr;

use canopy_core::builtmask::{
    build_mask, save_mask, CombineMode, DEFAULT_NDBI_THRESHOLD, DEFAULT_VEG_THRESHOLD,
};
use canopy_core::msr::load_raster;
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

pub fn parse_combine(s: &str) -> Result<CombineMode, String> {
    CombineMode::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
pub struct MaskArgs {
    /// Feature raster with EVI, NDVI and NDBI bands.
    #[arg(long)]
    pub input: PathBuf,

    /// Output mask raster.
    #[arg(long)]
    pub out: PathBuf,

    /// Low-vegetation threshold: pixels with EVI and NDVI at or below it
    /// count as low vegetation.
    #[arg(long, default_value_t = DEFAULT_VEG_THRESHOLD)]
    pub veg_threshold: f32,

    /// Built-up threshold: pixels with NDBI strictly above it count as
    /// built-up.
    #[arg(long, default_value_t = DEFAULT_NDBI_THRESHOLD)]
    pub ndbi_threshold: f32,

    /// How the two rules combine: "and" excludes pixels satisfying both,
    /// "or" excludes pixels satisfying either.
    #[arg(long, default_value = "and", value_parser = parse_combine)]
    pub combine: CombineMode,
}

pub fn run(args: &MaskArgs) -> CliResult<()> {
    let features = load_raster(&args.input)?;
    let mask = build_mask(&features, args.veg_threshold, args.ndbi_threshold, args.combine)?;

    let extras = provenance::extras(
        "mask",
        json!({
            "input": args.input.display().to_string(),
            "veg_threshold": args.veg_threshold,
            "ndbi_threshold": args.ndbi_threshold,
            "combine": args.combine,
        }),
    );
    save_mask(&mask, &args.out, Some(&features), &extras)?;

    let total = mask.width * mask.height;
    let excluded = mask.excluded_count();
    println!(
        "excluded {excluded} of {total} pixels ({:.1}%) -> {}",
        100.0 * excluded as f64 / total as f64,
        args.out.display()
    );
    Ok(())
}
