//! `canopy render` — classification map to PPM image (tree green,
//! non-tree white, masked grey).

use std::path::PathBuf;

use canopy_core::classmap::ClassMap;
use canopy_core::evalmetrics::write_ppm;
use canopy_core::msr::load_raster;
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Classification raster.
    #[arg(long)]
    pub input: PathBuf,

    /// Output PPM image.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &RenderArgs) -> CliResult<()> {
    let map = ClassMap::from_raster(&load_raster(&args.input)?)?;
    let params = json!({ "input": args.input.display().to_string() });
    write_ppm(&map, &args.out, Some(&provenance::comment("render", params)))?;
    println!(
        "rendered {}x{} map to {}",
        map.width,
        map.height,
        args.out.display()
    );
    Ok(())
}
