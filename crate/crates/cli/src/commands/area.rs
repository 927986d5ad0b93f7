//! `canopy area` — canopy area summary from a classification map.

use std::path::PathBuf;

use canopy_core::classmap::ClassMap;
use canopy_core::evalmetrics::area_estimate;
use canopy_core::msr::load_raster;
use canopy_core::Error;
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
pub struct AreaArgs {
    /// Classification raster.
    #[arg(long)]
    pub input: PathBuf,

    /// Count masked pixels as non-tree instead of reporting them apart.
    #[arg(long)]
    pub masked_as_nontree: bool,

    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &AreaArgs) -> CliResult<()> {
    let mut map = ClassMap::from_raster(&load_raster(&args.input)?)?;
    if args.masked_as_nontree {
        map = map.masked_as_nontree();
    }
    let report = area_estimate(&map);

    print!("{}", report.text_summary());
    if let Some(out) = &args.out {
        let params = json!({
            "input": args.input.display().to_string(),
            "masked_as_nontree": args.masked_as_nontree,
        });
        let mut value = serde_json::to_value(&report).map_err(Error::from)?;
        value
            .as_object_mut()
            .expect("report serializes to an object")
            .insert("provenance".into(), provenance::record("area", params));
        std::fs::write(out, serde_json::to_string_pretty(&value).map_err(Error::from)?)
            .map_err(Error::from)?;
        println!("wrote report to {}", out.display());
    }
    Ok(())
}
