//! `canopy indices` — derive spectral index bands from a reflectance
//! raster, or build the full feature stack.

use std::path::PathBuf;

use canopy_core::msr::{load_raster, save_raster_with_extras};
use canopy_core::raster::{stack_bands, Raster};
use canopy_core::spectra::{
    self, build_feature_stack_with, IndexBandRoles, IndexOptions,
};
use canopy_core::Error;
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
pub struct IndicesArgs {
    /// Input reflectance raster (a composite or single observation).
    #[arg(long)]
    pub input: PathBuf,

    /// Output raster.
    #[arg(long)]
    pub out: PathBuf,

    /// Compute only these indices (comma-separated: NDVI, EVI, LAI, SAVI,
    /// NDWI, NDMI, NDBI) instead of the full 14-band feature stack.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,

    /// Use the standard soil factor (1.5) in SAVI instead of 0.5.
    #[arg(long)]
    pub savi_standard: bool,

    /// Band name for the blue role.
    #[arg(long, default_value = "B2")]
    pub blue: String,

    /// Band name for the red role.
    #[arg(long, default_value = "B4")]
    pub red: String,

    /// Band name for the near-infrared role.
    #[arg(long, default_value = "B8")]
    pub nir: String,

    /// Band name for the shortwave-infrared role.
    #[arg(long, default_value = "B11")]
    pub swir1: String,
}

fn compute_one(
    name: &str,
    input: &Raster,
    roles: &IndexBandRoles,
    opts: IndexOptions,
) -> canopy_core::Result<Raster> {
    match name {
        "NDVI" => spectra::ndvi(input, roles),
        "EVI" => spectra::evi(input, roles),
        "LAI" => spectra::lai(&spectra::evi(input, roles)?),
        "SAVI" if opts.savi_standard => spectra::savi_standard(input, roles),
        "SAVI" => spectra::savi(input, roles),
        "NDWI" => spectra::ndwi(input, roles),
        "NDMI" => spectra::ndmi(input, roles),
        "NDBI" => spectra::ndbi(input, roles),
        other => Err(Error::validation(format!(
            "unknown index {other:?}; expected NDVI, EVI, LAI, SAVI, NDWI, NDMI or NDBI"
        ))),
    }
}

pub fn run(args: &IndicesArgs) -> CliResult<()> {
    let input = load_raster(&args.input)?;
    let roles = IndexBandRoles {
        blue: args.blue.clone(),
        red: args.red.clone(),
        nir: args.nir.clone(),
        swir1: args.swir1.clone(),
    };
    let opts = IndexOptions {
        savi_standard: args.savi_standard,
    };

    let result = if args.only.is_empty() {
        build_feature_stack_with(&input, &roles, opts)?
    } else {
        let mut names: Vec<String> = args.only.iter().map(|s| s.to_ascii_uppercase()).collect();
        names.dedup();
        let layers = names
            .iter()
            .map(|n| compute_one(n, &input, &roles, opts))
            .collect::<canopy_core::Result<Vec<_>>>()?;
        stack_bands(&layers)?
    };

    let extras = provenance::extras(
        "indices",
        json!({
            "input": args.input.display().to_string(),
            "only": args.only,
            "savi_standard": args.savi_standard,
            "roles": roles,
        }),
    );
    save_raster_with_extras(&result, &args.out, &extras)?;
    println!(
        "wrote {} band(s) [{}] to {}",
        result.bands().len(),
        result.band_names().join(", "),
        args.out.display()
    );
    Ok(())
}
