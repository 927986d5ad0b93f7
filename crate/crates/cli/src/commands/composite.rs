//! `canopy composite` — cloud-screen observations and take the per-pixel
//! median.

use std::path::PathBuf;

use canopy_core::msr::{load_raster, save_raster_with_extras};
use canopy_core::raster::{apply_cloud_mask, median_composite, CloudMask, Raster};
use canopy_core::Error;
use clap::Args;
use serde_json::json;

use crate::errors::{CliError, CliResult};
use crate::provenance;

#[derive(Args, Debug)]
pub struct CompositeArgs {
    /// Observations: `obs.msr` for a clear image, or `obs.msr=cloud.msr`
    /// to screen it with a cloud mask first.
    #[arg(required = true, value_name = "OBS[=CLOUD]")]
    pub inputs: Vec<String>,

    /// Output composite raster.
    #[arg(long)]
    pub out: PathBuf,

    /// Drop observations whose cloud mask covers more than this fraction.
    #[arg(long, default_value_t = 0.1)]
    pub max_cloud_fraction: f64,
}

pub fn run(args: &CompositeArgs) -> CliResult<()> {
    if !(args.max_cloud_fraction.is_finite() && (0.0..=1.0).contains(&args.max_cloud_fraction)) {
        return Err(Error::validation("--max-cloud-fraction must be in [0, 1]").into());
    }

    let mut kept: Vec<Raster> = Vec::new();
    let mut rejected = 0usize;
    for input in &args.inputs {
        let (obs_path, cloud_path) = match input.split_once('=') {
            Some((o, c)) => (o, Some(c)),
            None => (input.as_str(), None),
        };
        let obs = load_raster(obs_path)?;
        match cloud_path {
            None => kept.push(obs),
            Some(c) => {
                let mask = CloudMask::from_raster(&load_raster(c)?)?;
                if mask.cloud_fraction() > args.max_cloud_fraction {
                    eprintln!(
                        "dropping {obs_path}: cloud fraction {:.3} exceeds {:.3}",
                        mask.cloud_fraction(),
                        args.max_cloud_fraction
                    );
                    rejected += 1;
                } else {
                    kept.push(apply_cloud_mask(&obs, &mask)?);
                }
            }
        }
    }

    if kept.is_empty() {
        return Err(CliError::stage("composite")(Error::validation(format!(
            "all {} observation(s) exceeded the cloud limit; nothing to composite",
            rejected
        ))));
    }
    let composite = median_composite(&kept).map_err(CliError::stage("composite"))?;

    let extras = provenance::extras(
        "composite",
        json!({
            "inputs": args.inputs,
            "max_cloud_fraction": args.max_cloud_fraction,
            "observations_used": kept.len(),
            "observations_rejected": rejected,
        }),
    );
    save_raster_with_extras(&composite, &args.out, &extras)?;
    println!(
        "composited {} of {} observation(s) into {}",
        kept.len(),
        args.inputs.len(),
        args.out.display()
    );
    Ok(())
}
