//! `canopy evaluate` — score a classification map against reference truth
//! or labeled points.

use std::path::PathBuf;

use canopy_core::classmap::ClassMap;
use canopy_core::evalmetrics::{evaluate_labels, evaluate_maps, EvalReport};
use canopy_core::labels::load_labels;
use canopy_core::msr::load_raster;
use canopy_core::Error;
use clap::Args;
use serde_json::json;

use crate::errors::CliResult;
use crate::provenance;

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("reference").required(true).multiple(false))]
pub struct EvaluateArgs {
    /// Predicted classification raster.
    #[arg(long)]
    pub predicted: PathBuf,

    /// Reference classification raster to compare against.
    #[arg(long, group = "reference")]
    pub truth: Option<PathBuf>,

    /// Reference point labels CSV to compare against.
    #[arg(long, group = "reference")]
    pub labels: Option<PathBuf>,

    /// Score predicted masked pixels as non-tree instead of skipping them.
    #[arg(long)]
    pub masked_as_nontree: bool,

    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn write_report_json(
    report: &EvalReport,
    path: &PathBuf,
    command: &str,
    params: serde_json::Value,
) -> CliResult<()> {
    let mut value = serde_json::to_value(report).map_err(Error::from)?;
    let obj = value.as_object_mut().expect("report serializes to an object");
    obj.insert("provenance".into(), provenance::record(command, params));
    std::fs::write(path, serde_json::to_string_pretty(&value).map_err(Error::from)?)
        .map_err(Error::from)?;
    Ok(())
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let predicted = ClassMap::from_raster(&load_raster(&args.predicted)?)?;

    let report = match (&args.truth, &args.labels) {
        (Some(truth), None) => {
            let reference = ClassMap::from_raster(&load_raster(truth)?)?;
            evaluate_maps(&reference, &predicted, args.masked_as_nontree)?
        }
        (None, Some(labels)) => {
            evaluate_labels(&predicted, &load_labels(labels)?, args.masked_as_nontree)?
        }
        _ => unreachable!("clap enforces exactly one reference"),
    };

    print!("{}", report.text_table());
    if let Some(out) = &args.out {
        let params = json!({
            "predicted": args.predicted.display().to_string(),
            "truth": args.truth.as_ref().map(|p| p.display().to_string()),
            "labels": args.labels.as_ref().map(|p| p.display().to_string()),
            "masked_as_nontree": args.masked_as_nontree,
        });
        write_report_json(&report, out, "evaluate", params)?;
        println!("wrote report to {}", out.display());
    }
    Ok(())
}
