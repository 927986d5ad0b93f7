//! Tree-cover estimation from multispectral imagery.
//!
//! The crate is organised as a small pipeline of pure building blocks:
//!
//! * [`raster`] — planar f32 multi-band rasters, cloud masking, median
//!   compositing, band stacking, ROI clipping;
//! * [`msr`] — the MSR container format (bit-exact file IO);
//! * [`spectra`] — NDVI, EVI, LAI, SAVI, NDWI and NDBI, plus the canonical
//!   14-band feature stack;
//! * [`builtmask`] — threshold mask that excludes built-up, low-vegetation
//!   pixels before classification;
//! * [`rforest`] — a deterministic, seedable random-forest classifier;
//! * [`evalmetrics`] — confusion matrix, accuracy, Cohen's kappa, area
//!   estimates and class-map rendering;
//! * [`scenegen`] — synthetic scene generator used for testing the pipeline
//!   end to end against known ground truth.
//!
//! Every operation is deterministic: identical inputs (and seeds) produce
//! bit-identical outputs, regardless of thread count.

pub mod builtmask;
pub mod classmap;
mod error;
pub mod evalmetrics;
pub mod labels;
pub mod msr;
pub mod raster;
pub mod rforest;
pub mod scenegen;
pub mod spectra;

pub use error::{Error, Result};
