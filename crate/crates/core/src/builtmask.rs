//! Built-up / low-vegetation exclusion mask.
//!
//! A pixel counts as low vegetation when both EVI and NDVI are at or below
//! the vegetation threshold, and as built-up when NDBI is strictly above the
//! NDBI threshold. The default combine mode `And` excludes pixels that are
//! both; `Or` excludes pixels that are either. Pixels with nodata in any of
//! the three index bands are excluded. Defaults: vegetation threshold 0.2,
//! NDBI threshold 0.0.

use crate::msr::{save_raster_with_extras, Extras};
use crate::raster::{BandInfo, Raster};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_VEG_THRESHOLD: f32 = 0.2;
pub const DEFAULT_NDBI_THRESHOLD: f32 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    #[default]
    And,
    Or,
}

impl std::str::FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "and" => Ok(CombineMode::And),
            "or" => Ok(CombineMode::Or),
            _ => Err(Error::validation(format!("combine mode must be \"and\" or \"or\", got {s:?}"))),
        }
    }
}

/// The thresholds a mask was built with; serialized alongside the mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskProvenance {
    pub veg_threshold: f32,
    pub ndbi_threshold: f32,
    pub combine_mode: CombineMode,
}

impl Default for MaskProvenance {
    fn default() -> Self {
        MaskProvenance {
            veg_threshold: DEFAULT_VEG_THRESHOLD,
            ndbi_threshold: DEFAULT_NDBI_THRESHOLD,
            combine_mode: CombineMode::And,
        }
    }
}

/// Per-pixel exclusion flags. `true` means excluded from classification.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskLayer {
    pub width: usize,
    pub height: usize,
    pub excluded: Vec<bool>,
    pub provenance: MaskProvenance,
}

impl MaskLayer {
    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    pub fn is_excluded(&self, row: usize, col: usize) -> bool {
        self.excluded[row * self.width + col]
    }
}

/// Decide exclusion for one pixel from its EVI, NDVI and NDBI values.
fn excluded_pixel(
    evi: f32,
    ndvi: f32,
    ndbi: f32,
    veg_threshold: f32,
    ndbi_threshold: f32,
    mode: CombineMode,
) -> bool {
    let low_vegetation = evi <= veg_threshold && ndvi <= veg_threshold;
    let built_up = ndbi > ndbi_threshold;
    match mode {
        CombineMode::And => low_vegetation && built_up,
        CombineMode::Or => low_vegetation || built_up,
    }
}

/// Build the exclusion mask from a raster containing EVI, NDVI and NDBI bands.
pub fn build_mask(
    features: &Raster,
    veg_threshold: f32,
    ndbi_threshold: f32,
    mode: CombineMode,
) -> Result<MaskLayer> {
    if !veg_threshold.is_finite() || !ndbi_threshold.is_finite() {
        return Err(Error::validation("mask thresholds must be finite"));
    }
    let evi = features.band(features.band_index_or_err("EVI")?);
    let ndvi = features.band(features.band_index_or_err("NDVI")?);
    let ndbi = features.band(features.band_index_or_err("NDBI")?);

    let excluded = (0..features.pixel_count())
        .map(|i| {
            if features.is_nodata(evi[i]) || features.is_nodata(ndvi[i]) || features.is_nodata(ndbi[i]) {
                true
            } else {
                excluded_pixel(evi[i], ndvi[i], ndbi[i], veg_threshold, ndbi_threshold, mode)
            }
        })
        .collect();

    Ok(MaskLayer {
        width: features.width(),
        height: features.height(),
        excluded,
        provenance: MaskProvenance { veg_threshold, ndbi_threshold, combine_mode: mode },
    })
}

pub fn build_mask_default(features: &Raster) -> Result<MaskLayer> {
    build_mask(features, DEFAULT_VEG_THRESHOLD, DEFAULT_NDBI_THRESHOLD, CombineMode::And)
}

/// Set every band of excluded pixels to nodata.
pub fn apply_mask(r: &Raster, mask: &MaskLayer) -> Result<Raster> {
    if mask.width != r.width() || mask.height != r.height() {
        return Err(Error::validation(format!(
            "mask is {}x{} but raster is {}x{}",
            mask.width,
            mask.height,
            r.width(),
            r.height()
        )));
    }
    let mut out = r.clone();
    let nodata = r.nodata();
    for b in 0..r.bands().len() {
        let band = out.band_mut(b);
        for (i, &e) in mask.excluded.iter().enumerate() {
            if e {
                band[i] = nodata;
            }
        }
    }
    Ok(out)
}

/// Mask as a single-band raster (1.0 excluded, 0.0 retained), geometry from
/// the template when given.
pub fn mask_to_raster(mask: &MaskLayer, template: Option<&Raster>) -> Result<Raster> {
    let data: Vec<f32> = mask.excluded.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
    let bands = vec![BandInfo::new("MASK", "exclusion mask, 1 = excluded")];
    match template {
        Some(t) => Raster::new(
            mask.width,
            mask.height,
            bands,
            data,
            t.nodata(),
            t.pixel_size_m(),
            t.origin(),
        ),
        None => Raster::new(
            mask.width,
            mask.height,
            bands,
            data,
            crate::raster::DEFAULT_NODATA,
            crate::raster::DEFAULT_PIXEL_SIZE_M,
            (0.0, 0.0),
        ),
    }
}

/// Serialize: MSR container with one MASK band plus a `mask_provenance`
/// header key. `extras` may carry additional header keys.
pub fn save_mask(
    mask: &MaskLayer,
    path: impl AsRef<Path>,
    template: Option<&Raster>,
    extras: &Extras,
) -> Result<()> {
    let raster = mask_to_raster(mask, template)?;
    let mut all = extras.clone();
    all.insert("mask_provenance".into(), serde_json::to_value(&mask.provenance)?);
    save_raster_with_extras(&raster, path, &all)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<MaskLayer> {
    let (raster, extras) = crate::msr::load_raster_with_extras(path)?;
    let idx = raster.band_index_or_err("MASK")?;
    let provenance: MaskProvenance = match extras.get("mask_provenance") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::format(format!("bad mask_provenance: {e}")))?,
        None => return Err(Error::format("mask file is missing the mask_provenance header key")),
    };
    let excluded = raster.band(idx).iter().map(|&v| raster.is_nodata(v) || v > 0.5).collect();
    Ok(MaskLayer { width: raster.width(), height: raster.height(), excluded, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::DEFAULT_NODATA;

    const NOD: f32 = DEFAULT_NODATA;

    /// Raster with EVI/NDVI/NDBI bands, one pixel per triple.
    fn index_raster(pixels: &[[f32; 3]]) -> Raster {
        let mut data = Vec::new();
        for b in 0..3 {
            for p in pixels {
                data.push(p[b]);
            }
        }
        Raster::new(
            pixels.len(),
            1,
            vec![BandInfo::new("EVI", ""), BandInfo::new("NDVI", ""), BandInfo::new("NDBI", "")],
            data,
            NOD,
            10.0,
            (0.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn default_mode_excludes_low_veg_built_up_pixels() {
        let r = index_raster(&[
            [0.6, 0.7, -0.3],  // vegetated: retained
            [0.15, 0.1, 0.2],  // low veg and built-up: excluded
            [0.2, 0.2, 0.0],   // boundary: low veg but NDBI not > 0: retained
            [0.5, 0.1, 0.3],   // EVI above threshold: not low veg: retained
            [0.1, 0.1, -0.1],  // low veg but not built-up: retained
        ]);
        let m = build_mask_default(&r).unwrap();
        assert_eq!(m.excluded, vec![false, true, false, false, false]);
        assert_eq!(m.excluded_count(), 1);
    }

    #[test]
    fn boundary_semantics_are_exact() {
        // Exactly at the vegetation threshold counts as low vegetation;
        // exactly at the NDBI threshold does not count as built-up.
        let r = index_raster(&[
            [0.2, 0.2, 1e-6],
            [0.2, 0.2, 0.0],
            [0.20000002, 0.2, 1.0],
        ]);
        let m = build_mask_default(&r).unwrap();
        assert_eq!(m.excluded, vec![true, false, false]);
    }

    #[test]
    fn or_mode_excludes_either_condition() {
        let r = index_raster(&[
            [0.1, 0.1, -0.5], // low veg only
            [0.9, 0.9, 0.5],  // built-up only
            [0.9, 0.9, -0.5], // neither
        ]);
        let m = build_mask(&r, 0.2, 0.0, CombineMode::Or).unwrap();
        assert_eq!(m.excluded, vec![true, true, false]);
    }

    #[test]
    fn nodata_in_any_index_excludes() {
        let r = index_raster(&[[NOD, 0.9, -0.5], [0.9, NOD, -0.5], [0.9, 0.9, NOD]]);
        let m = build_mask_default(&r).unwrap();
        assert_eq!(m.excluded, vec![true, true, true]);
    }

    #[test]
    fn missing_band_is_a_validation_error() {
        let r = Raster::filled(1, 1, vec![BandInfo::new("EVI", ""), BandInfo::new("NDVI", "")], 0.0)
            .unwrap();
        assert!(matches!(build_mask_default(&r), Err(Error::Validation(_))));
    }

    #[test]
    fn apply_mask_blanks_excluded_pixels_only() {
        let r = Raster::new(
            2,
            1,
            vec![BandInfo::new("A", ""), BandInfo::new("B", "")],
            vec![1.0, 2.0, 3.0, 4.0],
            NOD,
            10.0,
            (0.0, 0.0),
        )
        .unwrap();
        let m = MaskLayer {
            width: 2,
            height: 1,
            excluded: vec![true, false],
            provenance: MaskProvenance::default(),
        };
        let out = apply_mask(&r, &m).unwrap();
        assert_eq!(out.band(0), &[NOD, 2.0]);
        assert_eq!(out.band(1), &[NOD, 4.0]);

        // Idempotent.
        assert_eq!(apply_mask(&out, &m).unwrap(), out);

        // All-clear mask is the identity.
        let clear = MaskLayer {
            width: 2,
            height: 1,
            excluded: vec![false, false],
            provenance: MaskProvenance::default(),
        };
        assert_eq!(apply_mask(&r, &clear).unwrap(), r);

        // Dimension mismatch.
        let wrong = MaskLayer {
            width: 1,
            height: 1,
            excluded: vec![false],
            provenance: MaskProvenance::default(),
        };
        assert!(apply_mask(&r, &wrong).is_err());
    }

    #[test]
    fn mask_round_trips_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.msr");
        let m = MaskLayer {
            width: 3,
            height: 1,
            excluded: vec![true, false, true],
            provenance: MaskProvenance {
                veg_threshold: 0.25,
                ndbi_threshold: 0.05,
                combine_mode: CombineMode::Or,
            },
        };
        save_mask(&m, &path, None, &Extras::new()).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn mask_file_without_provenance_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.msr");
        let m = MaskLayer {
            width: 1,
            height: 1,
            excluded: vec![true],
            provenance: MaskProvenance::default(),
        };
        let raster = mask_to_raster(&m, None).unwrap();
        crate::msr::save_raster(&raster, &path).unwrap();
        assert!(matches!(load_mask(&path), Err(Error::Format(_))));
    }
}
