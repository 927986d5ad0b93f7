//! Accuracy assessment and area summaries for classification maps.
//!
//! The confusion matrix follows the usual remote-sensing convention: rows
//! are the reference (truth) class, columns the predicted class. Cohen's
//! kappa corrects raw agreement for the agreement two independent raters
//! with the same marginals would reach by chance.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classmap::{Class, ClassMap};
use crate::labels::LabelSet;
use crate::{Error, Result};

/// Exact conversion factor: one square metre in international acres.
pub const ACRES_PER_M2: f64 = 0.000_247_105;

/// RGB used for tree pixels in rendered maps.
pub const COLOR_TREE: [u8; 3] = [0, 160, 0];
/// RGB used for non-tree pixels.
pub const COLOR_NONTREE: [u8; 3] = [255, 255, 255];
/// RGB used for masked / unclassified pixels.
pub const COLOR_MASKED: [u8; 3] = [128, 128, 128];

/// 2x2 confusion matrix indexed `[reference][predicted]` with
/// non-tree = 0, tree = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        ConfusionMatrix::default()
    }

    pub fn add(&mut self, reference: u8, predicted: u8) -> Result<()> {
        if reference > 1 || predicted > 1 {
            return Err(Error::validation(format!(
                "confusion matrix labels must be 0 or 1, got ({reference}, {predicted})"
            )));
        }
        self.counts[reference as usize][predicted as usize] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sums(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[0][1],
            self.counts[1][0] + self.counts[1][1],
        ]
    }

    fn col_sums(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[1][0],
            self.counts[0][1] + self.counts[1][1],
        ]
    }

    /// Overall accuracy and Cohen's kappa.
    ///
    /// Kappa is `(p_o - p_e) / (1 - p_e)` where `p_o` is observed agreement
    /// and `p_e = sum_i row_i * col_i / total^2` is chance agreement. When
    /// `p_e == 1` (both raters constant, same class) kappa is undefined and
    /// comes back as `None`. An empty matrix is an error.
    pub fn accuracy_and_kappa(&self) -> Result<(f64, Option<f64>)> {
        let total = self.total();
        if total == 0 {
            return Err(Error::validation(
                "cannot evaluate an empty confusion matrix",
            ));
        }
        let t = total as f64;
        let p_o = (self.counts[0][0] + self.counts[1][1]) as f64 / t;
        let rows = self.row_sums();
        let cols = self.col_sums();
        let p_e = (rows[0] as f64 * cols[0] as f64 + rows[1] as f64 * cols[1] as f64) / (t * t);
        let kappa = if p_e == 1.0 {
            None
        } else {
            Some((p_o - p_e) / (1.0 - p_e))
        };
        Ok((p_o, kappa))
    }
}

/// Accuracy report produced by comparing predictions against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub kappa: Option<f64>,
    /// Pixels that entered the confusion matrix.
    pub n_evaluated: u64,
    /// Pixels skipped because either side was masked.
    pub n_skipped: u64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix, n_skipped: u64) -> Result<EvalReport> {
        let (accuracy, kappa) = confusion.accuracy_and_kappa()?;
        Ok(EvalReport {
            confusion,
            accuracy,
            kappa,
            n_evaluated: confusion.total(),
            n_skipped,
        })
    }

    /// Plain-text table for console output and report files.
    pub fn text_table(&self) -> String {
        let c = &self.confusion.counts;
        let kappa = match self.kappa {
            Some(k) => format!("{k:.4}"),
            None => "undefined (no chance disagreement)".to_string(),
        };
        format!(
            "Accuracy assessment\n\
             -------------------\n\
             confusion matrix (rows = reference, cols = predicted)\n\
             {:>18} {:>10} {:>10}\n\
             {:>18} {:>10} {:>10}\n\
             {:>18} {:>10} {:>10}\n\
             pixels evaluated: {}\n\
             pixels skipped (masked): {}\n\
             overall accuracy: {:.4}\n\
             kappa: {}\n",
            "", "non-tree", "tree",
            "ref non-tree", c[0][0], c[0][1],
            "ref tree", c[1][0], c[1][1],
            self.n_evaluated, self.n_skipped, self.accuracy, kappa,
        )
    }
}

fn class_label(class: Class) -> Option<u8> {
    match class {
        Class::NonTree => Some(0),
        Class::Tree => Some(1),
        Class::Masked => None,
    }
}

/// Compare a predicted map against a reference map of the same shape.
///
/// Pixels masked in either map are skipped and counted in the report's
/// `n_skipped`. Set `masked_as_nontree` to instead score the *predicted*
/// map's masked pixels as non-tree (reference-masked pixels are still
/// skipped): this evaluates the final product, where excluded pixels end up
/// in the non-tree area total.
pub fn evaluate_maps(
    reference: &ClassMap,
    predicted: &ClassMap,
    masked_as_nontree: bool,
) -> Result<EvalReport> {
    if reference.width != predicted.width || reference.height != predicted.height {
        return Err(Error::validation(format!(
            "reference map is {}x{} but predicted map is {}x{}",
            reference.width, reference.height, predicted.width, predicted.height
        )));
    }
    let mut confusion = ConfusionMatrix::new();
    let mut skipped = 0u64;
    for (r, p) in reference.classes.iter().zip(&predicted.classes) {
        let Some(r) = class_label(*r) else {
            skipped += 1;
            continue;
        };
        let p = match (class_label(*p), masked_as_nontree) {
            (Some(p), _) => p,
            (None, true) => 0,
            (None, false) => {
                skipped += 1;
                continue;
            }
        };
        confusion.add(r, p)?;
    }
    EvalReport::from_confusion(confusion, skipped)
}

/// Score a predicted map against point labels.
///
/// Labels landing on masked pixels are skipped (or scored as non-tree when
/// `masked_as_nontree` is set). Out-of-bounds labels are an error.
pub fn evaluate_labels(
    predicted: &ClassMap,
    labels: &LabelSet,
    masked_as_nontree: bool,
) -> Result<EvalReport> {
    let mut confusion = ConfusionMatrix::new();
    let mut skipped = 0u64;
    for (i, l) in labels.entries.iter().enumerate() {
        let (row, col) = (l.row as usize, l.col as usize);
        if row >= predicted.height || col >= predicted.width {
            return Err(Error::validation(format!(
                "label {i} at ({}, {}) is outside the {}x{} map",
                l.row, l.col, predicted.width, predicted.height
            )));
        }
        let p = match (class_label(predicted.get(row, col)), masked_as_nontree) {
            (Some(p), _) => p,
            (None, true) => 0,
            (None, false) => {
                skipped += 1;
                continue;
            }
        };
        confusion.add(l.label, p)?;
    }
    EvalReport::from_confusion(confusion, skipped)
}

/// Canopy area summary for a classification map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub tree_pixels: u64,
    pub nontree_pixels: u64,
    pub masked_pixels: u64,
    pub pixel_size_m: f64,
    pub pixel_area_m2: f64,
    pub tree_area_m2: f64,
    pub tree_area_acres: f64,
    /// Tree fraction of the classified (non-masked) pixels.
    pub tree_fraction: f64,
}

/// Count classes and convert the tree pixel count to area.
///
/// One pixel covers `pixel_size_m^2` square metres; acres use the exact
/// conversion `1 m^2 = 0.000247105 acres`.
pub fn area_estimate(map: &ClassMap) -> AreaReport {
    let tree = map.count(Class::Tree) as u64;
    let nontree = map.count(Class::NonTree) as u64;
    let masked = map.count(Class::Masked) as u64;
    let pixel_area_m2 = map.pixel_size_m * map.pixel_size_m;
    let tree_area_m2 = tree as f64 * pixel_area_m2;
    let classified = tree + nontree;
    AreaReport {
        tree_pixels: tree,
        nontree_pixels: nontree,
        masked_pixels: masked,
        pixel_size_m: map.pixel_size_m,
        pixel_area_m2,
        tree_area_m2,
        tree_area_acres: tree_area_m2 * ACRES_PER_M2,
        tree_fraction: if classified > 0 {
            tree as f64 / classified as f64
        } else {
            0.0
        },
    }
}

impl AreaReport {
    /// Plain-text summary for console output and report files.
    pub fn text_summary(&self) -> String {
        format!(
            "Canopy area\n\
             -----------\n\
             tree pixels: {}\n\
             non-tree pixels: {}\n\
             masked pixels: {}\n\
             pixel size: {} m ({} m^2/pixel)\n\
             tree canopy area: {:.2} m^2 = {:.4} acres\n\
             tree fraction of classified area: {:.4}\n",
            self.tree_pixels,
            self.nontree_pixels,
            self.masked_pixels,
            self.pixel_size_m,
            self.pixel_area_m2,
            self.tree_area_m2,
            self.tree_area_acres,
            self.tree_fraction,
        )
    }
}

/// Binary PPM (P6) bytes for a class map: tree green, non-tree white,
/// masked grey. `comment` becomes a `#` header line and must not contain
/// a newline.
pub fn ppm_bytes(map: &ClassMap, comment: Option<&str>) -> Result<Vec<u8>> {
    if let Some(c) = comment {
        if c.contains('\n') {
            return Err(Error::validation("PPM comment must be a single line"));
        }
    }
    let mut out = Vec::with_capacity(32 + map.classes.len() * 3);
    out.extend_from_slice(b"P6\n");
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", map.width, map.height).as_bytes());
    for class in &map.classes {
        let rgb = match class {
            Class::Tree => COLOR_TREE,
            Class::NonTree => COLOR_NONTREE,
            Class::Masked => COLOR_MASKED,
        };
        out.extend_from_slice(&rgb);
    }
    Ok(out)
}

/// Render a class map to a PPM file. See [`ppm_bytes`].
pub fn write_ppm(map: &ClassMap, path: &Path, comment: Option<&str>) -> Result<()> {
    let bytes = ppm_bytes(map, comment)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    Ok(())
}
