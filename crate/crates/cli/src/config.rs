//! Configuration for the `run` pipeline command.
//!
//! Values resolve in precedence order: command-line flags beat the config
//! file, which beats the built-in defaults. The fully resolved config is
//! written into the output directory so a run can be reproduced from it.

use std::path::Path;

use canopy_core::builtmask::{CombineMode, DEFAULT_NDBI_THRESHOLD, DEFAULT_VEG_THRESHOLD};
use canopy_core::{Error, Result};
use serde::{Deserialize, Serialize};

fn d_labels_per_class() -> usize {
    200
}
fn d_label_seed() -> u64 {
    1
}
fn d_train_fraction() -> f64 {
    0.8
}
fn d_true() -> bool {
    true
}
fn d_n_trees() -> usize {
    100
}
fn d_features() -> String {
    "all".into()
}
fn d_veg_threshold() -> f32 {
    DEFAULT_VEG_THRESHOLD
}
fn d_ndbi_threshold() -> f32 {
    DEFAULT_NDBI_THRESHOLD
}
fn d_max_cloud_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Labeled pixels sampled per class from the ground truth.
    #[serde(default = "d_labels_per_class")]
    pub labels_per_class: usize,
    #[serde(default = "d_label_seed")]
    pub label_seed: u64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "d_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "d_true")]
    pub stratified: bool,
    #[serde(default = "d_n_trees")]
    pub n_trees: usize,
    #[serde(default)]
    pub mtry: Option<usize>,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub train_seed: u64,
    /// Feature-set expression, e.g. "all", "bands" or "bands+NDVI+NDBI".
    #[serde(default = "d_features")]
    pub features: String,
    /// Exclude built-up/low-vegetation pixels before classification.
    #[serde(default = "d_true")]
    pub use_mask: bool,
    #[serde(default = "d_veg_threshold")]
    pub veg_threshold: f32,
    #[serde(default = "d_ndbi_threshold")]
    pub ndbi_threshold: f32,
    #[serde(default)]
    pub combine: CombineMode,
    /// Observations with a higher cloud fraction are dropped before
    /// compositing.
    #[serde(default = "d_max_cloud_fraction")]
    pub max_cloud_fraction: f64,
    /// Score masked pixels as non-tree when evaluating against truth.
    #[serde(default)]
    pub masked_as_nontree: bool,
    /// Use the standard soil factor (1.5) in SAVI instead of 0.5.
    #[serde(default)]
    pub savi_standard: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config must deserialize")
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_cloud_fraction.is_finite() && (0.0..=1.0).contains(&self.max_cloud_fraction))
        {
            return Err(Error::validation("max_cloud_fraction must be in [0, 1]"));
        }
        crate::features::parse_feature_set(&self.features)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documentation() {
        let c = RunConfig::default();
        assert_eq!(c.labels_per_class, 200);
        assert_eq!(c.label_seed, 1);
        assert_eq!(c.train_fraction, 0.8);
        assert!(c.stratified);
        assert_eq!(c.n_trees, 100);
        assert_eq!(c.mtry, None);
        assert_eq!(c.features, "all");
        assert!(c.use_mask);
        assert_eq!(c.veg_threshold, 0.2);
        assert_eq!(c.ndbi_threshold, 0.0);
        assert_eq!(c.combine, CombineMode::And);
        assert_eq!(c.max_cloud_fraction, 0.1);
        assert!(!c.masked_as_nontree);
        assert!(!c.savi_standard);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"n_tree": 5}"#);
        assert!(r.is_err());
    }

    #[test]
    fn validate_catches_bad_values() {
        let mut c = RunConfig::default();
        c.max_cloud_fraction = 1.5;
        assert!(c.validate().is_err());
        c = RunConfig::default();
        c.features = "B99".into();
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
