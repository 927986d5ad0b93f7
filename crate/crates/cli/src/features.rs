//! Feature-set expressions for `train`, `run` and `ablate`.
//!
//! An expression is `+`-separated tokens, case-insensitive:
//! `bands` (the eight spectral bands), `indices` (the six derived bands),
//! `all` (both), or individual names like `B8` or `NDVI`. Duplicates
//! collapse, and the result always comes back in canonical stack order, so
//! `NDVI+bands` and `bands+NDVI` name the same feature set.

use canopy_core::raster::CANONICAL_BANDS;
use canopy_core::spectra::{feature_stack_names, INDEX_BANDS};
use canopy_core::{Error, Result};

pub fn parse_feature_set(expr: &str) -> Result<Vec<&'static str>> {
    let stack = feature_stack_names();
    let mut selected = vec![false; stack.len()];
    for raw in expr.split('+') {
        let token = raw.trim();
        if token.is_empty() {
            return Err(Error::validation(format!(
                "empty token in feature expression {expr:?}"
            )));
        }
        let token_upper = token.to_ascii_uppercase();
        match token_upper.as_str() {
            "ALL" => selected.iter_mut().for_each(|s| *s = true),
            "BANDS" => selected[..CANONICAL_BANDS.len()]
                .iter_mut()
                .for_each(|s| *s = true),
            "INDICES" => selected[CANONICAL_BANDS.len()..]
                .iter_mut()
                .for_each(|s| *s = true),
            _ => {
                let idx = stack
                    .iter()
                    .position(|n| n.eq_ignore_ascii_case(token))
                    .ok_or_else(|| {
                        Error::validation(format!(
                            "unknown feature {token:?}; expected all, bands, indices, \
                             a band (B2..B12) or an index ({})",
                            INDEX_BANDS.join(", ")
                        ))
                    })?;
                selected[idx] = true;
            }
        }
    }
    let names: Vec<&'static str> = stack
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| s)
        .map(|(&n, _)| n)
        .collect();
    if names.is_empty() {
        return Err(Error::validation("feature expression selects nothing"));
    }
    Ok(names)
}
