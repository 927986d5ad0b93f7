//! Planar multi-band f32 rasters.
//!
//! A [`Raster`] stores `bands * height * width` samples band-planar and
//! row-major, with a nodata sentinel (default `-9999.0`), a pixel size in
//! metres and an origin in an arbitrary local frame. There is no projection
//! handling; co-registration is the caller's responsibility.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default nodata sentinel.
pub const DEFAULT_NODATA: f32 = -9999.0;

/// Default pixel edge length in metres.
pub const DEFAULT_PIXEL_SIZE_M: f64 = 10.0;

/// Canonical reflectance band names, in stack order.
pub const CANONICAL_BANDS: [&str; 8] = ["B2", "B3", "B4", "B7", "B8", "B8A", "B11", "B12"];

/// Human-readable descriptions for the canonical bands.
pub fn canonical_band_description(name: &str) -> &'static str {
    match name {
        "B2" => "Blue",
        "B3" => "Green",
        "B4" => "Red",
        "B7" => "Red Edge 3",
        "B8" => "NIR",
        "B8A" => "Red Edge 4",
        "B11" => "SWIR 1",
        "B12" => "SWIR 2",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandInfo {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

impl BandInfo {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        BandInfo { name: name.into(), description: description.into() }
    }

    /// A canonical band with its stock description.
    pub fn canonical(name: &str) -> Self {
        BandInfo::new(name, canonical_band_description(name))
    }
}

#[derive(Debug, Clone)]
pub struct Raster {
    width: usize,
    height: usize,
    bands: Vec<BandInfo>,
    /// Band-planar, row-major: `data[band * width * height + row * width + col]`.
    data: Vec<f32>,
    nodata: f32,
    pixel_size_m: f64,
    origin: (f64, f64),
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        bands: Vec<BandInfo>,
        data: Vec<f32>,
        nodata: f32,
        pixel_size_m: f64,
        origin: (f64, f64),
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("raster dimensions must be at least 1x1"));
        }
        if bands.is_empty() {
            return Err(Error::validation("raster must have at least one band"));
        }
        for (i, a) in bands.iter().enumerate() {
            if a.name.is_empty() {
                return Err(Error::validation("band names must be non-empty"));
            }
            if bands[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::validation(format!("duplicate band name {:?}", a.name)));
            }
        }
        if !(pixel_size_m.is_finite() && pixel_size_m > 0.0) {
            return Err(Error::validation("pixel_size_m must be finite and positive"));
        }
        let expected = bands.len() * width * height;
        if data.len() != expected {
            return Err(Error::validation(format!(
                "data length {} does not match {} bands x {}x{}",
                data.len(),
                bands.len(),
                width,
                height
            )));
        }
        Ok(Raster { width, height, bands, data, nodata, pixel_size_m, origin })
    }

    /// A raster filled with a constant value, default geometry.
    pub fn filled(width: usize, height: usize, bands: Vec<BandInfo>, value: f32) -> Result<Self> {
        let n = bands.len() * width * height;
        Raster::new(
            width,
            height,
            bands,
            vec![value; n],
            DEFAULT_NODATA,
            DEFAULT_PIXEL_SIZE_M,
            (0.0, 0.0),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn bands(&self) -> &[BandInfo] {
        &self.bands
    }

    pub fn band_names(&self) -> Vec<&str> {
        self.bands.iter().map(|b| b.name.as_str()).collect()
    }

    pub fn nodata(&self) -> f32 {
        self.nodata
    }

    pub fn pixel_size_m(&self) -> f64 {
        self.pixel_size_m
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn band_index(&self, name: &str) -> Option<usize> {
        self.bands.iter().position(|b| b.name == name)
    }

    pub fn band_index_or_err(&self, name: &str) -> Result<usize> {
        self.band_index(name)
            .ok_or_else(|| Error::validation(format!("raster has no band named {name:?}")))
    }

    /// Plane of one band.
    pub fn band(&self, idx: usize) -> &[f32] {
        let plane = self.width * self.height;
        &self.data[idx * plane..(idx + 1) * plane]
    }

    pub fn band_mut(&mut self, idx: usize) -> &mut [f32] {
        let plane = self.width * self.height;
        &mut self.data[idx * plane..(idx + 1) * plane]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, band: usize, row: usize, col: usize) -> f32 {
        self.data[band * self.width * self.height + row * self.width + col]
    }

    pub fn set(&mut self, band: usize, row: usize, col: usize, value: f32) {
        self.data[band * self.width * self.height + row * self.width + col] = value;
    }

    /// Nodata test: the sentinel and non-finite values both count.
    pub fn is_nodata(&self, v: f32) -> bool {
        v == self.nodata || !v.is_finite()
    }

    /// New raster with the same geometry and nodata but different bands/data.
    pub fn like(&self, bands: Vec<BandInfo>, data: Vec<f32>) -> Result<Self> {
        Raster::new(self.width, self.height, bands, data, self.nodata, self.pixel_size_m, self.origin)
    }

    /// New raster holding copies of the named bands, in the given order.
    pub fn select_bands(&self, names: &[&str]) -> Result<Self> {
        let mut bands = Vec::with_capacity(names.len());
        let mut data = Vec::with_capacity(names.len() * self.pixel_count());
        for name in names {
            let idx = self.band_index_or_err(name)?;
            bands.push(self.bands[idx].clone());
            data.extend_from_slice(self.band(idx));
        }
        self.like(bands, data)
    }
}

/// Bit-exact equality: data and nodata compare by f32 bits, geometry by f64 bits.
impl PartialEq for Raster {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bands == other.bands
            && self.nodata.to_bits() == other.nodata.to_bits()
            && self.pixel_size_m.to_bits() == other.pixel_size_m.to_bits()
            && self.origin.0.to_bits() == other.origin.0.to_bits()
            && self.origin.1.to_bits() == other.origin.1.to_bits()
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for Raster {}

/// Per-pixel cloud flags for one observation. `true` means cloudy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloudMask {
    pub width: usize,
    pub height: usize,
    pub flags: Vec<bool>,
}

impl CloudMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("cloud mask dimensions must be at least 1x1"));
        }
        if flags.len() != width * height {
            return Err(Error::validation("cloud mask flag count does not match dimensions"));
        }
        Ok(CloudMask { width, height, flags })
    }

    pub fn clear(width: usize, height: usize) -> Result<Self> {
        CloudMask::new(width, height, vec![false; width * height])
    }

    /// Fraction of flagged pixels, in [0, 1].
    pub fn cloud_fraction(&self) -> f64 {
        let cloudy = self.flags.iter().filter(|&&f| f).count();
        cloudy as f64 / self.flags.len() as f64
    }

    /// Single-band raster encoding: 1.0 cloudy, 0.0 clear.
    pub fn to_raster(&self, template: Option<&Raster>) -> Result<Raster> {
        let (nodata, pixel_size_m, origin) = match template {
            Some(t) => (t.nodata(), t.pixel_size_m(), t.origin()),
            None => (DEFAULT_NODATA, DEFAULT_PIXEL_SIZE_M, (0.0, 0.0)),
        };
        let data = self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
        Raster::new(
            self.width,
            self.height,
            vec![BandInfo::new("CLOUD", "cloud flag, 1 = cloudy")],
            data,
            nodata,
            pixel_size_m,
            origin,
        )
    }

    /// Decode from a raster with a CLOUD band. Values above 0.5 and nodata
    /// both read as cloudy.
    pub fn from_raster(r: &Raster) -> Result<Self> {
        let idx = r.band_index_or_err("CLOUD")?;
        let flags = r.band(idx).iter().map(|&v| r.is_nodata(v) || v > 0.5).collect();
        CloudMask::new(r.width(), r.height(), flags)
    }
}

/// Set every band of flagged pixels to nodata.
pub fn apply_cloud_mask(r: &Raster, mask: &CloudMask) -> Result<Raster> {
    if mask.width != r.width() || mask.height != r.height() {
        return Err(Error::validation(format!(
            "cloud mask is {}x{} but raster is {}x{}",
            mask.width,
            mask.height,
            r.width(),
            r.height()
        )));
    }
    let mut out = r.clone();
    let plane = r.pixel_count();
    let nodata = r.nodata();
    for b in 0..r.bands().len() {
        let band = out.band_mut(b);
        for i in 0..plane {
            if mask.flags[i] {
                band[i] = nodata;
            }
        }
    }
    Ok(out)
}

/// Per-pixel, per-band median across a series of co-registered rasters.
///
/// Nodata samples are dropped before the median; a pixel with no valid sample
/// in any raster stays nodata. An even number of valid samples takes the mean
/// of the two middle values. The result does not depend on the order of the
/// input series.
pub fn median_composite(series: &[Raster]) -> Result<Raster> {
    let first = series
        .first()
        .ok_or_else(|| Error::validation("median_composite needs at least one raster"))?;
    for r in &series[1..] {
        if r.width() != first.width() || r.height() != first.height() {
            return Err(Error::validation("median_composite inputs must share dimensions"));
        }
        if r.bands() != first.bands() {
            return Err(Error::validation("median_composite inputs must share the band list"));
        }
        if r.nodata().to_bits() != first.nodata().to_bits() {
            return Err(Error::validation("median_composite inputs must share the nodata value"));
        }
        if r.pixel_size_m() != first.pixel_size_m() {
            return Err(Error::validation("median_composite inputs must share the pixel size"));
        }
    }

    let plane = first.pixel_count();
    let nodata = first.nodata();
    let mut out = first.clone();
    let mut valid: Vec<f32> = Vec::with_capacity(series.len());
    for b in 0..first.bands().len() {
        for i in 0..plane {
            valid.clear();
            for r in series {
                let v = r.band(b)[i];
                if !r.is_nodata(v) {
                    valid.push(v);
                }
            }
            out.band_mut(b)[i] = median_of(&mut valid).unwrap_or(nodata);
        }
    }
    Ok(out)
}

/// Exact-sort median; even counts take the mean of the two middle values.
fn median_of(values: &mut [f32]) -> Option<f32> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f32::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        Some(values[n / 2])
    } else {
        Some((values[n / 2 - 1] + values[n / 2]) / 2.0)
    }
}

/// Concatenate the bands of several co-registered rasters into one.
///
/// Band names must be disjoint; nodata and pixel size must match. The origin
/// is taken from the first raster.
pub fn stack_bands(rasters: &[Raster]) -> Result<Raster> {
    let first = rasters
        .first()
        .ok_or_else(|| Error::validation("stack_bands needs at least one raster"))?;
    let mut bands: Vec<BandInfo> = Vec::new();
    let mut data: Vec<f32> = Vec::new();
    for r in rasters {
        if r.width() != first.width() || r.height() != first.height() {
            return Err(Error::validation("stack_bands inputs must share dimensions"));
        }
        if r.nodata().to_bits() != first.nodata().to_bits() {
            return Err(Error::validation("stack_bands inputs must share the nodata value"));
        }
        if r.pixel_size_m() != first.pixel_size_m() {
            return Err(Error::validation("stack_bands inputs must share the pixel size"));
        }
        for info in r.bands() {
            if bands.iter().any(|b| b.name == info.name) {
                return Err(Error::validation(format!(
                    "stack_bands: duplicate band name {:?}",
                    info.name
                )));
            }
            bands.push(info.clone());
        }
        data.extend_from_slice(r.data());
    }
    first.like(bands, data)
}

/// Copy a window (in pixel coordinates) into a new raster.
///
/// The window must lie fully inside the raster. The origin shifts by
/// `(x0, y0) * pixel_size_m`.
pub fn clip_roi(r: &Raster, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
    if w == 0 || h == 0 {
        return Err(Error::validation("clip_roi window must be at least 1x1"));
    }
    if x0 + w > r.width() || y0 + h > r.height() {
        return Err(Error::validation(format!(
            "clip_roi window {}+{}x{}+{} exceeds raster {}x{}",
            x0,
            w,
            y0,
            h,
            r.width(),
            r.height()
        )));
    }
    let mut data = Vec::with_capacity(r.bands().len() * w * h);
    for b in 0..r.bands().len() {
        let plane = r.band(b);
        for row in y0..y0 + h {
            let start = row * r.width() + x0;
            data.extend_from_slice(&plane[start..start + w]);
        }
    }
    let origin = (
        r.origin().0 + x0 as f64 * r.pixel_size_m(),
        r.origin().1 + y0 as f64 * r.pixel_size_m(),
    );
    Raster::new(w, h, r.bands().to_vec(), data, r.nodata(), r.pixel_size_m(), origin)
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn raster_strategy(
        width: usize,
        height: usize,
        n: usize,
    ) -> impl Strategy<Value = Vec<Raster>> {
        let pixel = prop_oneof![
            4 => (-1.0f32..10.0).prop_map(|v| v),
            1 => Just(DEFAULT_NODATA),
        ];
        proptest::collection::vec(
            proptest::collection::vec(pixel, width * height),
            n..=n,
        )
        .prop_map(move |planes| {
            planes
                .into_iter()
                .map(|p| {
                    Raster::new(
                        width,
                        height,
                        vec![BandInfo::new("X", "")],
                        p,
                        DEFAULT_NODATA,
                        10.0,
                        (0.0, 0.0),
                    )
                    .unwrap()
                })
                .collect()
        })
    }

    proptest! {
        // Independent oracle: nodata-filtered sort, mean of middle two.
        #[test]
        fn median_matches_brute_force(series in raster_strategy(3, 2, 5)) {
            let out = median_composite(&series).unwrap();
            for i in 0..6 {
                let mut vals: Vec<f32> = series
                    .iter()
                    .map(|r| r.band(0)[i])
                    .filter(|&v| v != DEFAULT_NODATA && v.is_finite())
                    .collect();
                vals.sort_by(f32::total_cmp);
                let expect = if vals.is_empty() {
                    DEFAULT_NODATA
                } else if vals.len() % 2 == 1 {
                    vals[vals.len() / 2]
                } else {
                    (vals[vals.len() / 2 - 1] + vals[vals.len() / 2]) / 2.0
                };
                prop_assert_eq!(out.band(0)[i].to_bits(), expect.to_bits());
            }
        }

        #[test]
        fn median_is_permutation_invariant(series in raster_strategy(2, 2, 4), swap in 0usize..4) {
            let base = median_composite(&series).unwrap();
            let mut shuffled = series.clone();
            let n = shuffled.len();
            shuffled.rotate_left(swap % n);
            shuffled.swap(0, n - 1);
            prop_assert_eq!(median_composite(&shuffled).unwrap(), base);
        }
    }
}
