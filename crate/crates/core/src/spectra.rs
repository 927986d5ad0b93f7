//! Spectral indices and the canonical feature stack.
//!
//! Each index reads one or more reflectance bands and produces a single-band
//! raster named after the index. Arithmetic runs in f64 and is stored as f32.
//! A pixel is nodata in the output when any referenced input band is nodata
//! or when the index denominator is exactly zero. Index values are not
//! clamped.

use crate::raster::{BandInfo, Raster, CANONICAL_BANDS};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which physical role each named band plays in the index formulas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexBandRoles {
    pub blue: String,
    pub red: String,
    pub nir: String,
    pub swir1: String,
}

impl Default for IndexBandRoles {
    fn default() -> Self {
        IndexBandRoles {
            blue: "B2".into(),
            red: "B4".into(),
            nir: "B8".into(),
            swir1: "B11".into(),
        }
    }
}

/// Names of the six derived bands, in stack order.
pub const INDEX_BANDS: [&str; 6] = ["NDVI", "EVI", "LAI", "SAVI", "NDWI", "NDBI"];

/// The 14 canonical feature names: 8 reflectance bands then 6 indices.
pub fn feature_stack_names() -> Vec<&'static str> {
    CANONICAL_BANDS.iter().chain(INDEX_BANDS.iter()).copied().collect()
}

/// Options for index computation. `savi_standard` switches SAVI's leading
/// factor from the default 0.5 to the conventional 1.5.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndexOptions {
    pub savi_standard: bool,
}

/// Shared combinator: map named input bands through a per-pixel function.
/// `None` from the function means nodata (zero denominator).
fn derive_band(
    r: &Raster,
    out_name: &str,
    out_desc: &str,
    input_names: &[&str],
    f: impl Fn(&[f64]) -> Option<f64>,
) -> Result<Raster> {
    let idxs: Vec<usize> =
        input_names.iter().map(|n| r.band_index_or_err(n)).collect::<Result<_>>()?;
    let plane = r.pixel_count();
    let nodata = r.nodata();
    let mut data = vec![0f32; plane];
    let mut vals = vec![0f64; idxs.len()];
    'pixel: for i in 0..plane {
        for (k, &b) in idxs.iter().enumerate() {
            let v = r.band(b)[i];
            if r.is_nodata(v) {
                data[i] = nodata;
                continue 'pixel;
            }
            vals[k] = v as f64;
        }
        data[i] = match f(&vals) {
            Some(v) => v as f32,
            None => nodata,
        };
    }
    r.like(vec![BandInfo::new(out_name, out_desc)], data)
}

fn normalized_difference(a: f64, b: f64) -> Option<f64> {
    let den = a + b;
    if den == 0.0 {
        None
    } else {
        Some((a - b) / den)
    }
}

/// NDVI = (NIR - Red) / (NIR + Red)
pub fn ndvi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    derive_band(r, "NDVI", "normalized difference vegetation index", &[&roles.nir, &roles.red], |v| {
        normalized_difference(v[0], v[1])
    })
}

/// EVI = 2.5 * (NIR - Red) / (NIR + 6*Red - 7.5*Blue + 1)
pub fn evi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    derive_band(
        r,
        "EVI",
        "enhanced vegetation index",
        &[&roles.nir, &roles.red, &roles.blue],
        |v| {
            let (nir, red, blue) = (v[0], v[1], v[2]);
            let den = nir + 6.0 * red - 7.5 * blue + 1.0;
            if den == 0.0 {
                None
            } else {
                Some(2.5 * (nir - red) / den)
            }
        },
    )
}

/// LAI = 3.618 * EVI - 0.118, computed from an EVI band.
pub fn lai(evi_band: &Raster) -> Result<Raster> {
    derive_band(evi_band, "LAI", "leaf area index", &["EVI"], |v| Some(3.618 * v[0] - 0.118))
}

/// SAVI with the default leading factor 0.5:
/// SAVI = 0.5 * (NIR - Red) / (NIR + Red + 0.5)
pub fn savi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    savi_with_factor(r, roles, 0.5)
}

/// SAVI with the conventional leading factor 1.5.
pub fn savi_standard(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    savi_with_factor(r, roles, 1.5)
}

fn savi_with_factor(r: &Raster, roles: &IndexBandRoles, factor: f64) -> Result<Raster> {
    derive_band(r, "SAVI", "soil-adjusted vegetation index", &[&roles.nir, &roles.red], move |v| {
        let den = v[0] + v[1] + 0.5;
        if den == 0.0 {
            None
        } else {
            Some(factor * (v[0] - v[1]) / den)
        }
    })
}

/// NDWI = (NIR - SWIR1) / (NIR + SWIR1)
pub fn ndwi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    derive_band(r, "NDWI", "normalized difference water index", &[&roles.nir, &roles.swir1], |v| {
        normalized_difference(v[0], v[1])
    })
}

/// Alias of [`ndwi`]: the moisture index over the same NIR/SWIR1 pair.
pub fn ndmi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    ndwi(r, roles)
}

/// NDBI = (SWIR1 - NIR) / (SWIR1 + NIR), the pointwise negation of NDWI.
pub fn ndbi(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    derive_band(r, "NDBI", "normalized difference built-up index", &[&roles.swir1, &roles.nir], |v| {
        normalized_difference(v[0], v[1])
    })
}

/// The canonical 14-band stack: B2, B3, B4, B7, B8, B8A, B11, B12, NDVI,
/// EVI, LAI, SAVI, NDWI, NDBI.
///
/// Every index band is evaluated exactly as its standalone operation; in
/// addition, any pixel with nodata in any of the eight reflectance bands is
/// nodata in all six derived bands.
pub fn build_feature_stack(r: &Raster, roles: &IndexBandRoles) -> Result<Raster> {
    build_feature_stack_with(r, roles, IndexOptions::default())
}

pub fn build_feature_stack_with(
    r: &Raster,
    roles: &IndexBandRoles,
    opts: IndexOptions,
) -> Result<Raster> {
    let band_idxs: Vec<usize> =
        CANONICAL_BANDS.iter().map(|n| r.band_index_or_err(n)).collect::<Result<_>>()?;

    let evi_band = evi(r, roles)?;
    let mut derived = vec![
        ndvi(r, roles)?,
        lai(&evi_band)?,
        if opts.savi_standard { savi_standard(r, roles)? } else { savi(r, roles)? },
        ndwi(r, roles)?,
        ndbi(r, roles)?,
    ];
    derived.insert(1, evi_band);

    let plane = r.pixel_count();
    let nodata = r.nodata();
    let mut data = Vec::with_capacity(14 * plane);
    let mut bands = Vec::with_capacity(14);
    for (&name, &idx) in CANONICAL_BANDS.iter().zip(&band_idxs) {
        bands.push(BandInfo::canonical(name));
        data.extend_from_slice(r.band(idx));
    }

    // Pixels with nodata in any reflectance band are nodata in every index.
    let mut any_nodata = vec![false; plane];
    for &idx in &band_idxs {
        let plane_data = r.band(idx);
        for i in 0..plane {
            if r.is_nodata(plane_data[i]) {
                any_nodata[i] = true;
            }
        }
    }
    for d in &derived {
        bands.push(d.bands()[0].clone());
        let src = d.band(0);
        data.extend(
            (0..plane).map(|i| if any_nodata[i] { nodata } else { src[i] }),
        );
    }
    r.like(bands, data)
}

/// Exact f64 evaluation of the index formulas on a single pixel; used by
/// tests as an independent oracle and by callers that want scalar values.
pub mod formulas {
    /// `None` encodes a zero denominator.
    pub fn ndvi(nir: f64, red: f64) -> Option<f64> {
        nd(nir, red)
    }

    pub fn evi(nir: f64, red: f64, blue: f64) -> Option<f64> {
        let den = nir + 6.0 * red - 7.5 * blue + 1.0;
        (den != 0.0).then(|| 2.5 * (nir - red) / den)
    }

    pub fn lai(evi: f64) -> f64 {
        3.618 * evi - 0.118
    }

    pub fn savi(nir: f64, red: f64, factor: f64) -> Option<f64> {
        let den = nir + red + 0.5;
        (den != 0.0).then(|| factor * (nir - red) / den)
    }

    pub fn ndwi(nir: f64, swir1: f64) -> Option<f64> {
        nd(nir, swir1)
    }

    pub fn ndbi(swir1: f64, nir: f64) -> Option<f64> {
        nd(swir1, nir)
    }

    fn nd(a: f64, b: f64) -> Option<f64> {
        let den = a + b;
        (den != 0.0).then(|| (a - b) / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::DEFAULT_NODATA;
    use crate::Error;

    const NOD: f32 = DEFAULT_NODATA;

    /// One pixel per element: builds an n-pixel raster with the given bands.
    fn multi(names: &[&str], pixels: &[Vec<f32>]) -> Raster {
        let w = pixels.len();
        let mut data = Vec::new();
        for b in 0..names.len() {
            for p in pixels {
                data.push(p[b]);
            }
        }
        let bands = names.iter().map(|n| BandInfo::new(*n, "")).collect();
        Raster::new(w, 1, bands, data, NOD, 10.0, (0.0, 0.0)).unwrap()
    }

    fn roles() -> IndexBandRoles {
        IndexBandRoles::default()
    }

    #[test]
    fn ndvi_hand_values() {
        let r = multi(
            &["B4", "B8"],
            &[vec![0.2, 0.6], vec![0.0, 0.0], vec![0.5, 0.5], vec![NOD, 0.6]],
        );
        let out = ndvi(&r, &roles()).unwrap();
        assert!((out.band(0)[0] - 0.5).abs() < 1e-12);
        assert_eq!(out.band(0)[1], NOD); // 0/0 denominator
        assert_eq!(out.band(0)[2], 0.0);
        assert_eq!(out.band(0)[3], NOD); // nodata propagates
        assert_eq!(out.band_names(), vec!["NDVI"]);
    }

    #[test]
    fn evi_hand_value() {
        let r = multi(&["B2", "B4", "B8"], &[vec![0.05, 0.1, 0.5]]);
        let out = evi(&r, &roles()).unwrap();
        // 2.5 * 0.4 / (0.5 + 0.6 - 0.375 + 1) = 1.0 / 1.725
        let expect = 1.0 / 1.725;
        assert!((out.band(0)[0] as f64 - expect).abs() < 1e-7);
    }

    #[test]
    fn evi_zero_denominator_is_nodata() {
        // Dyadic pixel solving 7.5*Blue = NIR + 6*Red + 1 exactly:
        // 0.125 + 0.75 + 1 = 1.875 = 7.5 * 0.25.
        let r = multi(&["B2", "B4", "B8"], &[vec![0.25, 0.125, 0.125]]);
        let out = evi(&r, &roles()).unwrap();
        assert_eq!(out.band(0)[0], NOD);
    }

    #[test]
    fn lai_is_affine_in_evi() {
        let evi_band = multi(&["EVI"], &[vec![0.0], vec![1.0], vec![NOD]]);
        let out = lai(&evi_band).unwrap();
        assert!((out.band(0)[0] - (-0.118)).abs() < 1e-7);
        assert!((out.band(0)[1] - 3.5).abs() < 1e-7);
        assert_eq!(out.band(0)[2], NOD);
        assert_eq!(out.band_names(), vec!["LAI"]);
    }

    #[test]
    fn savi_hand_values_and_flag() {
        let r = multi(&["B4", "B8"], &[vec![0.2, 0.6], vec![0.0, 0.0]]);
        let out = savi(&r, &roles()).unwrap();
        // 0.5 * 0.4 / 1.3
        assert!((out.band(0)[0] as f64 - 0.2 / 1.3).abs() < 1e-7);
        // Zero reflectance: denominator is 0.5, not zero, so the value is 0.
        assert_eq!(out.band(0)[1], 0.0);

        let std = savi_standard(&r, &roles()).unwrap();
        assert!((std.band(0)[0] as f64 - 0.6 / 1.3).abs() < 1e-7);
        assert!((std.band(0)[0] / out.band(0)[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn ndwi_and_ndbi_hand_values() {
        let r = multi(&["B8", "B11"], &[vec![0.4, 0.1], vec![0.1, 0.3]]);
        let w = ndwi(&r, &roles()).unwrap();
        assert!((w.band(0)[0] - 0.6).abs() < 1e-7);
        let b = ndbi(&r, &roles()).unwrap();
        assert!((b.band(0)[1] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn ndmi_is_an_alias_of_ndwi() {
        let r = multi(&["B8", "B11"], &[vec![0.37, 0.21]]);
        let w = ndwi(&r, &roles()).unwrap();
        let m = ndmi(&r, &roles()).unwrap();
        assert_eq!(w.band(0)[0].to_bits(), m.band(0)[0].to_bits());
    }

    #[test]
    fn missing_role_band_is_a_validation_error() {
        let r = multi(&["B4"], &[vec![0.2]]);
        assert!(matches!(ndvi(&r, &roles()), Err(Error::Validation(_))));
    }

    #[test]
    fn custom_roles_pick_other_bands() {
        let r = multi(&["REDX", "NIRX"], &[vec![0.2, 0.6]]);
        let roles = IndexBandRoles {
            red: "REDX".into(),
            nir: "NIRX".into(),
            ..IndexBandRoles::default()
        };
        let out = ndvi(&r, &roles).unwrap();
        assert!((out.band(0)[0] - 0.5).abs() < 1e-12);
    }

    fn eight_band_pixel(vals: [f32; 8]) -> Vec<f32> {
        vals.to_vec()
    }

    fn canonical_raster(pixels: &[[f32; 8]]) -> Raster {
        let pix: Vec<Vec<f32>> = pixels.iter().map(|p| eight_band_pixel(*p)).collect();
        multi(&CANONICAL_BANDS, &pix)
    }

    #[test]
    fn feature_stack_order_and_composition() {
        let r = canonical_raster(&[[0.05, 0.08, 0.2, 0.5, 0.6, 0.62, 0.1, 0.07]]);
        let s = build_feature_stack(&r, &roles()).unwrap();
        assert_eq!(
            s.band_names(),
            vec![
                "B2", "B3", "B4", "B7", "B8", "B8A", "B11", "B12", "NDVI", "EVI", "LAI", "SAVI",
                "NDWI", "NDBI"
            ]
        );
        // Composition consistency with the standalone operations.
        let nd = ndvi(&r, &roles()).unwrap();
        assert_eq!(s.band(8)[0].to_bits(), nd.band(0)[0].to_bits());
        assert!((s.band(8)[0] - 0.5).abs() < 1e-7);
        let ev = evi(&r, &roles()).unwrap();
        assert_eq!(s.band(9)[0].to_bits(), ev.band(0)[0].to_bits());
        let la = lai(&ev).unwrap();
        assert_eq!(s.band(10)[0].to_bits(), la.band(0)[0].to_bits());
        let nb = ndbi(&r, &roles()).unwrap();
        assert_eq!(s.band(13)[0].to_bits(), nb.band(0)[0].to_bits());
    }

    #[test]
    fn feature_stack_requires_all_canonical_bands() {
        let r = multi(&["B2", "B3", "B4", "B7", "B8", "B8A", "B11"], &[vec![0.1; 7]]);
        assert!(matches!(build_feature_stack(&r, &roles()), Err(Error::Validation(_))));
    }

    #[test]
    fn feature_stack_blanks_all_indices_when_any_band_is_nodata() {
        // B3 is nodata: NDVI alone would still be computable, but the stack
        // blanks every derived band for that pixel.
        let r = canonical_raster(&[[0.05, NOD, 0.2, 0.5, 0.6, 0.62, 0.1, 0.07]]);
        let s = build_feature_stack(&r, &roles()).unwrap();
        for b in 8..14 {
            assert_eq!(s.band(b)[0], NOD, "band {}", b);
        }
        // The reflectance bands keep their values (including the nodata one).
        assert_eq!(s.band(0)[0], 0.05);
        assert_eq!(s.band(1)[0], NOD);
    }

    #[test]
    fn feature_stack_savi_option() {
        let r = canonical_raster(&[[0.05, 0.08, 0.2, 0.5, 0.6, 0.62, 0.1, 0.07]]);
        let s = build_feature_stack_with(&r, &roles(), IndexOptions { savi_standard: true })
            .unwrap();
        let sv = savi_standard(&r, &roles()).unwrap();
        assert_eq!(s.band(11)[0].to_bits(), sv.band(0)[0].to_bits());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use crate::raster::DEFAULT_NODATA;
    use proptest::prelude::*;

    fn two_band(a: f32, b: f32, names: (&str, &str)) -> Raster {
        Raster::new(
            1,
            1,
            vec![BandInfo::new(names.0, ""), BandInfo::new(names.1, "")],
            vec![a, b],
            DEFAULT_NODATA,
            10.0,
            (0.0, 0.0),
        )
        .unwrap()
    }

    proptest! {
        // |ND| <= 1 for nonnegative inputs, and swapping arguments negates it.
        #[test]
        fn normalized_difference_bounds_and_antisymmetry(
            a in 0.0f32..10.0,
            b in 0.0f32..10.0,
        ) {
            prop_assume!(a + b > 0.0);
            let roles = IndexBandRoles::default();
            let fwd = ndvi(&two_band(b, a, ("B4", "B8")), &roles).unwrap().band(0)[0];
            let rev = ndvi(&two_band(a, b, ("B4", "B8")), &roles).unwrap().band(0)[0];
            prop_assert!(fwd.abs() <= 1.0);
            prop_assert_eq!(fwd.to_bits(), (-rev).to_bits());
        }

        // NDBI is the exact pointwise negation of NDWI.
        #[test]
        fn ndbi_negates_ndwi(nir in 0.0f32..10.0, swir in 0.0f32..10.0) {
            prop_assume!(nir + swir > 0.0);
            let roles = IndexBandRoles::default();
            let r = two_band(nir, swir, ("B8", "B11"));
            let w = ndwi(&r, &roles).unwrap().band(0)[0];
            let b = ndbi(&r, &roles).unwrap().band(0)[0];
            prop_assert_eq!(b.to_bits(), (-w).to_bits());
        }

        // LAI is affine in EVI: equal EVI inputs give equal LAI.
        #[test]
        fn lai_affine(e in -2.0f32..2.0) {
            let band = Raster::new(
                1, 1,
                vec![BandInfo::new("EVI", "")],
                vec![e],
                DEFAULT_NODATA, 10.0, (0.0, 0.0),
            ).unwrap();
            let out = lai(&band).unwrap().band(0)[0] as f64;
            let expect = formulas::lai(e as f64);
            prop_assert!((out - expect).abs() <= 1e-6 * expect.abs().max(1e-3));
        }
    }
}
