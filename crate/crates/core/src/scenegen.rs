//! Deterministic synthetic scene generation for tests and demos.
//!
//! A scene is a stack of multi-band observations of the same ground truth:
//! a material map built from a background plus shaped regions, rendered
//! through a static per-pixel illumination field, per-observation additive
//! Gaussian noise, and optional synthetic cloud banks that brighten the
//! affected pixels and are reported in a matching cloud mask. All randomness
//! comes from one seeded ChaCha stream, so a spec generates bit-identical
//! output every time, on any machine.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classmap::{Class, ClassMap};
use crate::labels::{LabelSet, LabeledPixel};
use crate::raster::{BandInfo, CloudMask, Raster, CANONICAL_BANDS, DEFAULT_PIXEL_SIZE_M};
use crate::{Error, Result};

/// Ground-cover materials the generator can paint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Tree,
    Grass,
    Builtup,
    Water,
    Bare,
}

/// Noise-free reflectance template for a material, one value per canonical
/// band (B2, B3, B4, B7, B8, B8A, B11, B12).
///
/// The templates are stylized but keep the relationships that matter:
/// vegetation is dark in red and bright in NIR (tree much more so than dry
/// grass), built surfaces are brighter in SWIR than NIR, water is dark
/// everywhere and darkest in the infrared.
pub fn material_template(material: Material) -> [f32; 8] {
    match material {
        Material::Tree => [0.030, 0.050, 0.035, 0.300, 0.360, 0.380, 0.110, 0.055],
        Material::Grass => [0.050, 0.100, 0.120, 0.190, 0.200, 0.210, 0.210, 0.160],
        Material::Builtup => [0.160, 0.180, 0.200, 0.230, 0.240, 0.245, 0.330, 0.300],
        Material::Water => [0.060, 0.050, 0.030, 0.015, 0.012, 0.010, 0.005, 0.003],
        Material::Bare => [0.110, 0.140, 0.210, 0.220, 0.235, 0.245, 0.310, 0.280],
    }
}

/// A paintable region outline, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Axis-aligned rectangle covering columns `x..x+w`, rows `y..y+h`.
    Rect { x: usize, y: usize, w: usize, h: usize },
    /// Disk of radius `r` centred on (column `cx`, row `cy`).
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        match *self {
            Shape::Rect { x, y, w, h } => col >= x && col < x + w && row >= y && row < y + h,
            Shape::Disk { cx, cy, r } => {
                let dx = col as f64 - cx;
                let dy = row as f64 - cy;
                dx * dx + dy * dy <= r * r
            }
        }
    }
}

/// One painted region: a shape filled with a material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub material: Material,
    pub shape: Shape,
}

fn default_background() -> Material {
    Material::Grass
}
fn default_n_observations() -> usize {
    1
}
fn default_noise_sigma() -> f64 {
    0.02
}
fn default_pixel_size() -> f64 {
    DEFAULT_PIXEL_SIZE_M
}

/// Full description of a synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Material for every pixel no region covers.
    #[serde(default = "default_background")]
    pub background: Material,
    /// Painted in order; later regions overwrite earlier ones.
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default = "default_n_observations")]
    pub n_observations: usize,
    /// Std-dev of the additive Gaussian reflectance noise, drawn per
    /// observation, band and pixel.
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Std-dev of a static per-pixel multiplicative illumination field
    /// (gain `1 + N(0, sigma)`, clamped to at least 0.2). The field is drawn
    /// once and shared by all observations and bands, mimicking terrain
    /// shading: it scales whole spectra, so band ratios are unaffected.
    #[serde(default)]
    pub illum_sigma: f64,
    /// Minimum fraction of each observation covered by synthetic clouds.
    #[serde(default)]
    pub cloud_fraction: f64,
    #[serde(default = "default_pixel_size")]
    pub pixel_size_m: f64,
}

impl SceneSpec {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation("scene dimensions must be at least 1x1"));
        }
        if self.n_observations == 0 {
            return Err(Error::validation("scene needs at least one observation"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::validation("noise_sigma must be finite and >= 0"));
        }
        if !(self.illum_sigma.is_finite() && self.illum_sigma >= 0.0) {
            return Err(Error::validation("illum_sigma must be finite and >= 0"));
        }
        if !(self.cloud_fraction.is_finite() && (0.0..1.0).contains(&self.cloud_fraction)) {
            return Err(Error::validation("cloud_fraction must be in [0, 1)"));
        }
        if !(self.pixel_size_m.is_finite() && self.pixel_size_m > 0.0) {
            return Err(Error::validation("pixel_size_m must be finite and positive"));
        }
        Ok(())
    }
}

/// Generated observations, their cloud masks, and the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub observations: Vec<Raster>,
    pub cloud_masks: Vec<CloudMask>,
    pub truth: ClassMap,
}

fn material_map(spec: &SceneSpec) -> Vec<Material> {
    let mut map = vec![spec.background; spec.width * spec.height];
    for region in &spec.regions {
        for row in 0..spec.height {
            for col in 0..spec.width {
                if region.shape.contains(row, col) {
                    map[row * spec.width + col] = region.material;
                }
            }
        }
    }
    map
}

/// Additive reflectance boost applied to cloudy pixels in every band.
const CLOUD_BRIGHTNESS: f32 = 0.5;

fn grow_clouds(
    spec: &SceneSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<bool> {
    let (w, h) = (spec.width, spec.height);
    let mut cloudy = vec![false; w * h];
    if spec.cloud_fraction == 0.0 {
        return cloudy;
    }
    let target = (spec.cloud_fraction * (w * h) as f64).ceil() as usize;
    let mut covered = 0usize;
    // Stamp random rectangles until coverage reaches the target. Each stamp
    // covers at least one new-or-old pixel block, and coverage is monotone,
    // so with fraction < 1 this terminates quickly.
    while covered < target {
        let rw = rng.random_range(1..=w.div_ceil(3));
        let rh = rng.random_range(1..=h.div_ceil(3));
        let x = rng.random_range(0..w);
        let y = rng.random_range(0..h);
        for row in y..(y + rh).min(h) {
            for col in x..(x + rw).min(w) {
                let i = row * w + col;
                if !cloudy[i] {
                    cloudy[i] = true;
                    covered += 1;
                }
            }
        }
    }
    cloudy
}

/// Render a scene spec into observations, cloud masks and ground truth.
///
/// Draw order (one ChaCha stream): the illumination field first, then per
/// observation the noise for each band plane in order, then that
/// observation's cloud rectangles. Changing the seed changes everything;
/// reusing it reproduces the scene exactly.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let n_pixels = w * h;
    let materials = material_map(spec);

    let truth: Vec<Class> = materials
        .iter()
        .map(|m| {
            if *m == Material::Tree {
                Class::Tree
            } else {
                Class::NonTree
            }
        })
        .collect();
    let truth = ClassMap::with_geometry(w, h, truth, spec.pixel_size_m, (0.0, 0.0))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let gain: Vec<f32> = if spec.illum_sigma > 0.0 {
        let normal = Normal::new(1.0f64, spec.illum_sigma)
            .map_err(|e| Error::validation(format!("bad illumination sigma: {e}")))?;
        (0..n_pixels)
            .map(|_| normal.sample(&mut rng).max(0.2) as f32)
            .collect()
    } else {
        vec![1.0; n_pixels]
    };

    let noise = if spec.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0f64, spec.noise_sigma)
                .map_err(|e| Error::validation(format!("bad noise sigma: {e}")))?,
        )
    } else {
        None
    };

    let bands: Vec<BandInfo> = CANONICAL_BANDS.iter().map(|n| BandInfo::canonical(n)).collect();
    let templates: Vec<[f32; 8]> = materials.iter().map(|m| material_template(*m)).collect();

    let mut observations = Vec::with_capacity(spec.n_observations);
    let mut cloud_masks = Vec::with_capacity(spec.n_observations);
    for _ in 0..spec.n_observations {
        let mut data = vec![0f32; 8 * n_pixels];
        for band in 0..8 {
            let plane = &mut data[band * n_pixels..(band + 1) * n_pixels];
            for (i, value) in plane.iter_mut().enumerate() {
                let clean = templates[i][band] * gain[i];
                *value = match &noise {
                    Some(n) => (clean as f64 + n.sample(&mut rng)) as f32,
                    None => clean,
                };
            }
        }

        let cloudy = grow_clouds(spec, &mut rng);
        for band in 0..8 {
            let plane = &mut data[band * n_pixels..(band + 1) * n_pixels];
            for (value, &is_cloudy) in plane.iter_mut().zip(&cloudy) {
                if is_cloudy {
                    *value += CLOUD_BRIGHTNESS;
                }
            }
        }

        observations.push(Raster::new(
            w,
            h,
            bands.clone(),
            data,
            crate::raster::DEFAULT_NODATA,
            spec.pixel_size_m,
            (0.0, 0.0),
        )?);
        cloud_masks.push(CloudMask::new(w, h, cloudy)?);
    }

    Ok(Scene {
        observations,
        cloud_masks,
        truth,
    })
}

/// Draw a balanced set of labeled pixels from a ground-truth map.
///
/// Collects the pixel indices of each class in row-major order, shuffles
/// each class with its own deterministic permutation, and takes
/// `n_per_class` from both. Too few pixels of either class is an error.
/// Masked truth pixels are never sampled.
pub fn sample_labels(truth: &ClassMap, n_per_class: usize, seed: u64) -> Result<LabelSet> {
    if n_per_class == 0 {
        return Err(Error::validation("n_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(2 * n_per_class);
    for (label, class) in [(0u8, Class::NonTree), (1u8, Class::Tree)] {
        let mut idxs: Vec<usize> = truth
            .classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == class)
            .map(|(i, _)| i)
            .collect();
        if idxs.len() < n_per_class {
            return Err(Error::validation(format!(
                "asked for {n_per_class} labels of class {label} but the scene has only {}",
                idxs.len()
            )));
        }
        for k in (1..idxs.len()).rev() {
            let j = rng.random_range(0..=k);
            idxs.swap(k, j);
        }
        for &i in idxs.iter().take(n_per_class) {
            entries.push(LabeledPixel {
                row: (i / truth.width) as u32,
                col: (i % truth.width) as u32,
                label,
            });
        }
    }
    Ok(LabelSet { entries })
}
