//! Per-pixel classification results.

use crate::raster::{BandInfo, Raster, DEFAULT_NODATA, DEFAULT_PIXEL_SIZE_M};
use crate::{Error, Result};

/// Pixel class. `Masked` marks pixels excluded before classification
/// (built-up mask or nodata features); they are never tree cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Class {
    NonTree = 0,
    Tree = 1,
    Masked = 2,
}

impl Class {
    pub fn from_label(label: u8) -> Result<Class> {
        match label {
            0 => Ok(Class::NonTree),
            1 => Ok(Class::Tree),
            _ => Err(Error::validation(format!("class label must be 0 or 1, got {label}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<Class>,
    pub pixel_size_m: f64,
    pub origin: (f64, f64),
}

impl ClassMap {
    pub fn new(width: usize, height: usize, classes: Vec<Class>) -> Result<Self> {
        ClassMap::with_geometry(width, height, classes, DEFAULT_PIXEL_SIZE_M, (0.0, 0.0))
    }

    pub fn with_geometry(
        width: usize,
        height: usize,
        classes: Vec<Class>,
        pixel_size_m: f64,
        origin: (f64, f64),
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("class map dimensions must be at least 1x1"));
        }
        if classes.len() != width * height {
            return Err(Error::validation("class count does not match dimensions"));
        }
        if !(pixel_size_m.is_finite() && pixel_size_m > 0.0) {
            return Err(Error::validation("pixel_size_m must be finite and positive"));
        }
        Ok(ClassMap { width, height, classes, pixel_size_m, origin })
    }

    pub fn get(&self, row: usize, col: usize) -> Class {
        self.classes[row * self.width + col]
    }

    pub fn count(&self, class: Class) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Copy with every `Masked` pixel downgraded to `NonTree`; useful when
    /// comparing against truth maps that have no masked class.
    pub fn masked_as_nontree(&self) -> ClassMap {
        let classes = self
            .classes
            .iter()
            .map(|&c| if c == Class::Masked { Class::NonTree } else { c })
            .collect();
        ClassMap { classes, ..self.clone() }
    }

    /// Single-band raster encoding: CLASS = 0.0 / 1.0 / 2.0.
    pub fn to_raster(&self) -> Result<Raster> {
        let data = self.classes.iter().map(|&c| c as u8 as f32).collect();
        Raster::new(
            self.width,
            self.height,
            vec![BandInfo::new("CLASS", "0 = non-tree, 1 = tree, 2 = masked")],
            data,
            DEFAULT_NODATA,
            self.pixel_size_m,
            self.origin,
        )
    }

    pub fn from_raster(r: &Raster) -> Result<ClassMap> {
        let idx = r.band_index_or_err("CLASS")?;
        let classes = r
            .band(idx)
            .iter()
            .map(|&v| match v {
                v if v == 0.0 => Ok(Class::NonTree),
                v if v == 1.0 => Ok(Class::Tree),
                v if v == 2.0 => Ok(Class::Masked),
                v => Err(Error::format(format!("bad CLASS value {v}"))),
            })
            .collect::<Result<_>>()?;
        ClassMap::with_geometry(r.width(), r.height(), classes, r.pixel_size_m(), r.origin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_round_trip() {
        let m = ClassMap::with_geometry(
            2,
            2,
            vec![Class::NonTree, Class::Tree, Class::Masked, Class::Tree],
            20.0,
            (5.0, 6.0),
        )
        .unwrap();
        let back = ClassMap::from_raster(&m.to_raster().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bad_class_values_are_rejected() {
        let r = Raster::new(
            1,
            1,
            vec![BandInfo::new("CLASS", "")],
            vec![3.0],
            DEFAULT_NODATA,
            10.0,
            (0.0, 0.0),
        )
        .unwrap();
        assert!(matches!(ClassMap::from_raster(&r), Err(Error::Format(_))));
    }

    #[test]
    fn masked_as_nontree_only_touches_masked() {
        let m = ClassMap::new(3, 1, vec![Class::Masked, Class::Tree, Class::NonTree]).unwrap();
        let flat = m.masked_as_nontree();
        assert_eq!(flat.classes, vec![Class::NonTree, Class::Tree, Class::NonTree]);
    }

    #[test]
    fn counts() {
        let m = ClassMap::new(2, 2, vec![Class::Tree, Class::Tree, Class::Masked, Class::NonTree])
            .unwrap();
        assert_eq!(m.count(Class::Tree), 2);
        assert_eq!(m.count(Class::Masked), 1);
    }
}
