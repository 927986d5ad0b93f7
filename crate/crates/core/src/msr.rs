//! MSR container format.
//!
//! Layout, in order:
//!
//! 1. 8-byte ASCII magic `MSRASTR1`;
//! 2. 4-byte little-endian u32: byte length of the JSON header;
//! 3. UTF-8 JSON header: `{width, height, pixel_size_m, origin_x, origin_y,
//!    nodata, bands: [{name, description}]}` plus optional extra keys
//!    (e.g. `mask_provenance`, `provenance`);
//! 4. `width * height * bands` 32-bit little-endian IEEE-754 floats,
//!    band-planar, row-major.
//!
//! The payload is raw f32 bits, so save/load round-trips every value
//! bit-exactly. Extra header keys survive a read via the `_with_extras`
//! variants; `save_raster`/`load_raster` ignore them.

use crate::raster::{BandInfo, Raster};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"MSRASTR1";

/// Sanity cap on the declared header length (16 MiB).
const MAX_HEADER_LEN: u32 = 16 * 1024 * 1024;

pub type Extras = BTreeMap<String, serde_json::Value>;

#[derive(Serialize, Deserialize)]
struct Header {
    width: usize,
    height: usize,
    pixel_size_m: f64,
    origin_x: f64,
    origin_y: f64,
    nodata: f32,
    bands: Vec<BandInfo>,
    #[serde(flatten)]
    extras: Extras,
}

pub fn save_raster(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    save_raster_with_extras(r, path, &Extras::new())
}

pub fn save_raster_with_extras(r: &Raster, path: impl AsRef<Path>, extras: &Extras) -> Result<()> {
    let header = Header {
        width: r.width(),
        height: r.height(),
        pixel_size_m: r.pixel_size_m(),
        origin_x: r.origin().0,
        origin_y: r.origin().1,
        nodata: r.nodata(),
        bands: r.bands().to_vec(),
        extras: extras.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    if header_bytes.len() > MAX_HEADER_LEN as usize {
        return Err(Error::validation("MSR header exceeds the 16 MiB cap"));
    }

    let mut payload = Vec::with_capacity(r.data().len() * 4);
    for v in r.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }

    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    f.write_all(&header_bytes)?;
    f.write_all(&payload)?;
    f.flush()?;
    Ok(())
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    load_raster_with_extras(path).map(|(r, _)| r)
}

pub fn load_raster_with_extras(path: impl AsRef<Path>) -> Result<(Raster, Extras)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);

    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("not an MSR file (bad magic)"));
    }

    let mut len_bytes = [0u8; 4];
    f.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes);
    if header_len == 0 || header_len > MAX_HEADER_LEN {
        return Err(Error::format(format!("implausible MSR header length {header_len}")));
    }

    let mut header_bytes = vec![0u8; header_len as usize];
    f.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::format(format!("bad MSR header: {e}")))?;

    let n_values = header
        .bands
        .len()
        .checked_mul(header.width)
        .and_then(|n| n.checked_mul(header.height))
        .ok_or_else(|| Error::format("MSR dimensions overflow"))?;
    let mut payload = vec![0u8; n_values * 4];
    f.read_exact(&mut payload)?;

    let mut trailing = [0u8; 1];
    match f.read(&mut trailing)? {
        0 => {}
        _ => return Err(Error::format("trailing bytes after MSR payload")),
    }

    let data: Vec<f32> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();

    let raster = Raster::new(
        header.width,
        header.height,
        header.bands,
        data,
        header.nodata,
        header.pixel_size_m,
        (header.origin_x, header.origin_y),
    )?;
    Ok((raster, header.extras))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::DEFAULT_NODATA;
    use tempfile::tempdir;

    fn sample_raster() -> Raster {
        Raster::new(
            2,
            2,
            vec![BandInfo::new("B4", "Red"), BandInfo::new("B8", "NIR")],
            vec![0.1, 0.2, DEFAULT_NODATA, 0.4, 0.5, 0.6, 0.7, -0.125],
            DEFAULT_NODATA,
            10.0,
            (120.5, -33.25),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.msr");
        let r = sample_raster();
        save_raster(&r, &path).unwrap();
        assert_eq!(load_raster(&path).unwrap(), r);
    }

    #[test]
    fn round_trip_single_pixel_zero() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.msr");
        let r = Raster::filled(1, 1, vec![BandInfo::new("X", "")], 0.0).unwrap();
        save_raster(&r, &path).unwrap();
        assert_eq!(load_raster(&path).unwrap(), r);
    }

    #[test]
    fn round_trip_all_nodata_band() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.msr");
        let r = Raster::filled(3, 2, vec![BandInfo::new("X", "")], DEFAULT_NODATA).unwrap();
        save_raster(&r, &path).unwrap();
        assert_eq!(load_raster(&path).unwrap(), r);
    }

    #[test]
    fn extras_survive_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("r.msr");
        let mut extras = Extras::new();
        extras.insert("provenance".into(), serde_json::json!({"tool": "test", "n": 3}));
        save_raster_with_extras(&sample_raster(), &path, &extras).unwrap();
        let (r, back) = load_raster_with_extras(&path).unwrap();
        assert_eq!(r, sample_raster());
        assert_eq!(back, extras);
    }

    #[test]
    fn known_layout_2x1_one_band() {
        // Hand-assembled file: header + two LE floats.
        let dir = tempdir().unwrap();
        let path = dir.path().join("hand.msr");
        let header = br#"{"width":2,"height":1,"pixel_size_m":10.0,"origin_x":0.0,"origin_y":0.0,"nodata":-9999.0,"bands":[{"name":"X","description":""}]}"#;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();

        let r = load_raster(&path).unwrap();
        assert_eq!((r.width(), r.height()), (2, 1));
        assert_eq!(r.band(0), &[1.5, -2.0]);

        // And the writer produces the identical bytes back.
        let out = dir.path().join("out.msr");
        save_raster(&r, &out).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), bytes);
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.msr");
        std::fs::write(&path, b"NOTMSR00rest").unwrap();
        assert!(matches!(load_raster(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_an_io_error() {
        // Header declares 3 bands; payload holds only 2 planes.
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.msr");
        let header = br#"{"width":2,"height":1,"pixel_size_m":10.0,"origin_x":0.0,"origin_y":0.0,"nodata":-9999.0,"bands":[{"name":"A","description":""},{"name":"B","description":""},{"name":"C","description":""}]}"#;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        for v in [1.0f32, 2.0, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_raster(&path), Err(Error::Io(_))));
    }

    #[test]
    fn trailing_bytes_are_a_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trail.msr");
        let r = Raster::filled(1, 1, vec![BandInfo::new("X", "")], 1.0).unwrap();
        save_raster(&r, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_raster(&path), Err(Error::Format(_))));
    }

    #[test]
    fn duplicate_band_names_are_a_validation_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dup.msr");
        let header = br#"{"width":1,"height":1,"pixel_size_m":10.0,"origin_x":0.0,"origin_y":0.0,"nodata":-9999.0,"bands":[{"name":"A","description":""},{"name":"A","description":""}]}"#;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        for v in [1.0f32, 2.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_raster(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_header_json_is_a_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("badjson.msr");
        let header = b"{\"width\": oops";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(header);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_raster(&path), Err(Error::Format(_))));
    }
}
