//! Labelled training pixels: CSV files with a `row,col,label` header.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPixel {
    pub row: u32,
    pub col: u32,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    pub entries: Vec<LabeledPixel>,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }
}

pub fn save_labels(labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for e in &labels.entries {
        w.serialize(e).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(csv_error)?;
    let headers = r.headers().map_err(csv_error)?;
    if headers != vec!["row", "col", "label"] {
        return Err(Error::format(format!(
            "label file must start with a row,col,label header, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut entries = Vec::new();
    for rec in r.deserialize() {
        let e: LabeledPixel = rec.map_err(csv_error)?;
        if e.label > 1 {
            return Err(Error::validation(format!(
                "label must be 0 or 1, got {} at row={}, col={}",
                e.label, e.row, e.col
            )));
        }
        entries.push(e);
    }
    Ok(LabelSet { entries })
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(e.to_string())
    }
}
