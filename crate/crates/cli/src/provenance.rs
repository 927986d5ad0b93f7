//! Provenance records embedded in every output the tool writes.
//!
//! Each record names the tool, its version, the subcommand and the resolved
//! parameters that produced the file — enough to reproduce it exactly.
//! Records carry no timestamps or host details, so rerunning a command
//! yields byte-identical output.

use canopy_core::msr::Extras;
use serde_json::{json, Value};

pub fn record(command: &str, parameters: Value) -> Value {
    json!({
        "tool": "canopy",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": parameters,
    })
}

/// MSR header extras holding a provenance record.
pub fn extras(command: &str, parameters: Value) -> Extras {
    let mut e = Extras::new();
    e.insert("provenance".into(), record(command, parameters));
    e
}

/// Single-line form used in PPM comments.
pub fn comment(command: &str, parameters: Value) -> String {
    format!("provenance: {}", record(command, parameters))
}
