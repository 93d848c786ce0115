//! Per-stage run manifests: what went in, what came out, and which build
//! produced it. Paths are recorded as given in the config or as bare file
//! names so manifests do not depend on where a run happened.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use canopyflux::{Error, Result};

use crate::config::sha256_hex;
use crate::error::Stage;

pub const MANIFEST_SCHEMA: &str = "manifest-v1";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    tool: &'a str,
    version: &'a str,
    stage: &'a str,
    /// site id -> sha256 of its config file
    configs: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

pub fn file_name(stage: Stage) -> String {
    format!("manifest_{stage}.json")
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn label(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `inputs` pairs a display label with the file to hash; outputs are
/// labelled by file name.
pub fn write(
    out_dir: &Path,
    stage: Stage,
    configs: &[(&str, &str)],
    inputs: &[(String, PathBuf)],
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let mut m = Manifest {
        schema: MANIFEST_SCHEMA,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        stage: stage.name(),
        configs: configs.iter().map(|(s, h)| (s.to_string(), h.to_string())).collect(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    for (name, path) in inputs {
        m.inputs.insert(name.clone(), hash_file(path)?);
    }
    for path in outputs {
        m.outputs.insert(label(path), hash_file(path)?);
    }
    let path = out_dir.join(file_name(stage));
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
