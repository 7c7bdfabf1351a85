//! JSON file schemas and directory pairing shared by the commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use facade_core::lafr::EdgeAssignment;
use facade_core::synth::{CorruptionParams, FacadeSpec};
use facade_core::{Error, LineSegment, RevisionStats};

/// On-disk segment list, `{"segments": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentFile {
    pub segments: Vec<LineSegment>,
}

/// Revision report written next to a revised mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviseReport {
    pub total: usize,
    pub revised: usize,
    pub discarded: usize,
    pub overlap_pixels: u64,
    pub anchors: Vec<EdgeAssignment>,
}

impl ReviseReport {
    pub fn new(stats: RevisionStats, anchors: Vec<EdgeAssignment>) -> Self {
        ReviseReport {
            total: stats.anchors_total,
            revised: stats.anchors_revised,
            discarded: stats.anchors_discarded,
            overlap_pixels: stats.overlap_pixels,
            anchors,
        }
    }
}

/// Record of one generated fixture set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: FacadeSpec,
    pub corruption: CorruptionParams,
    pub count: usize,
    pub base_seed: u64,
    pub entries: Vec<SynthEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthEntry {
    pub image: String,
    pub gt: String,
    pub pred: String,
    pub seed: u64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::malformed("JSON", e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::malformed("JSON", format!("{}: {e}", path.display())))
}

/// All `.png` files in a directory, keyed by file name, sorted.
pub fn list_pngs(dir: &Path) -> Result<Vec<(String, PathBuf)>, Error> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name.ends_with(".png") {
            out.push((name.to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Files playing one role in a fixture directory. Directories in the
/// synth layout mix roles in one place with `img_`/`gt_`/`pred_` name
/// prefixes; plain directories hold one role per directory. If any file
/// carries the role prefix, only those count and the key is the name
/// with the prefix stripped; otherwise every PNG counts under its own
/// name. Either way the same key in two listings means "same item".
pub fn list_role(dir: &Path, role: &str) -> Result<BTreeMap<String, PathBuf>, Error> {
    let all = list_pngs(dir)?;
    let prefix = format!("{role}_");
    let prefixed: BTreeMap<String, PathBuf> = all
        .iter()
        .filter(|(name, _)| name.starts_with(&prefix))
        .map(|(name, path)| (name[prefix.len()..].to_string(), path.clone()))
        .collect();
    if !prefixed.is_empty() {
        return Ok(prefixed);
    }
    Ok(all.into_iter().collect())
}
