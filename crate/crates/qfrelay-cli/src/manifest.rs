//! Run manifests: every output file points back to exactly one manifest,
//! and the manifest hash pins the command, tool version, resolved config
//! and seed — everything that determines the numeric payload. Re-running
//! with the same manifest therefore reproduces the numbers bit for bit;
//! only the timestamp differs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Resolved;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub tool_version: &'a str,
    pub created_unix: u64,
    pub seed: u64,
    pub config: &'a Resolved,
    pub outputs: Vec<String>,
    pub manifest_hash: String,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hash of the reproducibility-relevant fields (no timestamp).
pub fn manifest_hash(command: &str, config: &Resolved, seed: u64) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        command: &'a str,
        tool_version: &'a str,
        config: &'a Resolved,
        seed: u64,
    }
    let key = Key {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        config,
        seed,
    };
    let encoded = serde_json::to_string(&key).expect("manifest key serializes");
    format!("fnv1a64:{:016x}", fnv1a64(encoded.as_bytes()))
}

/// Write `<command>_manifest.json` into `out_dir` and return its hash.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: &Resolved,
    outputs: &[&str],
    hash: &str,
) -> Result<PathBuf> {
    let manifest = Manifest {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: config.solver.seed,
        config,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        manifest_hash: hash.to_string(),
    };
    let path = out_dir.join(format!("{}_manifest.json", command.replace('-', "_")));
    let text = serde_json::to_string_pretty(&manifest).context("serialize manifest")?;
    std::fs::write(&path, text).with_context(|| format!("write {}", path.display()))?;
    Ok(path)
}
