//! Output directory layout and the run manifest.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::experiments::RunOutput;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Manifest for a finished run. Only `stages` and `threads` vary between
/// reruns of the same configuration.
pub fn manifest(config: &Config, out: &RunOutput, threads: usize) -> Value {
    let outputs: Vec<Value> = out
        .files
        .iter()
        .map(|(name, bytes)| json!({ "file": name, "bytes": bytes.len(), "sha256": sha256_hex(bytes) }))
        .collect();
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "kind": config.kind.name(),
        "seed": config.seed,
        "config": config.raw,
        "threads": threads,
        "verdict": if out.verdict { "pass" } else { "fail" },
        "stages": out.stages,
        "outputs": outputs,
    })
}

pub fn write_run(dir: &Path, config: &Config, out: &RunOutput, threads: usize) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        fs::write(dir.join(name), bytes)?;
    }
    let mut text = serde_json::to_vec_pretty(&manifest(config, out, threads)).map_err(io::Error::other)?;
    text.push(b'\n');
    fs::write(dir.join(MANIFEST), text)
}
