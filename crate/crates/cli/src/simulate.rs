//! Simulated runs written to disk with a manifest of hashes.

use std::path::Path;

use anyhow::Context;
use biloc_core::io::save_run;
use biloc_core::sim::{simulate_run, GroundTruth, Node};
use biloc_core::ExperimentConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::write_json;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub duration_s: f64,
    pub clicks: [usize; 4],
    pub files: Vec<FileEntry>,
    pub truth: GroundTruth,
    /// Where the AB and BC offset histograms should peak, in ticks.
    pub expected_offset_ticks: [f64; 2],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run the simulation described by `cfg` and write everything into `out`.
pub fn simulate_to_dir(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let config_text = cfg.to_toml_string()?;
    std::fs::write(out.join(CONFIG_FILE), &config_text)?;

    let run = simulate_run(
        &cfg.network,
        &cfg.schedule,
        cfg.run.duration_s,
        cfg.run.seed,
    )?;
    let written = save_run(out, &run.streams, &run.references, cfg.run.stream_format)?;
    let mut files = Vec::with_capacity(written.len());
    for path in written {
        let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        files.push(FileEntry {
            name: path
                .file_name()
                .expect("file path")
                .to_string_lossy()
                .into_owned(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: cfg.run.seed,
        duration_s: cfg.run.duration_s,
        clicks: Node::ALL.map(|n| run.streams.get(n).len()),
        files,
        expected_offset_ticks: [
            run.truth.pair_offset_ticks(Node::A, Node::BArmA),
            run.truth.pair_offset_ticks(Node::C, Node::BArmC),
        ],
        truth: run.truth,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn cmd_simulate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(d) = duration {
        cfg.run.duration_s = d;
    }
    let m = simulate_to_dir(&cfg, out)?;
    println!("wrote {} files to {}", m.files.len() + 2, out.display());
    for (node, n) in Node::ALL.iter().zip(m.clicks) {
        println!("{:<7} {n} clicks", node.name());
    }
    Ok(())
}
