//! Scene collections on disk, reproducible from a manifest.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{generate, SceneSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Spec shared by every scene; its `seed` is replaced per entry.
    pub template: SceneSpec,
    pub scenes: Vec<ManifestEntry>,
}

impl Manifest {
    /// Scene `i` gets seed `template.seed + i` and directory `scene_0000`….
    pub fn new(template: &SceneSpec, count: usize) -> Self {
        Self {
            template: template.clone(),
            scenes: (0..count)
                .map(|i| ManifestEntry {
                    name: format!("scene_{i:04}"),
                    seed: template.seed.wrapping_add(i as u64),
                })
                .collect(),
        }
    }

    pub fn spec_for(&self, entry: &ManifestEntry) -> SceneSpec {
        SceneSpec {
            seed: entry.seed,
            ..self.template.clone()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Writes every scene of the manifest under `out_dir`, plus `manifest.json`.
pub fn regenerate(manifest: &Manifest, out_dir: impl AsRef<Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut seen = HashSet::new();
    for entry in &manifest.scenes {
        if !seen.insert(entry.seed) {
            log::warn!(
                "seed {} appears more than once; {} duplicates an earlier scene",
                entry.seed,
                entry.name
            );
        }
    }
    for entry in &manifest.scenes {
        log::info!("writing {} (seed {})", entry.name, entry.seed);
        generate(&manifest.spec_for(entry))?.write_to_dir(out_dir.join(&entry.name))?;
    }
    manifest.save(out_dir.join("manifest.json"))
}

pub fn write_corpus(template: &SceneSpec, count: usize, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let manifest = Manifest::new(template, count);
    regenerate(&manifest, out_dir)?;
    Ok(manifest)
}
