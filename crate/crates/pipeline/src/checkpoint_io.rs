//! Checkpoint directories: `metadata.toml` (inspectable) next to
//! `params.bin` (the opaque parameter blob).

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use sarc_core::encoder::{CheckpointMeta, ClassifierHandle};

const METADATA_FILE: &str = "metadata.toml";
const PARAMS_FILE: &str = "params.bin";

pub fn save_checkpoint(handle: &ClassifierHandle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let (meta, blob) = handle.to_checkpoint();
    let rendered = toml::to_string_pretty(&meta).context("cannot serialize checkpoint metadata")?;
    fs::write(dir.join(METADATA_FILE), rendered)?;
    fs::write(dir.join(PARAMS_FILE), blob)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<ClassifierHandle> {
    let meta_path = dir.join(METADATA_FILE);
    let raw = fs::read_to_string(&meta_path)
        .with_context(|| format!("cannot open {}", meta_path.display()))?;
    let meta: CheckpointMeta = toml::from_str(&raw)
        .with_context(|| format!("cannot parse {}", meta_path.display()))?;
    let blob = fs::read(dir.join(PARAMS_FILE))
        .with_context(|| format!("cannot open {}", dir.join(PARAMS_FILE).display()))?;
    Ok(ClassifierHandle::from_checkpoint(meta, &blob)?)
}
