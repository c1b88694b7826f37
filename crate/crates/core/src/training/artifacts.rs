//! A model directory: one checkpoint per trained subnet plus `manifest.txt`.
//!
//! The manifest is `key = value` text recording the architecture, seed, the
//! fixed Gaussian and how many epochs each subnet has been trained for.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::networks::{ArchScale, ModelBundle, Role, GAUSSIAN_SIDE, GAUSSIAN_SIGMA};
use crate::nn::checkpoint::{load_stack, save_stack};

pub const MANIFEST: &str = "manifest.txt";
const FORMAT: u32 = 1;

pub fn checkpoint_path(dir: &Path, role: Role) -> PathBuf {
    dir.join(format!("{}.ckpt", role.name()))
}

/// Epochs completed per subnet; absent roles have never been trained.
pub type EpochsDone = BTreeMap<Role, usize>;

pub fn save_model_dir(dir: impl AsRef<Path>, bundle: &ModelBundle, epochs: &EpochsDone) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut m = String::new();
    let mut kv = |k: &str, v: String| writeln!(m, "{k} = {v}").expect("string write");
    kv("format", FORMAT.to_string());
    kv("blocks", bundle.arch.blocks.to_string());
    kv("head_blocks", bundle.arch.head_blocks.to_string());
    kv("channels", bundle.arch.channels.to_string());
    kv("seed", bundle.seed.to_string());
    kv("gaussian_sigma", GAUSSIAN_SIGMA.to_string());
    kv("gaussian_side", GAUSSIAN_SIDE.to_string());
    for role in Role::ALL {
        if let Some(stack) = bundle.slot(role) {
            save_stack(stack, checkpoint_path(dir, role))?;
            kv(
                &format!("epochs.{}", role.name()),
                epochs.get(&role).copied().unwrap_or(0).to_string(),
            );
        }
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, m).map_err(|e| Error::io(&path, e))
}

pub fn load_model_dir(dir: impl AsRef<Path>) -> Result<(ModelBundle, EpochsDone)> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut fields = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("manifest line {line:?}")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<&str> {
        fields
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint(format!("manifest lacks {k}")))
    };
    let num = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Checkpoint(format!("manifest {k} is not an integer")))
    };
    if num("format")? != FORMAT as u64 {
        return Err(Error::Checkpoint(format!("unsupported manifest format {}", get("format")?)));
    }
    let sigma: f64 = get("gaussian_sigma")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad gaussian_sigma".into()))?;
    if sigma != GAUSSIAN_SIGMA || num("gaussian_side")? != GAUSSIAN_SIDE as u64 {
        return Err(Error::Checkpoint(format!(
            "model was trained with a different Gaussian (sigma {sigma}, side {})",
            get("gaussian_side")?
        )));
    }
    let arch = ArchScale {
        blocks: num("blocks")? as usize,
        head_blocks: num("head_blocks")? as usize,
        channels: num("channels")? as usize,
    };
    let mut bundle = ModelBundle::empty(arch, num("seed")?);
    let mut epochs = EpochsDone::new();
    for role in Role::ALL {
        let key = format!("epochs.{}", role.name());
        if fields.contains_key(&key) {
            let ckpt = checkpoint_path(dir, role);
            if !ckpt.exists() {
                return Err(Error::MissingArtifact(ckpt));
            }
            *bundle.slot_mut(role) = Some(load_stack(&ckpt)?);
            epochs.insert(role, num(&key)? as usize);
        }
    }
    bundle.check_architecture()?;
    Ok((bundle, epochs))
}
