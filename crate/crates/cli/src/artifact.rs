//! Output files stamped with the invocation's config hash and root seed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dialprog_core::seed::config_hash;
use dialprog_core::{GdsModel, ProximityConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    /// Hashes the command name together with its effective settings.
    pub fn new<T: Serialize>(command: &str, settings: &T, seed: u64) -> Self {
        Self {
            config_hash: config_hash(&(command, settings)),
            seed,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    #[serde(flatten)]
    stamp: Stamp,
    #[serde(flatten)]
    payload: T,
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, body: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, payload: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(&Stamped {
        stamp: stamp.clone(),
        payload,
    })?;
    body.push('\n');
    write_text(path, &body)
}

/// CSV with a leading `#` comment line carrying the stamp.
pub fn write_csv(path: &Path, stamp: &Stamp, body: &str) -> Result<()> {
    write_text(path, &format!("# config_hash={} seed={}\n{body}", stamp.config_hash, stamp.seed))
}

/// SVG with the stamp as an XML comment after the root element's opening tag.
pub fn write_svg(path: &Path, stamp: &Stamp, svg: &str) -> Result<()> {
    let comment = format!("<!-- config_hash={} seed={} -->\n", stamp.config_hash, stamp.seed);
    let body = match svg.find('\n') {
        Some(i) => format!("{}{comment}{}", &svg[..=i], &svg[i + 1..]),
        None => format!("{svg}\n{comment}"),
    };
    write_text(path, &body)
}

/// Formats that cannot carry a stamp inline (JSONL) get `<path>.meta.json`.
pub fn write_sidecar(path: &Path, stamp: &Stamp) -> Result<()> {
    #[derive(Serialize)]
    struct Meta<'a> {
        artifact: &'a str,
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    write_json(&sidecar_path(path), stamp, &Meta { artifact: name })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// A fitted model plus the proximity settings it is scored with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub proximity: ProximityConfig,
    pub model: GdsModel,
    /// Root seed of the run that produced the model (read from the stamp).
    #[serde(default, skip_serializing)]
    pub seed: u64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| dialprog_core::Error::Validation(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

/// Loads a model written by `gds train` or `tune grid`; a bare model document
/// (as saved by the library) gets the default proximity settings.
pub fn read_model(path: &Path) -> Result<ModelFile> {
    let value: serde_json::Value = read_json(path)?;
    let parsed = if value.get("model").is_some() {
        serde_json::from_value::<ModelFile>(value)
    } else {
        serde_json::from_value::<GdsModel>(value).map(|model| ModelFile {
            proximity: ProximityConfig::default(),
            seed: model.seed,
            model,
        })
    };
    parsed
        .map_err(|e| dialprog_core::Error::Validation(format!("{}: not a model file: {e}", path.display())).into())
}
