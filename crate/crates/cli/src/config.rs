//! Generation configs: one JSON document per dataset.

use std::fmt;
use std::path::{Path, PathBuf};

use aggsynth::augment::AugmentConfig;
use aggsynth::compose::{OcclusionVariant, StageSpec};
use aggsynth::psd::PsdSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bad user input: a config, a flag, or an input file. Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(message: impl Into<String>) -> anyhow::Error {
    InputError(message.into()).into()
}

fn default_canvas() -> u32 {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundRef {
    Flat { color: [u8; 3] },
    /// PNG texture, tiled over the canvas. Relative paths resolve against the
    /// config file.
    Texture { path: PathBuf },
}

impl Default for BackgroundRef {
    fn default() -> Self {
        BackgroundRef::Flat { color: [38, 40, 43] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Image ids are `<name>_<index:05>`.
    pub name: String,
    pub master_seed: u64,
    pub image_count: u32,
    #[serde(default = "default_canvas")]
    pub canvas_width: u32,
    #[serde(default = "default_canvas")]
    pub canvas_height: u32,
    pub mm_per_px: f64,
    pub stage: StageSpec,
    pub psd: PsdSpec,
    #[serde(default)]
    pub occlusion_variant: OcclusionVariant,
    #[serde(default)]
    pub augment: AugmentConfig,
    #[serde(default)]
    pub background: BackgroundRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker cap; output does not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Inclusive per-image instance count range; images outside it are
    /// reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_count_range: Option<[u32; 2]>,
    #[serde(default)]
    pub feather: bool,
}

fn prefixed(prefix: &str, e: aggsynth::Error) -> anyhow::Error {
    match e {
        aggsynth::Error::InvalidParameter { name, reason } => input_error(format!("invalid config at `{prefix}.{name}`: {reason}")),
        e => input_error(format!("invalid config at `{prefix}`: {e}")),
    }
}

fn invalid(field: &str, reason: &str) -> anyhow::Error {
    input_error(format!("invalid config at `{field}`: {reason}"))
}

impl GenerationConfig {
    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| input_error(format!("{origin}: invalid config at `{}`: {}", e.path(), e.inner())))?;
        Ok(cfg)
    }

    /// Parse a config file. Relative paths inside it are resolved against
    /// its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.catalog.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output_dir.as_mut() {
            resolve(p);
        }
        if let BackgroundRef::Texture { path } = &mut cfg.background {
            resolve(path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(invalid("name", "use letters, digits, '-', '_' or '.'"));
        }
        if self.image_count == 0 {
            return Err(invalid("image_count", "must be positive"));
        }
        if self.canvas_width == 0 || self.canvas_height == 0 {
            return Err(invalid("canvas_width", "canvas dimensions must be positive"));
        }
        if !(self.mm_per_px.is_finite() && self.mm_per_px > 0.0) {
            return Err(invalid("mm_per_px", "must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(invalid("jobs", "must be positive"));
        }
        if let Some([lo, hi]) = self.expected_count_range {
            if lo > hi {
                return Err(invalid("expected_count_range", "lower bound exceeds upper bound"));
            }
        }
        self.stage.validate().map_err(|e| prefixed("stage", e))?;
        self.psd.validate().map_err(|e| prefixed("psd", e))?;
        self.augment.validate().map_err(|e| prefixed("augment", e))?;
        if let aggsynth::psd::PsdSpec::Explicit { counts } = &self.psd {
            let allowed = aggsynth::psd::class_mask(&self.stage.classes);
            if let Some(c) = (0..counts.len()).find(|&c| counts[c] > 0 && !allowed[c]) {
                return Err(invalid("psd.counts", &format!("class {} is not in stage.classes", c + 1)));
            }
        }
        Ok(())
    }

    /// The config with run-local fields (output location, worker count)
    /// cleared, as recorded in the manifest.
    pub fn normalized(&self) -> Self {
        Self {
            output_dir: None,
            jobs: None,
            catalog: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the normalized config's JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.normalized()).expect("configs serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn image_id(&self, index: u32) -> String {
        format!("{}_{:05}", self.name, index)
    }
}
