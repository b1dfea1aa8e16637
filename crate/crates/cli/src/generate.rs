//! Dataset generation: `<id>.png`, `<id>.pgm` and `<id>.json` per image plus
//! `manifest.json`.

use std::path::{Path, PathBuf};

use aggsynth::compose::{generate_scene, ComposeContext};
use aggsynth::library::AssetCatalog;
use aggsynth::metadata::{write_metadata, ImageRecord};
use aggsynth::pgm::write_pgm;
use aggsynth::render::{composite_rgb, rasterize_graymap, write_png, Background};
use aggsynth::sieve::CLASS_COUNT;
use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{input_error, BackgroundRef, GenerationConfig};

pub const CATALOG_ENV: &str = "AGGSYNTH_CATALOG";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub instances: usize,
    pub target: u32,
    pub shortfall: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub mm_per_px: f64,
    pub asset_count: usize,
    pub per_class: [usize; CLASS_COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: GenerationConfig,
    pub catalog: CatalogSummary,
    pub images: Vec<ImageSummary>,
    /// Images whose instance count fell outside `expected_count_range`.
    pub out_of_range: Vec<String>,
}

/// Catalog location: explicit flag, then the config, then the environment.
pub fn resolve_catalog(flag: Option<&Path>, cfg: &GenerationConfig) -> anyhow::Result<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.catalog.clone())
        .or_else(|| std::env::var_os(CATALOG_ENV).map(PathBuf::from))
        .ok_or_else(|| input_error(format!("no catalog given; pass --catalog, set `catalog` in the config, or set {CATALOG_ENV}")))
}

pub fn load_background(r: &BackgroundRef) -> anyhow::Result<Background> {
    Ok(match r {
        BackgroundRef::Flat { color } => Background::Flat(*color),
        BackgroundRef::Texture { path } => Background::load_texture(path)?,
    })
}

pub fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    builder.build().context("failed to start worker threads")
}

/// Compose, render and write one image.
pub fn write_image(
    cfg: &GenerationConfig,
    catalog: &AssetCatalog,
    background: &Background,
    index: u32,
    out: &Path,
) -> anyhow::Result<ImageSummary> {
    let image_id = cfg.image_id(index);
    let background_id = background.id();
    let ctx = ComposeContext {
        catalog,
        width: cfg.canvas_width,
        height: cfg.canvas_height,
        augment: &cfg.augment,
        master_seed: cfg.master_seed,
        image_index: index as u64,
        background_id: &background_id,
    };
    let scene = generate_scene(&ctx, &cfg.stage, &cfg.psd, cfg.occlusion_variant)?;
    let rgb = composite_rgb(&scene, background, catalog, cfg.feather)?;
    let graymap = rasterize_graymap(&scene)?;
    let record = ImageRecord::from_scene(&image_id, &scene, cfg.mm_per_px);
    write_png(&rgb, out.join(format!("{image_id}.png")))?;
    write_pgm(&graymap, out.join(format!("{image_id}.pgm")))?;
    write_metadata(&record, out.join(format!("{image_id}.json")))?;
    Ok(ImageSummary {
        image_id,
        instances: scene.instances.len(),
        target: scene.target_counts.iter().sum(),
        shortfall: scene.shortfall.iter().sum(),
    })
}

/// Generate the whole dataset into `out`. Output bytes do not depend on
/// `jobs`.
pub fn generate(cfg: &GenerationConfig, catalog: &AssetCatalog, out: &Path, jobs: Option<usize>) -> anyhow::Result<Manifest> {
    cfg.validate()?;
    if catalog.mm_per_px() != cfg.mm_per_px {
        return Err(input_error(format!(
            "catalog scale {} mm/px differs from config mm_per_px {}",
            catalog.mm_per_px(),
            cfg.mm_per_px
        )));
    }
    let background = load_background(&cfg.background)?;
    std::fs::create_dir_all(out).map_err(|e| input_error(format!("{}: {e}", out.display())))?;
    let pool = thread_pool(jobs.or(cfg.jobs))?;
    let images = pool.install(|| {
        (0..cfg.image_count)
            .into_par_iter()
            .map(|i| write_image(cfg, catalog, &background, i, out))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let out_of_range = match cfg.expected_count_range {
        Some([lo, hi]) => images
            .iter()
            .filter(|s| !(lo as usize..=hi as usize).contains(&s.instances))
            .map(|s| s.image_id.clone())
            .collect(),
        None => Vec::new(),
    };
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        config: cfg.normalized(),
        catalog: CatalogSummary {
            mm_per_px: catalog.mm_per_px(),
            asset_count: catalog.len(),
            per_class: catalog.stats(),
        },
        images,
        out_of_range,
    };
    let path = out.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
