//! Command implementations behind the `aggsynth` binary.

pub mod config;
pub mod generate;
pub mod import;
pub mod presets;
pub mod stats;

use std::path::Path;

use aggsynth::eval::{evaluate_dataset, EvalOptions, MetricsReport};
use aggsynth::library::AssetCatalog;
use aggsynth::pgm::read_pgm;
use aggsynth::render::{overlay, read_png, write_png};
use aggsynth::sieve::SizeClass;
use aggsynth::synthetic::{synthetic_asset, synthetic_catalog_for};
use anyhow::Context;

pub use config::{input_error, InputError};

/// Exit status for a failed command: 2 for bad input, 1 for internal
/// failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<aggsynth::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
        if cause.downcast_ref::<image::ImageError>().is_some() {
            return 2;
        }
    }
    1
}

/// Score predictions and write `report.json` and `report.csv` into `out`.
pub fn evaluate(gt: &Path, pred: &Path, out: &Path, amodal: bool, jobs: Option<usize>) -> anyhow::Result<MetricsReport> {
    let pool = generate::thread_pool(jobs)?;
    let report = pool.install(|| evaluate_dataset(gt, pred, EvalOptions { amodal }))?;
    std::fs::create_dir_all(out).map_err(|e| input_error(format!("{}: {e}", out.display())))?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    let json_path = out.join("report.json");
    std::fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
    let csv_path = out.join("report.csv");
    std::fs::write(&csv_path, report.csv()).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(report)
}

pub fn overlay_files(image: &Path, graymap: &Path, out: &Path, alpha: f64) -> anyhow::Result<()> {
    let rgb = read_png(image)?;
    let g = read_pgm(graymap)?;
    let blended = overlay(&rgb, &g, alpha)?;
    write_png(&blended, out)?;
    Ok(())
}

/// Write synthetic particles, either as cutout/mask pairs for `import` or,
/// with `as_catalog`, directly as a catalog.
pub fn synth_assets(
    out: &Path,
    mm_per_px: f64,
    per_class: usize,
    seed: u64,
    classes: &[SizeClass],
    as_catalog: bool,
) -> anyhow::Result<usize> {
    if !(mm_per_px.is_finite() && mm_per_px > 0.0) {
        return Err(input_error("--mm-per-px must be positive"));
    }
    std::fs::create_dir_all(out).map_err(|e| input_error(format!("{}: {e}", out.display())))?;
    if as_catalog {
        let catalog: AssetCatalog = synthetic_catalog_for(mm_per_px, per_class, seed, classes)?;
        catalog.save(out)?;
        return Ok(catalog.len());
    }
    let mut written = 0;
    for &class in classes {
        for i in 0..per_class {
            let asset = synthetic_asset(mm_per_px, class, i, seed)?;
            let cutout = out.join(format!("{}.png", asset.asset_id));
            asset
                .sprite
                .save_with_format(&cutout, image::ImageFormat::Png)
                .with_context(|| format!("writing {}", cutout.display()))?;
            let mask = image::GrayImage::from_fn(asset.mask.width(), asset.mask.height(), |x, y| {
                image::Luma([if asset.mask.get(x, y) { 255 } else { 0 }])
            });
            let mask_path = out.join(format!("{}_mask.png", asset.asset_id));
            mask.save_with_format(&mask_path, image::ImageFormat::Png)
                .with_context(|| format!("writing {}", mask_path.display()))?;
            written += 1;
        }
    }
    Ok(written)
}
