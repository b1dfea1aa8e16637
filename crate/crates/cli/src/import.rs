//! Import of cutout/mask pairs into a catalog directory.
//!
//! A cutout `X.png` pairs with `X_mask.png` or `X_mask.pgm` in the same
//! directory. Mask pixels count as foreground when nonzero (16-bit PGM) or at
//! least half intensity (other rasters).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aggsynth::geometry::{BinaryMask, RefineParams};
use aggsynth::library::{import_asset, AssetCatalog, ParticleAsset};
use aggsynth::pgm::read_pgm;
use aggsynth::sieve::CLASS_COUNT;
use rayon::prelude::*;

use crate::config::input_error;

const MASK_SUFFIX: &str = "_mask";

#[derive(Debug, Clone, Default)]
pub struct ImportSummary {
    pub imported: Vec<String>,
    /// `(file, reason)` for pairs that could not be imported.
    pub skipped: Vec<(PathBuf, String)>,
    pub unpaired: Vec<PathBuf>,
    /// Catalog contents per class after the import.
    pub per_class: [usize; CLASS_COUNT],
}

struct Pair {
    id: String,
    cutout: PathBuf,
    mask: PathBuf,
}

fn is_raster(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
}

/// Replace characters not allowed in asset ids.
pub fn sanitize_id(stem: &str) -> String {
    let mut id: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    if id.starts_with('.') {
        id.replace_range(0..1, "_");
    }
    id
}

fn find_pairs(src: &Path) -> anyhow::Result<(Vec<Pair>, Vec<PathBuf>)> {
    let entries = std::fs::read_dir(src).map_err(|e| input_error(format!("{}: {e}", src.display())))?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| input_error(format!("{}: {e}", src.display())))?.path();
        if path.is_file() && is_raster(&path) {
            files.push(path);
        }
    }
    files.sort();
    let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut masks: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut cutouts = Vec::new();
    for f in files {
        match stem(&f).strip_suffix(MASK_SUFFIX) {
            Some(base) => masks.entry(base.to_string()).or_default().push(f),
            None if f.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) => cutouts.push(f),
            None => {}
        }
    }
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for cutout in cutouts {
        let base = stem(&cutout);
        match masks.remove(&base) {
            Some(mut candidates) => {
                // prefer png over pgm when both exist; the rest stay unpaired
                candidates.sort_by_key(|p| !p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")));
                let mask = candidates.remove(0);
                unpaired.extend(candidates);
                pairs.push(Pair {
                    id: sanitize_id(&base),
                    cutout,
                    mask,
                });
            }
            None => unpaired.push(cutout),
        }
    }
    unpaired.extend(masks.into_values().flatten());
    unpaired.sort();
    Ok((pairs, unpaired))
}

pub fn read_mask(path: &Path) -> anyhow::Result<BinaryMask> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        match read_pgm(path) {
            Ok(g) => {
                let bits = g.ids().iter().map(|&v| v != 0).collect();
                return Ok(BinaryMask::from_bits(g.width(), g.height(), bits)?);
            }
            Err(aggsynth::Error::UnsupportedMaxval(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let img = image::open(path)?.to_luma16();
    let bits = img.pixels().map(|p| p.0[0] >= 0x8000).collect();
    Ok(BinaryMask::from_bits(img.width(), img.height(), bits)?)
}

fn import_pair(pair: &Pair, mm_per_px: f64, refine: &RefineParams) -> anyhow::Result<ParticleAsset> {
    let mask = read_mask(&pair.mask)?;
    let cutout = image::open(&pair.cutout)?.to_rgba8();
    if cutout.dimensions() != mask.dims() {
        anyhow::bail!(
            "cutout is {}x{} but mask is {}x{}",
            cutout.width(),
            cutout.height(),
            mask.width(),
            mask.height()
        );
    }
    let provenance = pair.cutout.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(import_asset(&pair.id, &cutout, &mask, mm_per_px, refine, &provenance)?)
}

/// Import every pair under `src` into the catalog at `out`, extending an
/// existing catalog there. Bad pairs are skipped and reported; an import
/// with no usable pair fails.
pub fn import_dir(src: &Path, mm_per_px: f64, out: &Path, refine: &RefineParams) -> anyhow::Result<ImportSummary> {
    if !(mm_per_px.is_finite() && mm_per_px > 0.0) {
        return Err(input_error("--mm-per-px must be positive"));
    }
    refine.validate()?;
    let (pairs, unpaired) = find_pairs(src)?;
    if pairs.is_empty() {
        return Err(input_error(format!("no input pairs in {}", src.display())));
    }
    let results: Vec<anyhow::Result<ParticleAsset>> =
        pairs.par_iter().map(|p| import_pair(p, mm_per_px, refine)).collect();

    let mut catalog = if out.join("index.json").is_file() {
        AssetCatalog::load(out, Some(mm_per_px))?
    } else {
        AssetCatalog::new(mm_per_px)?
    };
    let mut summary = ImportSummary {
        unpaired,
        ..Default::default()
    };
    for (pair, result) in pairs.iter().zip(results) {
        match result.and_then(|asset| Ok(catalog.insert(asset)?)) {
            Ok(()) => summary.imported.push(pair.id.clone()),
            Err(e) => summary.skipped.push((pair.cutout.clone(), format!("{e:#}"))),
        }
    }
    if summary.imported.is_empty() {
        return Err(input_error(format!(
            "none of the {} input pairs could be imported",
            pairs.len()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| input_error(format!("{}: {e}", out.display())))?;
    catalog.save(out)?;
    summary.per_class = catalog.stats();
    Ok(summary)
}
