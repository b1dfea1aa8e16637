//! Particle assets: refined, measured and sieve-classified cutouts, and the
//! on-disk catalog the generator draws from.
//!
//! Catalog layout:
//!
//! ```text
//! <root>/index.json
//! <root>/class_<k>/<asset_id>.png   RGBA sprite, alpha is coverage
//! <root>/class_<k>/<asset_id>.pgm   mask, ids 0/1
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbaImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{farthest_pair, largest_component, morph_refine, BinaryMask, RefineParams};
use crate::pgm::{self, GraymapMask};
use crate::sieve::{classify_size, SizeClass, CLASS_COUNT};

pub const INDEX_FILE: &str = "index.json";
const INDEX_FORMAT: u32 = 1;

#[derive(Clone, PartialEq)]
pub struct ParticleAsset {
    pub asset_id: String,
    /// Original colors under the mask, alpha 255 inside and 0 outside.
    pub sprite: RgbaImage,
    pub mask: BinaryMask,
    pub size_mm: f64,
    pub size_class: SizeClass,
    pub provenance: String,
}

impl fmt::Debug for ParticleAsset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParticleAsset")
            .field("asset_id", &self.asset_id)
            .field("dims", &self.mask.dims())
            .field("area", &self.mask.area())
            .field("size_mm", &self.size_mm)
            .field("size_class", &self.size_class)
            .finish()
    }
}

/// Asset ids double as file names, so they are restricted to
/// `[A-Za-z0-9._-]` and may not start with a dot.
pub fn validate_asset_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidAssetId(id.to_string()))
    }
}

/// Refine a raw cutout mask, keep its largest component, measure and
/// classify it, and crop to the mask bounding box plus a 1-pixel margin.
pub fn import_asset(
    asset_id: &str,
    cutout: &RgbaImage,
    raw_mask: &BinaryMask,
    mm_per_px: f64,
    refine: &RefineParams,
    provenance: &str,
) -> Result<ParticleAsset> {
    validate_asset_id(asset_id)?;
    if cutout.dimensions() != raw_mask.dims() {
        let (w, h) = cutout.dimensions();
        return Err(Error::DimensionMismatch {
            left_width: w,
            left_height: h,
            right_width: raw_mask.width(),
            right_height: raw_mask.height(),
        });
    }
    if !(mm_per_px.is_finite() && mm_per_px > 0.0) {
        return Err(Error::param("mm_per_px", "must be a positive number"));
    }
    let refined = morph_refine(raw_mask, refine)?;
    let particle = largest_component(&refined, refine.connectivity);
    let Some(bbox) = particle.bbox() else {
        return Err(Error::DegenerateParticle);
    };
    let diameter_px = farthest_pair(&particle)?;
    if diameter_px == 0.0 {
        return Err(Error::DegenerateParticle);
    }
    let size_mm = diameter_px * mm_per_px;
    let size_class = classify_size(size_mm)?;

    let (w, h) = (bbox.width + 2, bbox.height + 2);
    let mut mask = BinaryMask::new(w, h)?;
    let mut sprite = RgbaImage::new(w, h);
    for y in 0..bbox.height {
        for x in 0..bbox.width {
            let (sx, sy) = (bbox.x + x, bbox.y + y);
            if particle.get(sx, sy) {
                mask.set(x + 1, y + 1, true);
                let mut px = *cutout.get_pixel(sx, sy);
                px.0[3] = 255;
                sprite.put_pixel(x + 1, y + 1, px);
            }
        }
    }
    Ok(ParticleAsset {
        asset_id: asset_id.to_string(),
        sprite,
        mask,
        size_mm,
        size_class,
        provenance: provenance.to_string(),
    })
}

impl ParticleAsset {
    fn check(&self) -> Result<()> {
        if self.sprite.dimensions() != self.mask.dims() {
            return Err(Error::invariant(&self.asset_id, "sprite and mask dimensions differ"));
        }
        let coverage_matches = self
            .sprite
            .pixels()
            .zip(self.mask.bits())
            .all(|(p, &m)| (p.0[3] != 0) == m);
        if !coverage_matches {
            return Err(Error::invariant(&self.asset_id, "sprite coverage disagrees with mask"));
        }
        if !self.size_class.contains(self.size_mm) {
            return Err(Error::invariant(
                &self.asset_id,
                format!("size {} mm outside {:?}", self.size_mm, self.size_class),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexEntry {
    asset_id: String,
    class: SizeClass,
    size_mm: f64,
    width: u32,
    height: u32,
    provenance: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogIndex {
    format: u32,
    mm_per_px: f64,
    assets: Vec<IndexEntry>,
}

/// Per-class pools of particle assets, all imported at one mm-per-pixel scale.
#[derive(Clone)]
pub struct AssetCatalog {
    root: Option<PathBuf>,
    mm_per_px: f64,
    pools: Vec<Vec<ParticleAsset>>,
    by_id: HashMap<String, (usize, usize)>,
}

impl fmt::Debug for AssetCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AssetCatalog")
            .field("root", &self.root)
            .field("mm_per_px", &self.mm_per_px)
            .field("counts", &self.stats())
            .finish()
    }
}

/// Equality ignores where the catalog was loaded from.
impl PartialEq for AssetCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.mm_per_px == other.mm_per_px && self.pools == other.pools
    }
}

impl AssetCatalog {
    pub fn new(mm_per_px: f64) -> Result<Self> {
        if !(mm_per_px.is_finite() && mm_per_px > 0.0) {
            return Err(Error::param("mm_per_px", "must be a positive number"));
        }
        Ok(Self {
            root: None,
            mm_per_px,
            pools: vec![Vec::new(); CLASS_COUNT],
            by_id: HashMap::new(),
        })
    }

    pub fn from_assets(mm_per_px: f64, assets: impl IntoIterator<Item = ParticleAsset>) -> Result<Self> {
        let mut catalog = Self::new(mm_per_px)?;
        for asset in assets {
            catalog.insert(asset)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, asset: ParticleAsset) -> Result<()> {
        validate_asset_id(&asset.asset_id)?;
        asset.check()?;
        if self.by_id.contains_key(&asset.asset_id) {
            return Err(Error::DuplicateAsset(asset.asset_id));
        }
        let slot = asset.size_class.slot();
        self.by_id
            .insert(asset.asset_id.clone(), (slot, self.pools[slot].len()));
        self.pools[slot].push(asset);
        Ok(())
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn mm_per_px(&self) -> f64 {
        self.mm_per_px
    }

    pub fn pool(&self, class: SizeClass) -> &[ParticleAsset] {
        &self.pools[class.slot()]
    }

    pub fn get(&self, asset_id: &str) -> Option<&ParticleAsset> {
        self.by_id.get(asset_id).map(|&(c, i)| &self.pools[c][i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParticleAsset> {
        self.pools.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Number of assets per class, index 0 is class 1.
    pub fn stats(&self) -> [usize; CLASS_COUNT] {
        std::array::from_fn(|i| self.pools[i].len())
    }

    pub fn save(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        for class in SizeClass::all() {
            let dir = root.join(class_dir(class));
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        self.iter().collect::<Vec<_>>().par_iter().try_for_each(|asset| {
            let dir = root.join(class_dir(asset.size_class));
            let png = dir.join(format!("{}.png", asset.asset_id));
            asset
                .sprite
                .save_with_format(&png, image::ImageFormat::Png)
                .map_err(|source| Error::Image { path: png, source })?;
            let ids = asset.mask.bits().iter().map(|&b| b as u16).collect();
            let g = GraymapMask::from_ids(asset.mask.width(), asset.mask.height(), ids)?;
            pgm::write_pgm(&g, dir.join(format!("{}.pgm", asset.asset_id)))
        })?;
        let index = CatalogIndex {
            format: INDEX_FORMAT,
            mm_per_px: self.mm_per_px,
            assets: self
                .iter()
                .map(|a| IndexEntry {
                    asset_id: a.asset_id.clone(),
                    class: a.size_class,
                    size_mm: a.size_mm,
                    width: a.mask.width(),
                    height: a.mask.height(),
                    provenance: a.provenance.clone(),
                })
                .collect(),
        };
        let path = root.join(INDEX_FILE);
        let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Load a catalog written by [`save`](Self::save). When
    /// `expected_mm_per_px` is given it must match the index exactly.
    pub fn load(root: impl AsRef<Path>, expected_mm_per_px: Option<f64>) -> Result<Self> {
        let root = root.as_ref();
        let index_path = root.join(INDEX_FILE);
        let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let index: CatalogIndex = serde_path_to_error::deserialize(de).map_err(|e| Error::Catalog {
            path: index_path.clone(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })?;
        if index.format != INDEX_FORMAT {
            return Err(Error::Catalog {
                path: index_path,
                message: format!("unsupported index format {}", index.format),
            });
        }
        if let Some(expected) = expected_mm_per_px {
            if expected != index.mm_per_px {
                return Err(Error::ScaleMismatch {
                    expected,
                    found: index.mm_per_px,
                });
            }
        }
        let assets: Vec<ParticleAsset> = index
            .assets
            .par_iter()
            .map(|entry| load_asset(root, entry))
            .collect::<Result<_>>()?;
        let mut catalog = Self::from_assets(index.mm_per_px, assets)?;
        catalog.root = Some(root.to_path_buf());
        Ok(catalog)
    }
}

fn class_dir(class: SizeClass) -> String {
    format!("class_{}", class.index())
}

fn load_asset(root: &Path, entry: &IndexEntry) -> Result<ParticleAsset> {
    validate_asset_id(&entry.asset_id)?;
    let dir = root.join(class_dir(entry.class));
    let corrupt = |path: &Path, message: String| Error::Catalog {
        path: path.to_path_buf(),
        message,
    };
    let mask_path = dir.join(format!("{}.pgm", entry.asset_id));
    if !mask_path.is_file() {
        return Err(corrupt(&mask_path, "mask file is missing".into()));
    }
    let g = pgm::read_pgm(&mask_path).map_err(|e| corrupt(&mask_path, e.to_string()))?;
    if g.ids().iter().any(|&v| v > 1) {
        return Err(corrupt(&mask_path, "mask values must be 0 or 1".into()));
    }
    let mask = BinaryMask::from_bits(g.width(), g.height(), g.ids().iter().map(|&v| v == 1).collect())?;

    let png_path = dir.join(format!("{}.png", entry.asset_id));
    if !png_path.is_file() {
        return Err(corrupt(&png_path, "sprite file is missing".into()));
    }
    let sprite = image::open(&png_path)
        .map_err(|e| corrupt(&png_path, e.to_string()))?
        .to_rgba8();
    if sprite.dimensions() != (entry.width, entry.height) || mask.dims() != (entry.width, entry.height) {
        return Err(corrupt(&png_path, "raster dimensions disagree with index".into()));
    }
    let asset = ParticleAsset {
        asset_id: entry.asset_id.clone(),
        sprite,
        mask,
        size_mm: entry.size_mm,
        size_class: entry.class,
        provenance: entry.provenance.clone(),
    };
    asset.check().map_err(|e| corrupt(&png_path, e.to_string()))?;
    Ok(asset)
}
