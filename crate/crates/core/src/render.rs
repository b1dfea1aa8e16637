//! Rasterize scenes: the RGB composite, the instance-id graymap, and debug
//! overlays.

use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use rayon::prelude::*;

use crate::augment::apply;
use crate::compose::Scene;
use crate::error::{Error, Result};
use crate::library::AssetCatalog;
use crate::pgm::GraymapMask;
use crate::seed::mix64;

/// Canvas background. Textures tile toroidally.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Flat([u8; 3]),
    Texture { id: String, image: RgbImage },
}

impl Background {
    pub fn id(&self) -> String {
        match self {
            Background::Flat([r, g, b]) => format!("flat-{r:02x}{g:02x}{b:02x}"),
            Background::Texture { id, .. } => id.clone(),
        }
    }

    pub fn load_texture(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let image = read_png(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "texture".into());
        Ok(Background::Texture { id, image })
    }

    pub fn render(&self, width: u32, height: u32) -> Result<RgbImage> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(match self {
            Background::Flat(c) => RgbImage::from_pixel(width, height, Rgb(*c)),
            Background::Texture { image, .. } => {
                let (tw, th) = image.dimensions();
                RgbImage::from_fn(width, height, |x, y| *image.get_pixel(x % tw, y % th))
            }
        })
    }
}

/// Paint the scene over the background in z order. Each sprite is rebuilt from
/// the catalog and must reproduce the stored amodal mask. With `feather`, rim
/// pixels are averaged with what lies beneath.
pub fn composite_rgb(scene: &Scene, background: &Background, catalog: &AssetCatalog, feather: bool) -> Result<RgbImage> {
    let mut canvas = background.render(scene.width, scene.height)?;
    let sprites = scene
        .instances
        .par_iter()
        .map(|inst| {
            let asset = catalog
                .get(&inst.asset_id)
                .ok_or_else(|| Error::MissingAsset(inst.asset_id.clone()))?;
            let (_, particle) = apply(asset, &inst.augment).trimmed();
            if particle.mask != inst.mask {
                return Err(Error::InconsistentScene(format!(
                    "instance {} does not match asset {} under its augmentation",
                    inst.instance_id, inst.asset_id
                )));
            }
            Ok(particle.sprite)
        })
        .collect::<Result<Vec<_>>>()?;
    for (inst, sprite) in scene.instances.iter().zip(sprites) {
        let (ox, oy) = inst.position;
        for (y, x, len) in inst.mask.runs() {
            for x in x..x + len {
                let p = sprite.get_pixel(x, y);
                let rim = feather && is_rim(&inst.mask, x, y);
                let dst = canvas.get_pixel_mut(ox + x, oy + y);
                for c in 0..3 {
                    dst.0[c] = if rim {
                        (dst.0[c] as u16 + p.0[c] as u16).div_ceil(2) as u8
                    } else {
                        p.0[c]
                    };
                }
            }
        }
    }
    Ok(canvas)
}

fn is_rim(mask: &crate::geometry::BinaryMask, x: u32, y: u32) -> bool {
    let (x, y) = (x as i64, y as i64);
    [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .any(|&(dx, dy)| !mask.get_signed(x + dx, y + dy))
}

/// Topmost instance id per pixel, 0 for background.
pub fn rasterize_graymap(scene: &Scene) -> Result<GraymapMask> {
    if scene.instances.len() > u16::MAX as usize {
        return Err(Error::TooManyInstances {
            count: scene.instances.len(),
        });
    }
    let mut g = GraymapMask::new(scene.width, scene.height)?;
    let w = scene.width as usize;
    let ids = g.ids_mut();
    for inst in &scene.instances {
        let (ox, oy) = inst.position;
        for (y, x, len) in inst.mask.runs() {
            let start = (oy + y) as usize * w + (ox + x) as usize;
            ids[start..start + len as usize].fill(inst.instance_id as u16);
        }
    }
    Ok(g)
}

/// Stable color of an instance id, independent of the image it appears in.
pub fn id_color(id: u16) -> [u8; 3] {
    let h = mix64(0x9E37_79B9_7F4A_7C15 ^ id as u64);
    let mut c = [(h >> 8) as u8, (h >> 24) as u8, (h >> 40) as u8];
    // keep colors away from black so small ids stay visible
    let max = *c.iter().max().expect("three channels");
    if max < 96 {
        c.iter_mut().for_each(|v| *v = v.saturating_add(96));
    }
    c
}

/// Blend instance colors over an RGB image. Background pixels are untouched.
pub fn overlay(image: &RgbImage, graymap: &GraymapMask, alpha: f64) -> Result<RgbImage> {
    if image.dimensions() != (graymap.width(), graymap.height()) {
        return Err(Error::DimensionMismatch {
            left_width: image.width(),
            left_height: image.height(),
            right_width: graymap.width(),
            right_height: graymap.height(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1]"));
    }
    let mut out = image.clone();
    for (p, &id) in out.pixels_mut().zip(graymap.ids()) {
        if id == 0 {
            continue;
        }
        let c = id_color(id);
        for i in 0..3 {
            p.0[i] = ((1.0 - alpha) * p.0[i] as f64 + alpha * c[i] as f64).round() as u8;
        }
    }
    Ok(out)
}

pub fn write_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::InvalidDimensions {
            width: image.width(),
            height: image.height(),
        });
    }
    image.save_with_format(path, ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{AugmentConfig, AugmentParams};
    use crate::compose::{compose_l2, ComposeContext, Stage, StageSpec};
    use crate::geometry::BinaryMask;
    use crate::library::{import_asset, ParticleAsset};
    use crate::geometry::RefineParams;
    use crate::compose::PlacedInstance;
    use image::{Rgba, RgbaImage};

    fn asset(id: &str, side: u32, color: [u8; 3]) -> ParticleAsset {
        let mask = BinaryMask::from_fn(side, side, |_, _| true).unwrap();
        let cutout = RgbaImage::from_pixel(side, side, Rgba([color[0], color[1], color[2], 255]));
        import_asset(id, &cutout, &mask, 1.0, &RefineParams::default(), "test").unwrap()
    }

    fn place(id: u32, asset: &ParticleAsset, pos: (u32, u32)) -> PlacedInstance {
        let (_, p) = apply(asset, &AugmentParams::IDENTITY).trimmed();
        let area = p.mask.area();
        PlacedInstance {
            instance_id: id,
            asset_id: asset.asset_id.clone(),
            class: asset.size_class,
            augment: AugmentParams::IDENTITY,
            position: pos,
            layer: 0,
            z: id - 1,
            mask: p.mask,
            amodal_area: area,
            visible_area: area,
            visibility: 1.0,
            layer_visible_area: area,
            layer_visibility: 1.0,
        }
    }

    fn scene(instances: Vec<PlacedInstance>) -> Scene {
        Scene {
            stage: Stage::L2,
            width: 32,
            height: 32,
            background_id: "flat".into(),
            seed: 0,
            instances,
            target_counts: [0; 8],
            psd_histogram: [0; 8],
            shortfall: [0; 8],
        }
    }

    #[test]
    fn empty_scene_is_background() {
        let bg = Background::Flat([10, 20, 30]);
        let catalog = AssetCatalog::new(1.0).unwrap();
        let img = composite_rgb(&scene(vec![]), &bg, &catalog, false).unwrap();
        assert_eq!(img, bg.render(32, 32).unwrap());
        let g = rasterize_graymap(&scene(vec![])).unwrap();
        assert_eq!(g.nonzero_count(), 0);
    }

    #[test]
    fn higher_z_wins_overlap() {
        let red = asset("red", 10, [255, 0, 0]);
        let blue = asset("blue", 10, [0, 0, 255]);
        let catalog = AssetCatalog::from_assets(1.0, vec![red.clone(), blue.clone()]).unwrap();
        let s = scene(vec![place(1, &red, (2, 2)), place(2, &blue, (6, 6))]);
        let bg = Background::Flat([0, 0, 0]);
        let img = composite_rgb(&s, &bg, &catalog, false).unwrap();
        let g = rasterize_graymap(&s).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let in_red = (2..12).contains(&x) && (2..12).contains(&y);
                let in_blue = (6..16).contains(&x) && (6..16).contains(&y);
                let (want, id) = if in_blue {
                    ([0, 0, 255], 2)
                } else if in_red {
                    ([255, 0, 0], 1)
                } else {
                    ([0, 0, 0], 0)
                };
                assert_eq!(img.get_pixel(x, y).0, want, "({x}, {y})");
                assert_eq!(g.get(x, y), id);
            }
        }
        assert_eq!(g.histogram()[1..], [100 - 36, 100]);
    }

    #[test]
    fn missing_asset_is_named() {
        let red = asset("red", 10, [255, 0, 0]);
        let s = scene(vec![place(1, &red, (0, 0))]);
        let catalog = AssetCatalog::new(1.0).unwrap();
        match composite_rgb(&s, &Background::Flat([0; 3]), &catalog, false) {
            Err(Error::MissingAsset(id)) => assert_eq!(id, "red"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graymap_matches_visible_areas() {
        let catalog = crate::synthetic::synthetic_catalog_for(0.1, 3, 1, &[crate::sieve::SizeClass::new(1).unwrap()])
            .unwrap();
        let class = crate::sieve::SizeClass::new(1).unwrap();
        let aug = AugmentConfig::default();
        let ctx = ComposeContext {
            catalog: &catalog,
            width: 160,
            height: 160,
            augment: &aug,
            master_seed: 4,
            image_index: 2,
            background_id: "flat",
        };
        let mut counts = [0; 8];
        counts[0] = 20;
        let s = compose_l2(&ctx, &counts, &StageSpec::new(Stage::L2, vec![class])).unwrap();
        let g = rasterize_graymap(&s).unwrap();
        let hist = g.histogram();
        for inst in &s.instances {
            assert_eq!(hist[inst.instance_id as usize], inst.visible_area);
        }
        let img = composite_rgb(&s, &Background::Flat([1, 2, 3]), &catalog, false).unwrap();
        for (p, &id) in img.pixels().zip(g.ids()) {
            if id == 0 {
                assert_eq!(p.0, [1, 2, 3]);
            }
        }
    }

    #[test]
    fn texture_tiles() {
        let tex = RgbImage::from_fn(3, 2, |x, y| Rgb([x as u8, y as u8, 7]));
        let bg = Background::Texture {
            id: "t".into(),
            image: tex,
        };
        let img = bg.render(7, 5).unwrap();
        assert_eq!(img.get_pixel(6, 4).0, [0, 0, 7]);
        assert_eq!(img.get_pixel(5, 3).0, [2, 1, 7]);
    }

    #[test]
    fn png_round_trip_and_zero_dims() {
        let dir = tempfile::tempdir().unwrap();
        let mut state = 12345u64;
        let img = RgbImage::from_fn(64, 64, |_, _| {
            state = mix64(state);
            Rgb([state as u8, (state >> 8) as u8, (state >> 16) as u8])
        });
        let path = dir.path().join("noise.png");
        write_png(&img, &path).unwrap();
        assert_eq!(read_png(&path).unwrap(), img);
        assert!(write_png(&RgbImage::new(0, 4), dir.path().join("z.png")).is_err());
    }

    #[test]
    fn overlay_behaviour() {
        let img = RgbImage::from_pixel(4, 4, Rgb([50, 50, 50]));
        let empty = GraymapMask::new(4, 4).unwrap();
        assert_eq!(overlay(&img, &empty, 0.5).unwrap(), img);
        let mut g = GraymapMask::new(4, 4).unwrap();
        g.ids_mut()[5] = 3;
        let out = overlay(&img, &g, 1.0).unwrap();
        assert_eq!(out.get_pixel(1, 1).0, id_color(3));
        assert_ne!(id_color(1), id_color(2));
        assert!(overlay(&img, &GraymapMask::new(3, 4).unwrap(), 0.5).is_err());
    }
}
