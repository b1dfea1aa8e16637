//! Procedural stand-ins for real particle cutouts: irregular star-shaped
//! blobs with stone-like coloring. Used for demos, tests and benchmarks when
//! no recorded particles are at hand.

use std::f64::consts::TAU;

use image::{Rgba, RgbaImage};
use rand::Rng;

use crate::error::Result;
use crate::geometry::{BinaryMask, RefineParams};
use crate::library::{import_asset, AssetCatalog, ParticleAsset};
use crate::seed::{derive_instance_seed, rng_from_seed};
use crate::sieve::SizeClass;

const PALETTE: [[f64; 3]; 5] = [
    [152.0, 150.0, 144.0], // concrete
    [168.0, 84.0, 62.0],   // brick
    [204.0, 196.0, 178.0], // sand-lime
    [96.0, 90.0, 84.0],    // basalt
    [182.0, 150.0, 112.0], // gravel
];

pub struct SyntheticParticle {
    pub cutout: RgbaImage,
    pub mask: BinaryMask,
}

/// Blob whose farthest-pair distance is close to `diameter_px`. With
/// `with_defects` the raw mask carries a few speckles and pinholes, the kind
/// of noise refinement is meant to remove.
pub fn synthetic_particle<R: Rng>(rng: &mut R, diameter_px: f64, with_defects: bool) -> SyntheticParticle {
    let harmonics: Vec<(f64, f64, f64)> = (2..6)
        .map(|k| (k as f64, rng.random_range(0.0..0.07), rng.random_range(0.0..TAU)))
        .collect();
    let elongation = rng.random_range(0.7..1.0);
    let radius = |theta: f64| {
        let wobble: f64 = harmonics.iter().map(|&(k, a, phi)| a * (k * theta + phi).cos()).sum();
        (1.0 + wobble) * (theta.cos().powi(2) + (elongation * theta.sin()).powi(2)).sqrt()
    };
    // scale so the longest chord through the center hits the target
    let longest = (0..360)
        .map(|i| {
            let t = i as f64 * TAU / 360.0;
            radius(t) + radius(t + TAU / 2.0)
        })
        .fold(0.0, f64::max);
    let scale = diameter_px / longest;
    let extent = (diameter_px * 1.05).ceil() as u32 + 6;
    let c = (extent as f64 - 1.0) / 2.0;

    let base = PALETTE[rng.random_range(0..PALETTE.len())];
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(-12.0..12.0));
    let mut mask = BinaryMask::new(extent, extent).expect("positive extent");
    let mut cutout = RgbaImage::from_pixel(extent, extent, Rgba([60, 62, 58, 255]));
    for y in 0..extent {
        for x in 0..extent {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            let r = (dx * dx + dy * dy).sqrt();
            let theta = dy.atan2(dx);
            let edge = scale * radius(theta);
            if r <= edge {
                mask.set(x, y, true);
                let shade = 1.0 - 0.25 * (r / edge).powi(2) + 0.08 * (dx - dy) / (edge + 1.0);
                let grain = rng.random_range(-14.0..14.0);
                let px: [u8; 3] = std::array::from_fn(|i| ((base[i] + tint[i]) * shade + grain).clamp(0.0, 255.0) as u8);
                cutout.put_pixel(x, y, Rgba([px[0], px[1], px[2], 255]));
            }
        }
    }
    if with_defects {
        for (x, y) in [(0, 0), (extent - 1, 1), (2, extent - 1)] {
            mask.set(x, y, true);
        }
        let ci = c.round() as u32;
        mask.set(ci, ci, false);
        mask.set(ci + 2, ci - 1, false);
    }
    SyntheticParticle { cutout, mask }
}

/// A catalog with `per_class` synthetic assets in every sieve class, each
/// imported through the regular refinement path. Deterministic in `seed`.
pub fn synthetic_catalog(mm_per_px: f64, per_class: usize, seed: u64) -> Result<AssetCatalog> {
    let classes: Vec<SizeClass> = SizeClass::all().collect();
    synthetic_catalog_for(mm_per_px, per_class, seed, &classes)
}

pub fn synthetic_catalog_for(
    mm_per_px: f64,
    per_class: usize,
    seed: u64,
    classes: &[SizeClass],
) -> Result<AssetCatalog> {
    let mut assets = Vec::new();
    for &class in classes {
        for i in 0..per_class {
            assets.push(synthetic_asset(mm_per_px, class, i, seed)?);
        }
    }
    AssetCatalog::from_assets(mm_per_px, assets)
}

/// Generate until the measured size falls in `class`.
pub fn synthetic_asset(mm_per_px: f64, class: SizeClass, index: usize, seed: u64) -> Result<ParticleAsset> {
    let id = format!("syn-c{}-{:03}", class.index(), index);
    let refine = RefineParams::default();
    for attempt in 0u64.. {
        let mut rng = rng_from_seed(derive_instance_seed(seed, class.index() as u64, ((index as u64) << 16) | attempt));
        let margin = 0.08 * (class.max_mm() - class.min_mm());
        let size_mm = rng.random_range(class.min_mm() + margin..class.max_mm() - margin);
        let particle = synthetic_particle(&mut rng, size_mm / mm_per_px, attempt % 2 == 1);
        match import_asset(&id, &particle.cutout, &particle.mask, mm_per_px, &refine, "synthetic") {
            Ok(asset) if asset.size_class == class => return Ok(asset),
            Ok(_) | Err(crate::Error::OutOfSieveRange(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("attempt counter is unbounded")
}
