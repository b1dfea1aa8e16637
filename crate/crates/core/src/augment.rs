//! Rigid and photometric augmentation of particle sprites. There is no
//! scale parameter: particles keep their physical size and shape.
//!
//! Order of application: horizontal flip, vertical flip, rotation about the
//! sprite center, then HSV colorization of the covered pixels.

use image::{Rgba, RgbaImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BinaryMask;
use crate::library::ParticleAsset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentParams {
    pub flip_h: bool,
    pub flip_v: bool,
    /// Clockwise as displayed, in `[0, 360)`.
    pub rotation_deg: f64,
    /// Hue offset in degrees.
    pub hue_shift: f64,
    pub sat_scale: f64,
    pub val_scale: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams {
        flip_h: false,
        flip_v: false,
        rotation_deg: 0.0,
        hue_shift: 0.0,
        sat_scale: 1.0,
        val_scale: 1.0,
    };

    pub fn is_photometric_identity(&self) -> bool {
        self.hue_shift == 0.0 && self.sat_scale == 1.0 && self.val_scale == 1.0
    }

    /// The geometric part only; two params with equal geometry produce
    /// identical masks.
    pub fn geometry(&self) -> (bool, bool, f64) {
        (self.flip_h, self.flip_v, self.rotation_deg)
    }
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationMode {
    #[default]
    AnyAngle,
    MultiplesOf90,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub flip: bool,
    pub rotate: bool,
    pub colorize: bool,
    pub rotation_mode: RotationMode,
    /// Hue half-range in degrees, within `[0, 180]`.
    pub hue_range: f64,
    /// Saturation half-range, within `[0, 1)`.
    pub sat_range: f64,
    /// Value half-range, within `[0, 1)`.
    pub val_range: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip: true,
            rotate: true,
            colorize: true,
            rotation_mode: RotationMode::AnyAngle,
            hue_range: 10.0,
            sat_range: 0.15,
            val_range: 0.15,
        }
    }
}

impl AugmentConfig {
    pub fn disabled() -> Self {
        Self {
            flip: false,
            rotate: false,
            colorize: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=180.0).contains(&self.hue_range) {
            return Err(Error::param("hue_range", "must lie in [0, 180]"));
        }
        if !(0.0..1.0).contains(&self.sat_range) {
            return Err(Error::param("sat_range", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.val_range) {
            return Err(Error::param("val_range", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

fn symmetric<R: Rng>(rng: &mut R, half: f64) -> f64 {
    if half > 0.0 {
        rng.random_range(-half..=half)
    } else {
        0.0
    }
}

/// Draw independent uniform parameters. Draws happen only for enabled
/// transforms, in a fixed order.
pub fn sample_params<R: Rng>(rng: &mut R, cfg: &AugmentConfig) -> AugmentParams {
    let mut p = AugmentParams::IDENTITY;
    if cfg.flip {
        p.flip_h = rng.random_bool(0.5);
        p.flip_v = rng.random_bool(0.5);
    }
    if cfg.rotate {
        p.rotation_deg = match cfg.rotation_mode {
            RotationMode::AnyAngle => rng.random_range(0.0..360.0),
            RotationMode::MultiplesOf90 => 90.0 * rng.random_range(0..4u32) as f64,
        };
    }
    if cfg.colorize {
        p.hue_shift = symmetric(rng, cfg.hue_range);
        p.sat_scale = 1.0 + symmetric(rng, cfg.sat_range);
        p.val_scale = 1.0 + symmetric(rng, cfg.val_range);
    }
    p
}

/// An augmented sprite with its mask; alpha is 255 exactly on the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedParticle {
    pub sprite: RgbaImage,
    pub mask: BinaryMask,
}

fn quarter_turns(deg: f64) -> Option<u32> {
    let turns = deg / 90.0;
    (turns.fract() == 0.0).then(|| (turns as i64).rem_euclid(4) as u32)
}

/// Geometry of an arbitrary-angle rotation about the raster center. The
/// output grows to hold the rotated rectangle.
struct RotationFrame {
    sin: f64,
    cos: f64,
    src_center: (f64, f64),
    dst_center: (f64, f64),
    out_width: u32,
    out_height: u32,
}

impl RotationFrame {
    fn new(width: u32, height: u32, deg: f64) -> Self {
        let (sin, cos) = deg.to_radians().sin_cos();
        let (w, h) = (width as f64, height as f64);
        let out_width = ((w * cos.abs() + h * sin.abs()) - 1e-9).ceil().max(1.0) as u32;
        let out_height = ((w * sin.abs() + h * cos.abs()) - 1e-9).ceil().max(1.0) as u32;
        Self {
            sin,
            cos,
            src_center: ((w - 1.0) / 2.0, (h - 1.0) / 2.0),
            dst_center: ((out_width as f64 - 1.0) / 2.0, (out_height as f64 - 1.0) / 2.0),
            out_width,
            out_height,
        }
    }

    /// Source position of an output pixel center (inverse of a
    /// clockwise-as-displayed rotation).
    #[inline]
    fn source(&self, x: u32, y: u32) -> (f64, f64) {
        let (dx, dy) = (x as f64 - self.dst_center.0, y as f64 - self.dst_center.1);
        (
            self.cos * dx + self.sin * dy + self.src_center.0,
            -self.sin * dx + self.cos * dy + self.src_center.1,
        )
    }

    #[inline]
    fn nearest(&self, x: u32, y: u32) -> (i64, i64) {
        let (sx, sy) = self.source(x, y);
        ((sx + 0.5).floor() as i64, (sy + 0.5).floor() as i64)
    }
}

/// Nearest-neighbour mask rotation.
fn rotate_mask_any(mask: &BinaryMask, deg: f64) -> BinaryMask {
    let frame = RotationFrame::new(mask.width(), mask.height(), deg);
    BinaryMask::from_fn(frame.out_width, frame.out_height, |x, y| {
        let (nx, ny) = frame.nearest(x, y);
        mask.get_signed(nx, ny)
    })
    .expect("positive dims")
}

/// Fill the pixels of `out_mask` (the rotated mask) with a bilinear blend of
/// covered source pixels only, so no background bleeds in at the rim.
fn rotate_sprite_any(sprite: &RgbaImage, mask: &BinaryMask, out_mask: &BinaryMask, deg: f64) -> RgbaImage {
    let frame = RotationFrame::new(mask.width(), mask.height(), deg);
    let mut out = RgbaImage::new(frame.out_width, frame.out_height);
    for (x, y) in out_mask.foreground().map(|p| (p.x as u32, p.y as u32)) {
        let (sx, sy) = frame.source(x, y);
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let mut acc = [0.0f64; 3];
        let mut weight = 0.0;
        for (ox, oy, wgt) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            let (px, py) = (x0 as i64 + ox, y0 as i64 + oy);
            if wgt > 0.0 && mask.get_signed(px, py) {
                let p = sprite.get_pixel(px as u32, py as u32);
                for i in 0..3 {
                    acc[i] += wgt * p.0[i] as f64;
                }
                weight += wgt;
            }
        }
        let rgb: [u8; 3] = if weight > 0.0 {
            std::array::from_fn(|i| (acc[i] / weight).round().clamp(0.0, 255.0) as u8)
        } else {
            let (nx, ny) = frame.nearest(x, y);
            let p = sprite.get_pixel(nx as u32, ny as u32);
            [p.0[0], p.0[1], p.0[2]]
        };
        out.put_pixel(x, y, Rgba([rgb[0], rgb[1], rgb[2], 255]));
    }
    out
}

pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    [h, s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

fn colorize(sprite: &mut RgbaImage, p: &AugmentParams) {
    for px in sprite.pixels_mut() {
        if px.0[3] == 0 {
            continue;
        }
        let rgb = [px.0[0] as f64 / 255.0, px.0[1] as f64 / 255.0, px.0[2] as f64 / 255.0];
        let [h, s, v] = rgb_to_hsv(rgb);
        let out = hsv_to_rgb([
            h + p.hue_shift,
            (s * p.sat_scale).clamp(0.0, 1.0),
            (v * p.val_scale).clamp(0.0, 1.0),
        ]);
        for i in 0..3 {
            px.0[i] = (out[i] * 255.0).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// The augmented mask alone. Depends only on the geometric fields of `p`
/// and always equals the mask returned by [`apply`].
pub fn transform_mask(mask: &BinaryMask, p: &AugmentParams) -> BinaryMask {
    let mut mask = mask.clone();
    if p.flip_h {
        mask = mask.flip_horizontal();
    }
    if p.flip_v {
        mask = mask.flip_vertical();
    }
    match quarter_turns(p.rotation_deg) {
        Some(k) => (0..k).fold(mask, |m, _| m.rotate90()),
        None => rotate_mask_any(&mask, p.rotation_deg),
    }
}

/// Apply `p` to an asset. Identity params return the asset's rasters
/// unchanged.
pub fn apply(asset: &ParticleAsset, p: &AugmentParams) -> AugmentedParticle {
    let mut sprite = asset.sprite.clone();
    let mut mask = asset.mask.clone();
    if p.flip_h {
        sprite = image::imageops::flip_horizontal(&sprite);
        mask = mask.flip_horizontal();
    }
    if p.flip_v {
        sprite = image::imageops::flip_vertical(&sprite);
        mask = mask.flip_vertical();
    }
    match quarter_turns(p.rotation_deg) {
        Some(k) => {
            for _ in 0..k {
                sprite = image::imageops::rotate90(&sprite);
                mask = mask.rotate90();
            }
        }
        None => {
            let rotated = rotate_mask_any(&mask, p.rotation_deg);
            sprite = rotate_sprite_any(&sprite, &mask, &rotated, p.rotation_deg);
            mask = rotated;
        }
    }
    if !p.is_photometric_identity() {
        colorize(&mut sprite, p);
    }
    AugmentedParticle { sprite, mask }
}

impl AugmentedParticle {
    /// Crop both rasters to the mask bounding box; returns the offset of the
    /// crop inside the untrimmed raster.
    pub fn trimmed(&self) -> ((u32, u32), AugmentedParticle) {
        let bbox = self.mask.bbox().expect("augmented particles are never empty");
        let mask = self.mask.crop(bbox).expect("bbox inside mask");
        let sprite = image::imageops::crop_imm(&self.sprite, bbox.x, bbox.y, bbox.width, bbox.height).to_image();
        ((bbox.x, bbox.y), AugmentedParticle { sprite, mask })
    }
}
