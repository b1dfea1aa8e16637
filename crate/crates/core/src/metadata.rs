//! Per-image metadata documents: scene bookkeeping plus every amodal mask as
//! canvas-frame runs. See `docs/metadata-schema.json` for the layout.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentParams;
use crate::compose::{Scene, Stage};
use crate::error::{Error, Result};
use crate::geometry::MaskRegion;
use crate::pgm::GraymapMask;
use crate::rle::{decode_region, encode_region, rle_area, Run};
use crate::sieve::{ClassCounts, SizeClass, CLASS_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub instance_id: u32,
    pub asset_id: String,
    pub class: SizeClass,
    pub layer: u8,
    pub z: u32,
    /// `[x, y, width, height]` of the amodal mask.
    pub bbox: [u32; 4],
    pub amodal_area: u64,
    pub visible_area: u64,
    pub visibility: f64,
    pub layer_visible_area: u64,
    pub layer_visibility: f64,
    pub augment: AugmentParams,
    pub rle: Vec<Run>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub image_id: String,
    pub stage: Stage,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub mm_per_px: f64,
    pub background_id: String,
    pub target_counts: ClassCounts,
    pub psd_histogram: ClassCounts,
    pub shortfall: ClassCounts,
    pub instances: Vec<InstanceRecord>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ImageRecord {
    pub fn from_scene(image_id: impl Into<String>, scene: &Scene, mm_per_px: f64) -> Self {
        let instances = scene
            .instances
            .iter()
            .map(|inst| {
                let region = inst.region();
                let f = region.frame();
                InstanceRecord {
                    instance_id: inst.instance_id,
                    asset_id: inst.asset_id.clone(),
                    class: inst.class,
                    layer: inst.layer,
                    z: inst.z,
                    bbox: [f.x, f.y, f.width, f.height],
                    amodal_area: inst.amodal_area,
                    visible_area: inst.visible_area,
                    visibility: inst.visibility,
                    layer_visible_area: inst.layer_visible_area,
                    layer_visibility: inst.layer_visibility,
                    augment: inst.augment,
                    rle: encode_region(&region, scene.width),
                }
            })
            .collect();
        Self {
            image_id: image_id.into(),
            stage: scene.stage,
            seed: scene.seed,
            width: scene.width,
            height: scene.height,
            mm_per_px,
            background_id: scene.background_id.clone(),
            target_counts: scene.target_counts,
            psd_histogram: scene.psd_histogram,
            shortfall: scene.shortfall,
            instances,
        }
    }

    /// Amodal masks in z order.
    pub fn amodal_regions(&self) -> Result<Vec<MaskRegion>> {
        self.instances
            .iter()
            .map(|inst| {
                decode_region(&inst.rle, self.width, self.height)?
                    .ok_or_else(|| Error::invariant(format!("instances[{}].rle", inst.instance_id - 1), "empty mask"))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        if !(self.mm_per_px.is_finite() && self.mm_per_px > 0.0) {
            return Err(Error::invariant("mm_per_px", "must be positive"));
        }
        let mut histogram = [0u32; CLASS_COUNT];
        for (i, inst) in self.instances.iter().enumerate() {
            let at = |field: &str| format!("instances[{i}].{field}");
            if inst.instance_id as usize != i + 1 {
                return Err(Error::invariant(at("instance_id"), format!("expected {}", i + 1)));
            }
            if i > 0 && inst.z <= self.instances[i - 1].z {
                return Err(Error::invariant(at("z"), "must increase"));
            }
            if i > 0 && inst.layer < self.instances[i - 1].layer {
                return Err(Error::invariant(at("layer"), "must not decrease"));
            }
            if inst.visible_area > inst.layer_visible_area || inst.layer_visible_area > inst.amodal_area {
                return Err(Error::invariant(
                    at("visible_area"),
                    "needs visible <= layer_visible <= amodal",
                ));
            }
            if inst.visibility != ratio(inst.visible_area, inst.amodal_area) {
                return Err(Error::invariant(at("visibility"), "must equal visible_area / amodal_area"));
            }
            if inst.layer_visibility != ratio(inst.layer_visible_area, inst.amodal_area) {
                return Err(Error::invariant(
                    at("layer_visibility"),
                    "must equal layer_visible_area / amodal_area",
                ));
            }
            if rle_area(&inst.rle) != inst.amodal_area {
                return Err(Error::invariant(at("rle"), "area differs from amodal_area"));
            }
            let region = decode_region(&inst.rle, self.width, self.height)
                .map_err(|e| Error::invariant(at("rle"), e.to_string()))?
                .ok_or_else(|| Error::invariant(at("rle"), "empty mask"))?;
            let f = region.frame();
            if inst.bbox != [f.x, f.y, f.width, f.height] {
                return Err(Error::invariant(at("bbox"), "does not match the mask"));
            }
            histogram[inst.class.slot()] += 1;
        }
        if histogram != self.psd_histogram {
            return Err(Error::invariant("psd_histogram", "does not match the instance classes"));
        }
        Ok(())
    }

    /// Cross-check against the graymap: same id set, per-id pixel counts equal
    /// visible areas, and repainting the amodal masks reproduces it.
    pub fn check_graymap(&self, g: &GraymapMask) -> Result<()> {
        if (g.width(), g.height()) != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: g.width(),
                right_height: g.height(),
            });
        }
        if self.instances.len() > u16::MAX as usize {
            return Err(Error::TooManyInstances {
                count: self.instances.len(),
            });
        }
        let hist = g.histogram();
        if hist.len() > self.instances.len() + 1 {
            return Err(Error::invariant("graymap", format!("contains id {}", hist.len() - 1)));
        }
        for inst in &self.instances {
            let count = hist.get(inst.instance_id as usize).copied().unwrap_or(0);
            if count != inst.visible_area {
                return Err(Error::invariant(
                    format!("instances[{}].visible_area", inst.instance_id - 1),
                    format!("graymap holds {count} pixels"),
                ));
            }
        }
        let mut ids = vec![0u16; g.ids().len()];
        let w = self.width as usize;
        for (inst, region) in self.instances.iter().zip(self.amodal_regions()?) {
            for (y, x, len) in region.canvas_runs() {
                let start = y as usize * w + x as usize;
                ids[start..start + len as usize].fill(inst.instance_id as u16);
            }
        }
        if ids != g.ids() {
            return Err(Error::invariant("graymap", "differs from the z-order repaint"));
        }
        Ok(())
    }
}

/// Serialize a validated record. Compact JSON with a trailing newline.
pub fn encode_metadata(record: &ImageRecord) -> Result<Vec<u8>> {
    record.validate()?;
    let mut bytes = serde_json::to_vec(record).expect("records always serialize");
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn decode_metadata(data: &[u8]) -> Result<ImageRecord> {
    let de = &mut serde_json::Deserializer::from_slice(data);
    let record: ImageRecord = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    record.validate()?;
    Ok(record)
}

pub fn write_metadata(record: &ImageRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_metadata(record)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_metadata(path: impl AsRef<Path>) -> Result<ImageRecord> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_metadata(&data).map_err(|e| Error::in_file(path, e))
}
