//! Binary morphology with a disc structuring element, plus the configurable
//! refinement pipeline applied to imported particle masks.
//!
//! The disc of radius `r` contains every offset with `dx² + dy² <= r² + r`,
//! i.e. lattice points within `r + 0.5` of the origin. Radius 1 is the full
//! 3x3 square. Pixels outside the raster count as background.

use serde::{Deserialize, Serialize};

use super::components::{filter_components, Connectivity};
use super::BinaryMask;
use crate::error::{Error, Result};

fn disc_half_widths(radius: u32) -> Vec<(i64, usize)> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let limit = r * r + r - dy * dy;
            let w = (0..=r).take_while(|dx| dx * dx <= limit).last().unwrap_or(0);
            (dy, w as usize)
        })
        .collect()
}

/// For every pixel, the number of foreground pixels within `w` columns on
/// either side in the same row (window clipped to the raster).
fn window_counts(mask: &BinaryMask, w: usize) -> Vec<u32> {
    let width = mask.width() as usize;
    let mut out = vec![0u32; mask.bits().len()];
    let mut prefix = vec![0u32; width + 1];
    for y in 0..mask.height() {
        let row = mask.row(y);
        for (x, &b) in row.iter().enumerate() {
            prefix[x + 1] = prefix[x] + b as u32;
        }
        let base = y as usize * width;
        for x in 0..width {
            let lo = x.saturating_sub(w);
            let hi = (x + w + 1).min(width);
            out[base + x] = prefix[hi] - prefix[lo];
        }
    }
    out
}

fn combine(mask: &BinaryMask, radius: u32, dilating: bool) -> BinaryMask {
    let (width, height) = (mask.width() as usize, mask.height() as i64);
    let half_widths = disc_half_widths(radius);
    let mut per_width: Vec<(usize, Vec<u32>)> = Vec::new();
    for &(_, w) in &half_widths {
        if !per_width.iter().any(|(pw, _)| *pw == w) {
            per_width.push((w, window_counts(mask, w)));
        }
    }
    let mut bits = vec![!dilating; mask.bits().len()];
    for y in 0..height {
        let out_row = &mut bits[y as usize * width..(y as usize + 1) * width];
        for &(dy, w) in &half_widths {
            let sy = y + dy;
            if sy < 0 || sy >= height {
                if !dilating {
                    out_row.iter_mut().for_each(|b| *b = false);
                }
                continue;
            }
            let counts = &per_width.iter().find(|(pw, _)| *pw == w).unwrap().1;
            let src = &counts[sy as usize * width..(sy as usize + 1) * width];
            for (x, (o, &c)) in out_row.iter_mut().zip(src).enumerate() {
                if dilating {
                    *o |= c > 0;
                } else {
                    // full window must be inside the raster and all foreground
                    let full = x >= w && x + w < width;
                    *o &= full && c as usize == 2 * w + 1;
                }
            }
        }
    }
    BinaryMask::from_bits(mask.width(), mask.height(), bits).expect("same dims")
}

pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    combine(mask, radius, true)
}

pub fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    combine(mask, radius, false)
}

/// Erode then dilate. Never adds pixels.
pub fn open(mask: &BinaryMask, radius: u32) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

/// Dilate then erode, computed on a padded copy so shapes touching the
/// border are not eaten by the erosion. Never removes pixels.
pub fn close(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let padded = mask.pad(radius, radius, radius, radius);
    let closed = erode(&dilate(&padded, radius), radius);
    closed
        .crop(super::Rect {
            x: radius,
            y: radius,
            width: mask.width(),
            height: mask.height(),
        })
        .expect("inside padded raster")
}

/// Set every background pixel not 4-connected to the raster border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let bits = mask.bits();
    let mut outside = vec![false; bits.len()];
    let mut stack = Vec::new();
    let seed = |i: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
        if !bits[i] && !outside[i] {
            outside[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut stack);
        seed((h - 1) * w + x, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut stack);
        seed(y * w + w - 1, &mut outside, &mut stack);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !bits[j] && !outside[j] {
                outside[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    let filled = outside.iter().map(|&o| !o).collect();
    BinaryMask::from_bits(mask.width(), mask.height(), filled).expect("same dims")
}

/// Remove connected components with fewer than `min_area` pixels.
pub fn drop_small_components(mask: &BinaryMask, min_area: u64, connectivity: Connectivity) -> BinaryMask {
    filter_components(mask, connectivity, |area, _| area >= min_area)
}

/// One step of a refinement sequence. Structuring-element steps use the
/// radius of the enclosing [`RefineParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum RefineOp {
    Erode,
    Dilate,
    Open,
    Close,
    FillHoles,
    /// Drop components with fewer than `min_area` pixels.
    DropBelowArea { min_area: u64 },
    /// Drop components smaller than `fraction` of the largest component.
    DropBelowFraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub radius: u32,
    pub ops: Vec<RefineOp>,
    #[serde(default)]
    pub connectivity: Connectivity,
}

impl Default for RefineParams {
    /// close(1), fill holes, drop components under 0.5% of the largest.
    fn default() -> Self {
        Self {
            radius: 1,
            ops: vec![
                RefineOp::Close,
                RefineOp::FillHoles,
                RefineOp::DropBelowFraction { fraction: 0.005 },
            ],
            connectivity: Connectivity::Eight,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::param("radius", "kernel radius must be at least 1"));
        }
        for op in &self.ops {
            if let RefineOp::DropBelowFraction { fraction } = op {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(Error::param("fraction", "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Apply the configured operation sequence. Output has the input's dimensions.
pub fn morph_refine(mask: &BinaryMask, params: &RefineParams) -> Result<BinaryMask> {
    params.validate()?;
    let r = params.radius;
    let mut current = mask.clone();
    for op in &params.ops {
        current = match *op {
            RefineOp::Erode => erode(&current, r),
            RefineOp::Dilate => dilate(&current, r),
            RefineOp::Open => open(&current, r),
            RefineOp::Close => close(&current, r),
            RefineOp::FillHoles => fill_holes(&current),
            RefineOp::DropBelowArea { min_area } => {
                drop_small_components(&current, min_area, params.connectivity)
            }
            RefineOp::DropBelowFraction { fraction } => {
                filter_components(&current, params.connectivity, |area, largest| {
                    area as f64 >= fraction * largest as f64
                })
            }
        };
    }
    Ok(current)
}
