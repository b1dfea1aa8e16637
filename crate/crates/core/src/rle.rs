//! Run-length encoding of masks as `(start, length)` pairs over the
//! row-major pixel index of a frame. Only foreground runs are stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BinaryMask, MaskRegion};

/// One foreground run: `[start, length]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Run(pub u64, pub u64);

impl Run {
    pub fn start(&self) -> u64 {
        self.0
    }

    pub fn len(&self) -> u64 {
        self.1
    }

    pub fn is_empty(&self) -> bool {
        self.1 == 0
    }

    pub fn end(&self) -> u64 {
        self.0 + self.1
    }
}

/// Runs of a mask in its own frame. Runs may continue across row ends.
pub fn encode_mask(mask: &BinaryMask) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, &b) in mask.bits().iter().enumerate() {
        if !b {
            continue;
        }
        match runs.last_mut() {
            Some(last) if last.end() == i as u64 => last.1 += 1,
            _ => runs.push(Run(i as u64, 1)),
        }
    }
    runs
}

/// Runs of a region in the frame of a canvas `canvas_width` wide.
pub fn encode_region(region: &MaskRegion, canvas_width: u32) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (y, x, len) in region.canvas_runs() {
        let start = y as u64 * canvas_width as u64 + x as u64;
        match runs.last_mut() {
            Some(last) if last.end() == start => last.1 += len as u64,
            _ => runs.push(Run(start, len as u64)),
        }
    }
    runs
}

fn check_runs(runs: &[Run], total: u64) -> Result<()> {
    let mut prev_end = 0u64;
    for (i, r) in runs.iter().enumerate() {
        if r.is_empty() {
            return Err(Error::InvalidRle(format!("run {i} has zero length")));
        }
        if i > 0 && r.start() < prev_end {
            return Err(Error::InvalidRle(format!("run {i} overlaps or is out of order")));
        }
        if r.end() > total {
            return Err(Error::InvalidRle(format!("run {i} exceeds the frame")));
        }
        prev_end = r.end();
    }
    Ok(())
}

pub fn decode_mask(runs: &[Run], width: u32, height: u32) -> Result<BinaryMask> {
    let mut mask = BinaryMask::new(width, height)?;
    check_runs(runs, width as u64 * height as u64)?;
    for r in runs {
        for i in r.start()..r.end() {
            mask.set((i % width as u64) as u32, (i / width as u64) as u32, true);
        }
    }
    Ok(mask)
}

/// Decode to a trimmed region of a `width`x`height` canvas. `None` when the
/// run list is empty.
pub fn decode_region(runs: &[Run], width: u32, height: u32) -> Result<Option<MaskRegion>> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    check_runs(runs, width as u64 * height as u64)?;
    let w = width as u64;
    let (mut x0, mut y0, mut x1, mut y1) = (u64::MAX, u64::MAX, 0, 0);
    for r in runs {
        let (ys, ye) = (r.start() / w, (r.end() - 1) / w);
        y0 = y0.min(ys);
        y1 = y1.max(ye);
        if ys == ye {
            x0 = x0.min(r.start() % w);
            x1 = x1.max((r.end() - 1) % w);
        } else {
            x0 = 0;
            x1 = w - 1;
        }
    }
    if runs.is_empty() {
        return Ok(None);
    }
    let mut mask = BinaryMask::new((x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32)?;
    for r in runs {
        for i in r.start()..r.end() {
            mask.set((i % w - x0) as u32, (i / w - y0) as u32, true);
        }
    }
    // runs that wrap a row end widen the box to the full width; trim it back
    Ok(MaskRegion::new(x0 as u32, y0 as u32, mask).trimmed())
}

pub fn rle_area(runs: &[Run]) -> u64 {
    runs.iter().map(Run::len).sum()
}
