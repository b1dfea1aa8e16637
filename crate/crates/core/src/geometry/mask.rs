use std::fmt;

use crate::error::{Error, Result};

/// Integer pixel coordinate. `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelPoint {
    pub x: i32,
    pub y: i32,
}

impl PixelPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned pixel rectangle, `width`/`height` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x0 < x1 && y0 < y1).then(|| Rect {
            x: x0,
            y: y0,
            width: x1 - x0,
            height: y1 - y0,
        })
    }
}

/// Row-major boolean raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.len() <= 256 {
            writeln!(f, "BinaryMask {}x{}", self.width, self.height)?;
            for row in self.bits.chunks(self.width as usize) {
                let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
                writeln!(f, "  {line}")?;
            }
            Ok(())
        } else {
            f.debug_struct("BinaryMask")
                .field("width", &self.width)
                .field("height", &self.height)
                .field("area", &self.area())
                .finish()
        }
    }
}

impl BinaryMask {
    /// All-background mask. Both dimensions must be positive.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        })
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if bits.len() != width as usize * height as usize {
            return Err(Error::param(
                "bits",
                format!("expected {} values, got {}", width as usize * height as usize, bits.len()),
            ));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut mask = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[self.index(x, y)]
    }

    /// Like [`get`](Self::get) but treats out-of-range coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = self.index(x, y);
        self.bits[i] = value;
    }

    pub fn row(&self, y: u32) -> &[bool] {
        let start = y as usize * self.width as usize;
        &self.bits[start..start + self.width as usize]
    }

    pub fn area(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn foreground(&self) -> impl Iterator<Item = PixelPoint> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| PixelPoint::new((i % w) as i32, (i / w) as i32))
    }

    /// Foreground runs as `(row, first column, length)`, row-major.
    pub fn runs(&self) -> Vec<(u32, u32, u32)> {
        let mut runs = Vec::new();
        for y in 0..self.height {
            let row = self.row(y);
            let mut x = 0usize;
            while x < row.len() {
                if row[x] {
                    let start = x;
                    while x < row.len() && row[x] {
                        x += 1;
                    }
                    runs.push((y, start as u32, (x - start) as u32));
                } else {
                    x += 1;
                }
            }
        }
        runs
    }

    /// Tight bounding box of the foreground, `None` for an empty mask.
    pub fn bbox(&self) -> Option<Rect> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            let row = self.row(y);
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            any = true;
            x0 = x0.min(first as u32);
            x1 = x1.max(last as u32);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        any.then(|| Rect {
            x: x0,
            y: y0,
            width: x1 - x0 + 1,
            height: y1 - y0 + 1,
        })
    }

    /// Copy of the pixels inside `rect`; the rect must lie inside the mask.
    pub fn crop(&self, rect: Rect) -> Result<Self> {
        if rect.right() > self.width || rect.bottom() > self.height {
            return Err(Error::param("rect", "crop rectangle exceeds mask bounds"));
        }
        let mut out = Self::new(rect.width, rect.height)?;
        for y in 0..rect.height {
            let src = &self.row(rect.y + y)[rect.x as usize..rect.right() as usize];
            let start = y as usize * rect.width as usize;
            out.bits[start..start + rect.width as usize].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Embed into a larger all-background raster at `(left, top)`.
    pub fn pad(&self, left: u32, top: u32, right: u32, bottom: u32) -> Self {
        let width = self.width + left + right;
        let height = self.height + top + bottom;
        let mut bits = vec![false; width as usize * height as usize];
        for y in 0..self.height {
            let dst = (y + top) as usize * width as usize + left as usize;
            bits[dst..dst + self.width as usize].copy_from_slice(self.row(y));
        }
        Self { width, height, bits }
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut bits = Vec::with_capacity(self.bits.len());
        for y in 0..self.height {
            bits.extend(self.row(y).iter().rev());
        }
        Self { bits, ..*self }
    }

    pub fn flip_vertical(&self) -> Self {
        let mut bits = Vec::with_capacity(self.bits.len());
        for y in (0..self.height).rev() {
            bits.extend_from_slice(self.row(y));
        }
        Self { bits, ..*self }
    }

    /// Rotate a quarter turn clockwise (as displayed, y pointing down).
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = Self {
            width: h,
            height: w,
            bits: vec![false; self.bits.len()],
        };
        for y in 0..h {
            for x in 0..w {
                if self.get(x, y) {
                    out.set(h - 1 - y, x, true);
                }
            }
        }
        out
    }

    pub fn intersection_area(&self, other: &Self) -> Result<u64> {
        self.check_same_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count() as u64)
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }
}

/// A mask positioned inside a larger canvas: `mask` pixel `(x, y)` sits at
/// canvas pixel `(left + x, top + y)`. Lets thousands of instances share one
/// canvas frame without a full-size raster each.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskRegion {
    pub left: u32,
    pub top: u32,
    pub mask: BinaryMask,
}

impl MaskRegion {
    pub fn new(left: u32, top: u32, mask: BinaryMask) -> Self {
        Self { left, top, mask }
    }

    /// Trim a canvas-sized mask to its foreground bounding box.
    pub fn from_canvas(mask: &BinaryMask) -> Option<Self> {
        let bbox = mask.bbox()?;
        let cropped = mask.crop(bbox).expect("bbox lies inside mask");
        Some(Self::new(bbox.x, bbox.y, cropped))
    }

    /// Same region with its local raster trimmed to the foreground.
    pub fn trimmed(&self) -> Option<Self> {
        let bbox = self.mask.bbox()?;
        let cropped = self.mask.crop(bbox).expect("bbox lies inside mask");
        Some(Self::new(self.left + bbox.x, self.top + bbox.y, cropped))
    }

    pub fn frame(&self) -> Rect {
        Rect {
            x: self.left,
            y: self.top,
            width: self.mask.width(),
            height: self.mask.height(),
        }
    }

    pub fn area(&self) -> u64 {
        self.mask.area()
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.left
            && y >= self.top
            && x - self.left < self.mask.width()
            && y - self.top < self.mask.height()
            && self.mask.get(x - self.left, y - self.top)
    }

    pub fn intersection_area(&self, other: &Self) -> u64 {
        let Some(overlap) = self.frame().intersect(&other.frame()) else {
            return 0;
        };
        let mut count = 0u64;
        for y in overlap.y..overlap.bottom() {
            let a = &self.mask.row(y - self.top)
                [(overlap.x - self.left) as usize..(overlap.right() - self.left) as usize];
            let b = &other.mask.row(y - other.top)
                [(overlap.x - other.left) as usize..(overlap.right() - other.left) as usize];
            count += a.iter().zip(b).filter(|(&p, &q)| p && q).count() as u64;
        }
        count
    }

    /// Expand to a full `width`x`height` canvas raster.
    pub fn to_canvas(&self, width: u32, height: u32) -> Result<BinaryMask> {
        let frame = self.frame();
        if frame.right() > width || frame.bottom() > height {
            return Err(Error::param("region", "region exceeds canvas bounds"));
        }
        Ok(self.mask.pad(
            self.left,
            self.top,
            width - frame.right(),
            height - frame.bottom(),
        ))
    }

    /// Canvas-frame foreground runs as `(row, first column, length)`.
    pub fn canvas_runs(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.mask
            .runs()
            .into_iter()
            .map(move |(y, x, len)| (y + self.top, x + self.left, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> BinaryMask {
        BinaryMask::from_fn(4, 5, |x, y| x == 0 || y == 4).unwrap()
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(BinaryMask::new(0, 3).is_err());
        assert!(BinaryMask::new(3, 0).is_err());
    }

    #[test]
    fn bbox_and_crop() {
        let mut m = BinaryMask::new(10, 10).unwrap();
        m.set(2, 3, true);
        m.set(6, 7, true);
        let bbox = m.bbox().unwrap();
        assert_eq!(
            bbox,
            Rect {
                x: 2,
                y: 3,
                width: 5,
                height: 5
            }
        );
        let c = m.crop(bbox).unwrap();
        assert!(c.get(0, 0) && c.get(4, 4));
        assert_eq!(c.area(), 2);
        assert!(BinaryMask::new(3, 3).unwrap().bbox().is_none());
    }

    #[test]
    fn flips_and_rotation_preserve_area() {
        let m = l_shape();
        assert_eq!(m.flip_horizontal().area(), m.area());
        assert_eq!(m.flip_vertical().area(), m.area());
        let r = m.rotate90();
        assert_eq!(r.dims(), (5, 4));
        assert_eq!(r.area(), m.area());
        assert_eq!(r.rotate90().rotate90().rotate90(), m);
        assert_eq!(m.flip_horizontal().flip_horizontal(), m);
        assert!(m.flip_horizontal().get(3, 0));
    }

    #[test]
    fn region_round_trips_through_canvas() {
        let region = MaskRegion::new(3, 2, l_shape());
        let canvas = region.to_canvas(12, 9).unwrap();
        assert_eq!(canvas.area(), region.area());
        assert_eq!(MaskRegion::from_canvas(&canvas).unwrap(), region);
        assert!(region.to_canvas(5, 5).is_err());
    }

    #[test]
    fn region_intersection_matches_canvas_intersection() {
        let a = MaskRegion::new(1, 1, BinaryMask::from_fn(6, 6, |_, _| true).unwrap());
        let b = MaskRegion::new(4, 3, l_shape());
        let ca = a.to_canvas(16, 16).unwrap();
        let cb = b.to_canvas(16, 16).unwrap();
        assert_eq!(a.intersection_area(&b), ca.intersection_area(&cb).unwrap());
        assert_eq!(a.intersection_area(&b), b.intersection_area(&a));
    }
}
