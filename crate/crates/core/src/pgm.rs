//! 16-bit binary PGM ("P5", maxval 65535, big-endian samples) holding an
//! instance-id raster.
//!
//! Written headers are always exactly `P5\n<w> <h>\n65535\n`. The reader
//! accepts any whitespace and `#` comments between header tokens, as the
//! netpbm format allows, followed by exactly one whitespace byte before the
//! payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{BinaryMask, MaskRegion, Rect};

pub const MAXVAL: u32 = 65535;

/// Row-major raster of instance ids, 0 = background.
#[derive(Clone, PartialEq, Eq)]
pub struct GraymapMask {
    width: u32,
    height: u32,
    ids: Vec<u16>,
}

impl std::fmt::Debug for GraymapMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraymapMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("max_id", &self.max_id())
            .finish()
    }
}

impl GraymapMask {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            ids: vec![0; width as usize * height as usize],
        })
    }

    pub fn from_ids(width: u32, height: u32, ids: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if ids.len() != width as usize * height as usize {
            return Err(Error::param("ids", "length must equal width * height"));
        }
        Ok(Self { width, height, ids })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn ids(&self) -> &[u16] {
        &self.ids
    }

    pub fn ids_mut(&mut self) -> &mut [u16] {
        &mut self.ids
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    pub fn max_id(&self) -> u16 {
        self.ids.iter().copied().max().unwrap_or(0)
    }

    pub fn nonzero_count(&self) -> u64 {
        self.ids.iter().filter(|&&v| v != 0).count() as u64
    }

    /// Pixel count per id; index 0 counts background.
    pub fn histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.max_id() as usize + 1];
        for &v in &self.ids {
            hist[v as usize] += 1;
        }
        hist
    }

    /// Each nonzero id as a trimmed region, ordered by id. Ids with no
    /// pixels are skipped.
    pub fn regions(&self) -> Vec<(u16, MaskRegion)> {
        let max = self.max_id() as usize;
        let mut boxes: Vec<Option<(u32, u32, u32, u32)>> = vec![None; max + 1];
        let w = self.width as usize;
        for (i, &v) in self.ids.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            let b = boxes[v as usize].get_or_insert((x, y, x, y));
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
        }
        let mut masks: Vec<Option<MaskRegion>> = boxes
            .iter()
            .map(|b| {
                b.map(|(x0, y0, x1, y1)| {
                    MaskRegion::new(x0, y0, BinaryMask::new(x1 - x0 + 1, y1 - y0 + 1).expect("non-empty"))
                })
            })
            .collect();
        for (i, &v) in self.ids.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            let region = masks[v as usize].as_mut().expect("bbox recorded");
            region.mask.set(x - region.left, y - region.top, true);
        }
        masks
            .into_iter()
            .enumerate()
            .filter_map(|(id, m)| m.map(|m| (id as u16, m)))
            .collect()
    }

    /// Binary mask of the pixels holding `id`.
    pub fn mask_of(&self, id: u16) -> BinaryMask {
        BinaryMask::from_bits(self.width, self.height, self.ids.iter().map(|&v| v == id).collect())
            .expect("same dims")
    }

    pub fn frame(&self) -> Rect {
        Rect {
            x: 0,
            y: 0,
            width: self.width,
            height: self.height,
        }
    }
}

pub fn encode_pgm(g: &GraymapMask) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", g.width, g.height, MAXVAL);
    let mut out = Vec::with_capacity(header.len() + g.ids.len() * 2);
    out.extend_from_slice(header.as_bytes());
    for &v in &g.ids {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

struct HeaderReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let c = self.data[self.pos];
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pgm(data: &[u8]) -> Result<GraymapMask> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut reader = HeaderReader { data, pos: 2 };
    let width = reader.number("width")?;
    let height = reader.number("height")?;
    let maxval = reader.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != MAXVAL {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match data.get(reader.pos) {
        Some(c) if c.is_ascii_whitespace() => {}
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }
    let payload = &data[reader.pos + 1..];
    let expected = width as usize * height as usize * 2;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let ids = payload[..expected]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    GraymapMask::from_ids(width, height, ids)
}

pub fn write_pgm(g: &GraymapMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GraymapMask> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn golden_two_by_two() {
        let g = GraymapMask::from_ids(2, 2, vec![0, 1, 2, 3]).unwrap();
        let mut expected = b"P5\n2 2\n65535\n".to_vec();
        expected.extend_from_slice(&[0x00, 0x00, 0x00, 0x01, 0x00, 0x02, 0x00, 0x03]);
        assert_eq!(encode_pgm(&g), expected);
    }

    #[test]
    fn big_endian_samples() {
        let g = GraymapMask::from_ids(1, 1, vec![0x1234]).unwrap();
        assert_eq!(&encode_pgm(&g)[13..], &[0x12, 0x34]);
    }

    #[test]
    fn errors_are_distinct() {
        let g = GraymapMask::from_ids(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = encode_pgm(&g);
        assert!(matches!(
            decode_pgm(&bytes[..bytes.len() - 3]),
            Err(Error::TruncatedPayload { expected: 12, found: 9 })
        ));
        assert!(matches!(decode_pgm(b"P6\n1 1\n65535\n\0\0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\n1 x\n65535\n\0\0"), Err(Error::MalformedHeader(_))));
        assert!(matches!(decode_pgm(b"P5\n1 1\n255\n\0"), Err(Error::UnsupportedMaxval(255))));
    }

    #[test]
    fn reader_accepts_comments() {
        let g = decode_pgm(b"P5 # made by hand\n1\t1\n65535\n\x00\x07").unwrap();
        assert_eq!(g.ids(), &[7]);
    }

    #[test]
    fn regions_and_histogram() {
        let g = GraymapMask::from_ids(3, 3, vec![0, 1, 1, 0, 2, 1, 0, 0, 2]).unwrap();
        assert_eq!(g.histogram(), vec![4, 3, 2]);
        let regions = g.regions();
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].0, 1);
        assert_eq!(regions[0].1.area(), 3);
        assert_eq!((regions[1].1.left, regions[1].1.top), (1, 1));
        assert_eq!(regions[1].1.to_canvas(3, 3).unwrap(), g.mask_of(2));
    }

    proptest! {
        #[test]
        fn round_trip(w in 1u32..40, h in 1u32..40, seed in any::<u64>()) {
            let mut state = seed;
            let ids = (0..w * h).map(|_| {
                state = crate::seed::mix64(state.wrapping_add(1));
                state as u16
            }).collect();
            let g = GraymapMask::from_ids(w, h, ids).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&g)).unwrap(), g);
        }
    }
}
