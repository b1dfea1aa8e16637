//! The eight sieve size classes from 4 mm to 63 mm and their settling layers.
//!
//! Intervals are half-open, `[min, max)`, except class 8 which includes 63 mm.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COUNT: usize = 8;

/// Sieve apertures in millimetres; class `k` spans `BOUNDS_MM[k-1]..BOUNDS_MM[k]`.
pub const BOUNDS_MM: [f64; CLASS_COUNT + 1] = [4.0, 5.6, 8.0, 11.2, 16.0, 22.4, 35.0, 45.0, 63.0];

const LAYERS: [u8; CLASS_COUNT] = [0, 0, 0, 1, 1, 2, 3, 4];

pub const LAYER_COUNT: usize = 5;

/// Per-class counts, index 0 is class 1.
pub type ClassCounts = [u32; CLASS_COUNT];

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SizeClass(u8);

impl SizeClass {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=CLASS_COUNT as u8).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidClass(index))
        }
    }

    pub fn all() -> impl Iterator<Item = SizeClass> {
        (1..=CLASS_COUNT as u8).map(SizeClass)
    }

    /// 1-based class number.
    pub fn index(self) -> u8 {
        self.0
    }

    /// 0-based position for indexing [`ClassCounts`].
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn min_mm(self) -> f64 {
        BOUNDS_MM[self.slot()]
    }

    pub fn max_mm(self) -> f64 {
        BOUNDS_MM[self.slot() + 1]
    }

    pub fn layer(self) -> u8 {
        LAYERS[self.slot()]
    }

    pub fn contains(self, size_mm: f64) -> bool {
        let upper_ok = if self.0 as usize == CLASS_COUNT {
            size_mm <= self.max_mm()
        } else {
            size_mm < self.max_mm()
        };
        size_mm >= self.min_mm() && upper_ok
    }
}

impl fmt::Debug for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Class{}[{}, {})", self.0, self.min_mm(), self.max_mm())
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class {}", self.0)
    }
}

impl TryFrom<u8> for SizeClass {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        SizeClass::new(value)
    }
}

impl From<SizeClass> for u8 {
    fn from(c: SizeClass) -> u8 {
        c.0
    }
}

/// Map a particle size to its sieve class.
pub fn classify_size(size_mm: f64) -> Result<SizeClass> {
    if !(BOUNDS_MM[0]..=BOUNDS_MM[CLASS_COUNT]).contains(&size_mm) {
        return Err(Error::OutOfSieveRange(size_mm));
    }
    let slot = BOUNDS_MM[1..CLASS_COUNT]
        .iter()
        .take_while(|&&upper| size_mm >= upper)
        .count();
    Ok(SizeClass(slot as u8 + 1))
}

/// Classes grouped by layer, bottom layer first.
pub fn classes_in_layer(layer: u8) -> impl Iterator<Item = SizeClass> {
    SizeClass::all().filter(move |c| c.layer() == layer)
}
