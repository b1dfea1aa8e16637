//! Connected-component labeling of binary masks.

use serde::{Deserialize, Serialize};

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "4")]
    Four,
    #[default]
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        const FOUR: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i32, i32); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Per-pixel component labels (0 = background, components numbered from 1
/// in raster order of their first pixel) plus the area of each component.
pub struct Labeling {
    pub labels: Vec<u32>,
    pub areas: Vec<u64>,
}

pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> Labeling {
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        let mut area = 0u64;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = ((i % w as usize) as i32, (i / w as usize) as i32);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = ny as usize * w as usize + nx as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = label;
                    stack.push(j);
                }
            }
        }
        areas.push(area);
    }
    Labeling { labels, areas }
}

/// Split a mask into its maximal connected regions, each returned at the
/// input's dimensions. Ordered by the raster position of each region's first
/// pixel. An empty mask yields an empty list.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<BinaryMask> {
    let Labeling { labels, areas } = label_components(mask, connectivity);
    let mut out: Vec<Vec<bool>> = vec![vec![false; labels.len()]; areas.len()];
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 {
            out[l as usize - 1][i] = true;
        }
    }
    out.into_iter()
        .map(|bits| BinaryMask::from_bits(mask.width(), mask.height(), bits).expect("same dims"))
        .collect()
}

/// Keep only the pixels whose component passes `keep(area, largest_area)`.
pub(crate) fn filter_components(
    mask: &BinaryMask,
    connectivity: Connectivity,
    keep: impl Fn(u64, u64) -> bool,
) -> BinaryMask {
    let Labeling { labels, areas } = label_components(mask, connectivity);
    let largest = areas.iter().copied().max().unwrap_or(0);
    let kept: Vec<bool> = areas.iter().map(|&a| keep(a, largest)).collect();
    let bits = labels
        .iter()
        .map(|&l| l != 0 && kept[l as usize - 1])
        .collect();
    BinaryMask::from_bits(mask.width(), mask.height(), bits).expect("same dims")
}

/// The largest connected component; ties go to the one found first in
/// raster order. Empty input gives an empty mask.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let Labeling { labels, areas } = label_components(mask, connectivity);
    let Some(best) = areas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32 + 1)
    else {
        return mask.clone();
    };
    let bits = labels.iter().map(|&l| l == best).collect();
    BinaryMask::from_bits(mask.width(), mask.height(), bits).expect("same dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_mask_has_no_components() {
        let m = BinaryMask::new(8, 8).unwrap();
        assert!(connected_components(&m, Connectivity::Eight).is_empty());
    }

    #[test]
    fn isolated_pixels() {
        let mut m = BinaryMask::new(8, 8).unwrap();
        m.set(1, 1, true);
        m.set(5, 6, true);
        let comps = connected_components(&m, Connectivity::Eight);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.area() == 1));
    }

    #[test]
    fn diagonal_neighbors_depend_on_connectivity() {
        let mut m = BinaryMask::new(4, 4).unwrap();
        m.set(0, 0, true);
        m.set(1, 1, true);
        assert_eq!(connected_components(&m, Connectivity::Eight).len(), 1);
        assert_eq!(connected_components(&m, Connectivity::Four).len(), 2);
    }

    /// Independent recount: scan rows into runs and merge runs with a
    /// union-find, instead of flood filling.
    fn run_merge_count(mask: &BinaryMask) -> usize {
        let runs = mask.runs();
        let mut parent: Vec<usize> = (0..runs.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for i in 0..runs.len() {
            for j in 0..i {
                let (ya, xa, la) = runs[i];
                let (yb, xb, lb) = runs[j];
                // 8-connected: adjacent rows and column ranges touching diagonally
                if ya == yb + 1 && xa as i64 <= (xb + lb) as i64 && xb as i64 <= (xa + la) as i64 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                }
            }
        }
        (0..runs.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    #[test]
    fn stamped_blobs_are_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mask = BinaryMask::new(256, 256).unwrap();
        let mut stamps: Vec<(i32, i32, i32)> = Vec::new();
        while stamps.len() < 50 {
            let r = rng.random_range(2..7);
            let cx = rng.random_range(r..256 - r);
            let cy = rng.random_range(r..256 - r);
            // keep a gap of two pixels so stamps never touch
            if stamps
                .iter()
                .any(|&(x, y, q)| ((x - cx).pow(2) + (y - cy).pow(2)) < (q + r + 2).pow(2))
            {
                continue;
            }
            stamps.push((cx, cy, r));
            for y in cy - r..=cy + r {
                for x in cx - r..=cx + r {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        mask.set(x as u32, y as u32, true);
                    }
                }
            }
        }
        let comps = connected_components(&mask, Connectivity::Eight);
        assert_eq!(comps.len(), 50);
        assert_eq!(run_merge_count(&mask), 50);
        let total: u64 = comps.iter().map(|c| c.area()).sum();
        assert_eq!(total, mask.area());
        for (i, a) in comps.iter().enumerate() {
            for b in &comps[i + 1..] {
                assert_eq!(a.intersection_area(b).unwrap(), 0);
            }
        }
    }

    #[test]
    fn largest_component_prefers_bigger() {
        let mut m = BinaryMask::new(10, 10).unwrap();
        m.set(0, 0, true);
        for x in 4..8 {
            m.set(x, 5, true);
        }
        let big = largest_component(&m, Connectivity::Eight);
        assert_eq!(big.area(), 4);
        assert!(!big.get(0, 0));
    }
}
