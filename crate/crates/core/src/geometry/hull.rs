//! Convex hull of lattice points and the farthest-pair (diameter) measure.

use super::{BinaryMask, PixelPoint};
use crate::error::{Error, Result};

#[inline]
fn cross(o: PixelPoint, a: PixelPoint, b: PixelPoint) -> i64 {
    (a.x as i64 - o.x as i64) * (b.y as i64 - o.y as i64)
        - (a.y as i64 - o.y as i64) * (b.x as i64 - o.x as i64)
}

#[inline]
pub(crate) fn dist_sq(a: PixelPoint, b: PixelPoint) -> i64 {
    let dx = a.x as i64 - b.x as i64;
    let dy = a.y as i64 - b.y as i64;
    dx * dx + dy * dy
}

/// Monotone-chain hull. Vertices wind counter-clockwise with respect to the
/// axes (positive cross products; clockwise as displayed with y down), start
/// at the smallest `(x, y)` point, and exclude collinear points.
/// Duplicate inputs collapse; a single distinct point returns itself.
pub fn convex_hull(points: &[PixelPoint]) -> Result<Vec<PixelPoint>> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return Ok(pts);
    }
    let mut hull: Vec<PixelPoint> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(hull)
}

/// Largest squared distance between two vertices of a convex polygon given
/// counter-clockwise with no collinear vertices (rotating calipers).
pub fn hull_diameter_sq(hull: &[PixelPoint]) -> i64 {
    let n = hull.len();
    match n {
        0 | 1 => return 0,
        2 => return dist_sq(hull[0], hull[1]),
        _ => {}
    }
    let mut best = 0;
    let mut j = 1;
    for i in 0..n {
        let ni = (i + 1) % n;
        // advance the antipodal pointer while the triangle area grows
        while cross(hull[i], hull[ni], hull[(j + 1) % n]).abs() > cross(hull[i], hull[ni], hull[j]).abs() {
            j = (j + 1) % n;
        }
        best = best.max(dist_sq(hull[i], hull[j])).max(dist_sq(hull[ni], hull[j]));
    }
    best
}

/// Candidate points for the hull of a mask's pixel centers: the leftmost and
/// rightmost foreground pixel of each row. Every hull vertex is among them.
pub(crate) fn row_extremes(mask: &BinaryMask) -> Vec<PixelPoint> {
    let mut pts = Vec::new();
    for y in 0..mask.height() {
        let row = mask.row(y);
        if let Some(first) = row.iter().position(|&b| b) {
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            pts.push(PixelPoint::new(first as i32, y as i32));
            if last != first {
                pts.push(PixelPoint::new(last as i32, y as i32));
            }
        }
    }
    pts
}

/// Squared farthest-pair distance between foreground pixel centers.
pub fn farthest_pair_sq(mask: &BinaryMask) -> Result<i64> {
    let pts = row_extremes(mask);
    if pts.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(hull_diameter_sq(&convex_hull(&pts)?))
}

/// Maximum Euclidean distance in pixels between the centers of any two
/// foreground pixels. A single pixel measures 0.
pub fn farthest_pair(mask: &BinaryMask) -> Result<f64> {
    Ok((farthest_pair_sq(mask)? as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: i32, y: i32) -> PixelPoint {
        PixelPoint::new(x, y)
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(convex_hull(&[]), Err(Error::NoPoints)));
        let m = BinaryMask::new(4, 4).unwrap();
        assert!(matches!(farthest_pair(&m), Err(Error::EmptyMask)));
    }

    #[test]
    fn single_point_hull() {
        assert_eq!(convex_hull(&[p(3, 4)]).unwrap(), vec![p(3, 4)]);
    }

    #[test]
    fn square_with_center_and_edge_midpoint() {
        let pts = [p(0, 0), p(4, 0), p(4, 4), p(0, 4), p(2, 2), p(2, 0)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull, vec![p(0, 0), p(4, 0), p(4, 4), p(0, 4)]);
    }

    #[test]
    fn collinear_points_reduce_to_endpoints() {
        let pts: Vec<_> = (0..6).map(|i| p(i, 2 * i)).collect();
        assert_eq!(convex_hull(&pts).unwrap(), vec![p(0, 0), p(5, 10)]);
    }

    /// Brute force: a point is strictly inside a CCW polygon or on its
    /// boundary iff it is left of or on every edge.
    #[test]
    fn random_hulls_contain_all_points_and_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pts: Vec<_> = (0..200)
                .map(|_| p(rng.random_range(-50..50), rng.random_range(-50..50)))
                .collect();
            let hull = convex_hull(&pts).unwrap();
            let n = hull.len();
            for i in 0..n {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                for &q in &pts {
                    assert!(cross(a, b, q) >= 0, "point {q:?} outside edge {a:?}->{b:?}");
                }
                // strict convexity: no collinear vertices
                assert!(cross(a, b, hull[(i + 2) % n]) > 0);
            }
            // every extreme point of the input is a hull vertex: any input
            // point not on the hull boundary must be strictly inside
            for &q in &pts {
                let on_vertex = hull.contains(&q);
                let strictly_inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) > 0);
                let on_edge = (0..n).any(|i| cross(hull[i], hull[(i + 1) % n], q) == 0);
                assert!(on_vertex || strictly_inside || on_edge);
            }
        }
    }

    #[test]
    fn hull_area_bounds_sampled_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<_> = (0..100)
            .map(|_| p(rng.random_range(0..80), rng.random_range(0..80)))
            .collect();
        let hull = convex_hull(&pts).unwrap();
        let twice_area: i64 = (1..hull.len() - 1)
            .map(|i| cross(hull[0], hull[i], hull[i + 1]))
            .sum();
        for _ in 0..500 {
            let a = pts[rng.random_range(0..pts.len())];
            let b = pts[rng.random_range(0..pts.len())];
            let c = pts[rng.random_range(0..pts.len())];
            assert!(twice_area >= cross(a, b, c).abs());
        }
    }

    #[test]
    fn diameter_of_simple_masks() {
        let mut m = BinaryMask::new(12, 3).unwrap();
        m.set(4, 1, true);
        assert_eq!(farthest_pair(&m).unwrap(), 0.0);
        let run = BinaryMask::from_fn(10, 1, |_, _| true).unwrap();
        assert_eq!(farthest_pair(&run).unwrap(), 9.0);
    }

    #[test]
    fn calipers_match_all_pairs_on_random_polygons() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let k = rng.random_range(1..40);
            let pts: Vec<_> = (0..k)
                .map(|_| p(rng.random_range(0..30), rng.random_range(0..30)))
                .collect();
            let hull = convex_hull(&pts).unwrap();
            let mut brute = 0;
            for a in &pts {
                for b in &pts {
                    brute = brute.max(dist_sq(*a, *b));
                }
            }
            assert_eq!(hull_diameter_sq(&hull), brute);
        }
    }
}
