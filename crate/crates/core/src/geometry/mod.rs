//! Binary-mask primitives shared by every other module.

mod components;
mod hull;
mod mask;
mod morphology;

pub use components::{connected_components, label_components, largest_component, Connectivity, Labeling};
pub use hull::{convex_hull, farthest_pair, farthest_pair_sq, hull_diameter_sq};
pub use mask::{BinaryMask, MaskRegion, PixelPoint, Rect};
pub use morphology::{
    close, dilate, drop_small_components, erode, fill_holes, morph_refine, open, RefineOp,
    RefineParams,
};

use crate::error::Result;

/// `|a ∩ b| / |a ∪ b|`. Two empty masks score 0.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_at(x0: u32, y0: u32) -> BinaryMask {
        BinaryMask::from_fn(32, 32, |x, y| (x0..x0 + 10).contains(&x) && (y0..y0 + 10).contains(&y)).unwrap()
    }

    #[test]
    fn iou_of_self_and_disjoint() {
        let a = square_at(0, 0);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &square_at(20, 20)).unwrap(), 0.0);
    }

    #[test]
    fn iou_of_half_shifted_square() {
        let a = square_at(2, 2);
        let b = square_at(7, 2);
        assert_eq!(mask_iou(&a, &b).unwrap(), 50.0 / 150.0);
        assert_eq!(mask_iou(&b, &a).unwrap(), mask_iou(&a, &b).unwrap());
    }

    #[test]
    fn iou_edge_cases() {
        let empty = BinaryMask::new(32, 32).unwrap();
        assert_eq!(mask_iou(&empty, &empty).unwrap(), 0.0);
        assert!(mask_iou(&empty, &BinaryMask::new(8, 8).unwrap()).is_err());
    }
}
