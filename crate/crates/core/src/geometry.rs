//! Label footprints and the pairwise conflict predicate.
//!
//! Two labels conflict when their *open* interiors intersect. Touching
//! boundaries never count as a conflict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Footprint of a label at its fixed map position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LabelShape {
    /// Axis-aligned rectangle given by its center and full extents.
    Rect {
        center: Point,
        width: f64,
        height: f64,
    },
    Disk {
        center: Point,
        radius: f64,
    },
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidShape(format!("{name} must be finite and > 0, got {value}")))
    }
}

fn check_center(center: Point) -> Result<()> {
    if center.x.is_finite() && center.y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidShape(format!(
            "center must be finite, got ({}, {})",
            center.x, center.y
        )))
    }
}

impl LabelShape {
    pub fn rect(center: Point, width: f64, height: f64) -> Result<Self> {
        check_center(center)?;
        check_positive("width", width)?;
        check_positive("height", height)?;
        Ok(Self::Rect {
            center,
            width,
            height,
        })
    }

    pub fn square(center: Point, side: f64) -> Result<Self> {
        Self::rect(center, side, side)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        check_center(center)?;
        check_positive("radius", radius)?;
        Ok(Self::Disk { center, radius })
    }

    /// Re-checks the invariants of a value that was built directly.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Rect {
                center,
                width,
                height,
            } => {
                check_center(center)?;
                check_positive("width", width)?;
                check_positive("height", height)
            }
            Self::Disk { center, radius } => {
                check_center(center)?;
                check_positive("radius", radius)
            }
        }
    }

    #[inline]
    pub fn center(&self) -> Point {
        match *self {
            Self::Rect { center, .. } | Self::Disk { center, .. } => center,
        }
    }

    /// Axis-aligned bounding box as `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Self::Rect {
                center,
                width,
                height,
            } => (
                center.x - width / 2.0,
                center.y - height / 2.0,
                center.x + width / 2.0,
                center.y + height / 2.0,
            ),
            Self::Disk { center, radius } => (
                center.x - radius,
                center.y - radius,
                center.x + radius,
                center.y + radius,
            ),
        }
    }
}

/// Squared distance from `p` to the closed rectangle.
fn squared_distance_to_rect(p: Point, center: Point, width: f64, height: f64) -> f64 {
    let dx = ((p.x - center.x).abs() - width / 2.0).max(0.0);
    let dy = ((p.y - center.y).abs() - height / 2.0).max(0.0);
    dx * dx + dy * dy
}

/// Returns `true` iff the open interiors of `a` and `b` intersect.
pub fn conflicts(a: &LabelShape, b: &LabelShape) -> bool {
    use LabelShape::*;
    match (*a, *b) {
        (
            Rect {
                center: ca,
                width: wa,
                height: ha,
            },
            Rect {
                center: cb,
                width: wb,
                height: hb,
            },
        ) => {
            // Compare doubled distances so that equal-size squares avoid a division.
            2.0 * (ca.x - cb.x).abs() < wa + wb && 2.0 * (ca.y - cb.y).abs() < ha + hb
        }
        (
            Disk {
                center: ca,
                radius: ra,
            },
            Disk {
                center: cb,
                radius: rb,
            },
        ) => {
            let dx = ca.x - cb.x;
            let dy = ca.y - cb.y;
            let reach = ra + rb;
            dx * dx + dy * dy < reach * reach
        }
        (
            Rect {
                center,
                width,
                height,
            },
            Disk {
                center: dc,
                radius,
            },
        )
        | (
            Disk {
                center: dc,
                radius,
            },
            Rect {
                center,
                width,
                height,
            },
        ) => squared_distance_to_rect(dc, center, width, height) < radius * radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq(x: f64, y: f64, side: f64) -> LabelShape {
        LabelShape::square(Point::new(x, y), side).unwrap()
    }

    fn disk(x: f64, y: f64, r: f64) -> LabelShape {
        LabelShape::disk(Point::new(x, y), r).unwrap()
    }

    #[test]
    fn touching_squares_do_not_conflict() {
        assert!(!conflicts(&sq(0.0, 0.0, 6.0), &sq(6.0, 0.0, 6.0)));
        assert!(!conflicts(&sq(0.0, 0.0, 6.0), &sq(6.0, 6.0, 6.0)));
    }

    #[test]
    fn overlapping_squares_conflict() {
        assert!(conflicts(&sq(4.0, 4.0, 6.0), &sq(0.0, 0.0, 6.0)));
    }

    #[test]
    fn tangent_disks_do_not_conflict() {
        assert!(!conflicts(&disk(0.0, 0.0, 1.0), &disk(2.0, 0.0, 1.0)));
        assert!(conflicts(&disk(0.0, 0.0, 1.0), &disk(1.999, 0.0, 1.0)));
    }

    #[test]
    fn shape_conflicts_with_itself() {
        let shapes = [sq(1.0, 2.0, 3.0), disk(-4.0, 0.5, 0.25)];
        for s in &shapes {
            assert!(conflicts(s, s));
        }
    }

    #[test]
    fn rect_disk_uses_closest_point() {
        let r = sq(0.0, 0.0, 2.0);
        // Disk touching the corner at (1, 1) from outside.
        let touching = disk(1.0 + 3.0, 1.0 + 4.0, 5.0);
        assert!(!conflicts(&r, &touching));
        assert!(!conflicts(&touching, &r));
        assert!(conflicts(&r, &disk(4.0, 5.0, 5.001)));
        // Disk center inside the rectangle.
        assert!(conflicts(&r, &disk(0.5, 0.5, 0.01)));
        // Touching an edge.
        assert!(!conflicts(&r, &disk(2.0, 0.0, 1.0)));
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(LabelShape::rect(Point::new(0.0, 0.0), 0.0, 1.0).is_err());
        assert!(LabelShape::rect(Point::new(0.0, 0.0), 1.0, -1.0).is_err());
        assert!(LabelShape::disk(Point::new(0.0, 0.0), f64::NAN).is_err());
        assert!(LabelShape::disk(Point::new(f64::INFINITY, 0.0), 1.0).is_err());
    }

    fn arb_shape() -> impl Strategy<Value = LabelShape> {
        let coord = -10.0..10.0f64;
        let size = 0.1..5.0f64;
        prop_oneof![
            (coord.clone(), coord.clone(), size.clone(), size.clone())
                .prop_map(|(x, y, w, h)| LabelShape::rect(Point::new(x, y), w, h).unwrap()),
            (coord.clone(), coord, size)
                .prop_map(|(x, y, r)| LabelShape::disk(Point::new(x, y), r).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn conflict_is_symmetric(a in arb_shape(), b in arb_shape()) {
            prop_assert_eq!(conflicts(&a, &b), conflicts(&b, &a));
        }

        #[test]
        fn boundary_strictness(
            x in -100i32..100, y in -100i32..100, side in 1u32..16,
            fx in 0.0..1.0f64, fy in 0.0..1.0f64,
        ) {
            let side = side as f64;
            let (x, y) = (x as f64, y as f64);
            let base = sq(x, y, side);
            prop_assert!(!conflicts(&base, &sq(x + side, y, side)));
            prop_assert!(!conflicts(&base, &sq(x, y - side, side)));
            // Any difference strictly below the side in both coordinates overlaps.
            let dx = fx * side * 0.999;
            let dy = fy * side * 0.999;
            prop_assert!(conflicts(&base, &sq(x + dx, y + dy, side)));
        }
    }

    #[test]
    fn disk_packing_never_exceeds_five() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let hub = disk(0.0, 0.0, 1.0);
        let mut best = 0;
        for _ in 0..2_000 {
            let mut placed: Vec<LabelShape> = Vec::new();
            for _ in 0..200 {
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let rad = 2.0 * rng.random_range(0.0..1.0f64).sqrt();
                let cand = disk(rad * ang.cos(), rad * ang.sin(), 1.0);
                if conflicts(&cand, &hub) && placed.iter().all(|p| !conflicts(p, &cand)) {
                    placed.push(cand);
                }
            }
            best = best.max(placed.len());
        }
        assert!(best <= 5, "found {best} disjoint disks around a unit disk");
        assert!(best >= 3);
    }
}
