//! Screen corner extraction and perspective rectification.
//!
//! The flow mirrors stage 1 of the extractor: a segmentation mask is reduced
//! to its largest 4-connected component, the component outline is simplified
//! to four corners, and a homography maps those corners onto the canonical
//! 640x480 frame so later stages see a frontal view.

mod contour;
mod corners;
mod homography;
mod min_rect;
mod simplify;
mod warp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::BinaryMask;

pub use contour::{largest_component, trace_outer_contour, Component};
pub use corners::{extract_corners, order_corners};
pub use homography::{compute_homography, Homography};
pub use min_rect::{convex_hull, min_area_rect};
pub use simplify::{douglas_peucker_closed, douglas_peucker_open};
pub use warp::{rectify, warp_perspective, warp_to_frame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("linear system is singular")]
    SingularSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point2D {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// z-component of (b - a) x (c - a); positive when a->b->c turns clockwise
/// on screen (y axis pointing down).
pub(crate) fn cross(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(p1: Point2D, p2: Point2D, q1: Point2D, q2: Point2D) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Four screen corners ordered top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 4]", into = "[[f64; 2]; 4]")]
pub struct ScreenQuad {
    corners: [Point2D; 4],
}

impl ScreenQuad {
    /// Validates an already-ordered quad: finite, simple, clockwise with
    /// positive area.
    pub fn new(corners: [Point2D; 4]) -> Result<Self, GeometryError> {
        if corners.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::DegenerateShape("non-finite corner".into()));
        }
        let q = Self { corners };
        if q.signed_area() <= 1e-9 {
            return Err(GeometryError::DegenerateShape(
                "corners are not clockwise with positive area".into(),
            ));
        }
        let [a, b, c, d] = corners;
        if segments_cross(a, b, c, d) || segments_cross(b, c, d, a) {
            return Err(GeometryError::DegenerateShape(
                "self-intersecting quad".into(),
            ));
        }
        Ok(q)
    }

    pub fn from_array(corners: [[f64; 2]; 4]) -> Result<Self, GeometryError> {
        Self::new(corners.map(|[x, y]| Point2D::new(x, y)))
    }

    /// Axis-aligned rectangle spanning pixel centers `(x0, y0)..=(x1, y1)`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::from_array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn corners(&self) -> &[Point2D; 4] {
        &self.corners
    }

    pub fn to_array(&self) -> [[f64; 2]; 4] {
        self.corners.map(|p| [p.x, p.y])
    }

    /// Shoelace sum; positive for the clockwise-on-screen ordering.
    pub fn signed_area(&self) -> f64 {
        let c = &self.corners;
        (0..4)
            .map(|i| {
                let (p, q) = (c[i], c[(i + 1) % 4]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            corners: self.corners.map(|p| Point2D::new(p.x + dx, p.y + dy)),
        }
    }

    /// Largest per-corner Euclidean distance between two quads.
    pub fn max_corner_distance(&self, other: &ScreenQuad) -> f64 {
        self.corners
            .iter()
            .zip(other.corners.iter())
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max)
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point2D) -> bool {
        let c = &self.corners;
        let mut inside = false;
        let mut j = 3;
        for i in 0..4 {
            let (a, b) = (c[i], c[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_at {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Mask of the pixels whose centers fall inside the quad.
    pub fn rasterize(&self, width: u32, height: u32) -> BinaryMask {
        let (min_y, max_y) = self
            .corners
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.y), hi.max(p.y))
            });
        let mut mask = BinaryMask::new(width, height);
        let y0 = min_y.floor().max(0.0) as u32;
        let y1 = (max_y.ceil().max(0.0) as u32).min(height - 1);
        for y in y0..=y1 {
            for x in 0..width {
                if self.contains(Point2D::new(x as f64, y as f64)) {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }
}

impl TryFrom<[[f64; 2]; 4]> for ScreenQuad {
    type Error = GeometryError;

    fn try_from(value: [[f64; 2]; 4]) -> Result<Self, Self::Error> {
        Self::from_array(value)
    }
}

impl From<ScreenQuad> for [[f64; 2]; 4] {
    fn from(q: ScreenQuad) -> Self {
        q.to_array()
    }
}

/// Destination frame of the rectification warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalFrame {
    pub width: u32,
    pub height: u32,
}

impl CanonicalFrame {
    pub const STANDARD: CanonicalFrame = CanonicalFrame {
        width: 640,
        height: 480,
    };

    /// Corners at the outermost pixel centers: (0,0), (w-1,0), (w-1,h-1), (0,h-1).
    pub fn quad(&self) -> ScreenQuad {
        let (w, h) = ((self.width - 1) as f64, (self.height - 1) as f64);
        ScreenQuad::rect(0.0, 0.0, w, h).expect("canonical frame is a valid rectangle")
    }
}

impl Default for CanonicalFrame {
    fn default() -> Self {
        Self::STANDARD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_validation() {
        assert!(ScreenQuad::rect(0.0, 0.0, 9.0, 9.0).is_ok());
        // counter-clockwise
        assert!(ScreenQuad::from_array([[0.0, 0.0], [0.0, 9.0], [9.0, 9.0], [9.0, 0.0]]).is_err());
        // bow-tie
        assert!(ScreenQuad::from_array([[0.0, 0.0], [9.0, 9.0], [9.0, 0.0], [0.0, 9.0]]).is_err());
        assert!(
            ScreenQuad::from_array([[0.0, 0.0], [f64::NAN, 0.0], [9.0, 9.0], [0.0, 9.0]]).is_err()
        );
    }

    #[test]
    fn canonical_corners() {
        let q = CanonicalFrame::STANDARD.quad();
        assert_eq!(
            q.to_array(),
            [[0.0, 0.0], [639.0, 0.0], [639.0, 479.0], [0.0, 479.0]]
        );
    }

    #[test]
    fn rasterize_rect_covers_inclusive_centers() {
        let q = ScreenQuad::rect(2.0, 1.0, 5.0, 3.0).unwrap();
        let m = q.rasterize(10, 6);
        // Centers exactly on an edge: the half-open even-odd rule keeps the
        // top/left edges and drops the bottom/right ones.
        let expected =
            BinaryMask::from_fn(10, 6, |x, y| (2..5).contains(&x) && (1..3).contains(&y));
        assert_eq!(m, expected);
    }

    #[test]
    fn serde_as_nested_arrays() {
        let q = ScreenQuad::rect(1.0, 2.0, 3.0, 4.0).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,2.0],[3.0,4.0],[1.0,4.0]]");
        let back: ScreenQuad = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<ScreenQuad>("[[0,0],[0,0],[0,0],[0,0]]").is_err());
    }
}
