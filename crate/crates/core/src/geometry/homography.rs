use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2D, ScreenQuad};

const MIN_DET: f64 = 1e-9;

/// 3x3 projective map, row-major, scaled so the bottom-right entry is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct Homography {
    m: [f64; 9],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Normalizes to `h33 = 1` and checks invertibility.
    pub fn from_matrix(m: [f64; 9]) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) || m[8].abs() < 1e-15 {
            return Err(GeometryError::SingularSystem);
        }
        let h = Self {
            m: m.map(|v| v / m[8]),
        };
        if h.det().abs() <= MIN_DET {
            return Err(GeometryError::SingularSystem);
        }
        Ok(h)
    }

    pub fn coefficients(&self) -> [f64; 9] {
        self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Projects and dehomogenizes; `None` on the line at infinity.
    #[inline]
    pub fn apply(&self, p: Point2D) -> Option<Point2D> {
        let m = &self.m;
        let w = m[6] * p.x + m[7] * p.y + m[8];
        if w.abs() < 1e-12 {
            return None;
        }
        Some(Point2D::new(
            (m[0] * p.x + m[1] * p.y + m[2]) / w,
            (m[3] * p.x + m[4] * p.y + m[5]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let m = &self.m;
        let det = self.det();
        if det.abs() <= MIN_DET {
            return Err(GeometryError::SingularSystem);
        }
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        Self::from_matrix(adj.map(|v| v / det))
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Result<Homography, GeometryError> {
        Self::from_matrix(mat_mul(&self.m, &other.m))
    }

    /// Largest absolute coefficient difference.
    pub fn max_coefficient_diff(&self, other: &Homography) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 9]> for Homography {
    type Error = GeometryError;

    fn try_from(m: [f64; 9]) -> Result<Self, Self::Error> {
        Self::from_matrix(m)
    }
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.m
    }
}

fn mat_mul(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
        }
    }
    out
}

/// Similarity that moves the centroid to the origin and the mean distance to
/// sqrt(2); keeps the 8x8 system well conditioned for pixel-scale inputs.
fn normalizer(points: &[Point2D; 4]) -> [f64; 9] {
    let cx = points.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean = points
        .iter()
        .map(|p| (p.x - cx).hypot(p.y - cy))
        .sum::<f64>()
        / 4.0;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    [s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0]
}

fn apply_affine(t: &[f64; 9], p: Point2D) -> Point2D {
    Point2D::new(
        t[0] * p.x + t[1] * p.y + t[2],
        t[3] * p.x + t[4] * p.y + t[5],
    )
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve8(mut a: [[f64; 8]; 8], mut b: [f64; 8]) -> Option<[f64; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..8 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let tail: f64 = (row + 1..8).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Homography taking each `src` corner onto the matching `dst` corner, from
/// the standard 8-unknown linear system with `h33` fixed to 1.
pub fn compute_homography(src: &ScreenQuad, dst: &ScreenQuad) -> Result<Homography, GeometryError> {
    let (ts, td) = (normalizer(src.corners()), normalizer(dst.corners()));
    let s = src.corners().map(|p| apply_affine(&ts, p));
    let d = dst.corners().map(|p| apply_affine(&td, p));

    let mut a = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    for i in 0..4 {
        let (x, y, u, v) = (s[i].x, s[i].y, d[i].x, d[i].y);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y];
        b[2 * i] = u;
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y];
        b[2 * i + 1] = v;
    }
    let h = solve8(a, b).ok_or(GeometryError::SingularSystem)?;
    let hn = [h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0];

    // Undo the normalization: H = Td^-1 * Hn * Ts.
    let td_inv = {
        let s = td[0];
        [
            1.0 / s,
            0.0,
            -td[2] / s,
            0.0,
            1.0 / s,
            -td[5] / s,
            0.0,
            0.0,
            1.0,
        ]
    };
    Homography::from_matrix(mat_mul(&td_inv, &mat_mul(&hn, &ts)))
}
