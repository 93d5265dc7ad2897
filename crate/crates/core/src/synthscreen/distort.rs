use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{DistortionParams, Glare};
use super::SynthError;
use crate::geometry::{compute_homography, CanonicalFrame, Homography, Point2D, ScreenQuad};
use crate::image::ImageBuffer;

/// Size of generated scene photographs.
pub const SCENE_WIDTH: u32 = 960;
pub const SCENE_HEIGHT: u32 = 720;

// Camera distance in canonical pixels; focal length equals it so an
// untilted screen projects at scale 1.
const CAMERA_DISTANCE: f64 = 1200.0;
// Free border kept between the screen quad and the scene edge.
const MARGIN: f64 = 24.0;
// Bezel width around the screen, in canonical pixels.
const BEZEL: f64 = 22.0;

/// How the canonical screen is placed in a scene and degraded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSpec {
    pub scene_width: u32,
    pub scene_height: u32,
    /// Canonical frame -> scene map.
    pub homography: Homography,
    pub noise_sigma: f64,
    pub glare: Option<Glare>,
    pub blur_radius: u32,
    pub seed: u64,
}

impl DistortionSpec {
    /// Screen pasted axis-aligned with its top-left canonical pixel at
    /// `(x, y)`, no photometric effects.
    pub fn paste(scene_width: u32, scene_height: u32, x: f64, y: f64, seed: u64) -> Self {
        Self {
            scene_width,
            scene_height,
            homography: Homography::from_matrix([1.0, 0.0, x, 0.0, 1.0, y, 0.0, 0.0, 1.0])
                .expect("translation is invertible"),
            noise_sigma: 0.0,
            glare: None,
            blur_radius: 0,
            seed,
        }
    }

    pub fn from_params(
        p: &DistortionParams,
        scene_width: u32,
        scene_height: u32,
    ) -> Result<Self, SynthError> {
        let quad = camera_quad(p, scene_width, scene_height)?;
        let homography = compute_homography(&CanonicalFrame::STANDARD.quad(), &quad)
            .map_err(|e| SynthError::Distortion(e.to_string()))?;
        Ok(Self {
            scene_width,
            scene_height,
            homography,
            noise_sigma: p.noise_sigma,
            glare: p.glare,
            blur_radius: p.blur_radius,
            seed: p.seed,
        })
    }

    /// The screen outline in the scene.
    pub fn quad(&self) -> Result<ScreenQuad, SynthError> {
        map_quad(&self.homography, &CanonicalFrame::STANDARD.quad())
    }
}

fn map_quad(h: &Homography, q: &ScreenQuad) -> Result<ScreenQuad, SynthError> {
    let mut pts = [Point2D::default(); 4];
    for (dst, src) in pts.iter_mut().zip(q.corners()) {
        *dst = h
            .apply(*src)
            .ok_or_else(|| SynthError::Distortion("corner maps to infinity".into()))?;
    }
    ScreenQuad::new(pts).map_err(|e| SynthError::Distortion(e.to_string()))
}

fn unscaled_projection(p: &DistortionParams) -> [Point2D; 4] {
    let frame = CanonicalFrame::STANDARD;
    let (cx, cy) = (
        (frame.width - 1) as f64 / 2.0,
        (frame.height - 1) as f64 / 2.0,
    );
    let (t, a, r) = (
        p.obliqueness_deg.to_radians(),
        p.azimuth_deg.to_radians(),
        p.roll_deg.to_radians(),
    );
    // Rodrigues rotation by the obliqueness about an in-plane axis at the
    // given azimuth, followed by a roll about the optical axis.
    let (ux, uy) = (a.cos(), a.sin());
    let (c, s) = (t.cos(), t.sin());
    let tilt = [
        [c + ux * ux * (1.0 - c), ux * uy * (1.0 - c), uy * s],
        [ux * uy * (1.0 - c), c + uy * uy * (1.0 - c), -ux * s],
        [-uy * s, ux * s, c],
    ];
    let (rc, rs) = (r.cos(), r.sin());
    frame.quad().corners().map(|q| {
        let (x, y) = (q.x - cx, q.y - cy);
        let (tx, ty, tz) = (
            tilt[0][0] * x + tilt[0][1] * y,
            tilt[1][0] * x + tilt[1][1] * y,
            tilt[2][0] * x + tilt[2][1] * y,
        );
        let (rx, ry) = (rc * tx - rs * ty, rs * tx + rc * ty);
        let z = tz + CAMERA_DISTANCE;
        Point2D::new(CAMERA_DISTANCE * rx / z, CAMERA_DISTANCE * ry / z)
    })
}

fn bounds(pts: &[Point2D]) -> (f64, f64, f64, f64) {
    pts.iter().fold(
        (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ),
        |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
    )
}

/// Largest scale at which the projected screen still fits the scene.
pub fn max_scale(p: &DistortionParams, scene_width: u32, scene_height: u32) -> f64 {
    let (x0, y0, x1, y1) = bounds(&unscaled_projection(p));
    ((scene_width as f64 - 2.0 * MARGIN) / (x1 - x0))
        .min((scene_height as f64 - 2.0 * MARGIN) / (y1 - y0))
}

/// Room for moving the screen center at `scale`, per axis.
pub fn max_offset(
    p: &DistortionParams,
    scale: f64,
    scene_width: u32,
    scene_height: u32,
) -> [f64; 2] {
    let (x0, y0, x1, y1) = bounds(&unscaled_projection(p));
    [
        ((scene_width as f64 - 2.0 * MARGIN - scale * (x1 - x0)) / 2.0).max(0.0),
        ((scene_height as f64 - 2.0 * MARGIN - scale * (y1 - y0)) / 2.0).max(0.0),
    ]
}

/// Scene-space screen corners for a virtual camera: the projected screen is
/// scaled by `p.scale` and its bounding-box center moved to the scene
/// center plus `p.offset`.
pub fn camera_quad(
    p: &DistortionParams,
    scene_width: u32,
    scene_height: u32,
) -> Result<ScreenQuad, SynthError> {
    let proj = unscaled_projection(p);
    let (x0, y0, x1, y1) = bounds(&proj);
    let (mx, my) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (sx, sy) = (
        scene_width as f64 / 2.0 + p.offset[0],
        scene_height as f64 / 2.0 + p.offset[1],
    );
    let pts = proj.map(|q| Point2D::new(sx + p.scale * (q.x - mx), sy + p.scale * (q.y - my)));
    let quad = ScreenQuad::new(pts).map_err(|e| SynthError::Distortion(e.to_string()))?;
    let inside = pts.iter().all(|q| {
        q.x >= 0.0
            && q.y >= 0.0
            && q.x <= (scene_width - 1) as f64
            && q.y <= (scene_height - 1) as f64
    });
    if !inside {
        return Err(SynthError::Distortion("screen leaves the scene".into()));
    }
    Ok(quad)
}

/// Procedural clutter: a vertical gradient with random boxes and discs.
pub fn background(width: u32, height: u32, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b61_6368_656c);
    let top: [f64; 3] = std::array::from_fn(|_| rng.random_range(40.0..170.0));
    let bottom: [f64; 3] = std::array::from_fn(|_| rng.random_range(40.0..170.0));
    let mut img = ImageBuffer::from_fn(width, height, |_, y| {
        let t = y as f64 / (height.max(2) - 1) as f64;
        std::array::from_fn(|c| (top[c] * (1.0 - t) + bottom[c] * t) as u8)
    });
    for i in 0..36 {
        let color: [u8; 3] = std::array::from_fn(|_| rng.random_range(20..230));
        let (cx, cy) = (
            rng.random_range(0..width) as f64,
            rng.random_range(0..height) as f64,
        );
        let (rx, ry) = (rng.random_range(10.0..140.0), rng.random_range(10.0..140.0));
        let disc = i % 3 == 0;
        let (x0, x1) = ((cx - rx).max(0.0) as u32, ((cx + rx) as u32).min(width));
        let (y0, y1) = ((cy - ry).max(0.0) as u32, ((cy + ry) as u32).min(height));
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                if !disc || dx * dx + dy * dy <= 1.0 {
                    img.put_pixel(x, y, color);
                }
            }
        }
    }
    img
}

fn bilinear(img: &ImageBuffer, x: f64, y: f64) -> [u8; 3] {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (x, y) = (x.clamp(0.0, w - 1.0), y.clamp(0.0, h - 1.0));
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let (x1, y1) = (
        (x0 + 1).min(img.width() - 1),
        (y0 + 1).min(img.height() - 1),
    );
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (a, b, c, d) = (
        img.pixel(x0, y0),
        img.pixel(x1, y0),
        img.pixel(x0, y1),
        img.pixel(x1, y1),
    );
    std::array::from_fn(|i| {
        let v = (1.0 - fx) * (1.0 - fy) * a[i] as f64
            + fx * (1.0 - fy) * b[i] as f64
            + (1.0 - fx) * fy * c[i] as f64
            + fx * fy * d[i] as f64;
        (v + 0.5).min(255.0) as u8
    })
}

fn box_blur(img: &ImageBuffer, r: u32) -> ImageBuffer {
    if r == 0 {
        return img.clone();
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = r as i64;
    let pass = |src: &ImageBuffer, horizontal: bool| {
        ImageBuffer::from_fn(src.width(), src.height(), |x, y| {
            let mut acc = [0u32; 3];
            let mut n = 0;
            for k in -r..=r {
                let (sx, sy) = if horizontal {
                    ((x as i64 + k).clamp(0, w - 1), y as i64)
                } else {
                    (x as i64, (y as i64 + k).clamp(0, h - 1))
                };
                let p = src.pixel(sx as u32, sy as u32);
                for c in 0..3 {
                    acc[c] += p[c] as u32;
                }
                n += 1;
            }
            acc.map(|v| ((v + n / 2) / n) as u8)
        })
    };
    pass(&pass(img, true), false)
}

/// Photographs the canonical screen: composites it through the homography
/// into a cluttered scene with a bezel, then applies glare, blur and noise.
/// Returns the scene and the true screen outline.
pub fn distort(
    canonical: &ImageBuffer,
    d: &DistortionSpec,
) -> Result<(ImageBuffer, ScreenQuad), SynthError> {
    let quad = d.quad()?;
    let inv = d
        .homography
        .inverse()
        .map_err(|e| SynthError::Distortion(e.to_string()))?;
    let mut img = background(d.scene_width, d.scene_height, d.seed);

    let frame = CanonicalFrame::STANDARD;
    let (fw, fh) = ((frame.width - 1) as f64, (frame.height - 1) as f64);
    let bezel = map_quad(
        &d.homography,
        &ScreenQuad::rect(-BEZEL, -BEZEL, fw + BEZEL, fh + BEZEL).expect("valid"),
    )?;
    let bezel_mask = bezel.rasterize(d.scene_width, d.scene_height);
    let screen_mask = quad.rasterize(d.scene_width, d.scene_height);
    for y in 0..d.scene_height {
        for x in 0..d.scene_width {
            if screen_mask.get(x, y) {
                let q = inv
                    .apply(Point2D::new(x as f64, y as f64))
                    .expect("inside the screen");
                img.put_pixel(x, y, bilinear(canonical, q.x, q.y));
            } else if bezel_mask.get(x, y) {
                img.put_pixel(x, y, [34, 35, 40]);
            }
        }
    }

    if let Some(g) = d.glare {
        for y in 0..d.scene_height {
            for x in 0..d.scene_width {
                let (dx, dy) = ((x as f64 - g.cx) / g.rx, (y as f64 - g.cy) / g.ry);
                let add = g.intensity * (-(dx * dx + dy * dy)).exp();
                if add >= 0.5 {
                    let p = img.pixel(x, y);
                    img.put_pixel(x, y, p.map(|v| (v as f64 + add).round().min(255.0) as u8));
                }
            }
        }
    }

    let mut img = box_blur(&img, d.blur_radius);

    if d.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(d.seed ^ 0x006e_6f69_7365);
        let normal = Normal::new(0.0, d.noise_sigma).expect("finite sigma");
        for v in img.data_mut() {
            *v = (*v as f64 + normal.sample(&mut rng))
                .round()
                .clamp(0.0, 255.0) as u8;
        }
    }
    Ok((img, quad))
}
