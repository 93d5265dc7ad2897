use super::{compute_homography, CanonicalFrame, GeometryError, Homography, ScreenQuad};
use crate::image::ImageBuffer;

/// Inverse-maps every output pixel through `h^-1` and samples the source
/// bilinearly. Samples falling outside the source are black.
pub fn warp_perspective(
    img: &ImageBuffer,
    h: &Homography,
    width: u32,
    height: u32,
) -> Result<ImageBuffer, GeometryError> {
    let inv = h.inverse()?.coefficients();
    let (sw, sh) = (img.width() as usize, img.height() as usize);
    let (max_x, max_y) = ((sw - 1) as f64, (sh - 1) as f64);
    let src = img.data();
    let mut out = vec![0u8; width as usize * height as usize * 3];

    for y in 0..height as usize {
        let yf = y as f64;
        // Row-constant parts of the projective map.
        let (bx, by, bw) = (
            inv[1] * yf + inv[2],
            inv[4] * yf + inv[5],
            inv[7] * yf + inv[8],
        );
        for x in 0..width as usize {
            let xf = x as f64;
            let w = inv[6] * xf + bw;
            if w.abs() < 1e-12 {
                continue;
            }
            let sx = (inv[0] * xf + bx) / w;
            let sy = (inv[3] * xf + by) / w;
            if !(-1e-9..=max_x + 1e-9).contains(&sx) || !(-1e-9..=max_y + 1e-9).contains(&sy) {
                continue;
            }
            let (sx, sy) = (sx.clamp(0.0, max_x), sy.clamp(0.0, max_y));
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(sw - 1), (y0 + 1).min(sh - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let w00 = (1.0 - fx) * (1.0 - fy);
            let w10 = fx * (1.0 - fy);
            let w01 = (1.0 - fx) * fy;
            let w11 = fx * fy;
            let (i00, i10, i01, i11) = (
                (y0 * sw + x0) * 3,
                (y0 * sw + x1) * 3,
                (y1 * sw + x0) * 3,
                (y1 * sw + x1) * 3,
            );
            let o = (y * width as usize + x) * 3;
            for c in 0..3 {
                let v = w00 * src[i00 + c] as f64
                    + w10 * src[i10 + c] as f64
                    + w01 * src[i01 + c] as f64
                    + w11 * src[i11 + c] as f64;
                out[o + c] = (v + 0.5).min(255.0) as u8;
            }
        }
    }
    Ok(ImageBuffer::new(width, height, out).expect("output buffer sized from dimensions"))
}

pub fn warp_to_frame(
    img: &ImageBuffer,
    h: &Homography,
    frame: CanonicalFrame,
) -> Result<ImageBuffer, GeometryError> {
    warp_perspective(img, h, frame.width, frame.height)
}

/// Maps `quad` in `img` onto `frame`, returning the rectified view and the
/// source-to-frame homography.
pub fn rectify(
    img: &ImageBuffer,
    quad: &ScreenQuad,
    frame: CanonicalFrame,
) -> Result<(ImageBuffer, Homography), GeometryError> {
    let h = compute_homography(quad, &frame.quad())?;
    Ok((warp_to_frame(img, &h, frame)?, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_warp_is_exact() {
        let img = ImageBuffer::from_fn(640, 480, |x, y| {
            [(x % 251) as u8, (y % 241) as u8, ((x * y) % 256) as u8]
        });
        let out = warp_to_frame(&img, &Homography::IDENTITY, CanonicalFrame::STANDARD).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn black_stays_black() {
        let img = ImageBuffer::black(300, 200);
        let q =
            ScreenQuad::from_array([[20.0, 15.0], [270.0, 30.0], [260.0, 190.0], [10.0, 170.0]])
                .unwrap();
        let (out, _) = rectify(&img, &q, CanonicalFrame::STANDARD).unwrap();
        assert!(out.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn outside_source_is_black() {
        let img = ImageBuffer::filled(10, 10, [200, 200, 200]);
        let shift = Homography::from_matrix([1.0, 0.0, 5.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let out = warp_perspective(&img, &shift, 10, 10).unwrap();
        assert_eq!(out.pixel(2, 3), [0, 0, 0]);
        assert_eq!(out.pixel(7, 3), [200, 200, 200]);
    }

    #[test]
    fn half_pixel_shift_interpolates() {
        let img =
            ImageBuffer::from_fn(2, 1, |x, _| if x == 0 { [0, 0, 0] } else { [200, 100, 50] });
        let shift =
            Homography::from_matrix([1.0, 0.0, -0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let out = warp_perspective(&img, &shift, 1, 1).unwrap();
        assert_eq!(out.pixel(0, 0), [100, 50, 25]);
    }
}
