use super::contour::{largest_component, trace_outer_contour};
use super::min_rect::min_area_rect;
use super::simplify::douglas_peucker_closed;
use super::{GeometryError, Point2D, ScreenQuad};
use crate::image::BinaryMask;

const MIN_COMPONENT_AREA: usize = 64;
const EPS_LO_FRACTION: f64 = 0.005;
const EPS_HI_FRACTION: f64 = 0.08;
const MAX_BISECTIONS: usize = 20;

/// Orders four points clockwise around their centroid, starting at the point
/// with the smallest `x + y`.
pub fn order_corners(points: [Point2D; 4]) -> Result<ScreenQuad, GeometryError> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::DegenerateShape("non-finite point".into()));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if points[i].distance(points[j]) < 1e-9 {
                return Err(GeometryError::DegenerateShape("duplicate points".into()));
            }
        }
    }
    let cx = points.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mut sorted = points;
    sorted.sort_by(|a, b| {
        (a.y - cy)
            .atan2(a.x - cx)
            .total_cmp(&(b.y - cy).atan2(b.x - cx))
    });
    let tl = (0..4)
        .min_by(|&i, &j| {
            let (a, b) = (sorted[i], sorted[j]);
            (a.x + a.y)
                .total_cmp(&(b.x + b.y))
                .then(a.y.total_cmp(&b.y))
                .then(a.x.total_cmp(&b.x))
        })
        .unwrap();
    sorted.rotate_left(tl);
    ScreenQuad::new(sorted)
}

/// Four ordered screen corners from a segmentation mask.
///
/// The outline of the largest component is simplified with Douglas-Peucker,
/// bisecting epsilon between 0.5% and 8% of the outline length until exactly
/// four vertices remain; the vertices are then sharpened by intersecting
/// least-squares lines fitted to each side, moved out half a pixel to the
/// mask's true edge. When no epsilon yields four vertices the minimum-area
/// rectangle of the outline is used instead.
pub fn extract_corners(mask: &BinaryMask) -> Result<ScreenQuad, GeometryError> {
    let component = largest_component(mask).ok_or(GeometryError::EmptyMask)?;
    if component.area < MIN_COMPONENT_AREA {
        return Err(GeometryError::DegenerateShape(format!(
            "component area {} < {MIN_COMPONENT_AREA} px",
            component.area
        )));
    }
    let contour: Vec<Point2D> = trace_outer_contour(&component)
        .into_iter()
        .map(|[x, y]| Point2D::new(x as f64, y as f64))
        .collect();

    // All fitting happens in component-local coordinates so the result is
    // exactly translation-equivariant.
    let local = dp_quad(&contour)
        .or_else(|| min_area_rect(&contour).and_then(|r| order_corners(r).ok()))
        .ok_or_else(|| GeometryError::DegenerateShape("collinear outline".into()))?;
    let (ox, oy) = (component.origin.0 as f64, component.origin.1 as f64);
    Ok(local.translate(ox, oy))
}

fn arc_length(ring: &[Point2D]) -> f64 {
    (0..ring.len())
        .map(|i| ring[i].distance(ring[(i + 1) % ring.len()]))
        .sum()
}

fn dp_quad(contour: &[Point2D]) -> Option<ScreenQuad> {
    if contour.len() < 4 {
        return None;
    }
    let length = arc_length(contour);
    let (mut lo, mut hi) = (EPS_LO_FRACTION * length, EPS_HI_FRACTION * length);
    let mut found = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let kept = douglas_peucker_closed(contour, mid);
        match kept.len() {
            4 => {
                found = Some(kept);
                break;
            }
            n if n > 4 => lo = mid,
            _ => hi = mid,
        }
    }
    let kept = found?;
    let vertices = [0, 1, 2, 3].map(|i| contour[kept[i]]);
    let coarse = order_corners(vertices).ok()?;
    Some(refine(contour, kept, coarse))
}

const MAX_REFINEMENTS: usize = 4;
// Rounding noise when both quads fit the outline exactly.
const RESIDUAL_SLACK: f64 = 1e-9;

/// DP vertices can land at the wrong end of a flat pixel run on a shallow
/// side, which also skews the neighbouring side fit. Re-split the outline at
/// the points nearest the fitted corners and refit while the quad keeps
/// hugging the outline better.
fn refine(contour: &[Point2D], mut kept: Vec<usize>, coarse: ScreenQuad) -> ScreenQuad {
    let mut best_residual = outline_residual(contour, &coarse);
    let mut best_split = None;
    for _ in 0..MAX_REFINEMENTS {
        let Some(raw) = refine_by_side_fits(contour, &kept, false) else {
            break;
        };
        let Ok(quad) = order_corners(raw) else { break };
        let residual = outline_residual(contour, &quad);
        if residual > best_residual + RESIDUAL_SLACK {
            break;
        }
        best_residual = residual;
        best_split = Some(kept.clone());
        let mut next: Vec<usize> = raw.iter().map(|&v| nearest_index(contour, v)).collect();
        next.sort_unstable();
        next.dedup();
        if next.len() != 4 || next == kept {
            break;
        }
        kept = next;
    }
    // Selection compares against outline pixels, so the half-pixel shift
    // only goes on once the split is settled.
    best_split
        .and_then(|split| refine_by_side_fits(contour, &split, true))
        .and_then(|raw| order_corners(raw).ok())
        .unwrap_or(coarse)
}

fn nearest_index(contour: &[Point2D], p: Point2D) -> usize {
    (0..contour.len())
        .min_by(|&i, &j| contour[i].distance(p).total_cmp(&contour[j].distance(p)))
        .expect("non-empty contour")
}

fn segment_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(Point2D::new(a.x + t * dx, a.y + t * dy))
}

/// Mean distance from outline pixels to the nearest side of `quad`.
fn outline_residual(contour: &[Point2D], quad: &ScreenQuad) -> f64 {
    let c = quad.corners();
    let total: f64 = contour
        .iter()
        .map(|&p| {
            (0..4)
                .map(|k| segment_distance(p, c[k], c[(k + 1) % 4]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / contour.len() as f64
}

/// Total-least-squares line through `points`: (centroid, unit direction).
fn fit_line(points: &[Point2D]) -> Option<(Point2D, (f64, f64))> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx + syy == 0.0 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((Point2D::new(mx, my), (theta.cos(), theta.sin())))
}

/// Outline pixels are the mask's outermost pixel centers, which lie between
/// 0 and 1 lattice step inside the true edge. Move the fitted line out by
/// half a step, measured along its normal.
fn outward((p, (dx, dy)): (Point2D, (f64, f64)), center: Point2D) -> (Point2D, (f64, f64)) {
    let (mut nx, mut ny) = (-dy, dx);
    if (p.x - center.x) * nx + (p.y - center.y) * ny < 0.0 {
        (nx, ny) = (-nx, -ny);
    }
    let shift = 0.5 * nx.abs().max(ny.abs());
    (Point2D::new(p.x + shift * nx, p.y + shift * ny), (dx, dy))
}

fn intersect(a: (Point2D, (f64, f64)), b: (Point2D, (f64, f64))) -> Option<Point2D> {
    let ((p, (dx1, dy1)), (q, (dx2, dy2))) = (a, b);
    let denom = dx1 * dy2 - dy1 * dx2;
    if denom.abs() < 1e-6 {
        return None;
    }
    let t = ((q.x - p.x) * dy2 - (q.y - p.y) * dx2) / denom;
    Some(Point2D::new(p.x + t * dx1, p.y + t * dy1))
}

/// Sharpens DP vertices: fit a line to the middle of each side (ignoring the
/// rounded pixels near corners) and intersect neighbouring sides.
fn refine_by_side_fits(contour: &[Point2D], kept: &[usize], debias: bool) -> Option<[Point2D; 4]> {
    let n = contour.len();
    let center = Point2D::new(
        contour.iter().map(|p| p.x).sum::<f64>() / n as f64,
        contour.iter().map(|p| p.y).sum::<f64>() / n as f64,
    );
    let mut lines = Vec::with_capacity(4);
    for k in 0..4 {
        let (start, end) = (kept[k], kept[(k + 1) % 4]);
        let span = (end + n - start) % n;
        let trim = (span as f64 * 0.15).ceil() as usize;
        if span < 2 * trim + 3 {
            return None;
        }
        let side: Vec<Point2D> = (trim..=span - trim)
            .map(|i| contour[(start + i) % n])
            .collect();
        let line = fit_line(&side)?;
        lines.push(if debias { outward(line, center) } else { line });
    }
    let mut out = [Point2D::default(); 4];
    for k in 0..4 {
        // vertex k sits between side k-1 and side k
        out[k] = intersect(lines[(k + 3) % 4], lines[k])?;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2D {
        Point2D::new(x, y)
    }

    #[test]
    fn axis_aligned_rectangle() {
        let mask = BinaryMask::from_fn(120, 100, |x, y| {
            (10..100).contains(&x) && (10..80).contains(&y)
        });
        let q = extract_corners(&mask).unwrap();
        // Pixels 10..=99 cover the continuous span [9.5, 99.5].
        let expected = [[9.5, 9.5], [99.5, 9.5], [99.5, 79.5], [9.5, 79.5]];
        for (got, want) in q.to_array().iter().zip(expected.iter()) {
            assert!(
                (got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9,
                "{q:?}"
            );
        }
    }

    #[test]
    fn empty_mask() {
        assert_eq!(
            extract_corners(&BinaryMask::new(10, 10)),
            Err(GeometryError::EmptyMask)
        );
    }

    #[test]
    fn tiny_component_is_degenerate() {
        let mask = BinaryMask::from_fn(20, 20, |x, y| x < 7 && y < 7);
        assert!(matches!(
            extract_corners(&mask),
            Err(GeometryError::DegenerateShape(_))
        ));
    }

    #[test]
    fn thin_line_is_degenerate_or_tiny_quad() {
        // A 1-px wide line has zero-area outline.
        let mask = BinaryMask::from_fn(200, 5, |_, y| y == 2);
        assert!(matches!(
            extract_corners(&mask),
            Err(GeometryError::DegenerateShape(_))
        ));
    }

    #[test]
    fn ordering_examples() {
        let q = order_corners([p(9.0, 9.0), p(0.0, 0.0), p(0.0, 9.0), p(9.0, 0.0)]).unwrap();
        assert_eq!(
            q.to_array(),
            [[0.0, 0.0], [9.0, 0.0], [9.0, 9.0], [0.0, 9.0]]
        );
        assert!(matches!(
            order_corners([p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)]),
            Err(GeometryError::DegenerateShape(_))
        ));
        assert!(matches!(
            order_corners([p(0.0, 0.0), p(0.0, 0.0), p(2.0, 2.0), p(3.0, 0.0)]),
            Err(GeometryError::DegenerateShape(_))
        ));
    }

    #[test]
    fn ordering_is_permutation_invariant() {
        let pts = [p(12.5, 3.0), p(80.0, 10.0), p(70.0, 66.0), p(5.0, 50.0)];
        let reference = order_corners(pts).unwrap();
        let mut idx = [0usize, 1, 2, 3];
        // Heap's algorithm over all 24 permutations.
        fn permute(k: usize, idx: &mut [usize; 4], out: &mut Vec<[usize; 4]>) {
            if k == 1 {
                out.push(*idx);
                return;
            }
            for i in 0..k {
                permute(k - 1, idx, out);
                if k.is_multiple_of(2) {
                    idx.swap(i, k - 1);
                } else {
                    idx.swap(0, k - 1);
                }
            }
        }
        let mut perms = Vec::new();
        permute(4, &mut idx, &mut perms);
        assert_eq!(perms.len(), 24);
        for perm in perms {
            assert_eq!(order_corners(perm.map(|i| pts[i])).unwrap(), reference);
        }
        assert_eq!(reference.corners()[0], pts[0]);
    }
}
