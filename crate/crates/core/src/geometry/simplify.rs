//! Ramer-Douglas-Peucker simplification returning indices into the input.

use super::Point2D;

fn perpendicular_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return p.distance(a);
    }
    ((p.x - a.x) * dy - (p.y - a.y) * dx).abs() / len
}

/// Simplifies the polyline `points[first..=last]`; both endpoints are kept.
pub fn douglas_peucker_open(points: &[Point2D], epsilon: f64) -> Vec<usize> {
    if points.len() < 3 {
        return (0..points.len()).collect();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut far, mut far_d) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = perpendicular_distance(points[i], points[lo], points[hi]);
            if d > far_d {
                far = i;
                far_d = d;
            }
        }
        if far_d > epsilon {
            keep[far] = true;
            stack.push((lo, far));
            stack.push((far, hi));
        }
    }
    keep.iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect()
}

/// Simplifies a closed ring. The ring is split at two mutually distant
/// anchors so the result does not depend on where the ring starts; returned
/// indices are ascending.
pub fn douglas_peucker_closed(ring: &[Point2D], epsilon: f64) -> Vec<usize> {
    let n = ring.len();
    if n < 4 {
        return (0..n).collect();
    }
    let farthest_from = |from: usize| {
        (0..n)
            .max_by(|&i, &j| {
                ring[i]
                    .distance(ring[from])
                    .total_cmp(&ring[j].distance(ring[from]))
                    .then(j.cmp(&i))
            })
            .unwrap()
    };
    let a = farthest_from(0);
    let b = farthest_from(a);
    let (a, b) = (a.min(b), a.max(b));
    if a == b {
        return vec![a];
    }

    let forward: Vec<Point2D> = ring[a..=b].to_vec();
    let backward: Vec<Point2D> = ring[b..].iter().chain(ring[..=a].iter()).copied().collect();

    let mut out: Vec<usize> = douglas_peucker_open(&forward, epsilon)
        .into_iter()
        .map(|i| a + i)
        .collect();
    out.extend(
        douglas_peucker_open(&backward, epsilon)
            .into_iter()
            .map(|i| (b + i) % n),
    );
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2D> {
        v.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn straight_line_collapses() {
        let line = pts(&[(0.0, 0.0), (1.0, 0.1), (2.0, -0.1), (3.0, 0.0)]);
        assert_eq!(douglas_peucker_open(&line, 0.5), vec![0, 3]);
        assert_eq!(douglas_peucker_open(&line, 0.05), vec![0, 1, 2, 3]);
    }

    #[test]
    fn closed_square_outline_keeps_corners() {
        let mut ring = Vec::new();
        for x in 0..10 {
            ring.push((x as f64, 0.0));
        }
        for y in 1..10 {
            ring.push((9.0, y as f64));
        }
        for x in (0..9).rev() {
            ring.push((x as f64, 9.0));
        }
        for y in (1..9).rev() {
            ring.push((0.0, y as f64));
        }
        let ring = pts(&ring);
        let kept = douglas_peucker_closed(&ring, 1.0);
        let corners: Vec<(f64, f64)> = kept.iter().map(|&i| (ring[i].x, ring[i].y)).collect();
        assert_eq!(
            corners,
            vec![(0.0, 0.0), (9.0, 0.0), (9.0, 9.0), (0.0, 9.0)]
        );
    }
}
