use std::collections::VecDeque;

use crate::image::BinaryMask;

/// One 4-connected foreground component, cropped to its bounding box.
#[derive(Debug, Clone)]
pub struct Component {
    /// Top-left of the bounding box in the source mask.
    pub origin: (u32, u32),
    /// Component pixels only, in bounding-box-local coordinates.
    pub mask: BinaryMask,
    pub area: usize,
}

/// Largest 4-connected component by pixel count. Ties go to the component
/// whose bounding box is topmost, then leftmost.
pub fn largest_component(mask: &BinaryMask) -> Option<Component> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let src = mask.data();
    let mut labels = vec![0u32; w * h];
    let mut queue = VecDeque::new();
    // (label, area, y0, x0, x1, y1)
    let mut best: Option<(u32, usize, usize, usize, usize, usize)> = None;
    let mut next = 0u32;

    for start in 0..w * h {
        if !src[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        let (mut area, mut x0, mut y0, mut x1, mut y1) = (0usize, w, h, 0usize, 0usize);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            let mut visit = |j: usize| {
                if src[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        let better = match best {
            None => true,
            Some((_, b_area, b_y0, b_x0, _, _)) => {
                area > b_area || (area == b_area && (y0, x0) < (b_y0, b_x0))
            }
        };
        if better {
            best = Some((next, area, y0, x0, x1, y1));
        }
    }

    let (label, area, y0, x0, x1, y1) = best?;
    let (cw, ch) = ((x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32);
    let local = BinaryMask::from_fn(cw, ch, |x, y| {
        labels[(y as usize + y0) * w + x as usize + x0] == label
    });
    Some(Component {
        origin: (x0 as u32, y0 as u32),
        mask: local,
        area,
    })
}

const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Outer boundary of a component as pixel coordinates (bounding-box local),
/// traced clockwise on screen with Moore-neighbour radial sweep, starting at
/// the first pixel in raster order.
pub fn trace_outer_contour(component: &Component) -> Vec<[i32; 2]> {
    let m = &component.mask;
    let (w, h) = (m.width() as i32, m.height() as i32);
    let fg = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && m.get(x as u32, y as u32);

    let Some(first) = m.data().iter().position(|&v| v) else {
        return Vec::new();
    };
    let start = [(first as i32) % w, (first as i32) / w];

    let step = |p: [i32; 2], last_dir: usize| -> Option<(usize, [i32; 2])> {
        (1..=8).map(|k| (last_dir + 4 + k) % 8).find_map(|d| {
            let q = [p[0] + DIRS[d].0, p[1] + DIRS[d].1];
            fg(q[0], q[1]).then_some((d, q))
        })
    };

    // Entering the start pixel "from the west" makes the sweep begin at NW.
    let Some((first_dir, first_next)) = step(start, 0) else {
        return vec![start];
    };
    let mut contour = vec![start];
    let (mut p, mut dir) = (first_next, first_dir);
    let limit = 4 * component.area + 8;
    while contour.len() <= limit {
        let (d, q) = step(p, dir).expect("pixel with a foreground predecessor has a neighbour");
        if p == start && q == first_next {
            break;
        }
        contour.push(p);
        p = q;
        dir = d;
    }
    contour
}
