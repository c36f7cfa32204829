//! Self-intersection test for closed polylines using exact orientation
//! predicates.

use num_complex::Complex64;
use robust::{orient2d, Coord};

use crate::error::{usage, Result};

fn coord(z: Complex64) -> Coord<f64> {
    Coord { x: z.re, y: z.im }
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

/// `c` lies in the bounding box of segment `ab` (used once `abc` is collinear).
fn within_box(a: Complex64, b: Complex64, c: Complex64) -> bool {
    c.re >= a.re.min(b.re) && c.re <= a.re.max(b.re) && c.im >= a.im.min(b.im) && c.im <= a.im.max(b.im)
}

/// Closed segments `ab` and `cd` share at least one point.
pub fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && within_box(a, b, c))
        || (o2 == 0.0 && within_box(a, b, d))
        || (o3 == 0.0 && within_box(c, d, a))
        || (o4 == 0.0 && within_box(c, d, b))
}

/// First pair of non-adjacent segments of the closed polyline through
/// `points` that intersect, if any. Candidate pairs come from a sweep over
/// segments sorted by their leftmost x-coordinate.
pub fn first_self_intersection(points: &[Complex64]) -> Result<Option<(usize, usize)>> {
    let m = points.len();
    if m < 3 {
        return usage("a closed polyline needs at least 3 vertices");
    }
    let seg = |i: usize| (points[i], points[(i + 1) % m]);
    if let Some(i) = (0..m).find(|&i| seg(i).0 == seg(i).1) {
        return usage(format!("degenerate zero-length segment at index {i}"));
    }
    struct Bbox {
        idx: usize,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    }
    let mut boxes: Vec<Bbox> = (0..m)
        .map(|i| {
            let (a, b) = seg(i);
            Bbox {
                idx: i,
                x0: a.re.min(b.re),
                x1: a.re.max(b.re),
                y0: a.im.min(b.im),
                y1: a.im.max(b.im),
            }
        })
        .collect();
    boxes.sort_by(|p, q| p.x0.total_cmp(&q.x0).then(p.idx.cmp(&q.idx)));
    let adjacent = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d <= 1 || d == m - 1
    };
    for (s, p) in boxes.iter().enumerate() {
        for q in &boxes[s + 1..] {
            if q.x0 > p.x1 {
                break;
            }
            if q.y0 > p.y1 || p.y0 > q.y1 || adjacent(p.idx, q.idx) {
                continue;
            }
            let (a, b) = seg(p.idx);
            let (c, d) = seg(q.idx);
            if segments_intersect(a, b, c, d) {
                return Ok(Some((p.idx.min(q.idx), p.idx.max(q.idx))));
            }
        }
    }
    Ok(None)
}
