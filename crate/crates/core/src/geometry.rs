//! Segment–circle intersection.

use crate::Complex;

/// Parameters `s` of the points `x + s·(y − x)` on the circle `|w − c| = r`,
/// in increasing order. Empty when the line misses the circle or `x == y`.
pub fn line_circle_params(x: Complex, y: Complex, c: Complex, r: f64) -> Vec<f64> {
    let d = y - x;
    let w = x - c;
    let a = d.norm_sqr();
    if a == 0.0 {
        return Vec::new();
    }
    let b = w.re * d.re + w.im * d.im;
    let cc = w.norm_sqr() - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Stable pair: q = −(b + sign(b)·√disc), roots q/a and cc/q.
    let q = if b >= 0.0 { -(b + sq) } else { -b + sq };
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, cc / q]
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// First parameter in `[0, 1]` where the segment `x → y` meets the circle.
pub fn segment_circle_first(x: Complex, y: Complex, c: Complex, r: f64) -> Option<f64> {
    line_circle_params(x, y, c, r)
        .into_iter()
        .find(|s| (0.0..=1.0).contains(s))
}

/// Exit parameter for a segment that starts strictly inside the circle and
/// ends on or outside it. Always in `(0, 1]`.
pub fn segment_exit_param(x: Complex, y: Complex, c: Complex, r: f64) -> f64 {
    let params = line_circle_params(x, y, c, r);
    params.last().copied().unwrap_or(1.0).clamp(0.0, 1.0)
}

/// Radial projection of `p` onto the circle.
pub fn project_to_circle(p: Complex, c: Complex, r: f64) -> Complex {
    let w = p - c;
    let n = w.norm();
    if n == 0.0 {
        c + r
    } else {
        c + w * (r / n)
    }
}
