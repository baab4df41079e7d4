//! Smooth random centerlines and their rasterisation.

use std::collections::HashMap;

use super::rng::SplitMix64;
use crate::geom::{digital_line, Pixel, PixelPath};

/// Arc-length step used when integrating the heading.
pub const STEP: f64 = 0.25;
/// Spacing of curvature control knots along the arc, in pixels.
pub const KNOT_SPACING: f64 = 15.0;

/// A densely sampled centerline: positions `(row, col)` and headings.
#[derive(Debug, Clone)]
pub struct Centerline {
    pub points: Vec<(f64, f64)>,
    pub headings: Vec<f64>,
}

impl Centerline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample index closest to arc length `s`.
    pub fn index_at(&self, s: f64) -> usize {
        ((s / STEP).round() as usize).min(self.len() - 1)
    }

    /// Rotates by `angle` about sample `pivot`, then moves that sample to `to`.
    pub fn place(&self, pivot: usize, angle: f64, to: (f64, f64)) -> Centerline {
        let (s, c) = angle.sin_cos();
        let (pr, pc) = self.points[pivot];
        let points = self
            .points
            .iter()
            .map(|&(r, col)| {
                let (dr, dc) = (r - pr, col - pc);
                // heading is measured in the (col, row) plane
                (to.0 + dc * s + dr * c, to.1 + dc * c - dr * s)
            })
            .collect();
        Centerline {
            points,
            headings: self.headings.iter().map(|h| h + angle).collect(),
        }
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.points.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(r0, c0, r1, c1), &(r, c)| (r0.min(r), c0.min(c), r1.max(r), c1.max(c)),
        )
    }
}

/// Clamped Catmull–Rom interpolation of equally spaced knot values.
fn catmull_rom(knots: &[f64], u: f64) -> f64 {
    let n = knots.len();
    if n == 1 {
        return knots[0];
    }
    let j = (u.floor() as usize).min(n - 2);
    let t = u - j as f64;
    let k = |i: isize| knots[i.clamp(0, n as isize - 1) as usize];
    let j = j as isize;
    let (p0, p1, p2, p3) = (k(j - 1), k(j), k(j + 1), k(j + 2));
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
}

/// Random curve of arc length `length` starting at the origin with heading
/// 0. Curvature is a spline through random knots, clipped to `±bound`.
pub fn random_centerline(rng: &mut SplitMix64, length: f64, bound: f64) -> Centerline {
    let n_knots = (length / KNOT_SPACING).ceil() as usize + 1;
    let knots: Vec<f64> = (0..n_knots).map(|_| rng.uniform(-bound, bound)).collect();
    let spacing = length / (n_knots - 1) as f64;
    let steps = (length / STEP).round() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    let mut headings = Vec::with_capacity(steps + 1);
    let (mut x, mut y, mut theta) = (0.0f64, 0.0f64, 0.0f64);
    points.push((y, x));
    headings.push(theta);
    for i in 0..steps {
        let s = (i as f64 + 0.5) * STEP;
        let kappa = catmull_rom(&knots, s / spacing).clamp(-bound, bound);
        // midpoint rule for the heading, then advance
        let mid = theta + 0.5 * kappa * STEP;
        x += mid.cos() * STEP;
        y += mid.sin() * STEP;
        theta += kappa * STEP;
        points.push((y, x));
        headings.push(theta);
    }
    Centerline { points, headings }
}

/// Rounds samples to pixels and produces a simple 8-connected path: no
/// repeated pixels, consecutive pixels adjacent, and no other pair of path
/// pixels adjacent. Returns `None` if the curve touches itself or leaves
/// the non-negative quadrant.
pub fn rasterize(line: &Centerline) -> Option<PixelPath> {
    let mut path: PixelPath = Vec::new();
    for &(r, c) in &line.points {
        if r < -0.5 || c < -0.5 {
            return None;
        }
        let p = Pixel::new(r.round() as usize, c.round() as usize);
        match path.last() {
            Some(&q) if q == p => {}
            Some(&q) if q.touches(p) => path.push(p),
            Some(&q) => path.extend(digital_line(q, p).into_iter().skip(1)),
            None => path.push(p),
        }
    }
    // drop corner pixels whose neighbours already touch
    let mut i = 1;
    while i + 1 < path.len() {
        if path[i - 1].touches(path[i + 1]) {
            path.remove(i);
            i = i.saturating_sub(1).max(1);
        } else {
            i += 1;
        }
    }
    let index: HashMap<Pixel, usize> = path.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    if index.len() != path.len() {
        return None;
    }
    for (i, p) in path.iter().enumerate() {
        for q in p.neighbors8(usize::MAX, usize::MAX) {
            if let Some(&j) = index.get(&q) {
                if j + 1 != i && i + 1 != j {
                    return None;
                }
            }
        }
    }
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::is_8_connected;

    #[test]
    fn straight_line() {
        let mut rng = SplitMix64::new(1);
        let c = random_centerline(&mut rng, 40.0, 0.0);
        assert_eq!(c.len(), 161);
        let (r, col) = *c.points.last().unwrap();
        assert!(r.abs() < 1e-12 && (col - 40.0).abs() < 1e-9);
        let placed = c.place(0, std::f64::consts::FRAC_PI_2, (5.0, 5.0));
        let (r, col) = *placed.points.last().unwrap();
        assert!((r - 45.0).abs() < 1e-9 && (col - 5.0).abs() < 1e-9);
        let path = rasterize(&placed).unwrap();
        assert_eq!(path.len(), 41);
    }

    #[test]
    fn curvature_bound_respected() {
        let mut rng = SplitMix64::new(3);
        let c = random_centerline(&mut rng, 120.0, 0.04);
        for w in c.headings.windows(2) {
            assert!((w[1] - w[0]).abs() <= 0.04 * STEP + 1e-12);
        }
    }

    #[test]
    fn rasterized_paths_are_simple() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let c = random_centerline(&mut rng, 100.0, 0.05).place(
                0,
                rng.uniform(0.0, std::f64::consts::TAU),
                (150.0, 150.0),
            );
            if let Some(p) = rasterize(&c) {
                assert!(is_8_connected(&p));
                for (i, a) in p.iter().enumerate() {
                    for b in p.iter().skip(i + 2) {
                        assert!(!a.touches(*b) && a != b);
                    }
                }
            }
        }
    }

    #[test]
    fn tight_loop_rejected() {
        let mut rng = SplitMix64::new(0);
        let c = random_centerline(&mut rng, 100.0, 0.0);
        // a circle of radius 5 closes on itself
        let circle = Centerline {
            points: (0..400)
                .map(|i| {
                    let a = i as f64 * 0.02;
                    (20.0 + 5.0 * a.sin(), 20.0 + 5.0 * a.cos())
                })
                .collect(),
            headings: c.headings,
        };
        assert!(rasterize(&circle).is_none());
    }
}
