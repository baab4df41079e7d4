//! Pixel coordinates and small geometric helpers shared by every stage.
//!
//! Coordinates are `(row, col)` with the origin at the top-left corner.

use serde::{Deserialize, Serialize};

/// A pixel position, serialized as a `[row, col]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn dist2(self, other: Pixel) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr * dr + dc * dc
    }

    pub fn dist(self, other: Pixel) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn chebyshev(self, other: Pixel) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// 8-adjacent and distinct.
    pub fn touches(self, other: Pixel) -> bool {
        self.chebyshev(other) == 1
    }

    /// Neighbour at signed offset, if it stays inside `width` x `height`.
    pub fn offset(self, dr: isize, dc: isize, width: usize, height: usize) -> Option<Pixel> {
        let r = self.row as isize + dr;
        let c = self.col as isize + dc;
        if r < 0 || c < 0 || r as usize >= height || c as usize >= width {
            None
        } else {
            Some(Pixel::new(r as usize, c as usize))
        }
    }

    /// In-bounds 8-neighbours in clockwise ring order starting at north.
    /// Pass `usize::MAX` for an unbounded grid.
    pub fn neighbors8(self, width: usize, height: usize) -> impl Iterator<Item = Pixel> {
        RING.iter()
            .filter_map(move |&(dr, dc)| self.offset(dr, dc, width, height))
    }
}

impl From<[usize; 2]> for Pixel {
    fn from(v: [usize; 2]) -> Self {
        Pixel::new(v[0], v[1])
    }
}

impl From<Pixel> for [usize; 2] {
    fn from(p: Pixel) -> Self {
        [p.row, p.col]
    }
}

impl From<(usize, usize)> for Pixel {
    fn from((row, col): (usize, usize)) -> Self {
        Pixel::new(row, col)
    }
}

/// Clockwise 8-neighbour ring: N, NE, E, SE, S, SW, W, NW.
pub const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

/// An ordered, 8-connected list of pixels.
pub type PixelPath = Vec<Pixel>;

/// Geodesic length of a path: orthogonal steps count 1, diagonal steps √2.
pub fn path_length(path: &[Pixel]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}

pub fn is_8_connected(path: &[Pixel]) -> bool {
    path.windows(2).all(|w| w[0].touches(w[1]))
}

/// Digital straight line from `a` to `b`, both included.
///
/// Each step rounds the minor coordinate to the nearest integer. At an exact
/// half both neighbours are emitted, the one nearer `a` first, so the line
/// is the reverse of `digital_line(b, a)` and commutes with every rotation
/// and mirror flip of the grid.
pub fn digital_line(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let dr = b.row as i64 - a.row as i64;
    let dc = b.col as i64 - a.col as i64;
    let n = dr.abs().max(dc.abs());
    if n == 0 {
        return vec![a];
    }
    let at = |r: i64, c: i64| Pixel::new((a.row as i64 + r) as usize, (a.col as i64 + c) as usize);
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let (r_near, r_far) = round_both(k * dr, n);
        let (c_near, c_far) = round_both(k * dc, n);
        out.push(at(r_near, c_near));
        if (r_near, c_near) != (r_far, c_far) {
            out.push(at(r_far, c_far));
        }
    }
    out
}

/// `num / den` rounded to nearest, `den > 0`. An exact half yields both
/// candidates, smaller magnitude first; otherwise the two are equal.
fn round_both(num: i64, den: i64) -> (i64, i64) {
    let (q, rem) = (num.abs() / den, num.abs() % den);
    let (near, far) = match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Less => (q, q),
        std::cmp::Ordering::Equal => (q, q + 1),
        std::cmp::Ordering::Greater => (q + 1, q + 1),
    };
    if num < 0 {
        (-near, -far)
    } else {
        (near, far)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_serializes_as_pair() {
        let p = Pixel::new(3, 7);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[3,7]");
        let back: Pixel = serde_json::from_str("[3,7]").unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn digital_line_is_connected_and_hits_ends() {
        for &(a, b) in &[((0, 0), (5, 2)), ((10, 3), (1, 9)), ((4, 4), (4, 4)), ((0, 7), (7, 0))] {
            let line = digital_line(a.into(), b.into());
            assert_eq!(line[0], Pixel::from(a));
            assert_eq!(*line.last().unwrap(), Pixel::from(b));
            assert!(is_8_connected(&line));
        }
    }

    #[test]
    fn digital_line_commutes_with_rotation() {
        // (r, c) -> (c, H-1-r)
        let h = 20;
        let rot = |p: Pixel| Pixel::new(p.col, h - 1 - p.row);
        let a = Pixel::new(2, 3);
        let b = Pixel::new(9, 6);
        let rotated: Vec<_> = digital_line(a, b).into_iter().map(rot).collect();
        assert_eq!(rotated, digital_line(rot(a), rot(b)));
    }

    #[test]
    fn digital_line_is_reversal_symmetric() {
        let a = Pixel::new(0, 0);
        let b = Pixel::new(3, 6);
        let mut back = digital_line(b, a);
        back.reverse();
        let fwd = digital_line(a, b);
        assert_eq!(fwd, back);
        // halves at k = 1, 3, 5 contribute both neighbours
        assert_eq!(fwd.len(), 10);
        assert!(is_8_connected(&fwd));
    }

    #[test]
    fn path_length_counts_diagonals() {
        let p = vec![Pixel::new(0, 0), Pixel::new(1, 1), Pixel::new(1, 2)];
        assert!((path_length(&p) - (2f64.sqrt() + 1.0)).abs() < 1e-12);
    }
}
