use super::Skeleton;
use crate::error::{Error, Result};
use crate::geom::{Pixel, RING};
use crate::raster::{BinaryMask, ProbMap};

/// Ring values N, NE, E, SE, S, SW, W, NW; outside the image counts as background.
fn ring(mask: &BinaryMask, p: Pixel) -> [bool; 8] {
    let mut out = [false; 8];
    for (k, &(dr, dc)) in RING.iter().enumerate() {
        out[k] = p
            .offset(dr, dc, mask.width(), mask.height())
            .is_some_and(|q| mask.get(q));
    }
    out
}

/// Removing `p` leaves the topology of the foreground unchanged
/// (8-connected Yokoi number equals one).
pub fn is_simple(mask: &BinaryMask, p: Pixel) -> bool {
    let x = ring(mask, p);
    let bg = |k: usize| !x[k % 8] as u8;
    let n8: u8 = [0usize, 2, 4, 6]
        .iter()
        .map(|&k| bg(k) - bg(k) * bg(k + 1) * bg(k + 2))
        .sum();
    n8 == 1
}

fn degree(mask: &BinaryMask, p: Pixel) -> usize {
    ring(mask, p).iter().filter(|&&b| b).count()
}

/// One Zhang–Suen pass pair, repeated until stable.
pub fn zhang_suen(mask: &BinaryMask) -> BinaryMask {
    let mut m = mask.clone();
    let mut to_clear = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            to_clear.clear();
            for p in m.true_pixels() {
                // P2..P9 = N, NE, E, SE, S, SW, W, NW
                let x = ring(&m, p);
                let b = x.iter().filter(|&&v| v).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !x[k] && x[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                let (n, e, s, w) = (x[0], x[2], x[4], x[6]);
                let ok = if step == 0 {
                    !(n && e && s) && !(e && s && w)
                } else {
                    !(n && e && w) && !(n && s && w)
                };
                if ok {
                    to_clear.push(p);
                }
            }
            for &p in &to_clear {
                m.set(p, false);
            }
            changed |= !to_clear.is_empty();
        }
        if !changed {
            return m;
        }
    }
}

/// Zhang–Suen followed by sequential removal, in raster order, of simple
/// pixels that have at least two neighbours. The result has no redundant
/// staircase or junction-corner pixels.
pub fn thin_mask(mask: &BinaryMask) -> BinaryMask {
    let mut m = zhang_suen(mask);
    loop {
        let mut changed = false;
        let candidates: Vec<Pixel> = m.true_pixels().collect();
        for p in candidates {
            if degree(&m, p) >= 2 && is_simple(&m, p) {
                m.set(p, false);
                changed = true;
            }
        }
        if !changed {
            return m;
        }
    }
}

/// First pixel (in raster order) that could be removed without changing the
/// skeleton's topology, other than an endpoint.
pub fn first_non_thin_pixel(mask: &BinaryMask) -> Option<Pixel> {
    mask.true_pixels().find(|&p| degree(mask, p) >= 2 && is_simple(mask, p))
}

/// Thresholds `map` at `p >= threshold` and thins every component to a
/// one-pixel-wide skeleton with the same 8-connectivity.
pub fn binarize_and_thin(map: &ProbMap, threshold: f64) -> Result<Skeleton> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "binarization threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(Skeleton::from_mask(thin_mask(&map.threshold(threshold))))
}
