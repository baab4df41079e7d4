//! Body masks from skeletons: radius from the distance to the nearest Canny
//! edge, smoothed along the path and capped towards both ends so the mask
//! tapers to a tip.

use crate::error::{Error, Result};
use crate::geom::Pixel;
use crate::raster::{distance_transform, BinaryMask, DistanceField};
use crate::untangle::WormSkeleton;

/// Per-path-pixel radii aligned with a worm's path.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusProfile {
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WormMask {
    pub mask: BinaryMask,
    pub source: u32,
}

/// Half-width of the moving-average window along the path.
pub const SMOOTHING_HALF_WINDOW: usize = 2;

/// Canny keeps the darker side of a step, so edge pixels are the body's own
/// outermost pixels and the boundary lies half a pixel past their centres.
pub const EDGE_OFFSET: f64 = 0.5;

/// Radii from the edge mask. Computes the edge distance transform; use
/// [`estimate_radii_from_field`] to share one transform between worms.
pub fn estimate_radii(worm: &WormSkeleton, edges: &BinaryMask) -> Result<RadiusProfile> {
    if edges.is_empty() {
        return Err(Error::Empty("edge mask has no edge pixels"));
    }
    let field = distance_transform(edges)?;
    estimate_radii_from_field(worm, &field)
}

pub fn estimate_radii_from_field(worm: &WormSkeleton, edge_distance: &DistanceField) -> Result<RadiusProfile> {
    if worm.path.is_empty() {
        return Err(Error::Empty("worm path"));
    }
    let mut raw = Vec::with_capacity(worm.path.len());
    for &p in &worm.path {
        if !edge_distance.contains(p) {
            return Err(Error::OutOfBounds {
                pixel: p,
                width: edge_distance.width(),
                height: edge_distance.height(),
            });
        }
        raw.push(edge_distance.get(p) + EDGE_OFFSET);
    }
    let smoothed = smooth(&raw, SMOOTHING_HALF_WINDOW);
    Ok(RadiusProfile {
        radii: cap_to_ends(&worm.path, &smoothed),
    })
}

/// Unweighted moving average over `[i - half, i + half]`, clipped at the ends.
pub fn smooth(values: &[f64], half: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Geodesic distance along the path from each pixel to the nearer end,
/// floored at 1 so the terminal pixels keep a radius of one.
pub fn end_caps(path: &[Pixel]) -> Vec<f64> {
    let n = path.len();
    let mut from_start = vec![0.0; n];
    for i in 1..n {
        from_start[i] = from_start[i - 1] + path[i - 1].dist(path[i]);
    }
    let total = from_start[n - 1];
    from_start.iter().map(|&d| d.min(total - d).max(1.0)).collect()
}

pub fn cap_to_ends(path: &[Pixel], radii: &[f64]) -> Vec<f64> {
    end_caps(path)
        .into_iter()
        .zip(radii)
        .map(|(cap, &r)| r.min(cap))
        .collect()
}

/// Union of closed discs: `(r, c)` is inside when its squared distance to
/// the path pixel is at most `radius^2`.
pub fn fill_discs(path: &[Pixel], radii: &[f64], width: usize, height: usize) -> Result<BinaryMask> {
    if path.len() != radii.len() {
        return Err(Error::InvalidArgument(format!(
            "radius profile of length {} does not match path of length {}",
            radii.len(),
            path.len()
        )));
    }
    let mut mask = BinaryMask::empty(width, height)?;
    for (&p, &r) in path.iter().zip(radii) {
        mask.try_set(p, true)?;
        let r = r.max(0.0);
        let r2 = r * r + 1e-9;
        let k = r.floor() as usize;
        for row in p.row.saturating_sub(k)..=(p.row + k).min(height - 1) {
            for col in p.col.saturating_sub(k)..=(p.col + k).min(width - 1) {
                let q = Pixel::new(row, col);
                if p.dist2(q) <= r2 {
                    mask.set(q, true);
                }
            }
        }
    }
    Ok(mask)
}

pub fn fill_mask(worm: &WormSkeleton, profile: &RadiusProfile, shape: (usize, usize), source: u32) -> Result<WormMask> {
    Ok(WormMask {
        mask: fill_discs(&worm.path, &profile.radii, shape.0, shape.1)?,
        source,
    })
}
