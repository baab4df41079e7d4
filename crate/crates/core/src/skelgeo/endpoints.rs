use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Pixel;
use crate::raster::ProbMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointDetection {
    pub pixel: Pixel,
    pub confidence: f64,
}

/// Connected components of `map >= threshold`, each reduced to its
/// probability-weighted centroid (rounded) with the component maximum as
/// confidence. Sorted by confidence descending, then by pixel.
pub fn extract_endpoint_detections(map: &ProbMap, threshold: f64) -> Result<Vec<EndpointDetection>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "endpoint threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let (w, h) = map.shape();
    let fg = map.threshold(threshold);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for p in fg.true_pixels() {
        if seen[fg.index(p)] {
            continue;
        }
        seen[fg.index(p)] = true;
        let mut stack = vec![p];
        let (mut sw, mut sr, mut sc, mut best) = (0.0, 0.0, 0.0, 0.0f64);
        while let Some(q) = stack.pop() {
            let v = map.get(q);
            sw += v;
            sr += v * q.row as f64;
            sc += v * q.col as f64;
            best = best.max(v);
            for n in q.neighbors8(w, h) {
                let i = fg.index(n);
                if fg.get(n) && !seen[i] {
                    seen[i] = true;
                    stack.push(n);
                }
            }
        }
        let pixel = Pixel::new(
            (sr / sw).round().clamp(0.0, (h - 1) as f64) as usize,
            (sc / sw).round().clamp(0.0, (w - 1) as f64) as usize,
        );
        out.push(EndpointDetection {
            pixel,
            confidence: best,
        });
    }
    out.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.pixel.cmp(&b.pixel)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bumps(w: usize, h: usize, centers: &[(f64, f64)], sigma: f64) -> ProbMap {
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                for &(cr, cc) in centers {
                    let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                    data[r * w + c] += (-d2 / (2.0 * sigma * sigma)).exp();
                }
            }
        }
        ProbMap::from_clipped(w, h, data).unwrap()
    }

    #[test]
    fn single_bump() {
        let m = bumps(21, 21, &[(10.0, 10.0)], 1.5);
        let d = extract_endpoint_detections(&m, 0.5).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].pixel, Pixel::new(10, 10));
        assert!((d[0].confidence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_map_is_empty() {
        let m = ProbMap::zeros(8, 8).unwrap();
        assert!(extract_endpoint_detections(&m, 0.5).unwrap().is_empty());
    }
}
