use super::Skeleton;
use crate::error::{Error, Result};
use crate::geom::{Pixel, RING};

/// 8-adjacent intersection pixels treated as one logical junction.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionCluster {
    /// Member pixels in `(row, col)` order.
    pub pixels: Vec<Pixel>,
    /// Member nearest to the cluster centroid; ties go to the smaller pixel.
    pub representative: Pixel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkeletonClassification {
    pub endpoints: Vec<Pixel>,
    pub intersections: Vec<Pixel>,
    pub line_points: Vec<Pixel>,
    pub junctions: Vec<JunctionCluster>,
}

impl SkeletonClassification {
    pub fn is_intersection(&self, p: Pixel) -> bool {
        self.intersections.binary_search(&p).is_ok()
    }
}

/// Number of background→foreground transitions around the 8-neighbour ring.
pub fn crossing_number(skel: &Skeleton, p: Pixel) -> usize {
    let x: Vec<bool> = RING
        .iter()
        .map(|&(dr, dc)| {
            p.offset(dr, dc, skel.width(), skel.height())
                .is_some_and(|q| skel.contains(q))
        })
        .collect();
    (0..8).filter(|&k| !x[k] && x[(k + 1) % 8]).count()
}

/// Splits skeleton pixels into geometric endpoints (exactly one neighbour),
/// intersections and line points (everything else), then groups 8-adjacent
/// intersections into junction clusters.
///
/// A pixel is an intersection when its crossing number is at least 3, or
/// when it has at least 3 neighbours: where three branch pixels are
/// mutually adjacent, the ring transitions merge and undercount branches.
pub fn classify(skel: &Skeleton) -> Result<SkeletonClassification> {
    if let Some(p) = super::first_non_thin_pixel(skel.mask()) {
        return Err(Error::NotThin(p));
    }
    let mut out = SkeletonClassification::default();
    for p in skel.pixels() {
        if skel.degree(p) == 1 {
            out.endpoints.push(p);
        } else if skel.degree(p) >= 3 || crossing_number(skel, p) >= 3 {
            out.intersections.push(p);
        } else {
            out.line_points.push(p);
        }
    }
    out.junctions = cluster(&out.intersections);
    Ok(out)
}

fn cluster(points: &[Pixel]) -> Vec<JunctionCluster> {
    let mut assigned = vec![false; points.len()];
    let mut clusters = Vec::new();
    for start in 0..points.len() {
        if assigned[start] {
            continue;
        }
        assigned[start] = true;
        let mut members = vec![points[start]];
        let mut i = 0;
        while i < members.len() {
            let p = members[i];
            for (j, &q) in points.iter().enumerate() {
                if !assigned[j] && p.touches(q) {
                    assigned[j] = true;
                    members.push(q);
                }
            }
            i += 1;
        }
        members.sort();
        let n = members.len() as f64;
        let cr = members.iter().map(|p| p.row as f64).sum::<f64>() / n;
        let cc = members.iter().map(|p| p.col as f64).sum::<f64>() / n;
        let centroid_d2 = |p: &Pixel| (p.row as f64 - cr).powi(2) + (p.col as f64 - cc).powi(2);
        let representative = *members
            .iter()
            .min_by(|a, b| centroid_d2(a).total_cmp(&centroid_d2(b)).then(a.cmp(b)))
            .expect("cluster is non-empty");
        clusters.push(JunctionCluster {
            pixels: members,
            representative,
        });
    }
    clusters
}
