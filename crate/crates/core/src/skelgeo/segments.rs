use std::collections::HashSet;

use super::{Skeleton, SkeletonClassification};
use crate::geom::{Pixel, PixelPath};

/// An ordered, 8-connected run of skeleton pixels between junctions or endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub path: PixelPath,
}

impl Segment {
    pub fn new(path: PixelPath) -> Self {
        assert!(!path.is_empty(), "segment path must be non-empty");
        Self { path }
    }

    pub fn end_a(&self) -> Pixel {
        self.path[0]
    }

    pub fn end_b(&self) -> Pixel {
        *self.path.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Removes all intersection pixels and returns the remaining pixels as
/// ordered paths. Components of a single pixel are dropped.
pub fn extract_segments(skel: &Skeleton, classification: &SkeletonClassification) -> Vec<Segment> {
    let junction: HashSet<Pixel> = classification.intersections.iter().copied().collect();
    let mut remaining: HashSet<Pixel> = skel.pixels().into_iter().filter(|p| !junction.contains(p)).collect();
    let (w, h) = (skel.width(), skel.height());

    let mut segments = Vec::new();
    for comp in components(&remaining, w, h) {
        if comp.len() == 1 {
            remaining.remove(&comp[0]);
            continue;
        }
        let mut left: HashSet<Pixel> = comp.iter().copied().collect();
        while !left.is_empty() {
            let path = walk(&mut left, w, h);
            segments.push(Segment::new(path));
        }
    }
    segments.sort_by(|a, b| a.path[0].cmp(&b.path[0]).then(a.len().cmp(&b.len())));
    segments
}

fn components(set: &HashSet<Pixel>, w: usize, h: usize) -> Vec<Vec<Pixel>> {
    let mut sorted: Vec<Pixel> = set.iter().copied().collect();
    sorted.sort();
    let mut seen: HashSet<Pixel> = HashSet::new();
    let mut out = Vec::new();
    for p in sorted {
        if !seen.insert(p) {
            continue;
        }
        let mut comp = vec![p];
        let mut i = 0;
        while i < comp.len() {
            let q = comp[i];
            for n in q.neighbors8(w, h) {
                if set.contains(&n) && seen.insert(n) {
                    comp.push(n);
                }
            }
            i += 1;
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// Walks one maximal path through `left`, removing its pixels.
fn walk(left: &mut HashSet<Pixel>, w: usize, h: usize) -> PixelPath {
    let degree = |p: Pixel, set: &HashSet<Pixel>| p.neighbors8(w, h).filter(|n| set.contains(n)).count();
    let mut candidates: Vec<Pixel> = left.iter().copied().collect();
    candidates.sort();
    let start = candidates
        .iter()
        .copied()
        .find(|&p| degree(p, left) <= 1)
        .unwrap_or(candidates[0]);

    let mut path = vec![start];
    left.remove(&start);
    let mut cur = start;
    loop {
        let next = cur
            .neighbors8(w, h)
            .filter(|n| left.contains(n))
            .min_by_key(|n| (cur.row != n.row && cur.col != n.col, *n));
        match next {
            Some(n) => {
                left.remove(&n);
                path.push(n);
                cur = n;
            }
            None => return path,
        }
    }
}
