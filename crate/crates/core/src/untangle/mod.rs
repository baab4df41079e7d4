//! Separating touching and crossing worms.
//!
//! The skeleton is first cut wherever a predicted endpoint falls on the
//! skeleton away from any geometric endpoint. Junctions are then removed and
//! the freed segment ends around each junction are joined greedily, smallest
//! steering angle first, with a straight digital bridge.

mod steering;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use self::steering::{end_direction, steering_angle, SegmentEnd, SteeringAngle};

use crate::error::{Error, Result};
use crate::geom::{digital_line, Pixel, PixelPath};
use crate::skelgeo::{classify, extract_segments, thin_mask, Segment, Skeleton};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UntangleConfig {
    /// Search radius for matching predicted endpoints, in pixels.
    pub match_radius: f64,
    /// Number of pixels used to fit a segment's direction at its cut end.
    pub direction_window: usize,
    /// Segments shorter than this (in pixels) are dropped as noise.
    pub min_segment_len: usize,
    /// Pairs whose steering angle exceeds this (radians) are never joined.
    pub max_pair_angle: f64,
    /// Segments shorter than this that run between two junction pixels are
    /// folded into a single junction.
    pub junction_merge_len: usize,
}

impl Default for UntangleConfig {
    fn default() -> Self {
        Self {
            match_radius: 5.0,
            direction_window: 5,
            min_segment_len: 3,
            max_pair_angle: std::f64::consts::FRAC_PI_2,
            junction_merge_len: 8,
        }
    }
}

impl UntangleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.match_radius > 0.0)
            || self.direction_window == 0
            || self.min_segment_len == 0
            || !(self.max_pair_angle > 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "untangle parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One separated worm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormSkeleton {
    pub path: PixelPath,
    pub endpoints: [Pixel; 2],
    /// Indices of the source segments, in path order.
    pub provenance: Vec<usize>,
}

impl WormSkeleton {
    pub fn from_path(path: PixelPath) -> Self {
        assert!(!path.is_empty(), "worm path must be non-empty");
        let endpoints = [path[0], *path.last().expect("non-empty")];
        Self {
            path,
            endpoints,
            provenance: Vec::new(),
        }
    }
}

/// Nearest target within `radius` (inclusive); ties go to the smaller pixel.
pub fn match_endpoint(p: Pixel, targets: &[Pixel], radius: f64) -> Option<Pixel> {
    let r2 = radius * radius;
    targets
        .iter()
        .map(|&t| (p.dist2(t), t))
        .filter(|(d2, _)| *d2 <= r2 + 1e-9)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, t)| t)
}

fn nearest_skeleton_pixel(skel: &Skeleton, p: Pixel, radius: f64) -> Option<Pixel> {
    let r = radius.ceil() as usize;
    let mut found = Vec::new();
    for row in p.row.saturating_sub(r)..=(p.row + r).min(skel.height() - 1) {
        for col in p.col.saturating_sub(r)..=(p.col + r).min(skel.width() - 1) {
            let q = Pixel::new(row, col);
            if skel.contains(q) {
                found.push(q);
            }
        }
    }
    match_endpoint(p, &found, radius)
}

/// One greedy pairing decision at a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingStep {
    pub junction: Pixel,
    pub chosen: SteeringAngle,
    /// Steering angles of every feasible pair at the time of the choice,
    /// the chosen one included.
    pub feasible: Vec<f64>,
    /// Digital line between the two joined ends, both ends included.
    pub bridge: Vec<Pixel>,
}

#[derive(Debug, Clone, Default)]
pub struct UntangleTrace {
    pub cuts: Vec<Pixel>,
    pub steps: Vec<PairingStep>,
}

/// Separates the worms of `skel` given predicted endpoints `ep` (most
/// confident first).
pub fn untangle(skel: &Skeleton, ep: &[Pixel], cfg: &UntangleConfig) -> Result<Vec<WormSkeleton>> {
    untangle_traced(skel, ep, cfg).map(|(w, _)| w)
}

pub fn untangle_traced(
    skel: &Skeleton,
    ep: &[Pixel],
    cfg: &UntangleConfig,
) -> Result<(Vec<WormSkeleton>, UntangleTrace)> {
    cfg.validate()?;
    let mut trace = UntangleTrace::default();
    let mut skel = Skeleton::from_mask(thin_mask(skel.mask()));
    if skel.is_empty() {
        return Ok((Vec::new(), trace));
    }

    // Cut worms fused at their endpoints.
    let mut cls = classify(&skel)?;
    for &p in ep {
        if match_endpoint(p, &cls.endpoints, cfg.match_radius).is_some() {
            continue;
        }
        if let Some(q) = nearest_skeleton_pixel(&skel, p, cfg.match_radius) {
            cut_skeleton(&mut skel, q, cfg)?;
            trace.cuts.push(q);
            skel = Skeleton::from_mask(thin_mask(skel.mask()));
            cls = classify(&skel)?;
        }
    }

    let segments = extract_segments(&skel, &cls);
    let junction_pixels: HashSet<Pixel> = cls.intersections.iter().copied().collect();
    let cluster_of: HashMap<Pixel, usize> = cls
        .junctions
        .iter()
        .enumerate()
        .flat_map(|(i, j)| j.pixels.iter().map(move |&p| (p, i)))
        .collect();
    let touching_clusters = |p: Pixel| -> BTreeSet<usize> {
        p.neighbors8(skel.width(), skel.height())
            .filter_map(|q| cluster_of.get(&q).copied())
            .collect()
    };

    // Fold short inter-junction segments into their junctions and drop noise.
    let mut groups = DisjointSet::new(cls.junctions.len());
    let mut kept: Vec<usize> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let ta = touching_clusters(seg.end_a());
        let tb = touching_clusters(seg.end_b());
        if seg.len() < cfg.junction_merge_len && !ta.is_empty() && !tb.is_empty() {
            let all: Vec<usize> = ta.iter().chain(tb.iter()).copied().collect();
            for w in all.windows(2) {
                groups.union(w[0], w[1]);
            }
            continue;
        }
        if seg.len() < cfg.min_segment_len.max(2) {
            continue;
        }
        kept.push(i);
    }

    // Junction groups: member pixels and a representative for ordering.
    let mut group_pixels: HashMap<usize, Vec<Pixel>> = HashMap::new();
    for (i, j) in cls.junctions.iter().enumerate() {
        group_pixels
            .entry(groups.find(i))
            .or_default()
            .extend(j.pixels.iter().copied());
    }
    let mut group_order: Vec<(Pixel, Vec<Pixel>)> = group_pixels
        .into_iter()
        .map(|(root, mut px)| {
            px.sort();
            let rep = cls
                .junctions
                .iter()
                .enumerate()
                .filter(|(i, _)| groups.find(*i) == root)
                .map(|(_, j)| j.representative)
                .min()
                .expect("group has a cluster");
            (rep, px)
        })
        .collect();
    group_order.sort();

    let mut chains = Chains::new(&segments, &kept);
    for (rep, px) in &group_order {
        let near = |p: Pixel| {
            px.iter()
                .any(|&g| g.dist2(p) <= (2.0 * cfg.match_radius).powi(2) + 1e-9)
        };
        let mut candidates: Vec<(usize, SegmentEnd)> = Vec::new();
        for &s in &kept {
            for end in [SegmentEnd::A, SegmentEnd::B] {
                let p = end.pixel(&segments[s]);
                let is_cut_end = p
                    .neighbors8(skel.width(), skel.height())
                    .any(|q| junction_pixels.contains(&q));
                if is_cut_end && chains.is_free(s, end) && near(p) {
                    candidates.push((s, end));
                }
            }
        }
        pair_at_junction(*rep, &mut candidates, &segments, &mut chains, cfg, &mut trace);
    }

    let mut worms = chains.into_worms(&segments, cfg.min_segment_len);
    for w in &mut worms {
        if w.path.last() < w.path.first() {
            w.path.reverse();
            w.provenance.reverse();
        }
        w.endpoints = [w.path[0], *w.path.last().expect("non-empty")];
    }
    worms.sort_by(|a, b| a.path[0].cmp(&b.path[0]).then(a.path.len().cmp(&b.path.len())));
    Ok((worms, trace))
}

fn pair_at_junction(
    junction: Pixel,
    candidates: &mut Vec<(usize, SegmentEnd)>,
    segments: &[Segment],
    chains: &mut Chains,
    cfg: &UntangleConfig,
    trace: &mut UntangleTrace,
) {
    candidates.sort_by_key(|&(s, e)| (e.pixel(&segments[s]), s, e));
    while candidates.len() >= 2 {
        let mut feasible: Vec<(SteeringAngle, usize, usize, Vec<Pixel>)> = Vec::new();
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                let (sa, ea) = candidates[i];
                let (sb, eb) = candidates[j];
                if sa == sb || chains.same_chain(sa, sb) {
                    continue;
                }
                let Ok(angle) = steering_angle(&segments[sa], ea, &segments[sb], eb, cfg.direction_window) else {
                    continue;
                };
                if angle.value > cfg.max_pair_angle {
                    continue;
                }
                let bridge = digital_line(ea.pixel(&segments[sa]), eb.pixel(&segments[sb]));
                if !chains.bridge_is_clear(sa, sb, &bridge) {
                    continue;
                }
                feasible.push((angle, i, j, bridge));
            }
        }
        // candidates are sorted by pixel, so (i, j) order is lexicographic
        let Some(best) = feasible
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1 .0
                    .value
                    .total_cmp(&b.1 .0.value)
                    .then((a.1 .1, a.1 .2).cmp(&(b.1 .1, b.1 .2)))
            })
            .map(|(k, _)| k)
        else {
            break;
        };
        let values = feasible.iter().map(|f| f.0.value).collect();
        let (angle, i, j, bridge) = feasible.swap_remove(best);
        trace.steps.push(PairingStep {
            junction,
            chosen: angle,
            feasible: values,
            bridge: bridge.clone(),
        });
        chains.link(candidates[i], candidates[j], bridge);
        candidates.remove(j);
        candidates.remove(i);
    }
}

/// Cuts the skeleton at `q`. Next to a junction, every branch except the
/// best-continuing pair is detached; elsewhere `q` and its neighbours are
/// removed.
fn cut_skeleton(skel: &mut Skeleton, q: Pixel, cfg: &UntangleConfig) -> Result<()> {
    let cls = classify(skel)?;
    let junction = cls
        .junctions
        .iter()
        .find(|j| j.pixels.iter().any(|&x| x == q || x.touches(q)));
    if let Some(j) = junction {
        let segs = extract_segments(skel, &cls);
        let mut branches: Vec<(usize, SegmentEnd)> = Vec::new();
        for (i, s) in segs.iter().enumerate() {
            for end in [SegmentEnd::A, SegmentEnd::B] {
                let p = end.pixel(s);
                if j.pixels.iter().any(|&x| x.touches(p)) && s.len() >= 2 {
                    branches.push((i, end));
                }
            }
        }
        if branches.len() >= 3 {
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..branches.len() {
                for b in a + 1..branches.len() {
                    let (sa, ea) = branches[a];
                    let (sb, eb) = branches[b];
                    if sa == sb {
                        continue;
                    }
                    if let Ok(angle) = steering_angle(&segs[sa], ea, &segs[sb], eb, cfg.direction_window) {
                        if best.is_none_or(|(v, _, _)| angle.value < v) {
                            best = Some((angle.value, a, b));
                        }
                    }
                }
            }
            if let Some((_, a, b)) = best {
                for (k, &(s, end)) in branches.iter().enumerate() {
                    if k == a || k == b {
                        continue;
                    }
                    let path = &segs[s].path;
                    let n = 2.min(path.len());
                    let detach: Vec<Pixel> = match end {
                        SegmentEnd::A => path[..n].to_vec(),
                        SegmentEnd::B => path[path.len() - n..].to_vec(),
                    };
                    for p in detach {
                        skel.remove(p);
                    }
                }
                return Ok(());
            }
        }
    }
    let nbrs: Vec<Pixel> = skel.neighbors(q).collect();
    skel.remove(q);
    for p in nbrs {
        skel.remove(p);
    }
    Ok(())
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Segments joined end to end. Each chain keeps its pixel set so that
/// joins never make a path revisit a pixel.
/// A segment end, and where it is linked to together with the bridge.
type End = (usize, SegmentEnd);

struct Chains {
    sets: DisjointSet,
    links: HashMap<End, (End, Vec<Pixel>)>,
    pixels: HashMap<usize, HashSet<Pixel>>,
    members: Vec<usize>,
}

impl Chains {
    fn new(segments: &[Segment], kept: &[usize]) -> Self {
        let mut pixels = HashMap::new();
        for &s in kept {
            pixels.insert(s, segments[s].path.iter().copied().collect());
        }
        Self {
            sets: DisjointSet::new(segments.len()),
            links: HashMap::new(),
            pixels,
            members: kept.to_vec(),
        }
    }

    fn is_free(&self, s: usize, e: SegmentEnd) -> bool {
        !self.links.contains_key(&(s, e))
    }

    fn same_chain(&mut self, a: usize, b: usize) -> bool {
        self.sets.find(a) == self.sets.find(b)
    }

    fn bridge_is_clear(&mut self, a: usize, b: usize, bridge: &[Pixel]) -> bool {
        let (ra, rb) = (self.sets.find(a), self.sets.find(b));
        let (pa, pb) = (&self.pixels[&ra], &self.pixels[&rb]);
        if pa.len() <= pb.len() {
            if pa.iter().any(|p| pb.contains(p)) {
                return false;
            }
        } else if pb.iter().any(|p| pa.contains(p)) {
            return false;
        }
        let interior = &bridge[1..bridge.len().saturating_sub(1).max(1)];
        interior.iter().all(|p| !pa.contains(p) && !pb.contains(p))
    }

    fn link(&mut self, a: (usize, SegmentEnd), b: (usize, SegmentEnd), bridge: Vec<Pixel>) {
        let (ra, rb) = (self.sets.find(a.0), self.sets.find(b.0));
        let interior: Vec<Pixel> = if bridge.len() > 2 {
            bridge[1..bridge.len() - 1].to_vec()
        } else {
            Vec::new()
        };
        let mut merged = self.pixels.remove(&ra).unwrap_or_default();
        merged.extend(self.pixels.remove(&rb).unwrap_or_default());
        merged.extend(interior);
        self.sets.union(ra, rb);
        let root = self.sets.find(ra);
        self.pixels.insert(root, merged);
        let mut reversed = bridge.clone();
        reversed.reverse();
        self.links.insert(a, (b, bridge));
        self.links.insert(b, (a, reversed));
    }

    fn into_worms(mut self, segments: &[Segment], min_len: usize) -> Vec<WormSkeleton> {
        let mut by_chain: HashMap<usize, Vec<usize>> = HashMap::new();
        for &s in &self.members.clone() {
            let r = self.sets.find(s);
            by_chain.entry(r).or_default().push(s);
        }
        let mut worms = Vec::new();
        for (_, members) in by_chain {
            // start from the smallest free end of the chain
            let start = members
                .iter()
                .flat_map(|&s| [(s, SegmentEnd::A), (s, SegmentEnd::B)])
                .filter(|k| !self.links.contains_key(k))
                .min_by_key(|&(s, e)| (e.pixel(&segments[s]), s, e))
                .expect("chains are acyclic, so a free end exists");
            let mut path: PixelPath = Vec::new();
            let mut provenance = Vec::new();
            let (mut s, mut entry) = start;
            loop {
                provenance.push(s);
                let seg = &segments[s].path;
                match entry {
                    SegmentEnd::A => path.extend(seg.iter().copied()),
                    SegmentEnd::B => path.extend(seg.iter().rev().copied()),
                }
                let exit = entry.other();
                match self.links.get(&(s, exit)) {
                    Some(((next, next_end), bridge)) => {
                        if bridge.len() > 2 {
                            path.extend_from_slice(&bridge[1..bridge.len() - 1]);
                        }
                        s = *next;
                        entry = *next_end;
                    }
                    None => break,
                }
            }
            if path.len() >= min_len {
                let mut w = WormSkeleton::from_path(path);
                w.provenance = provenance;
                worms.push(w);
            }
        }
        worms
    }
}
