//! Maximum-cardinality bipartite matching between pixel sets.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geom::Pixel;

/// How "within range" is measured between two pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMetric {
    #[default]
    Euclidean,
    Chebyshev,
}

impl RangeMetric {
    pub fn within(self, a: Pixel, b: Pixel, range: f64) -> bool {
        match self {
            RangeMetric::Euclidean => a.dist2(b) <= range * range,
            RangeMetric::Chebyshev => (a.chebyshev(b) as f64) <= range,
        }
    }
}

impl std::str::FromStr for RangeMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(RangeMetric::Euclidean),
            "chebyshev" => Ok(RangeMetric::Chebyshev),
            _ => Err(format!("unknown range metric {s:?}")),
        }
    }
}

/// Bipartite graph with `left` and `right` vertices given by index;
/// `adj[i]` lists the right vertices adjacent to left vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchGraph {
    pub n_left: usize,
    pub n_right: usize,
    pub adj: Vec<Vec<usize>>,
}

impl MatchGraph {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        Self {
            n_left,
            n_right,
            adj: vec![Vec::new(); n_left],
        }
    }

    pub fn add_edge(&mut self, l: usize, r: usize) {
        assert!(l < self.n_left && r < self.n_right, "edge ({l}, {r}) out of range");
        self.adj[l].push(r);
    }

    /// Edge iff the two pixels are within `range` under `metric`.
    pub fn from_pixels(left: &[Pixel], right: &[Pixel], range: f64, metric: RangeMetric) -> Self {
        let mut g = Self::new(left.len(), right.len());
        // bucket the right side on a grid of cell size > range
        let cell = range.floor() as usize + 1;
        let mut buckets: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
        for (j, p) in right.iter().enumerate() {
            buckets.entry((p.row / cell, p.col / cell)).or_default().push(j);
        }
        for (i, &p) in left.iter().enumerate() {
            let (br, bc) = (p.row / cell, p.col / cell);
            for r in br.saturating_sub(1)..=br + 1 {
                for c in bc.saturating_sub(1)..=bc + 1 {
                    for &j in buckets.get(&(r, c)).into_iter().flatten() {
                        if metric.within(p, right[j], range) {
                            g.adj[i].push(j);
                        }
                    }
                }
            }
            g.adj[i].sort_unstable();
        }
        g
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

const NIL: usize = usize::MAX;

/// Hopcroft–Karp. Returns `mate[l]` = matched right vertex for each left vertex.
pub fn maximum_matching(g: &MatchGraph) -> Vec<Option<usize>> {
    let mut mate_l = vec![NIL; g.n_left];
    let mut mate_r = vec![NIL; g.n_right];
    let mut dist = vec![0usize; g.n_left];

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        for l in 0..g.n_left {
            if mate_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &g.adj[l] {
                let m = mate_r[r];
                if m == NIL {
                    found = true;
                } else if dist[m] == usize::MAX {
                    dist[m] = dist[l] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..g.n_left {
            if mate_l[l] == NIL {
                augment(g, l, &mut mate_l, &mut mate_r, &mut dist);
            }
        }
    }
    mate_l.into_iter().map(|r| (r != NIL).then_some(r)).collect()
}

fn augment(g: &MatchGraph, l: usize, mate_l: &mut [usize], mate_r: &mut [usize], dist: &mut [usize]) -> bool {
    for &r in &g.adj[l] {
        let m = mate_r[r];
        if m == NIL || (dist[m] == dist[l] + 1 && augment(g, m, mate_l, mate_r, dist)) {
            mate_l[l] = r;
            mate_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

pub fn matching_size(g: &MatchGraph) -> usize {
    maximum_matching(g).iter().flatten().count()
}
