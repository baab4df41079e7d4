use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use wormline::eval::{skeleton_fscore, RangeMetric};
use wormline::geom::{digital_line, is_8_connected, Pixel};
use wormline::skelgeo::{binarize_and_thin, thin_mask, Skeleton};
use wormline::synth::{generate, OverlapPolicy, SceneSpec};
use wormline::untangle::{untangle, untangle_traced, UntangleConfig, WormSkeleton};

fn crossing_spec(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        n_worms: 2,
        overlap: OverlapPolicy::ForceCrossings(1),
        ..Default::default()
    }
}

fn canonical(worms: &[WormSkeleton]) -> Vec<Vec<Pixel>> {
    let mut out: Vec<Vec<Pixel>> = worms
        .iter()
        .map(|w| {
            let mut p = w.path.clone();
            if p.last() < p.first() {
                p.reverse();
            }
            p
        })
        .collect();
    out.sort();
    out
}

fn assert_worm_invariants(worms: &[WormSkeleton]) {
    for w in worms {
        assert!(!w.path.is_empty());
        assert!(is_8_connected(&w.path), "path not 8-connected");
        let unique: HashSet<_> = w.path.iter().collect();
        assert_eq!(unique.len(), w.path.len(), "path revisits a pixel");
        assert_eq!(w.endpoints, [w.path[0], *w.path.last().unwrap()]);
    }
}

fn best_f(worm: &WormSkeleton, gts: &[Vec<Pixel>]) -> f64 {
    gts.iter()
        .map(|g| skeleton_fscore(&worm.path, g, 3.0, RangeMetric::Euclidean).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn single_worm_is_returned_unchanged() {
    let s = generate(&SceneSpec {
        seed: 3,
        n_worms: 1,
        ..Default::default()
    })
    .unwrap();
    let skel = Skeleton::from_mask(s.skeleton.clone());
    let worms = untangle(&skel, &s.endpoint_pixels(), &UntangleConfig::default()).unwrap();
    assert_eq!(worms.len(), 1);
    let mut expected = s.worms[0].path.clone();
    if expected.last() < expected.first() {
        expected.reverse();
    }
    assert_eq!(worms[0].path, expected);
}

#[test]
fn x_crossing_pairs_opposite_arms() {
    // two straight diagonals through (30, 30)
    let a = digital_line(Pixel::new(10, 10), Pixel::new(50, 50));
    let b = digital_line(Pixel::new(10, 50), Pixel::new(50, 10));
    let px: Vec<Pixel> = a.iter().chain(&b).copied().collect();
    let skel = Skeleton::from_pixels(61, 61, &px).unwrap();
    let ep = [a[0], *a.last().unwrap(), b[0], *b.last().unwrap()];
    let worms = untangle(&skel, &ep, &UntangleConfig::default()).unwrap();
    assert_eq!(worms.len(), 2);
    let gts = vec![a, b];
    for w in &worms {
        assert!(best_f(w, &gts) >= 0.95);
    }
}

#[test]
fn t_fusion_is_cut_at_predicted_endpoint() {
    let body: Vec<Pixel> = (5..=60).map(|c| Pixel::new(20, c)).collect();
    let stem: Vec<Pixel> = (21..=50).map(|r| Pixel::new(r, 30)).collect();
    let px: Vec<Pixel> = body.iter().chain(&stem).copied().collect();
    let skel = Skeleton::from_pixels(70, 60, &px).unwrap();
    let ep = [
        Pixel::new(20, 5),
        Pixel::new(20, 60),
        Pixel::new(50, 30),
        Pixel::new(21, 30),
    ];
    let (worms, trace) = untangle_traced(&skel, &ep, &UntangleConfig::default()).unwrap();
    assert_eq!(trace.cuts.len(), 1);
    assert_eq!(worms.len(), 2);
    // thinning may shift the body by one pixel where the stem was fused
    let head = &worms[0].path;
    assert_eq!(head.len(), body.len());
    assert_eq!(worms[0].endpoints, [body[0], *body.last().unwrap()]);
    assert!(head.iter().all(|p| body.iter().any(|q| q.chebyshev(*p) <= 1)));
    // the stem loses at most the three cut pixels at its fused end
    let tail = &worms[1].path;
    assert!(tail.len() >= stem.len() - 3);
    assert!(tail.iter().all(|p| stem.contains(p)));
    assert_eq!(*tail.last().unwrap(), Pixel::new(50, 30));
}

#[test]
fn synthetic_crossings_separate() {
    let mut ok = 0;
    for seed in 0..20 {
        let s = generate(&crossing_spec(seed)).unwrap();
        let skel = Skeleton::from_mask(s.skeleton.clone());
        let worms = untangle(&skel, &s.endpoint_pixels(), &UntangleConfig::default()).unwrap();
        let gts: Vec<_> = s.worms.iter().map(|w| w.path.clone()).collect();
        if worms.len() == 2 && worms.iter().all(|w| best_f(w, &gts) >= 0.95) {
            ok += 1;
        }
    }
    assert!(ok >= 19, "{ok}/20 scenes separated");
}

#[test]
fn greedy_choice_is_minimal_among_feasible() {
    for seed in 0..30 {
        let spec = SceneSpec {
            seed,
            n_worms: 4,
            overlap: OverlapPolicy::ForceCrossings(2),
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        let skel = binarize_and_thin(&s.prob_skel, 0.5).unwrap();
        let (_, trace) = untangle_traced(&skel, &s.endpoint_pixels(), &UntangleConfig::default()).unwrap();
        for step in &trace.steps {
            assert!(step.feasible.iter().all(|&v| step.chosen.value <= v));
            assert!(step.feasible.contains(&step.chosen.value));
        }
    }
}

#[test]
fn output_pixels_come_from_skeleton_or_bridges() {
    for seed in 0..30 {
        let spec = SceneSpec {
            seed,
            n_worms: 4,
            overlap: OverlapPolicy::ForceCrossings(2),
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        let skel = binarize_and_thin(&s.prob_skel, 0.5).unwrap();
        let (worms, trace) = untangle_traced(&skel, &s.endpoint_pixels(), &UntangleConfig::default()).unwrap();
        let bridges: HashSet<Pixel> = trace.steps.iter().flat_map(|st| st.bridge.iter().copied()).collect();
        let mut owner: HashMap<Pixel, usize> = HashMap::new();
        for (i, w) in worms.iter().enumerate() {
            for &p in &w.path {
                assert!(
                    skel.contains(p) || bridges.contains(&p),
                    "seed {seed}: stray pixel {p:?}"
                );
                if bridges.contains(&p) {
                    continue;
                }
                if let Some(&j) = owner.get(&p) {
                    assert_eq!(j, i, "seed {seed}: {p:?} in two worms");
                }
                owner.insert(p, i);
            }
        }
        assert_worm_invariants(&worms);
    }
}

#[test]
fn untangle_is_deterministic() {
    let s = generate(&SceneSpec {
        seed: 11,
        n_worms: 5,
        overlap: OverlapPolicy::ForceCrossings(2),
        ..Default::default()
    })
    .unwrap();
    let skel = binarize_and_thin(&s.prob_skel, 0.5).unwrap();
    let cfg = UntangleConfig::default();
    let first = untangle(&skel, &s.endpoint_pixels(), &cfg).unwrap();
    for _ in 0..3 {
        assert_eq!(untangle(&skel, &s.endpoint_pixels(), &cfg).unwrap(), first);
    }
}

/// `(r, c) -> (c, H-1-r)`: a quarter turn that maps an H-row grid onto an
/// H-column one.
fn rotate(p: Pixel, height: usize) -> Pixel {
    Pixel::new(p.col, height - 1 - p.row)
}

#[test]
fn quarter_turn_equivariance() {
    for seed in 0..20 {
        let s = generate(&crossing_spec(seed)).unwrap();
        let thin = thin_mask(&s.skeleton);
        let (w, h) = (thin.width(), thin.height());
        let skel = Skeleton::from_mask(thin);
        let ep = s.endpoint_pixels();
        let cfg = UntangleConfig::default();
        let base = untangle(&skel, &ep, &cfg).unwrap();

        let rot_px: Vec<Pixel> = skel.pixels().into_iter().map(|p| rotate(p, h)).collect();
        let rot_skel = Skeleton::from_pixels(h, w, &rot_px).unwrap();
        assert_eq!(
            Skeleton::from_mask(thin_mask(rot_skel.mask())).pixels().len(),
            rot_px.len(),
            "seed {seed}: rotated skeleton is not thin"
        );
        let rot_ep: Vec<Pixel> = ep.iter().map(|&p| rotate(p, h)).collect();
        let rotated = untangle(&rot_skel, &rot_ep, &cfg).unwrap();

        let expected: Vec<WormSkeleton> = base
            .iter()
            .map(|wm| WormSkeleton::from_path(wm.path.iter().map(|&p| rotate(p, h)).collect()))
            .collect();
        assert_eq!(canonical(&rotated), canonical(&expected), "seed {seed}");
    }
}

/// Polyline strokes and predicted endpoints.
type Strokes = (Vec<Vec<(usize, usize)>>, Vec<(usize, usize)>);

fn random_skeleton() -> impl Strategy<Value = Strokes> {
    let stroke = prop::collection::vec((0usize..40, 0usize..40), 2..5);
    (
        prop::collection::vec(stroke, 1..5),
        prop::collection::vec((0usize..40, 0usize..40), 0..6),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fuzzed_polylines_give_valid_paths((strokes, ep) in random_skeleton()) {
        let mut px = Vec::new();
        for s in &strokes {
            for w in s.windows(2) {
                px.extend(digital_line(w[0].into(), w[1].into()));
            }
        }
        let skel = Skeleton::from_pixels(40, 40, &px).unwrap();
        let ep: Vec<Pixel> = ep.into_iter().map(Pixel::from).collect();
        let worms = untangle(&skel, &ep, &UntangleConfig::default()).unwrap();
        assert_worm_invariants(&worms);
    }
}
