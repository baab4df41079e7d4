//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Build with `--release`; the runtime bounds assume optimised code.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use wormline::eval::{
    evaluate_masks, mask_fscore, matching_size, skeleton_fscore, EvalReport, MatchGraph, RangeMetric,
};
use wormline::geom::Pixel;
use wormline::lossmap::{focal_loss, focal_loss_grad, weight_map, LossParams, WeightMap, EPSILON};
use wormline::maskrecon::{estimate_radii, fill_discs, fill_mask};
use wormline::pipeline::{detect_worms, reconstruct_masks, PipelineConfig};
use wormline::raster::{canny_edges, BinaryMask, CannyParams, GrayImage, ProbMap};
use wormline::skelgeo::binarize_and_thin;
use wormline::synth::{generate, random_centerline, rasterize, OverlapPolicy, SceneSpec, SplitMix64};
use wormline::untangle::{untangle, UntangleConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_mask(rng: &mut SplitMix64, w: usize, h: usize, density: f64) -> BinaryMask {
    let mut data: Vec<bool> = (0..w * h).map(|_| rng.next_f64() < density).collect();
    if !data.iter().any(|&b| b) {
        data[rng.below(w * h)] = true;
    }
    BinaryMask::new(w, h, data).unwrap()
}

fn weight_maps() -> Outcome {
    let mut rng = SplitMix64::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let density = rng.uniform(0.005, 0.08);
        let gt = random_mask(&mut rng, 48, 40, density);
        let gt_px: Vec<Pixel> = gt.true_pixels().collect();
        for sigma in [2.0, 3.0, 5.0] {
            let w = weight_map(&gt, sigma).unwrap();
            for r in 0..gt.height() {
                for c in 0..gt.width() {
                    let q = Pixel::new(r, c);
                    let brute = gt_px
                        .iter()
                        .map(|&g| (-q.dist2(g) / (2.0 * sigma * sigma)).exp())
                        .fold(0.0, f64::max);
                    worst = worst.max((w.at(r, c) - brute).abs());
                }
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |w - brute force| = {worst:.2e} over 50 masks x 3 sigmas"),
    )
}

fn naive_loss(pred: &ProbMap, gt: &BinaryMask, w: &WeightMap, lp: &LossParams) -> f64 {
    let mut sum = 0.0;
    for i in 0..pred.height() {
        for j in 0..pred.width() {
            let q = Pixel::new(i, j);
            let p = pred.get(q).clamp(EPSILON, 1.0 - EPSILON);
            sum += if gt.get(q) {
                (1.0 - p).powf(lp.gamma) * p.ln()
            } else {
                (1.0 - w.at(i, j)).powf(lp.beta) * p.powf(lp.gamma) * (1.0 - p).ln()
            };
        }
    }
    -sum / (lp.n_objects.max(1) as f64 * (pred.width() * pred.height()) as f64)
}

fn focal_losses() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let (mut worst_rel, mut worst_grad): (f64, f64) = (0.0, 0.0);
    let n = 16;
    for _ in 0..100 {
        let gt = random_mask(&mut rng, n, n, 0.15);
        let sigma = rng.uniform(0.0, 4.0);
        let w = weight_map(&gt, sigma).unwrap();
        let probs: Vec<f64> = (0..n * n).map(|_| rng.uniform(0.01, 0.99)).collect();
        let pred = ProbMap::new(n, n, probs.clone()).unwrap();
        let lp = LossParams {
            gamma: rng.uniform(0.0, 4.0),
            beta: rng.uniform(0.0, 6.0),
            n_objects: 1 + rng.below(5),
        };
        let fast = focal_loss(&pred, &gt, &w, &lp).unwrap();
        let slow = naive_loss(&pred, &gt, &w, &lp);
        worst_rel = worst_rel.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
        let grad = focal_loss_grad(&pred, &gt, &w, &lp).unwrap();
        let h = 1e-5;
        for k in 0..n * n {
            let at = |delta: f64| {
                let mut d = probs.clone();
                d[k] += delta;
                focal_loss(&ProbMap::new(n, n, d).unwrap(), &gt, &w, &lp).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst_grad = worst_grad.max((grad[k] - fd).abs());
        }
    }
    outcome(
        worst_rel <= 1e-12 && worst_grad <= 1e-5,
        format!("loss rel. error {worst_rel:.2e}, gradient vs central differences {worst_grad:.2e}"),
    )
}

fn brute_matching(g: &MatchGraph, i: usize, used: u32) -> usize {
    if i == g.n_left {
        return 0;
    }
    let mut best = brute_matching(g, i + 1, used);
    for &j in &g.adj[i] {
        if used & (1 << j) == 0 {
            best = best.max(1 + brute_matching(g, i + 1, used | (1 << j)));
        }
    }
    best
}

fn matchings() -> Outcome {
    let mut rng = SplitMix64::new(3);
    let mut agree = 0;
    for _ in 0..100 {
        let (l, r) = (rng.below(11), rng.below(11));
        let density = rng.next_f64();
        let mut g = MatchGraph::new(l, r);
        for i in 0..l {
            for j in 0..r {
                if rng.next_f64() < density {
                    g.add_edge(i, j);
                }
            }
        }
        agree += usize::from(matching_size(&g) == brute_matching(&g, 0, 0));
    }
    outcome(agree == 100, format!("{agree}/100 graphs match exhaustive enumeration"))
}

fn untangling() -> Outcome {
    let mut ok = 0;
    let cfg = UntangleConfig::default();
    for seed in 0..100 {
        let spec = SceneSpec {
            seed,
            n_worms: 2,
            overlap: OverlapPolicy::ForceCrossings(1),
            crossing_angle_range: [30.0, 90.0],
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        // thinned pseudo skeleton map, ground-truth endpoints
        let skel = binarize_and_thin(&s.prob_skel, 0.5).unwrap();
        let worms = untangle(&skel, &s.endpoint_pixels(), &cfg).unwrap();
        let gts: Vec<Vec<Pixel>> = s.worms.iter().map(|w| w.path.clone()).collect();
        let good = worms.len() == 2
            && worms.iter().all(|w| {
                gts.iter()
                    .map(|g| skeleton_fscore(&w.path, g, 3.0, RangeMetric::Euclidean).unwrap())
                    .fold(0.0, f64::max)
                    >= 0.95
            });
        ok += usize::from(good);
    }
    outcome(
        ok >= 95,
        format!("{ok}/100 scenes give 2 worms with skeleton F >= 0.95"),
    )
}

fn end_to_end() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut total: Option<EvalReport> = None;
    for seed in 0..100 {
        let spec = SceneSpec {
            seed,
            n_worms: 5,
            overlap: OverlapPolicy::ForceCrossings(2),
            clutter_density: 0.0,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        let worms = detect_worms(&s.prob_skel, &s.prob_ep, &cfg).unwrap();
        let masks: Vec<BinaryMask> = reconstruct_masks(&s.image, &worms, &cfg.canny)
            .unwrap()
            .into_iter()
            .map(|m| m.mask)
            .collect();
        let r = evaluate_masks(&masks, &s.masks, &[0.8]).unwrap();
        match &mut total {
            Some(t) => t.merge(r).unwrap(),
            None => total = Some(r),
        }
    }
    let row = &total.unwrap().rows[0];
    outcome(
        row.precision >= 0.9 && row.recall >= 0.9,
        format!(
            "mask P/R at 0.8 = {:.2}% / {:.2}% (TP {}, FP {}, FN {})",
            100.0 * row.precision,
            100.0 * row.recall,
            row.tp,
            row.fp,
            row.fn_
        ),
    )
}

/// Furthest mask pixel past each path end along the local end direction.
fn tip_overshoot(mask: &BinaryMask, path: &[Pixel]) -> f64 {
    let k = 5.min(path.len() - 1);
    [(path[path.len() - 1], path[path.len() - 1 - k]), (path[0], path[k])]
        .iter()
        .map(|&(end, inner)| {
            let (dr, dc) = (end.row as f64 - inner.row as f64, end.col as f64 - inner.col as f64);
            let norm = dr.hypot(dc);
            mask.true_pixels()
                .map(|q| ((q.row as f64 - end.row as f64) * dr + (q.col as f64 - end.col as f64) * dc) / norm)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn mask_fidelity() -> Outcome {
    let (w, h) = (160, 160);
    let canny = CannyParams::default();
    let (mut worst_f, mut worst_tip, mut n): (f64, f64, usize) = (1.0, f64::NEG_INFINITY, 0);
    for seed in 0..50 {
        let mut rng = SplitMix64::new(seed);
        let length = rng.uniform(60.0, 120.0);
        let line = random_centerline(&mut rng, length, 0.03);
        let angle = rng.uniform(0.0, std::f64::consts::TAU);
        let line = line.place(line.len() / 2, angle, (80.0, 80.0));
        let Some(path) = rasterize(&line) else { continue };
        let tube = fill_discs(&path, &vec![3.0; path.len()], w, h).unwrap();
        let grey: Vec<u8> = tube.data().iter().map(|&b| if b { 70 } else { 200 }).collect();
        let img = GrayImage::from_u8(w, h, &grey).unwrap();
        let edges = canny_edges(&img, canny.low, canny.high, canny.sigma).unwrap();
        let worm = wormline::untangle::WormSkeleton::from_path(path.clone());
        let profile = estimate_radii(&worm, &edges).unwrap();
        let m = fill_mask(&worm, &profile, (w, h), 1).unwrap();
        worst_f = worst_f.min(mask_fscore(&m.mask, &tube).unwrap());
        worst_tip = worst_tip.max(tip_overshoot(&m.mask, &path));
        n += 1;
    }
    outcome(
        n >= 40 && worst_f >= 0.9 && worst_tip <= 1.0 + 1e-9,
        format!("{n} tubes: min mask F = {worst_f:.3}, max tip overshoot = {worst_tip:.2} px"),
    )
}

fn table_format() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table");
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = Command::new(env!("CARGO_BIN_EXE_wormline"))
        .args(["eval", "--mode", "skeleton", "--pred"])
        .arg(fixtures.join("pred.json"))
        .arg("--gt")
        .arg(fixtures.join("gt.json"))
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    if !out.status.success() {
        return outcome(false, format!("eval exited with {}", out.status));
    }
    let expected = std::fs::read(fixtures.join("expected_table.txt")).unwrap();
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let thresholds = report.thresholds();
    let monotone = report.rows.windows(2).all(|w| w[1].tp <= w[0].tp);
    outcome(
        out.stdout == expected && thresholds == [0.5, 0.6, 0.7, 0.8, 0.9] && monotone,
        format!(
            "byte-identical: {}, thresholds {:?}, TP {:?}",
            out.stdout == expected,
            thresholds,
            report.rows.iter().map(|r| r.tp).collect::<Vec<_>>()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("weight map vs brute force", Duration::from_secs(5), weight_maps),
        ("focal loss oracle and gradient", Duration::from_secs(10), focal_losses),
        ("matching vs exhaustive search", Duration::from_secs(10), matchings),
        ("untangling synthetic crossings", Duration::from_secs(60), untangling),
        ("end-to-end on pseudo maps", Duration::from_secs(300), end_to_end),
        ("mask reconstruction fidelity", Duration::MAX, mask_fidelity),
        ("precision/recall table", Duration::MAX, table_format),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = o.passed && in_time;
        failed += usize::from(!pass);
        let bound = if limit == Duration::MAX {
            String::new()
        } else {
            format!(", limit {}s", limit.as_secs())
        };
        println!(
            "{} {name}: {} [{:.2}s{bound}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
