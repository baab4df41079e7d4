//! Detection metrics: per-worm overlap F-scores, optimal one-to-one
//! assignment of predictions to ground truth, and precision/recall at a
//! sweep of F-score thresholds.

mod assign;
mod matching;
mod report;

use serde::{Deserialize, Serialize};

pub use self::assign::{assignment_total, max_weight_assignment};
pub use self::matching::{matching_size, maximum_matching, MatchGraph, RangeMetric};
pub use self::report::{Assignment, EvalReport, ThresholdCounts};

use crate::error::{Error, Result};
use crate::geom::Pixel;
use crate::raster::BinaryMask;

pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_RANGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Skeleton,
    Mask,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::Skeleton => "skeleton",
            EvalMode::Mask => "mask",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "skeleton" => Ok(EvalMode::Skeleton),
            "mask" => Ok(EvalMode::Mask),
            _ => Err(format!("unknown eval mode {s:?}")),
        }
    }
}

fn f_from_counts(matched_p: usize, n_p: usize, matched_g: usize, n_g: usize) -> f64 {
    let p = matched_p as f64 / n_p as f64;
    let r = matched_g as f64 / n_g as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Skeleton overlap: maximum matching between the two pixel lists with
/// edges between pixels within `range`; precision `|M|/|pred|`, recall
/// `|M|/|gt|`.
pub fn skeleton_fscore(pred: &[Pixel], gt: &[Pixel], range: f64, metric: RangeMetric) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::Empty("skeleton path"));
    }
    if !(range >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "range must be non-negative, got {range}"
        )));
    }
    let m = matching_size(&MatchGraph::from_pixels(pred, gt, range, metric));
    Ok(f_from_counts(m, pred.len(), m, gt.len()))
}

/// Dice overlap `2|P∩G| / (|P|+|G|)`; 1 when both masks are empty.
pub fn mask_fscore(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    pred.ensure_shape(gt.shape())?;
    Ok(dice(pred.intersection_count(gt), pred.count(), gt.count()))
}

fn dice(inter: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (a + b) as f64
    }
}

/// Sorted linear indices of a mask's pixels, for cheap pairwise overlaps.
fn sparse(mask: &BinaryMask) -> Vec<usize> {
    mask.data()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Pairwise skeleton F-scores, `[pred][gt]`.
pub fn skeleton_score_matrix(
    preds: &[Vec<Pixel>],
    gts: &[Vec<Pixel>],
    range: f64,
    metric: RangeMetric,
) -> Result<Vec<Vec<f64>>> {
    let boxes = |paths: &[Vec<Pixel>]| -> Vec<(usize, usize, usize, usize)> {
        paths
            .iter()
            .map(|p| {
                p.iter().fold((usize::MAX, usize::MAX, 0, 0), |(r0, c0, r1, c1), q| {
                    (r0.min(q.row), c0.min(q.col), r1.max(q.row), c1.max(q.col))
                })
            })
            .collect()
    };
    let (bp, bg) = (boxes(preds), boxes(gts));
    let slack = range.ceil() as usize;
    preds
        .iter()
        .zip(&bp)
        .map(|(p, a)| {
            gts.iter()
                .zip(&bg)
                .map(|(g, b)| {
                    let apart = a.0 > b.2 + slack || b.0 > a.2 + slack || a.1 > b.3 + slack || b.1 > a.3 + slack;
                    if apart && !p.is_empty() && !g.is_empty() {
                        Ok(0.0)
                    } else {
                        skeleton_fscore(p, g, range, metric)
                    }
                })
                .collect()
        })
        .collect()
}

/// Pairwise mask F-scores, `[pred][gt]`.
pub fn mask_score_matrix(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = preds.first().or(gts.first()) {
        for m in preds.iter().chain(gts) {
            m.ensure_shape(first.shape())?;
        }
    }
    let sp: Vec<Vec<usize>> = preds.iter().map(sparse).collect();
    let sg: Vec<Vec<usize>> = gts.iter().map(sparse).collect();
    Ok(sp
        .iter()
        .map(|p| {
            sg.iter()
                .map(|g| dice(sorted_intersection(p, g), p.len(), g.len()))
                .collect()
        })
        .collect())
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "thresholds must be a non-empty list in (0, 1], got {thresholds:?}"
        )));
    }
    Ok(())
}

/// Assigns predictions to ground truth maximising total F, then counts a
/// prediction as a true positive at threshold `t` iff its assigned F ≥ t.
pub fn evaluate_scores(scores: &[Vec<f64>], n_gt: usize, mode: EvalMode, thresholds: &[f64]) -> Result<EvalReport> {
    check_thresholds(thresholds)?;
    if scores.iter().any(|row| row.len() != n_gt) {
        return Err(Error::InvalidArgument(
            "score matrix rows must have one entry per ground-truth worm".into(),
        ));
    }
    let cols = max_weight_assignment(scores);
    let assignments: Vec<Assignment> = cols
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            c.map(|j| Assignment {
                image: String::new(),
                pred: i,
                gt: j,
                fscore: scores[i][j],
            })
        })
        .collect();
    Ok(EvalReport::from_assignments(
        mode,
        thresholds,
        scores.len(),
        n_gt,
        assignments,
    ))
}

pub fn evaluate_skeletons(
    preds: &[Vec<Pixel>],
    gts: &[Vec<Pixel>],
    range: f64,
    metric: RangeMetric,
    thresholds: &[f64],
) -> Result<EvalReport> {
    let s = skeleton_score_matrix(preds, gts, range, metric)?;
    evaluate_scores(&s, gts.len(), EvalMode::Skeleton, thresholds)
}

pub fn evaluate_masks(preds: &[BinaryMask], gts: &[BinaryMask], thresholds: &[f64]) -> Result<EvalReport> {
    let s = mask_score_matrix(preds, gts)?;
    evaluate_scores(&s, gts.len(), EvalMode::Mask, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(r: usize, c0: usize, n: usize) -> Vec<Pixel> {
        (c0..c0 + n).map(|c| Pixel::new(r, c)).collect()
    }

    #[test]
    fn identical_paths() {
        let p = line(4, 0, 20);
        assert_eq!(skeleton_fscore(&p, &p, 3.0, RangeMetric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn diagonal_shift_within_range() {
        let gt: Vec<Pixel> = (0..50).map(|i| Pixel::new(10 + i, 10 + i)).collect();
        let pred: Vec<Pixel> = gt.iter().map(|p| Pixel::new(p.row + 2, p.col + 2)).collect();
        assert_eq!(skeleton_fscore(&pred, &gt, 3.0, RangeMetric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn far_paths_score_zero() {
        let f = skeleton_fscore(&line(0, 0, 5), &line(20, 0, 5), 3.0, RangeMetric::Euclidean).unwrap();
        assert_eq!(f, 0.0);
        assert!(skeleton_fscore(&[], &line(0, 0, 1), 3.0, RangeMetric::Euclidean).is_err());
    }

    #[test]
    fn mask_scores() {
        let mut a = BinaryMask::empty(20, 10).unwrap();
        let mut b = BinaryMask::empty(20, 10).unwrap();
        for i in 0..100 {
            a.set(Pixel::new(i / 20, i % 20), true);
            b.set(Pixel::new(i / 20 + 1, i % 20), true);
        }
        // 80 pixels in common
        assert!((mask_fscore(&a, &b).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(mask_fscore(&a, &a).unwrap(), 1.0);
        let e = BinaryMask::empty(20, 10).unwrap();
        assert_eq!(mask_fscore(&e, &e).unwrap(), 1.0);
        assert_eq!(mask_fscore(&a, &e).unwrap(), 0.0);
        assert!(mask_fscore(&a, &BinaryMask::empty(10, 10).unwrap()).is_err());
    }

    #[test]
    fn two_preds_one_gt() {
        let gt = vec![line(5, 0, 30)];
        let preds = vec![line(5, 0, 30), line(40, 0, 30)];
        let r = evaluate_skeletons(&preds, &gt, 3.0, RangeMetric::Euclidean, &[0.8]).unwrap();
        let row = &r.rows[0];
        assert_eq!((row.tp, row.fp, row.fn_), (1, 1, 0));
        assert_eq!((row.precision, row.recall), (0.5, 1.0));
    }

    #[test]
    fn identity_is_perfect() {
        let worms = vec![line(5, 0, 30), line(15, 0, 30), line(25, 3, 10)];
        let r = evaluate_skeletons(&worms, &worms, 3.0, RangeMetric::Euclidean, &DEFAULT_THRESHOLDS).unwrap();
        for row in &r.rows {
            assert_eq!((row.precision, row.recall), (1.0, 1.0));
        }
    }

    #[test]
    fn empty_sides() {
        let r = evaluate_scores(&[], 2, EvalMode::Mask, &[0.5]).unwrap();
        assert_eq!((r.rows[0].precision, r.rows[0].recall, r.rows[0].fn_), (1.0, 0.0, 2));
        assert!(evaluate_scores(&[], 0, EvalMode::Mask, &[0.0]).is_err());
    }
}
