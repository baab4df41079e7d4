use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Pixel;
use crate::skelgeo::Segment;

/// Which end of a segment's path: `A` is the first pixel, `B` the last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentEnd {
    A,
    B,
}

impl SegmentEnd {
    pub fn other(self) -> Self {
        match self {
            SegmentEnd::A => SegmentEnd::B,
            SegmentEnd::B => SegmentEnd::A,
        }
    }

    pub fn pixel(self, seg: &Segment) -> Pixel {
        match self {
            SegmentEnd::A => seg.end_a(),
            SegmentEnd::B => seg.end_b(),
        }
    }

    /// Up to `window` pixels at this end, the end pixel first.
    fn window(self, seg: &Segment, window: usize) -> Vec<Pixel> {
        let n = window.min(seg.len());
        match self {
            SegmentEnd::A => seg.path[..n].to_vec(),
            SegmentEnd::B => seg.path[seg.len() - n..].iter().rev().copied().collect(),
        }
    }
}

/// Sum of the two turning angles needed to continue from one segment's cut
/// end, along the connecting line, into the other segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngle {
    /// `alpha_a + alpha_b`, in `[0, 2π]`.
    pub value: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
}

type Vec2 = (f64, f64);

fn angle_between(u: Vec2, v: Vec2) -> f64 {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    cross.abs().atan2(dot)
}

/// Unit direction leaving the segment at `end`, from a total-least-squares
/// line fit over the last `window` pixels.
pub fn end_direction(seg: &Segment, end: SegmentEnd, window: usize) -> Result<Vec2> {
    let pts = end.window(seg, window.max(2));
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.row as f64).sum::<f64>() / n;
    let mc = pts.iter().map(|p| p.col as f64).sum::<f64>() / n;
    let (mut srr, mut scc, mut src) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dr, dc) = (p.row as f64 - mr, p.col as f64 - mc);
        srr += dr * dr;
        scc += dc * dc;
        src += dr * dc;
    }
    if srr + scc == 0.0 {
        return Err(Error::DegenerateFit);
    }
    // principal axis of the 2x2 scatter matrix
    let theta = 0.5 * (2.0 * src).atan2(srr - scc);
    let mut dir = (theta.cos(), theta.sin());
    let tip = pts[0];
    let far = *pts.last().expect("window is non-empty");
    let outward = if (srr - scc).abs() < 1e-12 && src.abs() < 1e-12 {
        // isotropic scatter: no preferred axis, use the chord
        let v = (tip.row as f64 - far.row as f64, tip.col as f64 - far.col as f64);
        let len = v.0.hypot(v.1);
        if len == 0.0 {
            return Err(Error::DegenerateFit);
        }
        dir = (v.0 / len, v.1 / len);
        v
    } else {
        (tip.row as f64 - mr, tip.col as f64 - mc)
    };
    if dir.0 * outward.0 + dir.1 * outward.1 < 0.0 {
        dir = (-dir.0, -dir.1);
    }
    Ok(dir)
}

/// Steering angle for joining `seg_a` at `end_a` to `seg_b` at `end_b`.
pub fn steering_angle(
    seg_a: &Segment,
    end_a: SegmentEnd,
    seg_b: &Segment,
    end_b: SegmentEnd,
    window: usize,
) -> Result<SteeringAngle> {
    if seg_a.len() < 2 || seg_b.len() < 2 {
        return Err(Error::InvalidArgument(
            "steering angle needs segments of at least two pixels".into(),
        ));
    }
    let da = end_direction(seg_a, end_a, window)?;
    let db = end_direction(seg_b, end_b, window)?;
    let pa = end_a.pixel(seg_a);
    let pb = end_b.pixel(seg_b);
    let link = (pb.row as f64 - pa.row as f64, pb.col as f64 - pa.col as f64);
    let (alpha_a, alpha_b) = if link == (0.0, 0.0) {
        // touching ends: only the relative heading matters
        (angle_between(da, (-db.0, -db.1)), 0.0)
    } else {
        (angle_between(da, link), angle_between(db, (-link.0, -link.1)))
    };
    Ok(SteeringAngle {
        value: alpha_a + alpha_b,
        alpha_a,
        alpha_b,
    })
}
