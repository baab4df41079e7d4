//! Seeded synthetic worm scenes with exact ground truth.
//!
//! Worms are smooth random curves with bounded curvature, drawn as dark
//! tubes that taper to the tips. Besides the image, a scene carries the
//! skeleton/endpoint/instance ground truth and pseudo probability maps
//! (ground truth blurred with σ = 1 plus noise) that stand in for network
//! output when exercising the rest of the pipeline.

mod corpus;
mod curve;
mod rng;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use self::corpus::{regenerate, write_corpus, Manifest, ManifestEntry};
pub use self::curve::{random_centerline, rasterize, Centerline};
pub use self::rng::SplitMix64;

use crate::detections::{Detection, Detections};
use crate::error::{Error, Result};
use crate::geom::{Pixel, PixelPath};
use crate::lossmap::render_targets;
use crate::maskrecon::{end_caps, fill_discs};
use crate::raster::{
    distance_transform, save_image, save_mask, save_prob_map, BinaryMask, BitDepth, GrayImage, ProbMap,
};
use crate::untangle::WormSkeleton;

/// Placement attempts per worm before giving up.
pub const MAX_ATTEMPTS: usize = 1000;
/// Crossing placements tried per target before the target is redrawn.
const CROSSING_TRIES: usize = 20;
/// Minimum gap between bodies that are not meant to touch, in pixels.
pub const MARGIN: f64 = 3.0;
/// Blur applied to the ground truth for the pseudo probability maps.
pub const PSEUDO_SIGMA: f64 = 1.0;

pub const BACKGROUND: f64 = 200.0;
pub const BODY: f64 = 70.0;
pub const CLUTTER: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Bodies keep at least [`MARGIN`] pixels apart.
    None,
    /// Bodies are placed independently and may overlap anywhere.
    Allow,
    /// The given number of worms each cross one earlier worm exactly once;
    /// all other pairs keep apart as under `None`. Crossing pairs are
    /// disjoint whenever there are at least twice as many worms as crossings.
    ForceCrossings(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_worms: usize,
    pub width: usize,
    pub height: usize,
    /// Arc length range, pixels.
    pub length_range: [f64; 2],
    pub half_width_range: [f64; 2],
    /// Maximum absolute curvature, radians per pixel.
    pub curvature_bound: f64,
    pub overlap: OverlapPolicy,
    /// Angle between crossing worms, degrees.
    pub crossing_angle_range: [f64; 2],
    /// Clutter blobs per 10⁴ pixels.
    pub clutter_density: f64,
    /// Standard deviation of the image noise, grey levels.
    pub noise_sigma: f64,
    /// Standard deviation of the noise added to the pseudo probability maps.
    pub prob_noise: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_worms: 2,
            width: 256,
            height: 256,
            length_range: [80.0, 140.0],
            half_width_range: [2.5, 4.0],
            curvature_bound: 0.03,
            overlap: OverlapPolicy::None,
            crossing_angle_range: [30.0, 90.0],
            clutter_density: 0.0,
            noise_sigma: 4.0,
            prob_noise: 0.03,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        let bad = |what: &str| Err(Error::InvalidArgument(format!("invalid scene spec: {what}")));
        if self.width == 0 || self.height == 0 {
            return bad("empty canvas");
        }
        if !range_ok(self.length_range) || self.length_range[0] < 2.0 {
            return bad("length range must be ordered and at least 2");
        }
        if !range_ok(self.half_width_range) || self.half_width_range[0] < 1.0 {
            return bad("half-width range must be ordered and at least 1");
        }
        if !(self.curvature_bound >= 0.0) {
            return bad("curvature bound must be non-negative");
        }
        let [a0, a1] = self.crossing_angle_range;
        if !range_ok(self.crossing_angle_range) || a0 <= 0.0 || a1 > 90.0 {
            return bad("crossing angles must lie in (0, 90]");
        }
        if let OverlapPolicy::ForceCrossings(k) = self.overlap {
            if k > 0 && k >= self.n_worms {
                return bad("each forced crossing needs a worm to cross an earlier one");
            }
        }
        if !(self.clutter_density >= 0.0 && self.noise_sigma >= 0.0 && self.prob_noise >= 0.0) {
            return bad("densities and noise levels must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorm {
    pub path: PixelPath,
    pub half_widths: Vec<f64>,
}

/// A forced crossing: `worm` crosses `target` at `anchor` (row, col).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub worm: usize,
    pub target: usize,
    pub anchor: (f64, f64),
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub image: GrayImage,
    pub worms: Vec<SynthWorm>,
    pub crossings: Vec<Crossing>,
    pub skeleton: BinaryMask,
    pub endpoints: BinaryMask,
    /// One body mask per worm.
    pub masks: Vec<BinaryMask>,
    /// Instance labels, worm `i` as `i + 1`; later worms win on overlap.
    pub labels: GrayImage,
    pub prob_skel: ProbMap,
    pub prob_ep: ProbMap,
}

impl Scene {
    pub fn worm_skeletons(&self) -> Vec<WormSkeleton> {
        self.worms
            .iter()
            .map(|w| WormSkeleton::from_path(w.path.clone()))
            .collect()
    }

    pub fn endpoint_pixels(&self) -> Vec<Pixel> {
        self.worms
            .iter()
            .flat_map(|w| [w.path[0], *w.path.last().expect("non-empty path")])
            .collect()
    }

    pub fn detections(&self, image: &str) -> Detections {
        Detections {
            image: image.to_string(),
            worms: self
                .worms
                .iter()
                .zip(1..)
                .map(|(w, id)| Detection {
                    id,
                    path: w.path.clone(),
                    endpoints: [w.path[0], *w.path.last().expect("non-empty path")],
                    half_widths: Some(w.half_widths.clone()),
                })
                .collect(),
        }
    }

    /// Writes the standard scene directory layout.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_image(&self.image, dir.join("image.png"))?;
        save_mask(&self.skeleton, dir.join("skeleton_gt.png"))?;
        save_mask(&self.endpoints, dir.join("endpoints_gt.png"))?;
        save_image(&self.labels, dir.join("labels_gt.png"))?;
        self.detections("image.png").save(dir.join("worms_gt.json"))?;
        save_prob_map(&self.prob_skel, dir.join("prob_skel.png"))?;
        save_prob_map(&self.prob_ep, dir.join("prob_ep.png"))
    }
}

struct Placed {
    line: Centerline,
    worm: SynthWorm,
    mask: BinaryMask,
    /// Pixels within [`MARGIN`] of the body.
    halo: BinaryMask,
}

fn dilate(mask: &BinaryMask, radius: f64) -> Result<BinaryMask> {
    let d = distance_transform(mask)?;
    BinaryMask::new(
        mask.width(),
        mask.height(),
        d.data().iter().map(|&v| v <= radius).collect(),
    )
}

/// Whether all samples keep `border` pixels away from the canvas edge.
fn inside(line: &Centerline, border: f64, width: usize, height: usize) -> bool {
    let (r0, c0, r1, c1) = line.bounds();
    r0 >= border && c0 >= border && r1 <= height as f64 - 1.0 - border && c1 <= width as f64 - 1.0 - border
}

struct Generator<'a> {
    spec: &'a SceneSpec,
    rng: SplitMix64,
    placed: Vec<Placed>,
    crossings: Vec<Crossing>,
}

impl Generator<'_> {
    fn crossing_radius(hw_a: f64, hw_b: f64, angle: f64) -> f64 {
        (hw_a + hw_b + MARGIN) / angle.sin() + 3.0
    }

    /// `target`: the earlier worm this one must cross, if any; `None` inside
    /// picks a random earlier worm per attempt.
    fn place_worm(&mut self, index: usize, crossing: Option<Option<usize>>, attempts: usize) -> Result<bool> {
        let spec = self.spec;
        for _ in 0..attempts {
            let length = self.rng.uniform(spec.length_range[0], spec.length_range[1]);
            let hw = self.rng.uniform(spec.half_width_range[0], spec.half_width_range[1]);
            let local = random_centerline(&mut self.rng, length, spec.curvature_bound);
            let border = hw.ceil() + 2.0;

            let mut cross = None;
            let line = if let Some(fixed) = crossing {
                let target = fixed.unwrap_or_else(|| self.rng.below(index));
                let t = &self.placed[target];
                let tlen = (t.line.len() - 1) as f64 * curve::STEP;
                let it = t.line.index_at(self.rng.uniform(0.3, 0.7) * tlen);
                let anchor = t.line.points[it];
                let [a0, a1] = spec.crossing_angle_range;
                let phi = self.rng.uniform(a0, a1).to_radians();
                let sign = if self.rng.coin() { 1.0 } else { -1.0 };
                let heading = t.line.headings[it] + sign * phi;
                let ia = local.index_at(self.rng.uniform(0.35, 0.65) * length);
                let thw = t.worm.half_widths.iter().cloned().fold(0.0, f64::max);
                cross = Some((target, anchor, phi, Self::crossing_radius(hw, thw, phi)));
                local.place(ia, heading - local.headings[ia], anchor)
            } else {
                let rot = local.place(0, self.rng.uniform(0.0, TAU), (0.0, 0.0));
                let (r0, c0, r1, c1) = rot.bounds();
                let span_r = spec.height as f64 - 1.0 - 2.0 * border - (r1 - r0);
                let span_c = spec.width as f64 - 1.0 - 2.0 * border - (c1 - c0);
                if span_r < 0.0 || span_c < 0.0 {
                    continue;
                }
                let to = (
                    border - r0 + self.rng.uniform(0.0, span_r),
                    border - c0 + self.rng.uniform(0.0, span_c),
                );
                rot.place(0, 0.0, to)
            };
            if !inside(&line, border, spec.width, spec.height) {
                continue;
            }
            let Some(path) = rasterize(&line) else { continue };
            let half_widths: Vec<f64> = end_caps(&path).into_iter().map(|c| c.min(hw)).collect();
            let mask = fill_discs(&path, &half_widths, spec.width, spec.height)?;
            if !self.acceptable(&path, &mask, cross) {
                continue;
            }
            if let Some((target, anchor, phi, _)) = cross {
                self.crossings.push(Crossing {
                    worm: index,
                    target,
                    anchor,
                    angle_deg: phi.to_degrees(),
                });
            }
            let halo = dilate(&mask, MARGIN)?;
            self.placed.push(Placed {
                line,
                worm: SynthWorm { path, half_widths },
                mask,
                halo,
            });
            return Ok(true);
        }
        Ok(false)
    }

    /// Places a target and the worm crossing it. A target that admits no
    /// crossing within a few tries (hugging the border, say) is redrawn.
    fn place_pair(&mut self, target: usize) -> Result<bool> {
        for _ in 0..MAX_ATTEMPTS {
            if !self.place_worm(target, None, 1)? {
                continue;
            }
            if self.place_worm(target + 1, Some(Some(target)), CROSSING_TRIES)? {
                return Ok(true);
            }
            self.placed.pop();
        }
        Ok(false)
    }

    fn acceptable(&self, path: &[Pixel], mask: &BinaryMask, cross: Option<(usize, (f64, f64), f64, f64)>) -> bool {
        if self.spec.overlap == OverlapPolicy::Allow {
            return true;
        }
        let near = |p: Pixel, c: (f64, f64), r: f64| {
            let (dr, dc) = (p.row as f64 - c.0, p.col as f64 - c.1);
            dr * dr + dc * dc <= r * r
        };
        if let Some((_, anchor, _, radius)) = cross {
            // keep crossings apart so their junctions stay distinct
            for c in &self.crossings {
                let t = &self.placed[c.target].worm.half_widths;
                let other = Self::crossing_radius(
                    self.placed[c.worm].worm.half_widths.iter().cloned().fold(0.0, f64::max),
                    t.iter().cloned().fold(0.0, f64::max),
                    c.angle_deg.to_radians(),
                );
                let (dr, dc) = (anchor.0 - c.anchor.0, anchor.1 - c.anchor.1);
                if (dr * dr + dc * dc).sqrt() < radius + other {
                    return false;
                }
            }
        }
        for (j, other) in self.placed.iter().enumerate() {
            match cross {
                Some((target, anchor, _, radius)) if target == j => {
                    // the path meets the target in a single run inside the disc
                    let hits: Vec<usize> = (0..path.len()).filter(|&i| other.halo.get(path[i])).collect();
                    let (Some(&first), Some(&last)) = (hits.first(), hits.last()) else {
                        return false;
                    };
                    if last - first + 1 != hits.len() || hits.iter().any(|&i| !near(path[i], anchor, radius)) {
                        return false;
                    }
                    if mask
                        .true_pixels()
                        .any(|p| other.halo.get(p) && !near(p, anchor, radius))
                    {
                        return false;
                    }
                    // and the target meets the new body only inside the disc
                    if other.worm.path.iter().any(|&p| mask.get(p) && !near(p, anchor, radius)) {
                        return false;
                    }
                }
                _ => {
                    if mask.true_pixels().any(|p| other.halo.get(p)) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Ellipse unions kept [`MARGIN`] pixels clear of every worm body.
fn clutter(rng: &mut SplitMix64, spec: &SceneSpec, worms: Option<&BinaryMask>) -> Result<BinaryMask> {
    let (w, h) = (spec.width, spec.height);
    let mut out = BinaryMask::empty(w, h)?;
    let n = (spec.clutter_density * (w * h) as f64 / 1e4).round() as usize;
    let keep_out = match worms {
        Some(m) => Some(dilate(m, MARGIN)?),
        None => None,
    };
    for _ in 0..n {
        for _ in 0..50 {
            let centre = (rng.uniform(0.0, h as f64), rng.uniform(0.0, w as f64));
            let parts = 2 + rng.below(2);
            let mut blob = Vec::new();
            for _ in 0..parts {
                let c = (centre.0 + rng.uniform(-4.0, 4.0), centre.1 + rng.uniform(-4.0, 4.0));
                let (a, b, th) = (rng.uniform(2.0, 7.0), rng.uniform(1.5, 4.0), rng.uniform(0.0, PI));
                let (s, co) = th.sin_cos();
                let ext = a.ceil() as isize + 1;
                for dr in -ext..=ext {
                    for dc in -ext..=ext {
                        let (r, col) = (c.0.round() as isize + dr, c.1.round() as isize + dc);
                        if r < 0 || col < 0 || r >= h as isize || col >= w as isize {
                            continue;
                        }
                        let (y, x) = (r as f64 - c.0, col as f64 - c.1);
                        let (u, v) = (x * co + y * s, -x * s + y * co);
                        if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                            blob.push(Pixel::new(r as usize, col as usize));
                        }
                    }
                }
            }
            if keep_out.as_ref().is_some_and(|k| blob.iter().any(|&p| k.get(p))) {
                continue;
            }
            for p in blob {
                out.set(p, true);
            }
            break;
        }
    }
    Ok(out)
}

/// Separable Gaussian blur with zero padding.
fn blur_zero(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp() / ((TAU).sqrt() * sigma))
        .collect();
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut dst = vec![0.0; src.len()];
        for r in 0..height {
            for c in 0..width {
                let mut acc = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    let off = k as isize - radius;
                    let (rr, cc) = if horizontal {
                        (r as isize, c as isize + off)
                    } else {
                        (r as isize + off, c as isize)
                    };
                    if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
                        acc += kv * src[rr as usize * width + cc as usize];
                    }
                }
                dst[r * width + c] = acc;
            }
        }
        dst
    };
    pass(&pass(data, true), false)
}

/// Blurred mask scaled by `gain`, plus Gaussian noise, clipped to [0, 1].
fn pseudo_map(rng: &mut SplitMix64, mask: &BinaryMask, gain: f64, noise: f64) -> Result<ProbMap> {
    let src: Vec<f64> = mask.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let data = blur_zero(&src, mask.width(), mask.height(), PSEUDO_SIGMA)
        .into_iter()
        .map(|v| gain * v + noise * rng.normal())
        .collect();
    ProbMap::from_clipped(mask.width(), mask.height(), data)
}

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut gen = Generator {
        spec,
        rng: SplitMix64::new(spec.seed),
        placed: Vec::with_capacity(spec.n_worms),
        crossings: Vec::new(),
    };
    let forced = match spec.overlap {
        OverlapPolicy::ForceCrossings(k) => k,
        _ => 0,
    };
    // crossings use disjoint pairs (2j, 2j+1) when there are enough worms
    let disjoint = 2 * forced <= spec.n_worms;
    let mut i = 0;
    while i < spec.n_worms {
        let ok = if disjoint && i % 2 == 0 && i / 2 < forced {
            i += 1;
            gen.place_pair(i - 1)?
        } else {
            let crossing = (!disjoint && i >= 1 && i <= forced).then_some(None);
            gen.place_worm(i, crossing, MAX_ATTEMPTS)?
        };
        if !ok {
            return Err(Error::InfeasiblePacking {
                requested: spec.n_worms,
                attempts: MAX_ATTEMPTS,
            });
        }
        i += 1;
    }
    let Generator {
        mut rng,
        placed,
        crossings,
        ..
    } = gen;

    let mut bodies = BinaryMask::empty(w, h)?;
    let mut labels = GrayImage::filled(w, h, BitDepth::Sixteen, 0)?;
    for (i, p) in placed.iter().enumerate() {
        bodies.union_with(&p.mask);
        for q in p.mask.true_pixels() {
            labels.set(q, i as u16 + 1);
        }
    }
    let blobs = clutter(&mut rng, spec, (!placed.is_empty()).then_some(&bodies))?;
    let image_data: Vec<u16> = bodies
        .data()
        .iter()
        .zip(blobs.data())
        .map(|(&b, &c)| {
            let base = if b {
                BODY
            } else if c {
                CLUTTER
            } else {
                BACKGROUND
            };
            (base + spec.noise_sigma * rng.normal()).round().clamp(0.0, 255.0) as u16
        })
        .collect();
    let image = GrayImage::new(w, h, BitDepth::Eight, image_data)?;

    let worms: Vec<SynthWorm> = placed.iter().map(|p| p.worm.clone()).collect();
    let skeletons: Vec<WormSkeleton> = worms.iter().map(|w| WormSkeleton::from_path(w.path.clone())).collect();
    let (skeleton, endpoints) = render_targets(&skeletons, w, h)?;
    // gains put a straight axis-aligned line and an isolated point at 1
    let prob_skel = pseudo_map(&mut rng, &skeleton, TAU.sqrt() * PSEUDO_SIGMA, spec.prob_noise)?;
    let prob_ep = pseudo_map(&mut rng, &endpoints, TAU * PSEUDO_SIGMA * PSEUDO_SIGMA, spec.prob_noise)?;

    Ok(Scene {
        spec: spec.clone(),
        image,
        worms,
        crossings,
        skeleton,
        endpoints,
        masks: placed.into_iter().map(|p| p.mask).collect(),
        labels,
        prob_skel,
        prob_ep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene() {
        let s = generate(&SceneSpec {
            n_worms: 0,
            ..SceneSpec::default()
        })
        .unwrap();
        assert!(s.worms.is_empty() && s.skeleton.is_empty() && s.endpoints.is_empty());
        assert!(s.labels.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn deterministic() {
        let spec = SceneSpec {
            seed: 42,
            n_worms: 3,
            clutter_density: 2.0,
            ..SceneSpec::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn separated_bodies() {
        let s = generate(&SceneSpec {
            seed: 5,
            n_worms: 4,
            ..SceneSpec::default()
        })
        .unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(s.masks[i].intersection_count(&s.masks[j]), 0);
            }
        }
    }

    #[test]
    fn crossing_recorded() {
        let s = generate(&SceneSpec {
            seed: 9,
            n_worms: 2,
            overlap: OverlapPolicy::ForceCrossings(1),
            ..SceneSpec::default()
        })
        .unwrap();
        assert_eq!(s.crossings.len(), 1);
        assert!(s.masks[0].intersection_count(&s.masks[1]) > 0);
        let a = s.crossings[0].angle_deg;
        assert!((30.0..=90.0).contains(&a));
    }

    #[test]
    fn impossible_packing() {
        let spec = SceneSpec {
            n_worms: 3,
            width: 40,
            height: 40,
            ..SceneSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::InfeasiblePacking { .. })));
    }

    #[test]
    fn invalid_specs() {
        let s = SceneSpec {
            length_range: [50.0, 10.0],
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = SceneSpec {
            overlap: OverlapPolicy::ForceCrossings(2),
            n_worms: 2,
            ..SceneSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn policy_json() {
        let p: OverlapPolicy = serde_json::from_str(r#"{"force_crossings":1}"#).unwrap();
        assert_eq!(p, OverlapPolicy::ForceCrossings(1));
        assert_eq!(serde_json::to_string(&OverlapPolicy::None).unwrap(), "\"none\"");
    }
}
