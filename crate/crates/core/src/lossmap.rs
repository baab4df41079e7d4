//! Training targets and the slack-weighted focal loss.
//!
//! For prediction `p`, label `y` and slack weight `w` the per-pixel term is
//! `(1-p)^γ log p` on positives and `(1-w)^β p^γ log(1-p)` on negatives; the
//! image loss is `-1/(N·H·W)` times their sum, `N` being the object count.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{distance_transform, save_image, BinaryMask, BitDepth, GrayImage, ProbMap};
use crate::untangle::WormSkeleton;

/// Predictions are clamped to `[EPSILON, 1 - EPSILON]` before taking logs.
pub const EPSILON: f64 = 1e-7;

/// Gaussian widths of the ground-truth slack, in pixels. 0 disables slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackConfig {
    pub sigma_skeleton: f64,
    pub sigma_endpoint: f64,
}

impl Default for SlackConfig {
    fn default() -> Self {
        Self::named("slack_2_3").expect("known variant")
    }
}

impl SlackConfig {
    pub fn new(sigma_skeleton: f64, sigma_endpoint: f64) -> Result<Self> {
        if !(sigma_skeleton >= 0.0 && sigma_endpoint >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "slack sigmas must be non-negative, got {sigma_skeleton}, {sigma_endpoint}"
            )));
        }
        Ok(Self {
            sigma_skeleton,
            sigma_endpoint,
        })
    }

    /// `no_slack`, or `slack_<skeleton>_<endpoint>` such as `slack_2_3`.
    pub fn named(name: &str) -> Result<Self> {
        if name == "no_slack" || name == "no slack" {
            return Self::new(0.0, 0.0);
        }
        let bad = || Error::InvalidArgument(format!("unknown slack variant {name:?}"));
        let rest = name.strip_prefix("slack_").ok_or_else(bad)?;
        let (s, e) = rest.split_once('_').ok_or_else(bad)?;
        Self::new(s.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?)
    }

    pub fn name(&self) -> String {
        if self.sigma_skeleton == 0.0 && self.sigma_endpoint == 0.0 {
            "no_slack".to_string()
        } else {
            format!("slack_{}_{}", self.sigma_skeleton, self.sigma_endpoint)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub gamma: f64,
    pub beta: f64,
    pub n_objects: usize,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            beta: 4.0,
            n_objects: 1,
        }
    }
}

impl LossParams {
    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma and beta must be non-negative: {self:?}"
            )));
        }
        Ok(())
    }

    /// Objects counted in the normaliser; an empty image counts as one.
    pub fn normaliser(&self) -> f64 {
        self.n_objects.max(1) as f64
    }
}

/// Per-pixel slack weights in `[0, 1]`, exactly 1 on ground-truth pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl WeightMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        ProbMap::new(width, height, data.clone())?;
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// 16-bit PNG with `v = round(w * 65535)`.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let data = self
            .data
            .iter()
            .map(|&w| (w * u16::MAX as f64).round() as u16)
            .collect();
        save_image(&GrayImage::new(self.width, self.height, BitDepth::Sixteen, data)?, path)
    }
}

/// JSON sidecar written next to an exported weight map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMapSidecar {
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// Skeleton mask (union of paths) and endpoint mask (first and last pixel
/// of each path).
pub fn render_targets(worms: &[WormSkeleton], width: usize, height: usize) -> Result<(BinaryMask, BinaryMask)> {
    let mut skeleton = BinaryMask::empty(width, height)?;
    let mut endpoints = BinaryMask::empty(width, height)?;
    for w in worms {
        for &p in &w.path {
            skeleton.try_set(p, true)?;
        }
        if let (Some(&first), Some(&last)) = (w.path.first(), w.path.last()) {
            endpoints.try_set(first, true)?;
            endpoints.try_set(last, true)?;
        }
    }
    Ok((skeleton, endpoints))
}

/// `w = exp(-d² / 2σ²)` over the Euclidean distance `d` to the nearest
/// ground-truth pixel; `σ = 0` gives the binary map.
pub fn weight_map(gt: &BinaryMask, sigma: f64) -> Result<WeightMap> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let d = distance_transform(gt)?;
    let data = if sigma == 0.0 {
        gt.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    } else {
        let s2 = 2.0 * sigma * sigma;
        d.data().iter().map(|&d| (-d * d / s2).exp()).collect()
    };
    Ok(WeightMap {
        width: gt.width(),
        height: gt.height(),
        data,
    })
}

fn check_shapes(pred: &ProbMap, gt: &BinaryMask, w: &WeightMap) -> Result<()> {
    pred.ensure_shape(gt.shape())?;
    pred.ensure_shape((w.width, w.height))
}

fn clamp(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

pub fn focal_loss(pred: &ProbMap, gt: &BinaryMask, w: &WeightMap, params: &LossParams) -> Result<f64> {
    check_shapes(pred, gt, w)?;
    params.validate()?;
    let (g, b) = (params.gamma, params.beta);
    let mut sum = 0.0;
    for ((&p, &y), &wij) in pred.data().iter().zip(gt.data()).zip(&w.data) {
        let p = clamp(p);
        sum += if y {
            (1.0 - p).powf(g) * p.ln()
        } else {
            (1.0 - wij).powf(b) * p.powf(g) * (1.0 - p).ln()
        };
    }
    let scale = params.normaliser() * (pred.width() * pred.height()) as f64;
    Ok(-sum / scale)
}

/// `∂L/∂p` per pixel, row-major. Zero where the clamp is active.
pub fn focal_loss_grad(pred: &ProbMap, gt: &BinaryMask, w: &WeightMap, params: &LossParams) -> Result<Vec<f64>> {
    check_shapes(pred, gt, w)?;
    params.validate()?;
    let (g, b) = (params.gamma, params.beta);
    let scale = -1.0 / (params.normaliser() * (pred.width() * pred.height()) as f64);
    // γ p^(γ-1) with the γ = 0 case kept finite
    let dpow = |x: f64| if g == 0.0 { 0.0 } else { g * x.powf(g - 1.0) };
    Ok(pred
        .data()
        .iter()
        .zip(gt.data())
        .zip(&w.data)
        .map(|((&p, &y), &wij)| {
            if !(EPSILON..=1.0 - EPSILON).contains(&p) {
                return 0.0;
            }
            let d = if y {
                -dpow(1.0 - p) * p.ln() + (1.0 - p).powf(g) / p
            } else {
                let slack = (1.0 - wij).powf(b);
                slack * (dpow(p) * (1.0 - p).ln() - p.powf(g) / (1.0 - p))
            };
            scale * d
        })
        .collect())
}
