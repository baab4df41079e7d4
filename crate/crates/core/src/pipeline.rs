//! The three stages wired together: probability maps → untangled worm
//! skeletons → body masks, plus label images and overlays for output.

use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{RangeMetric, DEFAULT_RANGE, DEFAULT_THRESHOLDS};
use crate::lossmap::SlackConfig;
use crate::maskrecon::{estimate_radii_from_field, fill_mask, WormMask};
use crate::raster::{canny_edges, distance_transform, BinaryMask, BitDepth, CannyParams, GrayImage, ProbMap};
use crate::skelgeo::{binarize_and_thin, extract_endpoint_detections};
use crate::untangle::{untangle, UntangleConfig, WormSkeleton};

/// Every tunable of the pipeline in one flat JSON document. Missing keys
/// take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub skeleton_threshold: f64,
    pub endpoint_threshold: f64,
    pub untangle: UntangleConfig,
    pub canny: CannyParams,
    pub slack: SlackConfig,
    pub eval_thresholds: Vec<f64>,
    pub eval_range: f64,
    pub range_metric: RangeMetric,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            skeleton_threshold: 0.5,
            endpoint_threshold: 0.5,
            untangle: UntangleConfig::default(),
            canny: CannyParams::default(),
            slack: SlackConfig::default(),
            eval_thresholds: DEFAULT_THRESHOLDS.to_vec(),
            eval_range: DEFAULT_RANGE,
            range_metric: RangeMetric::Euclidean,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("skeleton", self.skeleton_threshold),
            ("endpoint", self.endpoint_threshold),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} threshold must lie in (0, 1), got {t}"
                )));
            }
        }
        self.untangle.validate()?;
        SlackConfig::new(self.slack.sigma_skeleton, self.slack.sigma_endpoint)?;
        if !(self.eval_range >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eval range must be non-negative, got {}",
                self.eval_range
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Skeleton map → thinned skeleton, endpoint map → endpoint detections,
/// then untangling.
pub fn detect_worms(prob_skel: &ProbMap, prob_ep: &ProbMap, cfg: &PipelineConfig) -> Result<Vec<WormSkeleton>> {
    prob_skel.ensure_shape(prob_ep.shape())?;
    let skel = binarize_and_thin(prob_skel, cfg.skeleton_threshold)?;
    let ep: Vec<_> = extract_endpoint_detections(prob_ep, cfg.endpoint_threshold)?
        .into_iter()
        .map(|d| d.pixel)
        .collect();
    log::debug!("{} skeleton pixels, {} predicted endpoints", skel.len(), ep.len());
    untangle(&skel, &ep, &cfg.untangle)
}

/// One mask per worm, radii taken from the image's Canny edges. Worm `i`
/// gets source id `i + 1`.
pub fn reconstruct_masks(image: &GrayImage, worms: &[WormSkeleton], canny: &CannyParams) -> Result<Vec<WormMask>> {
    if worms.is_empty() {
        return Ok(Vec::new());
    }
    let edges = canny_edges(image, canny.low, canny.high, canny.sigma)?;
    if edges.is_empty() {
        return Err(Error::Empty("no Canny edges found in the image"));
    }
    let field = distance_transform(&edges)?;
    worms
        .iter()
        .zip(1..)
        .map(|(w, id)| {
            let profile = estimate_radii_from_field(w, &field)?;
            fill_mask(w, &profile, image.shape(), id)
        })
        .collect()
}

/// 16-bit instance labels; where masks overlap the later one wins.
pub fn label_image(masks: &[WormMask], width: usize, height: usize) -> Result<GrayImage> {
    let mut out = GrayImage::filled(width, height, BitDepth::Sixteen, 0)?;
    for m in masks {
        m.mask.ensure_shape((width, height))?;
        let id = u16::try_from(m.source)
            .map_err(|_| Error::InvalidArgument(format!("label {} exceeds 16 bits", m.source)))?;
        for p in m.mask.true_pixels() {
            out.set(p, id);
        }
    }
    Ok(out)
}

/// Per-label masks of an instance-label image, in increasing label order.
pub fn masks_from_labels(labels: &GrayImage) -> Result<Vec<(u16, BinaryMask)>> {
    let mut ids: Vec<u16> = labels.data().iter().copied().filter(|&v| v != 0).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let data = labels.data().iter().map(|&v| v == id).collect();
            Ok((id, BinaryMask::new(labels.width(), labels.height(), data)?))
        })
        .collect()
}

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];

/// The image in grey with each mask tinted and each skeleton drawn solid.
pub fn overlay(image: &GrayImage, worms: &[WormSkeleton], masks: &[WormMask]) -> RgbImage {
    let (w, h) = image.shape();
    let scale = 255.0 / image.depth().max_value() as f64;
    let mut out = RgbImage::from_fn(w as u32, h as u32, |c, r| {
        let v = (image.at(r as usize, c as usize) as f64 * scale).round() as u8;
        Rgb([v, v, v])
    });
    for (i, m) in masks.iter().enumerate() {
        let col = PALETTE[i % PALETTE.len()];
        for p in m.mask.true_pixels() {
            let px = out.get_pixel_mut(p.col as u32, p.row as u32);
            for (ch, &c) in px.0.iter_mut().zip(&col) {
                *ch = ((*ch as u16 + c as u16) / 2) as u8;
            }
        }
    }
    for (i, worm) in worms.iter().enumerate() {
        let col = PALETTE[i % PALETTE.len()];
        for p in worm.path.iter().filter(|p| p.row < h && p.col < w) {
            out.put_pixel(p.col as u32, p.row as u32, Rgb(col));
        }
    }
    out
}

pub fn save_overlay(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    img.save(path.as_ref())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pixel;

    #[test]
    fn config_defaults_from_partial_json() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"skeleton_threshold": 0.4, "untangle": {"match_radius": 3.0}}"#).unwrap();
        assert_eq!(cfg.skeleton_threshold, 0.4);
        assert_eq!(cfg.untangle.match_radius, 3.0);
        assert_eq!(
            cfg.untangle.direction_window,
            UntangleConfig::default().direction_window
        );
        assert_eq!(cfg.eval_thresholds, DEFAULT_THRESHOLDS.to_vec());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn blank_maps_give_no_worms() {
        let z = ProbMap::zeros(16, 16).unwrap();
        assert!(detect_worms(&z, &z, &PipelineConfig::default()).unwrap().is_empty());
        let other = ProbMap::zeros(8, 16).unwrap();
        assert!(matches!(
            detect_worms(&z, &other, &PipelineConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn labels_later_wins() {
        let a = BinaryMask::from_pixels(4, 4, &[Pixel::new(1, 1), Pixel::new(1, 2)]).unwrap();
        let b = BinaryMask::from_pixels(4, 4, &[Pixel::new(1, 2)]).unwrap();
        let l = label_image(
            &[WormMask { mask: a, source: 1 }, WormMask { mask: b, source: 2 }],
            4,
            4,
        )
        .unwrap();
        assert_eq!((l.at(1, 1), l.at(1, 2)), (1, 2));
        let back = masks_from_labels(&l).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1.count(), 1);
    }
}
