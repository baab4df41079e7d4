//! One-pixel-wide skeletons: thinning, pixel classification into geometric
//! endpoints, junctions and line points, segment extraction, and endpoint
//! detection on the endpoint probability map.

mod classify;
mod endpoints;
mod segments;
mod thin;

use serde::{Deserialize, Serialize};

pub use self::classify::{classify, crossing_number, JunctionCluster, SkeletonClassification};
pub use self::endpoints::{extract_endpoint_detections, EndpointDetection};
pub use self::segments::{extract_segments, Segment};
pub use self::thin::{binarize_and_thin, first_non_thin_pixel, is_simple, thin_mask, zhang_suen};

use crate::error::Result;
use crate::geom::Pixel;
use crate::raster::BinaryMask;

/// A set of skeleton pixels on a `width` x `height` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    mask: BinaryMask,
}

impl Skeleton {
    pub fn from_mask(mask: BinaryMask) -> Self {
        Self { mask }
    }

    pub fn from_pixels<'a>(width: usize, height: usize, pixels: impl IntoIterator<Item = &'a Pixel>) -> Result<Self> {
        Ok(Self {
            mask: BinaryMask::from_pixels(width, height, pixels)?,
        })
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.mask.contains(p) && self.mask.get(p)
    }

    /// Pixels in `(row, col)` order.
    pub fn pixels(&self) -> Vec<Pixel> {
        self.mask.true_pixels().collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn neighbors(&self, p: Pixel) -> impl Iterator<Item = Pixel> + '_ {
        p.neighbors8(self.width(), self.height())
            .filter(move |&q| self.mask.get(q))
    }

    pub fn degree(&self, p: Pixel) -> usize {
        self.neighbors(p).count()
    }

    pub fn remove(&mut self, p: Pixel) {
        if self.mask.contains(p) {
            self.mask.set(p, false);
        }
    }

    /// Sorted `[[row, col], ...]` JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.pixels()).expect("pixels serialize")
    }

    pub fn from_json(width: usize, height: usize, json: &str) -> Result<Self> {
        let pixels: Vec<Pixel> = serde_json::from_str(json)?;
        Self::from_pixels(width, height, &pixels)
    }
}

/// Serializable form: shape plus sorted pixels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkeletonRecord {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Pixel>,
}

impl From<&Skeleton> for SkeletonRecord {
    fn from(s: &Skeleton) -> Self {
        Self {
            width: s.width(),
            height: s.height(),
            pixels: s.pixels(),
        }
    }
}
