//! The detection file shared between the pipeline stages and evaluation:
//! `{image, worms: [{id, path: [[r,c],…], endpoints: [[r,c],[r,c]]}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Pixel, PixelPath};
use crate::untangle::WormSkeleton;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// 1-based; also the value used in instance-label images.
    pub id: u32,
    pub path: PixelPath,
    pub endpoints: [Pixel; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
}

impl Detection {
    pub fn to_worm(&self) -> Result<WormSkeleton> {
        if self.path.is_empty() {
            return Err(Error::Format(format!("worm {} has an empty path", self.id)));
        }
        Ok(WormSkeleton {
            path: self.path.clone(),
            endpoints: self.endpoints,
            provenance: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detections {
    /// Free-form image name, usually the input file name.
    #[serde(default)]
    pub image: String,
    pub worms: Vec<Detection>,
}

impl Detections {
    /// Ids are assigned `1..=n` in order.
    pub fn from_worms(image: impl Into<String>, worms: &[WormSkeleton]) -> Self {
        Self {
            image: image.into(),
            worms: worms
                .iter()
                .zip(1..)
                .map(|(w, id)| Detection {
                    id,
                    path: w.path.clone(),
                    endpoints: w.endpoints,
                    half_widths: None,
                })
                .collect(),
        }
    }

    pub fn to_worms(&self) -> Result<Vec<WormSkeleton>> {
        self.worms.iter().map(Detection::to_worm).collect()
    }

    pub fn paths(&self) -> Vec<PixelPath> {
        self.worms.iter().map(|w| w.path.clone()).collect()
    }

    /// Fails on the first path pixel outside a `width × height` image.
    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        for w in &self.worms {
            if let Some(&pixel) = w.path.iter().find(|p| p.row >= height || p.col >= width) {
                return Err(Error::OutOfBounds { pixel, width, height });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let d: Self = serde_json::from_str(&text)?;
        for w in &d.worms {
            if w.path.is_empty() {
                return Err(Error::Format(format!("worm {} has an empty path", w.id)));
            }
        }
        Ok(d)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
