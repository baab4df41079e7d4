use crate::error::{Error, Result};
use crate::geom::Pixel;

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "image must be at least 1x1, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::InvalidArgument(format!(
            "buffer of {len} values does not match {width}x{height}"
        )));
    }
    Ok(())
}

macro_rules! grid_common {
    ($ty:ident, $elem:ty) => {
        impl $ty {
            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn shape(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            pub fn data(&self) -> &[$elem] {
                &self.data
            }

            #[inline]
            pub fn index(&self, p: Pixel) -> usize {
                p.row * self.width + p.col
            }

            #[inline]
            pub fn get(&self, p: Pixel) -> $elem {
                self.data[self.index(p)]
            }

            #[inline]
            pub fn at(&self, row: usize, col: usize) -> $elem {
                self.data[row * self.width + col]
            }

            pub fn contains(&self, p: Pixel) -> bool {
                p.row < self.height && p.col < self.width
            }

            pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
                let w = self.width;
                (0..self.data.len()).map(move |i| Pixel::new(i / w, i % w))
            }

            /// Error unless `other` has the same width and height.
            pub fn ensure_shape(&self, other: (usize, usize)) -> Result<()> {
                if self.shape() != other {
                    return Err(Error::ShapeMismatch {
                        expected_w: self.width,
                        expected_h: self.height,
                        got_w: other.0,
                        got_h: other.1,
                    });
                }
                Ok(())
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Grayscale intensity image, 8- or 16-bit, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    depth: BitDepth,
    data: Vec<u16>,
}

grid_common!(GrayImage, u16);

impl GrayImage {
    pub fn new(width: usize, height: usize, depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        if let Some(v) = data.iter().find(|&&v| v > depth.max_value()) {
            return Err(Error::InvalidArgument(format!(
                "value {v} exceeds the {depth:?}-bit range"
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            data,
        })
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(width, height, BitDepth::Eight, data.iter().map(|&v| v as u16).collect())
    }

    pub fn filled(width: usize, height: usize, depth: BitDepth, value: u16) -> Result<Self> {
        Self::new(width, height, depth, vec![value; width * height])
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn set(&mut self, p: Pixel, v: u16) {
        let i = self.index(p);
        self.data[i] = v.min(self.depth.max_value());
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

/// Per-pixel probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

grid_common!(ProbMap, f64);

impl ProbMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("probability {v} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    /// Builds a map from arbitrary values, clipping them into `[0, 1]`.
    pub fn from_clipped(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let data = data
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::new(width, height, data)
    }

    /// 1.0 on true pixels, 0.0 elsewhere.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            data: mask.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn threshold(&self, t: f64) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&p| p >= t).collect(),
        }
    }
}

/// Boolean raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

grid_common!(BinaryMask, bool);

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Mask with the given pixels set; errors on out-of-bounds pixels.
    pub fn from_pixels<'a>(width: usize, height: usize, pixels: impl IntoIterator<Item = &'a Pixel>) -> Result<Self> {
        let mut m = Self::empty(width, height)?;
        for &p in pixels {
            m.try_set(p, true)?;
        }
        Ok(m)
    }

    pub fn set(&mut self, p: Pixel, v: bool) {
        let i = self.index(p);
        self.data[i] = v;
    }

    pub fn try_set(&mut self, p: Pixel, v: bool) -> Result<()> {
        if !self.contains(p) {
            return Err(Error::OutOfBounds {
                pixel: p,
                width: self.width,
                height: self.height,
            });
        }
        self.set(p, v);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn true_pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Pixel::new(i / w, i % w))
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.data.iter().zip(&other.data).filter(|(&a, &b)| a && b).count()
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
    }
}

/// Per-pixel Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) data: Vec<f64>,
}

grid_common!(DistanceField, f64);
