use serde::{Deserialize, Serialize};

use super::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyParams {
    /// Standard deviation of the pre-blur, in pixels. 0 disables blurring.
    pub sigma: f64,
    /// Hysteresis thresholds on the Sobel gradient magnitude.
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            low: 40.0,
            high: 100.0,
        }
    }
}

/// Sobel gradients of the blurred image. `gx` runs along columns, `gy` along rows.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution with replicated borders.
fn blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            tmp[row * w + col] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * data[row * w + clamp(col as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            out[row * w + col] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp(row as isize + i as isize - r, h) * w + col])
                .sum();
        }
    }
    out
}

pub fn gradient_magnitude(img: &GrayImage, sigma: f64) -> Gradient {
    let (w, h) = img.shape();
    let b = blur(&img.to_f64(), w, h, sigma);
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        b[r * w + c]
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for row in 0..h as isize {
        for col in 0..w as isize {
            let i = row as usize * w + col as usize;
            gx[i] = (at(row - 1, col + 1) + 2.0 * at(row, col + 1) + at(row + 1, col + 1))
                - (at(row - 1, col - 1) + 2.0 * at(row, col - 1) + at(row + 1, col - 1));
            gy[i] = (at(row + 1, col - 1) + 2.0 * at(row + 1, col) + at(row + 1, col + 1))
                - (at(row - 1, col - 1) + 2.0 * at(row - 1, col) + at(row - 1, col + 1));
        }
    }
    let magnitude = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();
    Gradient {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    }
}

impl Gradient {
    /// Step `(dr, dc)` pointing along the gradient, quantized to 45°.
    pub fn direction_step(&self, i: usize) -> (isize, isize) {
        let mut angle = self.gy[i].atan2(self.gx[i]).to_degrees();
        if angle < 0.0 {
            angle += 360.0;
        }
        let sector = ((angle + 22.5) / 45.0).floor() as usize % 8;
        // sector 0 = +col, 2 = +row
        const STEPS: [(isize, isize); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];
        STEPS[sector]
    }
}

/// Gaussian blur, Sobel gradients, non-maximum suppression and hysteresis.
///
/// Where the two pixels straddling an edge have equal magnitude the one on
/// the darker side is kept, so the edge of a dark object lies on the
/// object's last pixel.
pub fn canny_edges(img: &GrayImage, low: f64, high: f64, sigma: f64) -> Result<BinaryMask> {
    if !(0.0 <= low && low <= high) {
        return Err(Error::InvalidArgument(format!(
            "canny thresholds must satisfy 0 <= low <= high, got {low}, {high}"
        )));
    }
    let g = gradient_magnitude(img, sigma);
    let (w, h) = (g.width, g.height);
    let mut thin = vec![0.0; w * h];
    for row in 1..h.saturating_sub(1) {
        for col in 1..w.saturating_sub(1) {
            let i = row * w + col;
            let m = g.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dr, dc) = g.direction_step(i);
            let fwd = g.magnitude[(row as isize + dr) as usize * w + (col as isize + dc) as usize];
            let bwd = g.magnitude[(row as isize - dr) as usize * w + (col as isize - dc) as usize];
            let tol = 1e-9 * m.max(1.0);
            if m + tol >= fwd && m > bwd + tol {
                thin[i] = m;
            }
        }
    }

    let mut out = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] >= high && thin[i] > 0.0 && !out[i] {
            out[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (r, c) = ((j / w) as isize, (j % w) as isize);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                            continue;
                        }
                        let k = nr as usize * w + nc as usize;
                        if !out[k] && thin[k] > 0.0 && thin[k] >= low {
                            out[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    BinaryMask::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BitDepth;

    #[test]
    fn constant_image_has_no_edges() {
        let img = GrayImage::filled(20, 20, BitDepth::Eight, 77).unwrap();
        assert!(canny_edges(&img, 1.0, 2.0, 1.0).unwrap().is_empty());
    }

    #[test]
    fn vertical_step_stays_near_the_step() {
        let (w, h, c) = (30usize, 20usize, 15usize);
        let data: Vec<u8> = (0..w * h).map(|i| if i % w >= c { 200 } else { 50 }).collect();
        let img = GrayImage::from_u8(w, h, &data).unwrap();
        let edges = canny_edges(&img, 20.0, 50.0, 1.0).unwrap();
        assert!(!edges.is_empty());
        for p in edges.true_pixels() {
            assert!((c - 1..=c + 1).contains(&p.col), "edge at {p:?}");
        }
        // every interior row is detected
        for row in 1..h - 1 {
            assert!((c - 1..=c + 1).any(|col| edges.at(row, col)));
        }
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let img = GrayImage::filled(4, 4, BitDepth::Eight, 0).unwrap();
        assert!(canny_edges(&img, 5.0, 1.0, 1.0).is_err());
        assert!(canny_edges(&img, -1.0, 1.0, 1.0).is_err());
    }
}
