use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma};

use super::{BinaryMask, BitDepth, GrayImage, ProbMap};
use crate::error::{Error, Result};

/// Reads an 8- or 16-bit grayscale PNG or PGM. 16-bit values are kept as is.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.decode()? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::from_u8(w as usize, h as usize, buf.as_raw())
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(w as usize, h as usize, BitDepth::Sixteen, buf.into_raw())
        }
        other => Err(Error::Format(format!(
            "{}: expected 8- or 16-bit grayscale, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

/// Writes PNG or PGM depending on the extension (`.pgm`/`.pnm` → PGM, else PNG).
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("pnm") => image::ImageFormat::Pnm,
        _ => image::ImageFormat::Png,
    };
    match img.depth() {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.data().iter().map(|&v| v as u8).collect();
            let buf: ImageBuffer<Luma<u8>, _> =
                ImageBuffer::from_raw(w, h, raw).expect("buffer length checked at construction");
            buf.save_with_format(path, format)?;
        }
        BitDepth::Sixteen => {
            let buf: ImageBuffer<Luma<u16>, _> =
                ImageBuffer::from_raw(w, h, img.data().to_vec()).expect("buffer length checked at construction");
            buf.save_with_format(path, format)?;
        }
    }
    Ok(())
}

/// Loads a probability map: `p = v / max` where max is 65535 for 16-bit and
/// 255 for 8-bit inputs.
pub fn load_prob_map(path: impl AsRef<Path>) -> Result<ProbMap> {
    let img = load_image(path)?;
    let max = img.depth().max_value() as f64;
    ProbMap::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&v| v as f64 / max).collect(),
    )
}

/// Saves as 16-bit PNG with `v = round(p * 65535)`.
pub fn save_prob_map(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    let data = map
        .data()
        .iter()
        .map(|&p| (p * u16::MAX as f64).round() as u16)
        .collect();
    let img = GrayImage::new(map.width(), map.height(), BitDepth::Sixteen, data)?;
    save_image(&img, path)
}

/// Any non-zero pixel is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_image(path)?;
    BinaryMask::new(img.width(), img.height(), img.data().iter().map(|&v| v != 0).collect())
}

/// 8-bit 0/255 PNG.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::new(mask.width(), mask.height(), BitDepth::Eight, data)?;
    save_image(&img, path)
}
