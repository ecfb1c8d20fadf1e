//! PNG frame I/O and raw sensor normalization.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Rgb};

use crate::color::LinearImage;
use crate::error::{Error, Result};

/// Sensor black level of the capture device.
pub const BLACK_LEVEL: u32 = 256;
/// Sensor saturation level of the capture device.
pub const SATURATION_LEVEL: u32 = 4095;

/// Maps a raw sensor code to `[0, 1]`: `clamp((v - 256) / (4095 - 256), 0, 1)`.
pub fn normalize_raw(code: u32) -> f64 {
    let span = (SATURATION_LEVEL - BLACK_LEVEL) as f64;
    ((code as f64 - BLACK_LEVEL as f64) / span).clamp(0.0, 1.0)
}

/// Builds a linear image from interleaved raw RGB sensor codes.
pub fn normalize_raw_image(width: usize, height: usize, codes: &[u16]) -> Result<LinearImage> {
    let data = codes.iter().map(|&c| normalize_raw(c as u32) as f32).collect();
    LinearImage::new(width, height, data)
}

/// Loads an 8- or 16-bit RGB PNG as a linear image, dividing codes by the
/// maximum code value. No transfer curve is applied.
pub fn load_frame(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f32> = match decoded {
        DynamicImage::ImageRgb8(buf) => buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageRgb16(buf) => {
            buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect()
        }
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected 8- or 16-bit RGB, got {:?}", other.color()),
            })
        }
    };
    LinearImage::new(w, h, data)
}

/// Writes a linear image as a 16-bit RGB PNG.
pub fn save_frame(path: impl AsRef<Path>, image: &LinearImage) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u16> = image
        .data()
        .iter()
        .map(|&v| (v as f64 * 65535.0).round() as u16)
        .collect();
    let buf: ImageBuffer<Rgb<u16>, Vec<u16>> =
        ImageBuffer::from_raw(image.width() as u32, image.height() as u32, raw)
            .expect("buffer size matches image dimensions");
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    buf.save(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}
