//! Geometric resampling: network-input resize, pseudo zoom-out crops and
//! training augmentation.

use rand::Rng;

use crate::color::LinearImage;
use crate::error::{Error, Result};

const MAX_SUPERSAMPLE: usize = 32;

/// An oriented rectangle in source pixel coordinates (pixel centres sit
/// at `i + 0.5`), mapped onto the whole output image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crop {
    pub center: (f64, f64),
    pub width: f64,
    pub height: f64,
    /// Counter-clockwise rotation in degrees.
    pub angle_degrees: f64,
    pub flip: bool,
}

impl Crop {
    pub fn full(image: &LinearImage) -> Self {
        Self::centered(image, 1.0)
    }

    /// Axis-aligned centre crop covering `fraction` of each side.
    pub fn centered(image: &LinearImage, fraction: f64) -> Self {
        let (w, h) = (image.width() as f64, image.height() as f64);
        Self {
            center: (w / 2.0, h / 2.0),
            width: w * fraction,
            height: h * fraction,
            angle_degrees: 0.0,
            flip: false,
        }
    }
}

fn bilinear(image: &LinearImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (image.width(), image.height());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |xx, yy| image.pixel(xx, yy);
    let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
    let mut out = [0.0; 3];
    for k in 0..3 {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        out[k] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

/// Resamples `crop` of `image` to `out_width x out_height`. Shrinking
/// averages a grid of bilinear taps per output pixel; samples outside the
/// source clamp to the edge.
pub fn resample(
    image: &LinearImage,
    crop: Crop,
    out_width: usize,
    out_height: usize,
) -> Result<LinearImage> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::InvalidArgument("output size must be positive".into()));
    }
    if !(crop.width > 0.0 && crop.height > 0.0) {
        return Err(Error::InvalidArgument("crop size must be positive".into()));
    }
    let ratio = (crop.width / out_width as f64).max(crop.height / out_height as f64);
    let taps = (ratio.ceil() as usize).clamp(1, MAX_SUPERSAMPLE);
    let (sin, cos) = crop.angle_degrees.to_radians().sin_cos();
    let sx = crop.width / out_width as f64;
    let sy = crop.height / out_height as f64;

    LinearImage::from_fn(out_width, out_height, |ox, oy| {
        let mut acc = [0.0; 3];
        for ty in 0..taps {
            for tx in 0..taps {
                let u = ox as f64 + (tx as f64 + 0.5) / taps as f64;
                let v = oy as f64 + (ty as f64 + 0.5) / taps as f64;
                let mut lx = u * sx - crop.width / 2.0;
                let ly = v * sy - crop.height / 2.0;
                if crop.flip {
                    lx = -lx;
                }
                let px = crop.center.0 + cos * lx - sin * ly;
                let py = crop.center.1 + sin * lx + cos * ly;
                let s = bilinear(image, px - 0.5, py - 0.5);
                for k in 0..3 {
                    acc[k] += s[k];
                }
            }
        }
        let n = (taps * taps) as f64;
        [(acc[0] / n) as f32, (acc[1] / n) as f32, (acc[2] / n) as f32]
    })
}

/// Whole-frame resize.
pub fn resize(image: &LinearImage, width: usize, height: usize) -> Result<LinearImage> {
    if image.width() == width && image.height() == height {
        return Ok(image.clone());
    }
    resample(image, Crop::full(image), width, height)
}

/// Crop-side fractions of the pseudo zoom-out sequence, linear from 0.5
/// to 1.0; the last entry is always the full frame.
pub fn zoom_fractions(length: usize) -> Result<Vec<f64>> {
    match length {
        0 => Err(Error::InvalidArgument("pseudo sequence length must be >= 1".into())),
        1 => Ok(vec![1.0]),
        n => Ok((0..n)
            .map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64)
            .collect()),
    }
}

/// Centre crops of the shot frame ordered from tight to full, each
/// resampled to `width x height`.
pub fn pseudo_zoom_sequence(
    shot: &LinearImage,
    length: usize,
    width: usize,
    height: usize,
) -> Result<Vec<LinearImage>> {
    zoom_fractions(length)?
        .into_iter()
        .map(|f| {
            if f == 1.0 {
                resize(shot, width, height)
            } else {
                resample(shot, Crop::centered(shot, f), width, height)
            }
        })
        .collect()
}

/// Random geometric augmentation shared by every frame of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Augmentation {
    pub max_rotation_degrees: f64,
    pub crop_range: (f64, f64),
    pub flip_probability: f64,
}

impl Default for Augmentation {
    fn default() -> Self {
        Self {
            max_rotation_degrees: 30.0,
            crop_range: (0.8, 1.0),
            flip_probability: 0.5,
        }
    }
}

impl Augmentation {
    /// Draws one square crop: rotation uniform in `±max_rotation`, side a
    /// uniform fraction of the shorter image side, optional mirror.
    pub fn sample(&self, width: usize, height: usize, rng: &mut impl Rng) -> Crop {
        let (w, h) = (width as f64, height as f64);
        let side = w.min(h) * rng.random_range(self.crop_range.0..=self.crop_range.1);
        let cx = rng.random_range(side / 2.0..=w - side / 2.0);
        let cy = rng.random_range(side / 2.0..=h - side / 2.0);
        Crop {
            center: (cx, cy),
            width: side,
            height: side,
            angle_degrees: rng
                .random_range(-self.max_rotation_degrees..=self.max_rotation_degrees),
            flip: rng.random_bool(self.flip_probability),
        }
    }

    /// Applies one draw to every frame.
    pub fn apply(
        &self,
        frames: &[LinearImage],
        width: usize,
        height: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<LinearImage>> {
        let first = frames.first().ok_or(Error::EmptyInput("sequence has no frames"))?;
        let crop = self.sample(first.width(), first.height(), rng);
        frames.iter().map(|f| resample(f, crop, width, height)).collect()
    }
}
