//! Single-frame illuminant estimators.
//!
//! The Minkowski family covers White-Patch, Gray-World, Shades-of-Gray,
//! General Gray-World and first/second order Grey-Edge as settings of one
//! formula: per channel, `(sum |d^n (G_sigma * I_c)|^p)^(1/p)`.
//!
//! The grayness index scores every pixel by how uniform its log-domain
//! Laplacian response is across the three channels. Under a Lambertian
//! model an achromatic surface yields identical responses in R, G and B,
//! so the lowest-scoring pixels carry the illuminant color.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::color::{Illuminant, LinearImage};
use crate::error::{Error, Result};
use crate::filter::{gaussian_blur, gradient_magnitude, laplacian, Plane};

/// Pixels with any channel at or above this value are treated as clipped.
pub const DEFAULT_SATURATION: f32 = 0.98;
/// Pixels whose mean channel value is below this are too dark for grayness.
pub const DARK_THRESHOLD: f64 = 0.02;
/// Floor applied before taking logs.
pub const LOG_EPSILON: f64 = 1e-4;
/// Mean log-Laplacian magnitude below which a pixel carries no contrast.
pub const CONTRAST_FLOOR: f64 = 1e-6;
/// Default share of selectable pixels used by the grayness index.
pub const DEFAULT_TOP_FRACTION: f64 = 0.001;
/// Minimum number of selectable pixels for a grayness estimate.
pub const MIN_SELECTABLE: usize = 10;
/// Mean score of the selected pixels above which an estimate is flagged.
pub const LOW_CONFIDENCE_SCORE: f64 = 0.1;
/// Mean angular deviation (degrees) of the selected pixels from their mean
/// color above which an estimate is flagged.
pub const LOW_CONFIDENCE_SPREAD: f64 = 3.0;

/// Anything that turns one frame into an illuminant estimate.
pub trait FrameEstimator: Send + Sync {
    fn estimate(&self, image: &LinearImage) -> Result<Illuminant>;
}

impl<F> FrameEstimator for F
where
    F: Fn(&LinearImage) -> Result<Illuminant> + Send + Sync,
{
    fn estimate(&self, image: &LinearImage) -> Result<Illuminant> {
        self(image)
    }
}

/// Minkowski norm exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Minkowski {
    Finite(f64),
    Infinite,
}

/// Parameters of the Grey-Edge framework.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrayEdgeParams {
    /// Derivative order: 0 (intensity), 1 (Sobel magnitude) or 2 (Laplacian).
    pub order: u8,
    pub minkowski: Minkowski,
    /// Gaussian pre-smoothing in pixels; 0 disables smoothing.
    pub sigma: f64,
    /// Clip level for saturated pixels; `None` keeps every pixel.
    pub saturation: Option<f32>,
}

impl GrayEdgeParams {
    pub fn new(order: u8, minkowski: Minkowski, sigma: f64) -> Result<Self> {
        let params = Self {
            order,
            minkowski,
            sigma,
            saturation: Some(DEFAULT_SATURATION),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn white_patch() -> Self {
        Self::preset(0, Minkowski::Infinite, 0.0)
    }

    pub fn gray_world() -> Self {
        Self::preset(0, Minkowski::Finite(1.0), 0.0)
    }

    pub fn shades_of_gray(p: f64) -> Self {
        Self::preset(0, Minkowski::Finite(p), 0.0)
    }

    pub fn general_gray_world(p: f64, sigma: f64) -> Self {
        Self::preset(0, Minkowski::Finite(p), sigma)
    }

    pub fn grey_edge_first(p: f64, sigma: f64) -> Self {
        Self::preset(1, Minkowski::Finite(p), sigma)
    }

    pub fn grey_edge_second(p: f64, sigma: f64) -> Self {
        Self::preset(2, Minkowski::Finite(p), sigma)
    }

    fn preset(order: u8, minkowski: Minkowski, sigma: f64) -> Self {
        Self {
            order,
            minkowski,
            sigma,
            saturation: Some(DEFAULT_SATURATION),
        }
    }

    pub fn with_saturation(mut self, saturation: Option<f32>) -> Self {
        self.saturation = saturation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > 2 {
            return Err(Error::InvalidArgument(format!(
                "derivative order must be 0, 1 or 2, got {}",
                self.order
            )));
        }
        if let Minkowski::Finite(p) = self.minkowski {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "Minkowski exponent must be >= 1, got {p}"
                )));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GrayEdgeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.minkowski {
            Minkowski::Finite(p) => format!("{p}"),
            Minkowski::Infinite => "inf".to_string(),
        };
        write!(f, "n={} p={} sigma={}", self.order, p, self.sigma)
    }
}

impl FrameEstimator for GrayEdgeParams {
    fn estimate(&self, image: &LinearImage) -> Result<Illuminant> {
        gray_edge_family(image, self)
    }
}

/// Per-pixel mask of clipped pixels, grown by `grow` pixels.
fn saturation_mask(image: &LinearImage, level: Option<f32>, grow: usize) -> Vec<bool> {
    let (w, h) = (image.width(), image.height());
    let Some(level) = level else {
        return vec![false; w * h];
    };
    let clipped: Vec<bool> = image
        .pixels()
        .map(|p| p.iter().any(|&v| v >= level))
        .collect();
    if grow == 0 {
        return clipped;
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !clipped[y * w + x] {
                continue;
            }
            for ny in y.saturating_sub(grow)..(y + grow + 1).min(h) {
                for nx in x.saturating_sub(grow)..(x + grow + 1).min(w) {
                    out[ny * w + nx] = true;
                }
            }
        }
    }
    out
}

fn minkowski_norm(values: impl Iterator<Item = f64> + Clone, p: Minkowski) -> f64 {
    let max = values.clone().fold(0.0_f64, f64::max);
    match p {
        Minkowski::Infinite => max,
        _ if max == 0.0 => 0.0,
        Minkowski::Finite(p) if p == 1.0 => values.sum(),
        // Scaling by the maximum keeps large exponents from underflowing.
        Minkowski::Finite(p) => max * values.map(|v| (v / max).powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// Estimates the illuminant with the Minkowski/Grey-Edge family.
pub fn gray_edge_family(image: &LinearImage, params: &GrayEdgeParams) -> Result<Illuminant> {
    params.validate()?;
    let mask = saturation_mask(image, params.saturation, params.order as usize);
    if mask.iter().all(|&m| m) {
        return Err(Error::DegenerateImage("every pixel is saturated".into()));
    }

    let mut estimate = [0.0; 3];
    for (c, e) in estimate.iter_mut().enumerate() {
        let plane = Plane::new(image.width(), image.height(), image.channel(c));
        let smoothed = gaussian_blur(&plane, params.sigma);
        let response = match params.order {
            0 => smoothed,
            1 => gradient_magnitude(&smoothed),
            _ => laplacian(&smoothed),
        };
        let values = response
            .data
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| !m)
            .map(|(v, _)| v.abs());
        *e = minkowski_norm(values, params.minkowski);
    }

    if estimate.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateImage(format!(
            "zero response for {params}"
        )));
    }
    Illuminant::from_array(estimate)?.normalized()
}

/// Per-pixel grayness score; lower means more likely achromatic.
/// Excluded pixels score `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraynessMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GraynessMap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn selectable(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }
}

/// Computes the grayness map of an image.
///
/// Each channel goes through `log(max(I_c, 1e-4))` and the 4-neighbour
/// Laplacian; the score is the coefficient of variation of the three
/// absolute responses. Dark (mean < 0.02), clipped (any channel >= 0.98)
/// and contrast-free pixels score `+inf`.
pub fn grayness_map(image: &LinearImage) -> Result<GraynessMap> {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }

    let responses: Vec<Plane> = (0..3)
        .map(|c| {
            let plane = Plane::new(w, h, image.channel(c));
            laplacian(&plane.map(|v| v.max(LOG_EPSILON).ln()))
        })
        .collect();

    let values = image
        .pixels()
        .enumerate()
        .map(|(i, px)| {
            let mean_px = px.iter().map(|&v| v as f64).sum::<f64>() / 3.0;
            if mean_px < DARK_THRESHOLD || px.iter().any(|&v| v >= DEFAULT_SATURATION) {
                return f64::INFINITY;
            }
            let d = [
                responses[0].data[i].abs(),
                responses[1].data[i].abs(),
                responses[2].data[i].abs(),
            ];
            let mean = (d[0] + d[1] + d[2]) / 3.0;
            if mean < CONTRAST_FLOOR {
                return f64::INFINITY;
            }
            let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
            var.sqrt() / mean
        })
        .collect();

    Ok(GraynessMap {
        width: w,
        height: h,
        values,
    })
}

/// Result of a grayness-index estimate, with selection diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraynessEstimate {
    pub illuminant: Illuminant,
    /// Number of pixels averaged.
    pub selected: usize,
    /// Lowest score in the image.
    pub score_floor: f64,
    /// Mean score over the selected pixels.
    pub mean_score: f64,
    /// Mean angle in degrees between each selected pixel and the estimate.
    pub spread: f64,
}

impl GraynessEstimate {
    /// True when the selected pixels are far from achromatic or disagree
    /// on the light color.
    pub fn low_confidence(&self) -> bool {
        self.mean_score > LOW_CONFIDENCE_SCORE || self.spread > LOW_CONFIDENCE_SPREAD
    }
}

/// Picks the lowest-scoring `top_fraction` of `candidates` (score, payload),
/// keeping every candidate tied with the cut-off score.
pub(crate) fn select_grayest<T: Copy>(
    mut candidates: Vec<(f64, T)>,
    top_fraction: f64,
) -> Vec<(f64, T)> {
    let k = ((top_fraction * candidates.len() as f64).ceil() as usize).clamp(1, candidates.len());
    let (_, kth, _) = candidates.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
    let cutoff = kth.0;
    candidates.retain(|c| c.0 <= cutoff);
    candidates
}

pub(crate) fn check_fraction(top_fraction: f64) -> Result<()> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must be in (0, 1], got {top_fraction}"
        )));
    }
    Ok(())
}

/// Mean angle between `pixels` and `center`, skipping black pixels.
pub(crate) fn chromatic_spread(pixels: impl Iterator<Item = [f32; 3]>, center: Illuminant) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for p in pixels {
        if let Ok(ill) = Illuminant::new(p[0] as f64, p[1] as f64, p[2] as f64) {
            if let Ok(e) = crate::color::angular_error(ill, center) {
                sum += e.degrees();
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Normalized mean RGB over a set of pixels.
pub(crate) fn mean_rgb<'a>(pixels: impl Iterator<Item = [f32; 3]> + 'a) -> Result<Illuminant> {
    let mut sum = [0.0f64; 3];
    for p in pixels {
        for c in 0..3 {
            sum[c] += p[c] as f64;
        }
    }
    Illuminant::from_array(sum)
        .map_err(|_| Error::DegenerateImage("selected pixels are black".into()))?
        .normalized()
}

/// Grayness-index estimate with selection diagnostics.
pub fn grayness_index_detail(image: &LinearImage, top_fraction: f64) -> Result<GraynessEstimate> {
    check_fraction(top_fraction)?;
    let map = grayness_map(image)?;
    let candidates: Vec<(f64, usize)> = map
        .values
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .map(|(i, &s)| (s, i))
        .collect();
    if candidates.len() < MIN_SELECTABLE {
        return Err(Error::DegenerateImage(format!(
            "only {} selectable pixels, need {MIN_SELECTABLE}",
            candidates.len()
        )));
    }
    let score_floor = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let selected = select_grayest(candidates, top_fraction);
    let mean_score = selected.iter().map(|c| c.0).sum::<f64>() / selected.len() as f64;
    let w = image.width();
    let pixels = || selected.iter().map(|&(_, i)| image.pixel(i % w, i / w));
    let illuminant = mean_rgb(pixels())?;
    Ok(GraynessEstimate {
        illuminant,
        selected: selected.len(),
        score_floor,
        mean_score,
        spread: chromatic_spread(pixels(), illuminant),
    })
}

/// Mean color of the grayest `top_fraction` of selectable pixels.
pub fn grayness_index_estimate(image: &LinearImage, top_fraction: f64) -> Result<Illuminant> {
    grayness_index_detail(image, top_fraction).map(|e| e.illuminant)
}

/// Grayness-index estimator with a fixed selection fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraynessIndex {
    pub top_fraction: f64,
}

impl Default for GraynessIndex {
    fn default() -> Self {
        Self {
            top_fraction: DEFAULT_TOP_FRACTION,
        }
    }
}

impl FrameEstimator for GraynessIndex {
    fn estimate(&self, image: &LinearImage) -> Result<Illuminant> {
        grayness_index_estimate(image, self.top_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::angular_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ill(r: f64, g: f64, b: f64) -> Illuminant {
        Illuminant::new(r, g, b).unwrap()
    }

    fn err(a: Illuminant, b: Illuminant) -> f64 {
        angular_error(a, b).unwrap().degrees()
    }

    fn random_image(seed: u64, w: usize, h: usize) -> LinearImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearImage::from_fn(w, h, |_, _| {
            [
                rng.random_range(0.05..0.9),
                rng.random_range(0.05..0.9),
                rng.random_range(0.05..0.9),
            ]
        })
        .unwrap()
    }

    /// Achromatic texture (R = G = B reflectance) under `light`.
    fn achromatic_texture(seed: u64, w: usize, h: usize, light: [f32; 3]) -> LinearImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearImage::from_fn(w, h, |_, _| {
            let a: f32 = rng.random_range(0.2..0.9);
            [a * light[0], a * light[1], a * light[2]]
        })
        .unwrap()
    }

    /// Left half achromatic texture, right half independently textured
    /// colored patches, all under `light`.
    fn mixed_scene(seed: u64, light: [f32; 3]) -> LinearImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let patches: Vec<[f32; 3]> = (0..16)
            .map(|_| {
                let mut c = [0.0f32; 3];
                let dominant = rng.random_range(0..3);
                for (i, v) in c.iter_mut().enumerate() {
                    *v = if i == dominant {
                        rng.random_range(0.6..0.8)
                    } else {
                        rng.random_range(0.1..0.3)
                    };
                }
                c
            })
            .collect();
        LinearImage::from_fn(64, 64, |x, y| {
            if x < 32 {
                let a: f32 = rng.random_range(0.3..0.9);
                [a * light[0], a * light[1], a * light[2]]
            } else {
                let p = patches[(y / 16) * 4 + (x - 32) / 8];
                let mut out = [0.0; 3];
                for c in 0..3 {
                    out[c] = p[c] * rng.random_range(0.7f32..1.0) * light[c];
                }
                out
            }
        })
        .unwrap()
    }

    #[test]
    fn gray_world_on_uniform_image() {
        let img = LinearImage::uniform(8, 8, [0.4, 0.2, 0.2]).unwrap();
        let e = gray_edge_family(&img, &GrayEdgeParams::gray_world()).unwrap();
        assert!(err(e, ill(2.0, 1.0, 1.0)) < 1e-5);
    }

    #[test]
    fn white_patch_finds_bright_patch() {
        let img = LinearImage::from_fn(16, 16, |x, y| {
            if (4..8).contains(&x) && (4..8).contains(&y) {
                [1.0, 1.0, 1.0]
            } else {
                [0.05, 0.05, 0.05]
            }
        })
        .unwrap();
        let wp = GrayEdgeParams::white_patch();
        let e = gray_edge_family(&img, &wp).unwrap();
        assert!(err(e, ill(1.0, 1.0, 1.0)) < 1e-5);
        let e = gray_edge_family(&img, &wp.with_saturation(None)).unwrap();
        assert!(err(e, ill(1.0, 1.0, 1.0)) < 1e-5);
    }

    #[test]
    fn saturated_pixels_are_ignored() {
        // A clipped colored highlight would dominate White-Patch otherwise.
        let img = LinearImage::from_fn(16, 16, |x, _| {
            if x == 0 {
                [1.0, 0.2, 0.2]
            } else {
                [0.5, 0.4, 0.3]
            }
        })
        .unwrap();
        let e = gray_edge_family(&img, &GrayEdgeParams::white_patch()).unwrap();
        assert!(err(e, ill(0.5, 0.4, 0.3)) < 1e-5);
        let all_clipped = LinearImage::uniform(4, 4, [1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            gray_edge_family(&all_clipped, &GrayEdgeParams::white_patch()),
            Err(Error::DegenerateImage(_))
        ));
    }

    #[test]
    fn black_image_is_degenerate() {
        let img = LinearImage::uniform(8, 8, [0.0; 3]).unwrap();
        assert!(matches!(
            gray_edge_family(&img, &GrayEdgeParams::gray_world()),
            Err(Error::DegenerateImage(_))
        ));
        // A constant image has no edges.
        let img = LinearImage::uniform(8, 8, [0.3; 3]).unwrap();
        assert!(matches!(
            gray_edge_family(&img, &GrayEdgeParams::grey_edge_first(1.0, 1.0)),
            Err(Error::DegenerateImage(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GrayEdgeParams::new(3, Minkowski::Finite(1.0), 0.0).is_err());
        assert!(GrayEdgeParams::new(0, Minkowski::Finite(0.5), 0.0).is_err());
        assert!(GrayEdgeParams::new(0, Minkowski::Finite(1.0), -1.0).is_err());
        assert!(GrayEdgeParams::new(1, Minkowski::Infinite, 2.0).is_ok());
    }

    /// Channels with different value distributions, so the Minkowski
    /// estimate moves with p.
    fn skewed_image(seed: u64, w: usize, h: usize) -> LinearImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = [rng.random_range(0.5..0.9), rng.random_range(0.5..0.9), rng.random_range(0.5..0.9)];
        let shape = [1.0f32, 2.0, 4.0];
        LinearImage::from_fn(w, h, |_, _| {
            let mut px = [0.0f32; 3];
            for c in 0..3 {
                px[c] = gain[c] * rng.random_range(0.0f32..1.0).powf(shape[c]);
            }
            px
        })
        .unwrap()
    }

    #[test]
    fn large_p_approaches_white_patch() {
        for seed in 0..10 {
            let img = skewed_image(seed, 48, 48);
            let wp = gray_edge_family(&img, &GrayEdgeParams::white_patch()).unwrap();
            let mut last = f64::INFINITY;
            for p in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0] {
                let sog = gray_edge_family(&img, &GrayEdgeParams::shades_of_gray(p)).unwrap();
                let d = err(sog, wp);
                assert!(d <= last + 1e-9, "not monotone at p={p}: {d} > {last}");
                last = d;
            }
            assert!(last < 1.0);
        }
    }

    #[test]
    fn every_preset_is_exposure_invariant_and_permutation_equivariant() {
        let img = random_image(7, 40, 32);
        let presets = [
            GrayEdgeParams::white_patch(),
            GrayEdgeParams::gray_world(),
            GrayEdgeParams::shades_of_gray(4.0),
            GrayEdgeParams::general_gray_world(1.0, 9.0),
            GrayEdgeParams::grey_edge_first(1.0, 9.0),
            GrayEdgeParams::grey_edge_second(1.0, 9.0),
        ];
        for p in presets {
            let base = gray_edge_family(&img, &p).unwrap();
            for s in [1.0, 0.5, 0.13] {
                let scaled = gray_edge_family(&img.scaled(s), &p).unwrap();
                assert!(err(base, scaled) < 1e-3, "{p} not exposure invariant");
            }
            let perm = [2, 0, 1];
            let permuted = gray_edge_family(&img.permute_channels(perm), &p).unwrap();
            let b = base.to_array();
            let expected = ill(b[perm[0]], b[perm[1]], b[perm[2]]);
            assert!(err(permuted, expected) < 1e-6);
        }
    }

    #[test]
    fn grayness_prefers_achromatic_pixels() {
        let light = [0.8, 0.5, 0.4];
        let img = mixed_scene(3, light);
        let map = grayness_map(&img).unwrap();
        let (mut gray, mut colored) = (Vec::new(), Vec::new());
        for y in 2..62 {
            for x in 2..62 {
                let s = map.at(x, y);
                if !s.is_finite() || (29..35).contains(&x) {
                    continue;
                }
                if x < 32 {
                    gray.push(s)
                } else {
                    colored.push(s)
                }
            }
        }
        let max_gray = gray.iter().cloned().fold(0.0, f64::max);
        let min_colored = colored.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max_gray < min_colored, "{max_gray} vs {min_colored}");

        let e = grayness_index_estimate(&img, DEFAULT_TOP_FRACTION).unwrap();
        assert!(err(e, ill(0.8, 0.5, 0.4)) < 1.0);
    }

    #[test]
    fn grayness_on_constant_image_excludes_everything() {
        let img = LinearImage::uniform(16, 16, [0.3, 0.4, 0.5]).unwrap();
        let map = grayness_map(&img).unwrap();
        assert!(map.values.iter().all(|v| v.is_infinite()));
        assert!(matches!(
            grayness_index_estimate(&img, 0.5),
            Err(Error::DegenerateImage(_))
        ));
    }

    #[test]
    fn grayness_rejects_tiny_images() {
        let img = LinearImage::uniform(2, 5, [0.3; 3]).unwrap();
        assert!(matches!(grayness_map(&img), Err(Error::ImageTooSmall { .. })));
        assert!(grayness_index_estimate(&img, 0.5).is_err());
        assert!(grayness_index_estimate(&random_image(1, 8, 8), 0.0).is_err());
        assert!(grayness_index_estimate(&random_image(1, 8, 8), 1.5).is_err());
    }

    #[test]
    fn achromatic_gradient_recovers_light() {
        let img = LinearImage::from_fn(48, 48, |x, y| {
            let a = 0.1 + 0.8 * ((x * x + 2 * y * y) as f32 / (3.0 * 47.0 * 47.0));
            [a * 0.9, a * 0.45, a * 0.45]
        })
        .unwrap();
        let e = grayness_index_estimate(&img, DEFAULT_TOP_FRACTION).unwrap();
        assert!(err(e, ill(2.0, 1.0, 1.0)) < 1.0);
    }

    #[test]
    fn full_fraction_on_achromatic_texture_matches_gray_world() {
        let img = achromatic_texture(5, 32, 32, [0.45, 0.9, 0.45]);
        let gi = grayness_index_estimate(&img, 1.0).unwrap();
        let gw = gray_edge_family(&img, &GrayEdgeParams::gray_world()).unwrap();
        assert!(err(gi, gw) < 1e-3);
        assert!(err(gi, ill(1.0, 2.0, 1.0)) < 1e-3);
    }

    #[test]
    fn colored_scene_is_low_confidence() {
        let light = [0.6f32, 0.6, 0.6];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let colors = [[0.7f32, 0.15, 0.1], [0.1, 0.7, 0.15], [0.15, 0.1, 0.7]];
        let img = LinearImage::from_fn(48, 48, |x, _| {
            let p = colors[(x / 16).min(2)];
            let mut out = [0.0; 3];
            for c in 0..3 {
                out[c] = p[c] * rng.random_range(0.6f32..1.0) * light[c];
            }
            out
        })
        .unwrap();
        let detail = grayness_index_detail(&img, DEFAULT_TOP_FRACTION).unwrap();
        assert!(detail.low_confidence(), "{detail:?}");
        for c in colors {
            let patch = ill(c[0] as f64, c[1] as f64, c[2] as f64);
            assert!(err(detail.illuminant, patch) > 1.0);
        }
    }

    #[test]
    fn grayness_scores_are_scale_invariant() {
        let img = random_image(9, 24, 24);
        let base = grayness_map(&img).unwrap();
        for s in [0.5f32, 0.25] {
            let scaled = grayness_map(&img.scaled(s)).unwrap();
            for y in 2..22 {
                for x in 2..22 {
                    let (a, b) = (base.at(x, y), scaled.at(x, y));
                    if a.is_finite() && b.is_finite() {
                        assert!((a - b).abs() < 1e-6, "({x},{y}): {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn selection_keeps_ties() {
        let c = vec![(0.3, 0), (0.1, 1), (0.1, 2), (0.2, 3), (0.1, 4)];
        let mut s = select_grayest(c, 0.2);
        s.sort_by_key(|x| x.1);
        assert_eq!(s.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 2, 4]);
    }
}
