//! Core color types, the angular error metric and error summary statistics.
//!
//! Images are stored as interleaved linear RGB in `f32` with values in `[0, 1]`;
//! all arithmetic over them accumulates in `f64`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the normalized inner product before it is clamped into
/// `[-1, 1]`. Anything further out means the inputs were not what we think.
const COSINE_SLACK: f64 = 1e-6;

/// A linear-RGB frame with black level zero and values in `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl fmt::Debug for LinearImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl LinearImage {
    /// Builds an image from interleaved RGB data, validating range and size.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!(
                "channel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image, clamping every value into `[0, 1]` (NaN becomes 0).
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn uniform(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Interleaved RGB data, row-major.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One channel as a row-major `f64` plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        assert!(c < 3, "channel index {c} out of range");
        self.data.iter().skip(c).step_by(3).map(|&v| v as f64).collect()
    }

    /// Multiplies every value by `factor`, clamping to `[0, 1]`.
    pub fn scaled(&self, factor: f32) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| (v * factor).clamp(0.0, 1.0))
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Reorders channels: output channel `c` takes input channel `perm[c]`.
    pub fn permute_channels(&self, perm: [usize; 3]) -> Self {
        let data = self
            .data
            .chunks_exact(3)
            .flat_map(|p| [p[perm[0]], p[perm[1]], p[perm[2]]])
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn same_size(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// An illuminant color as a tri-stimulus RGB direction.
///
/// Two illuminants that differ only by a positive scale describe the same
/// light; use [`Illuminant::normalized`] for the canonical unit-norm form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Illuminant {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Illuminant {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        let rgb = [r, g, b];
        if rgb.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidIlluminant(format!(
                "components must be finite and non-negative, got ({r}, {g}, {b})"
            )));
        }
        if rgb.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidIlluminant("zero vector".into()));
        }
        Ok(Self { r, g, b })
    }

    pub fn from_array(rgb: [f64; 3]) -> Result<Self> {
        Self::new(rgb[0], rgb[1], rgb[2])
    }

    /// Unit-norm illuminant with chromaticity `(r, g, 1 - r - g)`.
    pub fn from_chromaticity(r: f64, g: f64) -> Result<Self> {
        Self::new(r, g, 1.0 - r - g)?.normalized()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn norm(self) -> f64 {
        (self.r * self.r + self.g * self.g + self.b * self.b).sqrt()
    }

    pub fn normalized(self) -> Result<Self> {
        normalize(self)
    }

    /// Projective chromaticity `(r, g)` with `r + g + b = 1`.
    pub fn chromaticity(self) -> (f64, f64) {
        let sum = self.r + self.g + self.b;
        (self.r / sum, self.g / sum)
    }
}

/// Angle between two illuminant directions, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AngularError(f64);

impl AngularError {
    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !(0.0..=180.0).contains(&degrees) {
            return Err(Error::InvalidArgument(format!(
                "angular error {degrees} outside [0, 180]"
            )));
        }
        Ok(Self(degrees))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl fmt::Display for AngularError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}°", self.0)
    }
}

/// Returns the unit-norm illuminant with the same direction.
pub fn normalize(illuminant: Illuminant) -> Result<Illuminant> {
    let n = illuminant.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidIlluminant(
            "cannot normalize a zero-norm illuminant".into(),
        ));
    }
    Ok(Illuminant {
        r: illuminant.r / n,
        g: illuminant.g / n,
        b: illuminant.b / n,
    })
}

/// Angular error between an estimate and the ground truth.
///
/// The normalized inner product is clamped into `[-1, 1]`; if it drifted
/// further than `1e-6` outside that range a numerical error is returned.
pub fn angular_error(estimate: Illuminant, truth: Illuminant) -> Result<AngularError> {
    let ne = estimate.norm();
    let nt = truth.norm();
    if ne == 0.0 || nt == 0.0 {
        return Err(Error::InvalidIlluminant(
            "angular error needs non-zero vectors".into(),
        ));
    }
    let dot = estimate.r * truth.r + estimate.g * truth.g + estimate.b * truth.b;
    let cos = dot / (ne * nt);
    if !(-1.0 - COSINE_SLACK..=1.0 + COSINE_SLACK).contains(&cos) {
        return Err(Error::Numerical(format!(
            "normalized inner product {cos} outside [-1, 1]"
        )));
    }
    Ok(AngularError(cos.clamp(-1.0, 1.0).acos().to_degrees()))
}

/// Summary statistics over a set of angular errors, all in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub trimean: f64,
    pub best25_mean: f64,
    pub worst25_mean: f64,
    pub worst5_mean: f64,
}

impl ErrorStats {
    /// Values in the standard reporting order (Mean, Med., Tri., B25%, W25%, W5%).
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.mean,
            self.median,
            self.trimean,
            self.best25_mean,
            self.worst25_mean,
            self.worst5_mean,
        ]
    }
}

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted list).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean, median, trimean and tail means of a list of errors.
///
/// Quartiles use linear interpolation; the best/worst 25% tails hold
/// `ceil(n / 4)` values and the worst 5% tail `ceil(n / 20)`.
pub fn summarize(errors: &[AngularError]) -> Result<ErrorStats> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("cannot summarize an empty error list"));
    }
    let mut sorted: Vec<f64> = errors.iter().map(|e| e.degrees()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let quarter = n.div_ceil(4);
    let twentieth = n.div_ceil(20);

    Ok(ErrorStats {
        mean: mean(&sorted),
        median,
        trimean: (q1 + 2.0 * median + q3) / 4.0,
        best25_mean: mean(&sorted[..quarter]),
        worst25_mean: mean(&sorted[n - quarter..]),
        worst5_mean: mean(&sorted[n - twentieth..]),
    })
}

/// Convenience wrapper for raw degree values.
pub fn summarize_degrees(degrees: &[f64]) -> Result<ErrorStats> {
    let errors = degrees
        .iter()
        .map(|&d| AngularError::from_degrees(d))
        .collect::<Result<Vec<_>>>()?;
    summarize(&errors)
}
