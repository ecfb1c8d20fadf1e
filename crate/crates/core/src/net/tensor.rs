use rand::Rng;

use crate::color::LinearImage;
use crate::error::{Error, Result};

/// Dense row-major parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "tensor {dims:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform(dims: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: (0..n).map(|_| rng.random_range(-bound..=bound)).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A `channels x height x width` activation map, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "feature map dims must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "feature map {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("feature map values must be finite".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// Planar copy of an RGB image.
    pub fn from_image(image: &LinearImage) -> Self {
        let (w, h) = (image.width(), image.height());
        let mut data = vec![0.0; 3 * w * h];
        for (i, px) in image.pixels().enumerate() {
            for c in 0..3 {
                data[c * w * h + i] = px[c] as f64;
            }
        }
        Self {
            channels: 3,
            height: h,
            width: w,
            data,
        }
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, y, x)]
    }

    pub fn plane_size(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    /// Stacks maps along the channel axis.
    pub fn concat(maps: &[&FeatureMap]) -> Result<Self> {
        let first = maps.first().ok_or(Error::EmptyInput("nothing to concatenate"))?;
        if maps
            .iter()
            .any(|m| m.height != first.height || m.width != first.width)
        {
            return Err(Error::Shape("concatenated maps differ in size".into()));
        }
        let mut data = Vec::with_capacity(maps.iter().map(|m| m.data.len()).sum());
        for m in maps {
            data.extend_from_slice(&m.data);
        }
        Ok(Self {
            channels: maps.iter().map(|m| m.channels).sum(),
            height: first.height,
            width: first.width,
            data,
        })
    }

    /// Splits into consecutive channel groups of the given sizes.
    pub fn split(&self, sizes: &[usize]) -> Vec<FeatureMap> {
        assert_eq!(sizes.iter().sum::<usize>(), self.channels, "split sizes");
        let plane = self.plane_size();
        let mut start = 0;
        sizes
            .iter()
            .map(|&c| {
                let m = FeatureMap {
                    channels: c,
                    height: self.height,
                    width: self.width,
                    data: self.data[start * plane..(start + c) * plane].to_vec(),
                };
                start += c;
                m
            })
            .collect()
    }
}

impl std::ops::AddAssign<&FeatureMap> for FeatureMap {
    fn add_assign(&mut self, rhs: &FeatureMap) {
        debug_assert!(self.same_shape(rhs));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}
