//! Single-plane filtering: separable Gaussian smoothing, Sobel gradients and
//! the 4-neighbour Laplacian. Borders are handled by mirror reflection
//! (`-1 -> 1`, `n -> n - 2`).

/// A row-major scalar image plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane data length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with mirrored borders; accepts any signed coordinate.
    #[inline]
    pub fn at_reflected(&self, x: isize, y: isize) -> f64 {
        self.at(reflect(x, self.width), reflect(y, self.height))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Mirror-reflects an index into `0..len` without repeating the edge sample.
#[inline]
pub fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= len as isize {
        m = period - m;
    }
    m as usize
}

/// Normalized 1-D Gaussian with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian smoothing. `sigma == 0` returns the input unchanged.
pub fn gaussian_blur(plane: &Plane, sigma: f64) -> Plane {
    if sigma == 0.0 {
        return plane.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (plane.width, plane.height);

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        let row = &plane.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * row[reflect(x as isize + k as isize - r, w)];
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (k, kv) in kernel.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - r, h);
            let src = &horizontal[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    Plane::new(w, h, out)
}

/// 3x3 Sobel derivatives `(d/dx, d/dy)`.
pub fn sobel(plane: &Plane) -> (Plane, Plane) {
    let (w, h) = (plane.width, plane.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let p = |dx: isize, dy: isize| plane.at_reflected(xi + dx, yi + dy);
            gx[y * w + x] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[y * w + x] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    (Plane::new(w, h, gx), Plane::new(w, h, gy))
}

/// Sobel gradient magnitude.
pub fn gradient_magnitude(plane: &Plane) -> Plane {
    let (gx, gy) = sobel(plane);
    let data = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(a, b)| a.hypot(*b))
        .collect();
    Plane::new(plane.width, plane.height, data)
}

/// 4-neighbour Laplacian `[0 1 0; 1 -4 1; 0 1 0]`.
pub fn laplacian(plane: &Plane) -> Plane {
    let (w, h) = (plane.width, plane.height);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            out[y * w + x] = plane.at_reflected(xi - 1, yi)
                + plane.at_reflected(xi + 1, yi)
                + plane.at_reflected(xi, yi - 1)
                + plane.at_reflected(xi, yi + 1)
                - 4.0 * plane.at(x, y);
        }
    }
    Plane::new(w, h, out)
}
