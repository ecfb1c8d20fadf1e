//! Layer primitives with hand-written backward passes.

use super::tensor::{FeatureMap, Tensor};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// ELU derivative from the pre-activation.
#[inline]
pub fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn conv_output_size(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// 2-D cross-correlation with zero padding. `weight` is
/// `[out, in, k, k]`, `bias` is `[out]`.
pub fn conv2d(
    input: &FeatureMap,
    weight: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
) -> FeatureMap {
    let dims = weight.dims();
    let (co, ci, k) = (dims[0], dims[1], dims[2]);
    debug_assert_eq!(ci, input.channels);
    let (h, w) = (input.height, input.width);
    let oh = conv_output_size(h, k, stride, pad);
    let ow = conv_output_size(w, k, stride, pad);
    let mut out = FeatureMap::zeros(co, oh, ow);
    let wd = weight.data();

    for o in 0..co {
        let dst = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
        if let Some(b) = bias {
            dst.iter_mut().for_each(|v| *v = b.data()[o]);
        }
        for i in 0..ci {
            let src = &input.data[i * h * w..(i + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = wd[((o * ci + i) * k + ky) * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = &src[iy as usize * w..(iy as usize + 1) * w];
                        let drow = &mut dst[oy * ow..(oy + 1) * ow];
                        for (ox, d) in drow.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix >= 0 && ix < w as isize {
                                *d += wv * row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Backward pass of [`conv2d`]. Accumulates into `grad_weight` and
/// `grad_bias`; returns the gradient with respect to the input.
pub fn conv2d_backward(
    input: &FeatureMap,
    weight: &Tensor,
    stride: usize,
    pad: usize,
    grad_out: &FeatureMap,
    grad_weight: &mut Tensor,
    grad_bias: Option<&mut Tensor>,
) -> FeatureMap {
    let dims = weight.dims();
    let (co, ci, k) = (dims[0], dims[1], dims[2]);
    let (h, w) = (input.height, input.width);
    let (oh, ow) = (grad_out.height, grad_out.width);
    let mut grad_in = FeatureMap::zeros(ci, h, w);
    let wd = weight.data();

    if let Some(gb) = grad_bias {
        for o in 0..co {
            gb.data_mut()[o] += grad_out.data[o * oh * ow..(o + 1) * oh * ow].iter().sum::<f64>();
        }
    }

    for o in 0..co {
        let g = &grad_out.data[o * oh * ow..(o + 1) * oh * ow];
        for i in 0..ci {
            let src = &input.data[i * h * w..(i + 1) * h * w];
            let gin = &mut grad_in.data[i * h * w..(i + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let widx = ((o * ci + i) * k + ky) * k + kx;
                    let wv = wd[widx];
                    let mut gw = 0.0;
                    for oy in 0..oh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let base = iy as usize * w;
                        for ox in 0..ow {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let go = g[oy * ow + ox];
                            gw += go * src[base + ix as usize];
                            gin[base + ix as usize] += go * wv;
                        }
                    }
                    grad_weight.data_mut()[widx] += gw;
                }
            }
        }
    }
    grad_in
}

/// 2x2 max pooling with stride 2; also returns the argmax index of every
/// output cell into the input data.
pub fn max_pool2(input: &FeatureMap) -> (FeatureMap, Vec<usize>) {
    let (oh, ow) = (input.height / 2, input.width / 2);
    let mut out = FeatureMap::zeros(input.channels, oh, ow);
    let mut argmax = vec![0; input.channels * oh * ow];
    for c in 0..input.channels {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = input.index(c, 2 * y, 2 * x);
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = input.index(c, 2 * y + dy, 2 * x + dx);
                    if input.data[j] > input.data[best] {
                        best = j;
                    }
                }
                let o = out.index(c, y, x);
                out.data[o] = input.data[best];
                argmax[o] = best;
            }
        }
    }
    (out, argmax)
}

pub fn max_pool2_backward(
    input_shape: (usize, usize, usize),
    argmax: &[usize],
    grad_out: &FeatureMap,
) -> FeatureMap {
    let (c, h, w) = input_shape;
    let mut grad_in = FeatureMap::zeros(c, h, w);
    for (o, &i) in argmax.iter().enumerate() {
        grad_in.data[i] += grad_out.data[o];
    }
    grad_in
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_map(c: usize, h: usize, w: usize, rng: &mut ChaCha8Rng) -> FeatureMap {
        let t = Tensor::uniform(&[c * h * w], 1.0, rng);
        FeatureMap::from_vec(c, h, w, t.data().to_vec()).unwrap()
    }

    /// Scalar loss sum(out * probe) and its finite-difference gradients.
    #[test]
    fn conv_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (stride, pad, k) in [(1, 1, 3), (2, 1, 3), (1, 0, 1), (1, 2, 5)] {
            let input = random_map(2, 6, 5, &mut rng);
            let weight = Tensor::uniform(&[3, 2, k, k], 0.5, &mut rng);
            let bias = Tensor::uniform(&[3], 0.5, &mut rng);
            let out = conv2d(&input, &weight, Some(&bias), stride, pad);
            let probe = random_map(out.channels, out.height, out.width, &mut rng);
            let loss = |inp: &FeatureMap, wt: &Tensor, b: &Tensor| {
                let o = conv2d(inp, wt, Some(b), stride, pad);
                o.data.iter().zip(&probe.data).map(|(a, p)| a * p).sum::<f64>()
            };

            let mut gw = Tensor::zeros(weight.dims());
            let mut gb = Tensor::zeros(&[3]);
            let gi = conv2d_backward(&input, &weight, stride, pad, &probe, &mut gw, Some(&mut gb));

            let h = 1e-6;
            for i in 0..input.data.len() {
                let mut p = input.clone();
                p.data[i] += h;
                let mut m = input.clone();
                m.data[i] -= h;
                let fd = (loss(&p, &weight, &bias) - loss(&m, &weight, &bias)) / (2.0 * h);
                assert!((fd - gi.data[i]).abs() < 1e-7);
            }
            for i in 0..weight.len() {
                let mut p = weight.clone();
                p.data_mut()[i] += h;
                let mut m = weight.clone();
                m.data_mut()[i] -= h;
                let fd = (loss(&input, &p, &bias) - loss(&input, &m, &bias)) / (2.0 * h);
                assert!((fd - gw.data()[i]).abs() < 1e-7);
            }
            for i in 0..3 {
                let expected: f64 = probe.data[i * probe.plane_size()..(i + 1) * probe.plane_size()]
                    .iter()
                    .sum();
                assert!((expected - gb.data()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_output_sizes() {
        assert_eq!(conv_output_size(32, 3, 2, 1), 16);
        assert_eq!(conv_output_size(7, 5, 1, 2), 7);
        assert_eq!(conv_output_size(4, 1, 1, 0), 4);
    }

    #[test]
    fn pool_routes_gradient_to_max() {
        let input = FeatureMap::from_vec(1, 2, 4, vec![1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 9.0, 1.0]).unwrap();
        let (out, argmax) = max_pool2(&input);
        assert_eq!(out.data, vec![5.0, 9.0]);
        let g = FeatureMap::from_vec(1, 1, 2, vec![1.0, 2.0]).unwrap();
        let gi = max_pool2_backward((1, 2, 4), &argmax, &g);
        assert_eq!(gi.data, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn activations() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert_eq!(elu(2.0), 2.0);
        assert!((elu(-1.0) - (-1.0f64).exp_m1()).abs() < 1e-15);
        let h = 1e-6;
        for x in [-2.0, -0.3, 0.4, 3.0] {
            let fd = (elu(x + h) - elu(x - h)) / (2.0 * h);
            assert!((fd - elu_grad(x)).abs() < 1e-8);
        }
    }
}
