//! Convolutional LSTM cell with peephole connections.
//!
//! ```text
//! i_t = σ(W_xi * X_t + W_hi * H_{t-1} + W_ci ∘ C_{t-1} + b_i)
//! f_t = σ(W_xf * X_t + W_hf * H_{t-1} + W_cf ∘ C_{t-1} + b_f)
//! C_t = f_t ∘ C_{t-1} + i_t ∘ tanh(W_xc * X_t + W_hc * H_{t-1} + b_c)
//! o_t = σ(W_xo * X_t + W_ho * H_{t-1} + W_co ∘ C_t + b_o)
//! H_t = o_t ∘ tanh(C_t)
//! ```
//!
//! `*` is a same-padded convolution; peepholes are one weight per channel.

use rand::Rng;

use super::ops::{conv2d, conv2d_backward, sigmoid};
use super::tensor::{FeatureMap, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLstmParams {
    pub kernel_size: usize,
    pub hidden_channels: usize,
    pub input_channels: usize,
    pub w_xi: Tensor,
    pub w_hi: Tensor,
    pub w_xf: Tensor,
    pub w_hf: Tensor,
    pub w_xc: Tensor,
    pub w_hc: Tensor,
    pub w_xo: Tensor,
    pub w_ho: Tensor,
    pub w_ci: Tensor,
    pub w_cf: Tensor,
    pub w_co: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_c: Tensor,
    pub b_o: Tensor,
}

impl ConvLstmParams {
    /// All-zero parameters.
    pub fn zeros(input_channels: usize, hidden_channels: usize, kernel_size: usize) -> Result<Self> {
        if kernel_size.is_multiple_of(2) || kernel_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be odd, got {kernel_size}"
            )));
        }
        if input_channels == 0 || hidden_channels == 0 {
            return Err(Error::InvalidArgument("channel counts must be positive".into()));
        }
        let (k, h, c) = (kernel_size, hidden_channels, input_channels);
        let wx = || Tensor::zeros(&[h, c, k, k]);
        let wh = || Tensor::zeros(&[h, h, k, k]);
        let v = || Tensor::zeros(&[h]);
        Ok(Self {
            kernel_size,
            hidden_channels,
            input_channels,
            w_xi: wx(),
            w_hi: wh(),
            w_xf: wx(),
            w_hf: wh(),
            w_xc: wx(),
            w_hc: wh(),
            w_xo: wx(),
            w_ho: wh(),
            w_ci: v(),
            w_cf: v(),
            w_co: v(),
            b_i: v(),
            b_f: v(),
            b_c: v(),
            b_o: v(),
        })
    }

    /// Uniform init in `±1/sqrt(fan_in)` with `fan_in = (C + H) K²`; the
    /// forget bias starts at 1.
    pub fn init(
        input_channels: usize,
        hidden_channels: usize,
        kernel_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut p = Self::zeros(input_channels, hidden_channels, kernel_size)?;
        let fan_in = (input_channels + hidden_channels) * kernel_size * kernel_size;
        let bound = 1.0 / (fan_in as f64).sqrt();
        for (_, t) in p.tensors_mut() {
            *t = Tensor::uniform(t.dims(), bound, rng);
        }
        p.b_f.fill(1.0);
        Ok(p)
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("w_xi", &self.w_xi),
            ("w_hi", &self.w_hi),
            ("w_xf", &self.w_xf),
            ("w_hf", &self.w_hf),
            ("w_xc", &self.w_xc),
            ("w_hc", &self.w_hc),
            ("w_xo", &self.w_xo),
            ("w_ho", &self.w_ho),
            ("w_ci", &self.w_ci),
            ("w_cf", &self.w_cf),
            ("w_co", &self.w_co),
            ("b_i", &self.b_i),
            ("b_f", &self.b_f),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("w_xi", &mut self.w_xi),
            ("w_hi", &mut self.w_hi),
            ("w_xf", &mut self.w_xf),
            ("w_hf", &mut self.w_hf),
            ("w_xc", &mut self.w_xc),
            ("w_hc", &mut self.w_hc),
            ("w_xo", &mut self.w_xo),
            ("w_ho", &mut self.w_ho),
            ("w_ci", &mut self.w_ci),
            ("w_cf", &mut self.w_cf),
            ("w_co", &mut self.w_co),
            ("b_i", &mut self.b_i),
            ("b_f", &mut self.b_f),
            ("b_c", &mut self.b_c),
            ("b_o", &mut self.b_o),
        ]
    }

    /// Checks every tensor against `K`, `H` and the input channel count.
    pub fn validate(&self) -> Result<()> {
        let reference = Self::zeros(self.input_channels, self.hidden_channels, self.kernel_size)?;
        for ((name, a), (_, b)) in self.tensors().into_iter().zip(reference.tensors()) {
            if a.dims() != b.dims() {
                return Err(Error::Shape(format!(
                    "{name} has dims {:?}, expected {:?}",
                    a.dims(),
                    b.dims()
                )));
            }
        }
        Ok(())
    }

    fn pad(&self) -> usize {
        self.kernel_size / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLstmState {
    pub hidden: FeatureMap,
    pub cell: FeatureMap,
}

impl ConvLstmState {
    /// `H_0 = C_0 = 0`.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            hidden: FeatureMap::zeros(channels, height, width),
            cell: FeatureMap::zeros(channels, height, width),
        }
    }
}

/// Gate activations of one step.
#[derive(Debug, Clone)]
pub struct GateMaps {
    pub input: FeatureMap,
    pub forget: FeatureMap,
    pub candidate: FeatureMap,
    pub output: FeatureMap,
}

/// Everything the backward pass needs from one step.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub input: FeatureMap,
    pub prev: ConvLstmState,
    pub gates: GateMaps,
    pub cell: FeatureMap,
}

pub fn conv_lstm_step(
    input: &FeatureMap,
    state: &ConvLstmState,
    params: &ConvLstmParams,
) -> Result<ConvLstmState> {
    conv_lstm_step_cached(input, state, params).map(|(s, _)| s)
}

pub fn conv_lstm_step_cached(
    input: &FeatureMap,
    state: &ConvLstmState,
    params: &ConvLstmParams,
) -> Result<(ConvLstmState, StepCache)> {
    check_shapes(input, state, params)?;
    let pad = params.pad();
    let pre = |wx: &Tensor, wh: &Tensor, b: &Tensor| {
        let mut a = conv2d(input, wx, Some(b), 1, pad);
        a += &conv2d(&state.hidden, wh, None, 1, pad);
        a
    };
    let plane = input.plane_size();
    let peephole = |a: &mut FeatureMap, w: &Tensor, c: &FeatureMap| {
        for (ch, &wv) in w.data().iter().enumerate() {
            let range = ch * plane..(ch + 1) * plane;
            for (v, cv) in a.data[range.clone()].iter_mut().zip(&c.data[range]) {
                *v += wv * cv;
            }
        }
    };

    let mut a_i = pre(&params.w_xi, &params.w_hi, &params.b_i);
    peephole(&mut a_i, &params.w_ci, &state.cell);
    let i = a_i.map(sigmoid);
    let mut a_f = pre(&params.w_xf, &params.w_hf, &params.b_f);
    peephole(&mut a_f, &params.w_cf, &state.cell);
    let f = a_f.map(sigmoid);
    let g = pre(&params.w_xc, &params.w_hc, &params.b_c).map(f64::tanh);

    let mut cell = f.clone();
    for (k, c) in cell.data.iter_mut().enumerate() {
        *c = f.data[k] * state.cell.data[k] + i.data[k] * g.data[k];
    }
    let mut a_o = pre(&params.w_xo, &params.w_ho, &params.b_o);
    peephole(&mut a_o, &params.w_co, &cell);
    let o = a_o.map(sigmoid);
    let mut hidden = o.clone();
    for (k, h) in hidden.data.iter_mut().enumerate() {
        *h = o.data[k] * cell.data[k].tanh();
    }

    let next = ConvLstmState {
        hidden,
        cell: cell.clone(),
    };
    let cache = StepCache {
        input: input.clone(),
        prev: state.clone(),
        gates: GateMaps {
            input: i,
            forget: f,
            candidate: g,
            output: o,
        },
        cell,
    };
    Ok((next, cache))
}

fn check_shapes(input: &FeatureMap, state: &ConvLstmState, params: &ConvLstmParams) -> Result<()> {
    params.validate()?;
    if input.channels != params.input_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, cell expects {}",
            input.channels, params.input_channels
        )));
    }
    if !state.hidden.same_shape(&state.cell) || state.hidden.channels != params.hidden_channels {
        return Err(Error::Shape("state does not match the cell's hidden size".into()));
    }
    if input.height != state.hidden.height || input.width != state.hidden.width {
        return Err(Error::Shape(format!(
            "input is {}x{}, state is {}x{}",
            input.width, input.height, state.hidden.width, state.hidden.height
        )));
    }
    Ok(())
}

/// Gradients flowing out of one step.
#[derive(Debug, Clone)]
pub struct StepGrads {
    pub input: FeatureMap,
    pub prev: ConvLstmState,
}

/// Backward through one step given the gradients reaching `H_t` and
/// `C_t`. Parameter gradients are accumulated into `grads`.
pub fn conv_lstm_step_backward(
    params: &ConvLstmParams,
    cache: &StepCache,
    d_hidden: &FeatureMap,
    d_cell: &FeatureMap,
    grads: &mut ConvLstmParams,
) -> StepGrads {
    let GateMaps {
        input: i,
        forget: f,
        candidate: g,
        output: o,
    } = &cache.gates;
    let c = &cache.cell;
    let c_prev = &cache.prev.cell;
    let plane = c.plane_size();
    let n = c.data.len();
    let ch_of = |k: usize| k / plane;

    let mut da_o = FeatureMap::zeros(c.channels, c.height, c.width);
    let mut dc = d_cell.clone();
    for k in 0..n {
        let tc = c.data[k].tanh();
        da_o.data[k] = d_hidden.data[k] * tc * o.data[k] * (1.0 - o.data[k]);
        dc.data[k] += d_hidden.data[k] * o.data[k] * (1.0 - tc * tc);
        dc.data[k] += da_o.data[k] * params.w_co.data()[ch_of(k)];
        grads.w_co.data_mut()[ch_of(k)] += da_o.data[k] * c.data[k];
    }

    let mut da_i = da_o.clone();
    let mut da_f = da_o.clone();
    let mut da_c = da_o.clone();
    let mut dc_prev = dc.clone();
    for k in 0..n {
        let ch = ch_of(k);
        da_f.data[k] = dc.data[k] * c_prev.data[k] * f.data[k] * (1.0 - f.data[k]);
        da_i.data[k] = dc.data[k] * g.data[k] * i.data[k] * (1.0 - i.data[k]);
        da_c.data[k] = dc.data[k] * i.data[k] * (1.0 - g.data[k] * g.data[k]);
        dc_prev.data[k] = dc.data[k] * f.data[k]
            + da_i.data[k] * params.w_ci.data()[ch]
            + da_f.data[k] * params.w_cf.data()[ch];
        grads.w_ci.data_mut()[ch] += da_i.data[k] * c_prev.data[k];
        grads.w_cf.data_mut()[ch] += da_f.data[k] * c_prev.data[k];
    }

    let pad = params.pad();
    let x = &cache.input;
    let h_prev = &cache.prev.hidden;
    let mut dx = FeatureMap::zeros(x.channels, x.height, x.width);
    let mut dh_prev = FeatureMap::zeros(h_prev.channels, h_prev.height, h_prev.width);
    let ConvLstmParams {
        w_xi: g_xi,
        w_hi: g_hi,
        w_xf: g_xf,
        w_hf: g_hf,
        w_xc: g_xc,
        w_hc: g_hc,
        w_xo: g_xo,
        w_ho: g_ho,
        b_i: g_bi,
        b_f: g_bf,
        b_c: g_bc,
        b_o: g_bo,
        ..
    } = grads;
    let gates = [
        (&da_i, &params.w_xi, &params.w_hi, g_xi, g_hi, g_bi),
        (&da_f, &params.w_xf, &params.w_hf, g_xf, g_hf, g_bf),
        (&da_c, &params.w_xc, &params.w_hc, g_xc, g_hc, g_bc),
        (&da_o, &params.w_xo, &params.w_ho, g_xo, g_ho, g_bo),
    ];
    for (da, wx, wh, gx, gh, gb) in gates {
        dx += &conv2d_backward(x, wx, 1, pad, da, gx, Some(gb));
        dh_prev += &conv2d_backward(h_prev, wh, 1, pad, da, gh, None);
    }

    StepGrads {
        input: dx,
        prev: ConvLstmState {
            hidden: dh_prev,
            cell: dc_prev,
        },
    }
}
