//! The two-branch recurrent network: per-frame backbone, ConvLSTM per
//! branch, concatenation, 2x2 max-pool and a two-layer sigmoid head whose
//! spatial mean is the illuminant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{conv_lstm_step_backward, conv_lstm_step_cached, ConvLstmParams, ConvLstmState, StepCache};
use super::ops::{conv2d, conv2d_backward, conv_output_size, elu, elu_grad, max_pool2, max_pool2_backward, sigmoid};
use super::sampling::{pseudo_zoom_sequence, resize};
use super::tensor::{FeatureMap, Tensor};
use crate::color::{normalize, Illuminant, LinearImage};
use crate::error::{Error, Result};

const BACKBONE_KERNEL: usize = 3;
const BACKBONE_STRIDE: usize = 2;
const BACKBONE_PAD: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TccNetConfig {
    /// 1 = frame branch only, 2 = frame branch plus pseudo zoom-out branch.
    pub branches: usize,
    pub input_width: usize,
    pub input_height: usize,
    /// Output channels of each stride-2 3x3 conv + ELU layer.
    pub backbone_channels: Vec<usize>,
    /// ConvLSTM hidden channels `H`.
    pub hidden: usize,
    /// ConvLSTM kernel size `K`.
    pub kernel: usize,
    pub head_hidden: usize,
    /// Use one backbone for both branches.
    pub share_backbone: bool,
}

impl TccNetConfig {
    /// Full-width layout: H = 128, K = 5, 512-channel features.
    pub fn model_g() -> Self {
        Self {
            branches: 2,
            input_width: 64,
            input_height: 64,
            backbone_channels: vec![64, 128, 512],
            hidden: 128,
            kernel: 5,
            head_hidden: 64,
            share_backbone: false,
        }
    }

    /// Same structure shrunk to run on a laptop CPU.
    pub fn desk() -> Self {
        Self {
            branches: 2,
            input_width: 64,
            input_height: 64,
            backbone_channels: vec![8, 16, 32],
            hidden: 16,
            kernel: 5,
            head_hidden: 64,
            share_backbone: false,
        }
    }

    /// Smallest useful net, for tests and gradient checks.
    pub fn tiny() -> Self {
        Self {
            branches: 2,
            input_width: 16,
            input_height: 16,
            backbone_channels: vec![8, 8, 8],
            hidden: 8,
            kernel: 3,
            head_hidden: 8,
            share_backbone: false,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "model-g" => Ok(Self::model_g()),
            "desk" => Ok(Self::desk()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (expected model-g, desk or tiny)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(1..=2).contains(&self.branches) {
            return bad(format!("branches must be 1 or 2, got {}", self.branches));
        }
        if self.backbone_channels.is_empty() || self.backbone_channels.contains(&0) {
            return bad("backbone needs at least one layer with positive width".into());
        }
        if self.hidden == 0 || self.head_hidden == 0 {
            return bad("hidden sizes must be positive".into());
        }
        if self.kernel.is_multiple_of(2) {
            return bad(format!("kernel must be odd, got {}", self.kernel));
        }
        let (fw, fh) = self.feature_size();
        if fw < 2 || fh < 2 {
            return bad(format!(
                "input {}x{} is too small for {} backbone layers",
                self.input_width,
                self.input_height,
                self.backbone_channels.len()
            ));
        }
        Ok(())
    }

    /// Spatial size of the backbone output and of the LSTM state.
    pub fn feature_size(&self) -> (usize, usize) {
        let shrink = |mut n: usize| {
            for _ in &self.backbone_channels {
                n = conv_output_size(n, BACKBONE_KERNEL, BACKBONE_STRIDE, BACKBONE_PAD);
            }
            n
        };
        (shrink(self.input_width), shrink(self.input_height))
    }

    /// Spatial size of the illumination map.
    pub fn map_size(&self) -> (usize, usize) {
        let (w, h) = self.feature_size();
        (w / 2, h / 2)
    }

    pub fn backbone_count(&self) -> usize {
        if self.share_backbone {
            1
        } else {
            self.branches
        }
    }

    fn backbone_index(&self, branch: usize) -> usize {
        if self.share_backbone {
            0
        } else {
            branch
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackboneParams {
    pub layers: Vec<ConvLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// All learned weights. The same layout doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct TccNetParams {
    pub backbones: Vec<BackboneParams>,
    pub lstms: Vec<ConvLstmParams>,
    pub head: HeadParams,
}

impl TccNetParams {
    pub fn zeros(config: &TccNetConfig) -> Result<Self> {
        config.validate()?;
        let k = BACKBONE_KERNEL;
        let backbone = || {
            let mut cin = 3;
            let layers = config
                .backbone_channels
                .iter()
                .map(|&cout| {
                    let l = ConvLayer {
                        weight: Tensor::zeros(&[cout, cin, k, k]),
                        bias: Tensor::zeros(&[cout]),
                    };
                    cin = cout;
                    l
                })
                .collect();
            BackboneParams { layers }
        };
        let features = *config.backbone_channels.last().unwrap();
        let lstms = (0..config.branches)
            .map(|_| ConvLstmParams::zeros(features, config.hidden, config.kernel))
            .collect::<Result<_>>()?;
        let concat = config.branches * config.hidden;
        Ok(Self {
            backbones: (0..config.backbone_count()).map(|_| backbone()).collect(),
            lstms,
            head: HeadParams {
                w1: Tensor::zeros(&[config.head_hidden, concat, 1, 1]),
                b1: Tensor::zeros(&[config.head_hidden]),
                w2: Tensor::zeros(&[3, config.head_hidden, 1, 1]),
                b2: Tensor::zeros(&[3]),
            },
        })
    }

    /// Seeded init: uniform in `±1/sqrt(fan_in)`, forget biases at 1.
    pub fn init(config: &TccNetConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config)?;
        for bb in &mut p.backbones {
            for l in &mut bb.layers {
                let d = l.weight.dims().to_vec();
                let bound = 1.0 / ((d[1] * d[2] * d[3]) as f64).sqrt();
                l.weight = Tensor::uniform(&d, bound, &mut rng);
                l.bias = Tensor::uniform(l.bias.dims(), bound, &mut rng);
            }
        }
        for lstm in &mut p.lstms {
            *lstm = ConvLstmParams::init(lstm.input_channels, lstm.hidden_channels, lstm.kernel_size, &mut rng)?;
        }
        let h = &mut p.head;
        let b1 = 1.0 / (h.w1.dims()[1] as f64).sqrt();
        h.w1 = Tensor::uniform(h.w1.dims(), b1, &mut rng);
        h.b1 = Tensor::uniform(h.b1.dims(), b1, &mut rng);
        let b2 = 1.0 / (h.w2.dims()[1] as f64).sqrt();
        h.w2 = Tensor::uniform(h.w2.dims(), b2, &mut rng);
        h.b2 = Tensor::uniform(h.b2.dims(), b2, &mut rng);
        Ok(p)
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (b, bb) in self.backbones.iter().enumerate() {
            for (l, layer) in bb.layers.iter().enumerate() {
                out.push((format!("backbone{b}.conv{l}.weight"), &layer.weight));
                out.push((format!("backbone{b}.conv{l}.bias"), &layer.bias));
            }
        }
        for (b, lstm) in self.lstms.iter().enumerate() {
            for (name, t) in lstm.tensors() {
                out.push((format!("lstm{b}.{name}"), t));
            }
        }
        out.push(("head.conv1.weight".into(), &self.head.w1));
        out.push(("head.conv1.bias".into(), &self.head.b1));
        out.push(("head.conv2.weight".into(), &self.head.w2));
        out.push(("head.conv2.bias".into(), &self.head.b2));
        out
    }

    /// Mutable counterpart of [`TccNetParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (b, bb) in self.backbones.iter_mut().enumerate() {
            for (l, layer) in bb.layers.iter_mut().enumerate() {
                out.push((format!("backbone{b}.conv{l}.weight"), &mut layer.weight));
                out.push((format!("backbone{b}.conv{l}.bias"), &mut layer.bias));
            }
        }
        for (b, lstm) in self.lstms.iter_mut().enumerate() {
            for (name, t) in lstm.tensors_mut() {
                out.push((format!("lstm{b}.{name}"), t));
            }
        }
        out.push(("head.conv1.weight".into(), &mut self.head.w1));
        out.push(("head.conv1.bias".into(), &mut self.head.b1));
        out.push(("head.conv2.weight".into(), &mut self.head.w2));
        out.push(("head.conv2.bias".into(), &mut self.head.b2));
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Checks that every tensor has the shape `config` implies.
    pub fn check(&self, config: &TccNetConfig) -> Result<()> {
        let reference = Self::zeros(config)?;
        let mine = self.tensors();
        let theirs = reference.tensors();
        if mine.len() != theirs.len() {
            return Err(Error::Shape(format!(
                "parameters have {} tensors, config implies {}",
                mine.len(),
                theirs.len()
            )));
        }
        for ((name, a), (_, b)) in mine.iter().zip(&theirs) {
            if a.dims() != b.dims() {
                return Err(Error::Shape(format!(
                    "{name} has dims {:?}, config implies {:?}",
                    a.dims(),
                    b.dims()
                )));
            }
        }
        if self.tensors().iter().any(|(_, t)| t.data().iter().any(|v| !v.is_finite())) {
            return Err(Error::Numerical("parameters contain non-finite values".into()));
        }
        Ok(())
    }
}

/// Network-resolution inputs of every branch.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSequence {
    pub branches: Vec<Vec<FeatureMap>>,
}

impl PreparedSequence {
    /// Resizes the frames to the input resolution and, for two branches,
    /// builds the pseudo zoom-out sequence from the last frame.
    pub fn new(sequence: &[LinearImage], config: &TccNetConfig) -> Result<Self> {
        let shot = sequence.last().ok_or(Error::EmptyInput("sequence has no frames"))?;
        if sequence.iter().any(|f| !f.same_size(shot)) {
            return Err(Error::Shape("frames of a sequence differ in size".into()));
        }
        config.validate()?;
        let (w, h) = (config.input_width, config.input_height);
        let frames = sequence
            .iter()
            .map(|f| resize(f, w, h).map(|r| FeatureMap::from_image(&r)))
            .collect::<Result<Vec<_>>>()?;
        let mut branches = vec![frames];
        if config.branches == 2 {
            let zoom = pseudo_zoom_sequence(shot, sequence.len(), w, h)?;
            branches.push(zoom.iter().map(FeatureMap::from_image).collect());
        }
        Ok(Self { branches })
    }

    pub fn len(&self) -> usize {
        self.branches[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches[0].is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TccNetOutput {
    /// Unit-norm estimate.
    pub illuminant: Illuminant,
    /// Spatial mean of the illumination map before normalization; every
    /// component lies in (0, 1).
    pub raw: [f64; 3],
    /// Illumination map `L`, 3 channels.
    pub spatial_map: FeatureMap,
    /// LSTM steps taken by each branch.
    pub steps: Vec<usize>,
}

struct BackboneCache {
    inputs: Vec<FeatureMap>,
    pre: Vec<FeatureMap>,
}

struct ForwardCache {
    backbones: Vec<Vec<BackboneCache>>,
    steps: Vec<Vec<StepCache>>,
    concat_shape: (usize, usize, usize),
    argmax: Vec<usize>,
    pooled: FeatureMap,
    hidden_act: FeatureMap,
    map: FeatureMap,
}

fn backbone_forward(params: &BackboneParams, frame: &FeatureMap) -> (FeatureMap, BackboneCache) {
    let mut cache = BackboneCache {
        inputs: Vec::new(),
        pre: Vec::new(),
    };
    let mut x = frame.clone();
    for layer in &params.layers {
        let pre = conv2d(&x, &layer.weight, Some(&layer.bias), BACKBONE_STRIDE, BACKBONE_PAD);
        let next = pre.map(elu);
        cache.inputs.push(x);
        cache.pre.push(pre);
        x = next;
    }
    (x, cache)
}

fn backbone_backward(
    params: &BackboneParams,
    cache: &BackboneCache,
    grad_out: FeatureMap,
    grads: &mut BackboneParams,
) {
    let mut g = grad_out;
    for (l, layer) in params.layers.iter().enumerate().rev() {
        for (gv, &p) in g.data.iter_mut().zip(&cache.pre[l].data) {
            *gv *= elu_grad(p);
        }
        let gl = &mut grads.layers[l];
        g = conv2d_backward(
            &cache.inputs[l],
            &layer.weight,
            BACKBONE_STRIDE,
            BACKBONE_PAD,
            &g,
            &mut gl.weight,
            Some(&mut gl.bias),
        );
    }
}

fn forward_cached(
    input: &PreparedSequence,
    config: &TccNetConfig,
    params: &TccNetParams,
) -> Result<(TccNetOutput, ForwardCache)> {
    params.check(config)?;
    if input.is_empty() {
        return Err(Error::EmptyInput("sequence has no frames"));
    }
    if input.branches.len() != config.branches {
        return Err(Error::Shape(format!(
            "prepared input has {} branches, config has {}",
            input.branches.len(),
            config.branches
        )));
    }
    let (fw, fh) = config.feature_size();
    let mut finals = Vec::new();
    let mut backbone_caches = Vec::new();
    let mut step_caches = Vec::new();
    let mut steps = Vec::new();
    for (b, frames) in input.branches.iter().enumerate() {
        let bb = &params.backbones[config.backbone_index(b)];
        let lstm = &params.lstms[b];
        let mut state = ConvLstmState::zeros(config.hidden, fh, fw);
        let mut bcs = Vec::new();
        let mut scs = Vec::new();
        for frame in frames {
            if frame.channels != 3 || frame.width != config.input_width || frame.height != config.input_height {
                return Err(Error::Shape(format!(
                    "frame is {}x{}x{}, network expects 3x{}x{}",
                    frame.channels, frame.height, frame.width, config.input_height, config.input_width
                )));
            }
            let (x, bc) = backbone_forward(bb, frame);
            let (next, sc) = conv_lstm_step_cached(&x, &state, lstm)?;
            bcs.push(bc);
            scs.push(sc);
            state = next;
        }
        steps.push(scs.len());
        finals.push(state.hidden);
        backbone_caches.push(bcs);
        step_caches.push(scs);
    }

    let concat = FeatureMap::concat(&finals.iter().collect::<Vec<_>>())?;
    let (pooled, argmax) = max_pool2(&concat);
    let head = &params.head;
    let hidden_act = conv2d(&pooled, &head.w1, Some(&head.b1), 1, 0).map(sigmoid);
    let map = conv2d(&hidden_act, &head.w2, Some(&head.b2), 1, 0).map(sigmoid);
    let plane = map.plane_size() as f64;
    let mut raw = [0.0; 3];
    for (c, r) in raw.iter_mut().enumerate() {
        *r = map.data[c * map.plane_size()..(c + 1) * map.plane_size()].iter().sum::<f64>() / plane;
    }
    let illuminant = normalize(Illuminant::from_array(raw)?)?;

    let output = TccNetOutput {
        illuminant,
        raw,
        spatial_map: map.clone(),
        steps,
    };
    let cache = ForwardCache {
        backbones: backbone_caches,
        steps: step_caches,
        concat_shape: (concat.channels, concat.height, concat.width),
        argmax,
        pooled,
        hidden_act,
        map,
    };
    Ok((output, cache))
}

pub fn tcc_net_forward(
    sequence: &[LinearImage],
    config: &TccNetConfig,
    params: &TccNetParams,
) -> Result<TccNetOutput> {
    let input = PreparedSequence::new(sequence, config)?;
    forward_prepared(&input, config, params)
}

pub fn forward_prepared(
    input: &PreparedSequence,
    config: &TccNetConfig,
    params: &TccNetParams,
) -> Result<TccNetOutput> {
    forward_cached(input, config, params).map(|(o, _)| o)
}

/// Angle between `y` and `truth` in radians, with its gradient in `y`.
/// The gradient is zero where the two are parallel.
pub fn angular_loss(y: [f64; 3], truth: [f64; 3]) -> (f64, [f64; 3]) {
    let ny = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let nt = (truth[0] * truth[0] + truth[1] * truth[1] + truth[2] * truth[2]).sqrt();
    let yh = [y[0] / ny, y[1] / ny, y[2] / ny];
    let th = [truth[0] / nt, truth[1] / nt, truth[2] / nt];
    let cos = yh[0] * th[0] + yh[1] * th[1] + yh[2] * th[2];
    let w = [th[0] - cos * yh[0], th[1] - cos * yh[1], th[2] - cos * yh[2]];
    let sin = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let angle = sin.atan2(cos);
    if sin < 1e-12 {
        return (angle, [0.0; 3]);
    }
    let s = -1.0 / (sin * ny);
    (angle, [w[0] * s, w[1] * s, w[2] * s])
}

/// Loss and parameter gradients of one sequence.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// Angular loss in radians.
    pub loss: f64,
    pub output: TccNetOutput,
    pub params: TccNetParams,
}

pub fn tcc_net_backward(
    sequence: &[LinearImage],
    config: &TccNetConfig,
    params: &TccNetParams,
    truth: Illuminant,
) -> Result<Gradients> {
    let input = PreparedSequence::new(sequence, config)?;
    backward_prepared(&input, config, params, truth)
}

pub fn backward_prepared(
    input: &PreparedSequence,
    config: &TccNetConfig,
    params: &TccNetParams,
    truth: Illuminant,
) -> Result<Gradients> {
    let (output, cache) = forward_cached(input, config, params)?;
    let (loss, dy) = angular_loss(output.raw, truth.to_array());
    let mut grads = params.zeros_like();

    // Spatial mean, then the two sigmoid convs of the head.
    let map = &cache.map;
    let plane = map.plane_size();
    let mut d_pre2 = map.clone();
    for (k, v) in d_pre2.data.iter_mut().enumerate() {
        let l = map.data[k];
        *v = dy[k / plane] / plane as f64 * l * (1.0 - l);
    }
    let head = &params.head;
    let mut d_hidden = conv2d_backward(
        &cache.hidden_act,
        &head.w2,
        1,
        0,
        &d_pre2,
        &mut grads.head.w2,
        Some(&mut grads.head.b2),
    );
    for (g, a) in d_hidden.data.iter_mut().zip(&cache.hidden_act.data) {
        *g *= a * (1.0 - a);
    }
    let d_pooled = conv2d_backward(
        &cache.pooled,
        &head.w1,
        1,
        0,
        &d_hidden,
        &mut grads.head.w1,
        Some(&mut grads.head.b1),
    );
    let d_concat = max_pool2_backward(cache.concat_shape, &cache.argmax, &d_pooled);
    let d_finals = d_concat.split(&vec![config.hidden; config.branches]);

    // Backprop through time, branch by branch.
    for (b, d_final) in d_finals.into_iter().enumerate() {
        let bi = config.backbone_index(b);
        let mut d_h = d_final;
        let mut d_c = FeatureMap::zeros(d_h.channels, d_h.height, d_h.width);
        for t in (0..cache.steps[b].len()).rev() {
            let sg = conv_lstm_step_backward(
                &params.lstms[b],
                &cache.steps[b][t],
                &d_h,
                &d_c,
                &mut grads.lstms[b],
            );
            backbone_backward(
                &params.backbones[bi],
                &cache.backbones[b][t],
                sg.input,
                &mut grads.backbones[bi],
            );
            d_h = sg.prev.hidden;
            d_c = sg.prev.cell;
        }
    }

    Ok(Gradients {
        loss,
        output,
        params: grads,
    })
}
