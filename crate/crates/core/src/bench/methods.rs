//! Method registry. Methods are spelled as a name followed by `--key value`
//! flags, e.g. `shades-of-gray --p 4` or
//! `kalman --base grayness-index --q 1e-4`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::color::{Illuminant, LinearImage};
use crate::error::{Error, Result};
use crate::estimators::{FrameEstimator, GrayEdgeParams, GraynessIndex, Minkowski, DEFAULT_SATURATION, DEFAULT_TOP_FRACTION};
use crate::net::checkpoint::load_checkpoint;
use crate::net::model::{tcc_net_forward, TccNetConfig, TccNetParams};
use crate::temporal::{
    moving_average_combine, smoothed_sequence_estimate, temporal_grayness_estimate, FixedNoise,
    DEFAULT_OBSERVATION_VARIANCE, DEFAULT_TRANSITION_NOISE,
};

/// What a method may know about the sequence besides its frames.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub id: &'a str,
    /// Per-sequence seed for stochastic methods.
    pub seed: u64,
    /// Ground truth. Only the oracle reads it.
    pub truth: Illuminant,
}

pub trait Method: Send + Sync {
    /// Row label in result tables.
    fn label(&self) -> String;

    /// Temporal methods receive every frame; the others only the shot frame.
    fn is_temporal(&self) -> bool;

    fn estimate(&self, frames: &[LinearImage], ctx: &EvalContext) -> Result<Illuminant>;
}

pub const METHOD_NAMES: &[&str] = &[
    "oracle",
    "fixed",
    "white-patch",
    "gray-world",
    "shades-of-gray",
    "general-gray-world",
    "grey-edge-1",
    "grey-edge-2",
    "grayness-index",
    "t-gi",
    "moving-average",
    "kalman",
    "tcc-net",
];

struct Oracle;

impl Method for Oracle {
    fn label(&self) -> String {
        "Oracle".into()
    }
    fn is_temporal(&self) -> bool {
        false
    }
    fn estimate(&self, _: &[LinearImage], ctx: &EvalContext) -> Result<Illuminant> {
        Ok(ctx.truth)
    }
}

struct Fixed(Illuminant);

impl Method for Fixed {
    fn label(&self) -> String {
        format!("Fixed ({:.4}, {:.4}, {:.4})", self.0.r, self.0.g, self.0.b)
    }
    fn is_temporal(&self) -> bool {
        false
    }
    fn estimate(&self, _: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        Ok(self.0)
    }
}

/// A single-frame estimator applied to the shot frame.
pub struct SingleFrame {
    label: String,
    estimator: Box<dyn FrameEstimator>,
}

impl SingleFrame {
    pub fn new(label: impl Into<String>, estimator: impl FrameEstimator + 'static) -> Self {
        Self {
            label: label.into(),
            estimator: Box::new(estimator),
        }
    }
}

impl Method for SingleFrame {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn is_temporal(&self) -> bool {
        false
    }
    fn estimate(&self, frames: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        let shot = frames.last().ok_or(Error::EmptyInput("sequence has no frames"))?;
        self.estimator.estimate(shot)
    }
}

struct TemporalGrayness {
    top_fraction: f64,
}

impl Method for TemporalGrayness {
    fn label(&self) -> String {
        format!("T.GI ({}%)", self.top_fraction * 100.0)
    }
    fn is_temporal(&self) -> bool {
        true
    }
    fn estimate(&self, frames: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        Ok(temporal_grayness_estimate(frames, self.top_fraction)?.illuminant)
    }
}

struct MovingAverage {
    base: SingleFrame,
    window: usize,
}

impl Method for MovingAverage {
    fn label(&self) -> String {
        format!("Moving average of {} (window {})", self.base.label, self.window)
    }
    fn is_temporal(&self) -> bool {
        true
    }
    fn estimate(&self, frames: &[LinearImage], ctx: &EvalContext) -> Result<Illuminant> {
        let per_frame: Vec<Illuminant> = frames
            .par_iter()
            .map(|f| self.base.estimator.estimate(f))
            .collect::<Vec<_>>()
            .into_iter()
            .enumerate()
            .filter_map(|(t, r)| match r {
                Ok(e) => Some(e),
                Err(e) => {
                    log::warn!("{}: frame {t}: {e}", ctx.id);
                    None
                }
            })
            .collect();
        if per_frame.is_empty() {
            return Err(Error::DegenerateSequence(
                "base estimator failed on every frame".into(),
            ));
        }
        moving_average_combine(&per_frame, self.window)
    }
}

struct Kalman {
    base: SingleFrame,
    transition_noise: f64,
    observation_variance: f64,
}

impl Method for Kalman {
    fn label(&self) -> String {
        format!("Kalman-smoothed {}", self.base.label)
    }
    fn is_temporal(&self) -> bool {
        true
    }
    fn estimate(&self, frames: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        let noise = FixedNoise(self.observation_variance);
        Ok(smoothed_sequence_estimate(frames, &*self.base.estimator, &noise, self.transition_noise)?
            .illuminant)
    }
}

/// Recurrent network loaded from a checkpoint.
pub struct TccNet {
    path: String,
    config: TccNetConfig,
    params: TccNetParams,
}

impl TccNet {
    pub fn load(path: &str) -> Result<Self> {
        let (config, params) = load_checkpoint(path)?;
        Ok(Self {
            path: path.to_string(),
            config,
            params,
        })
    }
}

impl Method for TccNet {
    fn label(&self) -> String {
        let name = std::path::Path::new(&self.path)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        format!("TCC-Net ({name})")
    }
    fn is_temporal(&self) -> bool {
        true
    }
    fn estimate(&self, frames: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        Ok(tcc_net_forward(frames, &self.config, &self.params)?.illuminant)
    }
}

/// `--key value` flags of a method spec.
struct Flags {
    method: String,
    values: BTreeMap<String, String>,
}

impl Flags {
    fn parse(spec: &str) -> Result<(String, Self)> {
        let mut tokens = spec.split_whitespace();
        let name = tokens
            .next()
            .ok_or_else(|| Error::UnknownMethod(String::new()))?
            .to_string();
        let mut values = BTreeMap::new();
        while let Some(tok) = tokens.next() {
            let key = tok.strip_prefix("--").ok_or_else(|| {
                Error::InvalidArgument(format!("`{name}`: expected a --flag, found `{tok}`"))
            })?;
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = tokens.next().ok_or_else(|| {
                        Error::InvalidArgument(format!("`{name}`: flag --{key} needs a value"))
                    })?;
                    (key.to_string(), v.to_string())
                }
            };
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::InvalidArgument(format!("`{name}`: --{key} given twice")));
            }
        }
        Ok((
            name.clone(),
            Self {
                method: name,
                values,
            },
        ))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::InvalidArgument(format!("`{}`: --{key} expects a number, got `{v}`", self.method))
            }),
        }
    }

    fn saturation(&mut self) -> Result<Option<f32>> {
        match self.take("saturation").as_deref() {
            None => Ok(Some(DEFAULT_SATURATION)),
            Some("none") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("`{}`: --saturation expects a number or `none`", self.method))
            }),
        }
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::InvalidArgument(format!(
                "`{}` does not take --{k}",
                self.method
            ))),
        }
    }
}

fn num(v: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{v}");
    s
}

fn single_frame(name: &str, flags: &mut Flags) -> Result<SingleFrame> {
    let gray_edge = |label: String, params: GrayEdgeParams| -> Result<SingleFrame> {
        params.validate()?;
        Ok(SingleFrame::new(label, params))
    };
    match name {
        "white-patch" => {
            let sat = flags.saturation()?;
            gray_edge("White-Patch".into(), GrayEdgeParams::white_patch().with_saturation(sat))
        }
        "gray-world" => {
            let sat = flags.saturation()?;
            gray_edge("Gray-World".into(), GrayEdgeParams::gray_world().with_saturation(sat))
        }
        "shades-of-gray" => {
            let p = flags.f64("p", 4.0)?;
            let sat = flags.saturation()?;
            gray_edge(
                format!("Shades-of-Gray (p={})", num(p)),
                GrayEdgeParams::shades_of_gray(p).with_saturation(sat),
            )
        }
        "general-gray-world" => {
            let (p, sigma) = (flags.f64("p", 1.0)?, flags.f64("sigma", 9.0)?);
            let sat = flags.saturation()?;
            gray_edge(
                format!("General Gray-World (p={}, sigma={})", num(p), num(sigma)),
                GrayEdgeParams::general_gray_world(p, sigma).with_saturation(sat),
            )
        }
        "grey-edge-1" | "gray-edge-1" | "grey-edge-2" | "gray-edge-2" => {
            let order = if name.ends_with('1') { 1 } else { 2 };
            let p = flags.take("p");
            let minkowski = match p.as_deref() {
                Some("inf") => Minkowski::Infinite,
                Some(v) => Minkowski::Finite(v.parse().map_err(|_| {
                    Error::InvalidArgument(format!("`{name}`: --p expects a number or `inf`"))
                })?),
                None => Minkowski::Finite(1.0),
            };
            let sigma = flags.f64("sigma", 9.0)?;
            let sat = flags.saturation()?;
            let params = GrayEdgeParams::new(order, minkowski, sigma)?.with_saturation(sat);
            let ord = if order == 1 { "1st" } else { "2nd" };
            gray_edge(format!("{ord}-order Grey-Edge ({params})"), params)
        }
        "grayness-index" => {
            let fraction = flags.f64("fraction", DEFAULT_TOP_FRACTION)?;
            crate::estimators::check_fraction(fraction)?;
            Ok(SingleFrame::new(
                format!("Grayness Index ({}%)", fraction * 100.0),
                GraynessIndex {
                    top_fraction: fraction,
                },
            ))
        }
        other => Err(Error::UnknownMethod(other.to_string())),
    }
}

/// Builds a method from its spec string.
pub fn parse_method(spec: &str) -> Result<Box<dyn Method>> {
    let (name, mut flags) = Flags::parse(spec)?;
    let method: Box<dyn Method> = match name.as_str() {
        "oracle" => Box::new(Oracle),
        "fixed" => {
            let rgb = flags.take("rgb").unwrap_or_else(|| "1,1,1".into());
            let parts: Vec<f64> = rgb
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("fixed: bad --rgb `{rgb}`")))?;
            let [r, g, b] = parts[..] else {
                return Err(Error::InvalidArgument(format!("fixed: --rgb needs 3 values, got `{rgb}`")));
            };
            Box::new(Fixed(Illuminant::new(r, g, b)?))
        }
        "t-gi" => {
            let top_fraction = flags.f64("fraction", DEFAULT_TOP_FRACTION)?;
            crate::estimators::check_fraction(top_fraction)?;
            Box::new(TemporalGrayness { top_fraction })
        }
        "moving-average" | "kalman" => {
            let base_name = flags.take("base").unwrap_or_else(|| "grayness-index".into());
            let window = flags.f64("window", 0.0)?;
            let q = flags.f64("q", DEFAULT_TRANSITION_NOISE)?;
            let r = flags.f64("r", DEFAULT_OBSERVATION_VARIANCE)?;
            let base = single_frame(&base_name, &mut flags)?;
            if name == "moving-average" {
                if window < 0.0 || window.fract() != 0.0 {
                    return Err(Error::InvalidArgument("--window must be a whole number".into()));
                }
                Box::new(MovingAverage {
                    base,
                    window: if window == 0.0 { usize::MAX } else { window as usize },
                })
            } else {
                if !(q >= 0.0 && r > 0.0) {
                    return Err(Error::InvalidArgument("kalman needs --q >= 0 and --r > 0".into()));
                }
                Box::new(Kalman {
                    base,
                    transition_noise: q,
                    observation_variance: r,
                })
            }
        }
        "tcc-net" => {
            let path = flags.take("checkpoint").ok_or_else(|| {
                Error::InvalidArgument("tcc-net needs --checkpoint <path>".into())
            })?;
            Box::new(TccNet::load(&path)?)
        }
        other => Box::new(single_frame(other, &mut flags)?),
    };
    flags.finish()?;
    Ok(method)
}
