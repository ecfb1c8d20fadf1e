//! Combining per-frame information into one estimate for the shot frame.
//!
//! Three mechanisms are provided: a moving average over per-frame
//! estimates, a pooled multi-frame grayness map, and a Kalman-style fold of
//! per-frame chromaticity beliefs.

use log::warn;
use rayon::prelude::*;

use crate::color::{normalize, Illuminant, LinearImage};
use crate::error::{Error, Result};
use crate::estimators::{
    check_fraction, grayness_index_estimate, grayness_map, mean_rgb, select_grayest,
    FrameEstimator, MIN_SELECTABLE,
};

/// Default per-step transition noise, in chromaticity² units.
pub const DEFAULT_TRANSITION_NOISE: f64 = 1e-4;
/// Default observation variance for the fixed noise model.
pub const DEFAULT_OBSERVATION_VARIANCE: f64 = 1e-3;

/// The estimate for a sequence plus the per-frame estimates behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEstimate {
    pub illuminant: Illuminant,
    pub per_frame: Vec<(usize, Illuminant)>,
    pub confidence: Option<f64>,
}

/// How frames are weighted by [`moving_average_combine_weighted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameWeighting {
    Uniform,
    /// Weight `decay^(age)`, where the newest frame has age 0.
    Exponential { decay: f64 },
}

/// Uniform moving average over the last `window` estimates.
pub fn moving_average_combine(estimates: &[Illuminant], window: usize) -> Result<Illuminant> {
    moving_average_combine_weighted(estimates, window, FrameWeighting::Uniform)
}

pub fn moving_average_combine_weighted(
    estimates: &[Illuminant],
    window: usize,
    weighting: FrameWeighting,
) -> Result<Illuminant> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("moving average needs at least one estimate"));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    if let FrameWeighting::Exponential { decay } = weighting {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decay must be in (0, 1], got {decay}"
            )));
        }
    }
    let tail = &estimates[estimates.len().saturating_sub(window)..];
    if tail.len() == 1 {
        return normalize(tail[0]);
    }
    let mut sum = [0.0; 3];
    for (age, est) in tail.iter().rev().enumerate() {
        let w = match weighting {
            FrameWeighting::Uniform => 1.0,
            FrameWeighting::Exponential { decay } => decay.powi(age as i32),
        };
        let unit = normalize(*est)?.to_array();
        for c in 0..3 {
            sum[c] += w * unit[c];
        }
    }
    Illuminant::from_array(sum)?.normalized()
}

/// Pools the grayness maps of all frames and selects the grayest pixels of
/// the whole sequence.
///
/// Raw scores are pooled without per-frame normalization. `per_frame` holds
/// the single-frame grayness estimates of frames where one exists.
pub fn temporal_grayness_estimate(
    sequence: &[LinearImage],
    top_fraction: f64,
) -> Result<SequenceEstimate> {
    check_fraction(top_fraction)?;
    let first = sequence
        .first()
        .ok_or(Error::EmptyInput("sequence has no frames"))?;
    if let Some(f) = sequence.iter().find(|f| !f.same_size(first)) {
        return Err(Error::Shape(format!(
            "frame size {}x{} differs from {}x{}",
            f.width(),
            f.height(),
            first.width(),
            first.height()
        )));
    }

    let maps = sequence
        .par_iter()
        .map(grayness_map)
        .collect::<Result<Vec<_>>>()?;

    let candidates: Vec<(f64, (usize, usize))> = maps
        .iter()
        .enumerate()
        .flat_map(|(t, map)| {
            map.values
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_finite())
                .map(move |(i, &s)| (s, (t, i)))
        })
        .collect();
    if candidates.len() < MIN_SELECTABLE {
        return Err(Error::DegenerateSequence(format!(
            "only {} selectable pixels across {} frames",
            candidates.len(),
            sequence.len()
        )));
    }

    let selected = select_grayest(candidates, top_fraction);
    let mean_score = selected.iter().map(|c| c.0).sum::<f64>() / selected.len() as f64;
    let w = first.width();
    let illuminant = mean_rgb(
        selected
            .iter()
            .map(|&(_, (t, i))| sequence[t].pixel(i % w, i / w)),
    )
    .map_err(|e| Error::DegenerateSequence(e.to_string()))?;

    let per_frame = sequence
        .iter()
        .enumerate()
        .filter_map(|(t, f)| grayness_index_estimate(f, top_fraction).ok().map(|e| (t, e)))
        .collect();

    Ok(SequenceEstimate {
        illuminant,
        per_frame,
        confidence: Some(1.0 / (1.0 + mean_score)),
    })
}

/// Isotropic Gaussian over projective chromaticity `(r, g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: [f64; 2],
    pub variance: f64,
}

impl GaussianBelief {
    pub fn new(mean: [f64; 2], variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidBelief(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if !(mean[0] > 0.0 && mean[1] > 0.0 && mean[0] + mean[1] < 1.0) {
            return Err(Error::InvalidBelief(format!(
                "mean ({}, {}) is not a valid chromaticity",
                mean[0], mean[1]
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn from_illuminant(illuminant: Illuminant, variance: f64) -> Result<Self> {
        let (r, g) = illuminant.chromaticity();
        Self::new([r, g], variance)
    }

    /// Unit-norm illuminant at the mean, with `b = 1 - r - g`.
    pub fn to_illuminant(&self) -> Result<Illuminant> {
        Illuminant::from_chromaticity(self.mean[0], self.mean[1])
    }
}

/// Fuses the running belief with a new observation (Gaussian product) and
/// inflates the result by the transition noise.
pub fn kalman_smooth(
    previous: GaussianBelief,
    observation: GaussianBelief,
    transition_noise: f64,
) -> Result<GaussianBelief> {
    let (vp, vo) = (previous.variance, observation.variance);
    if !(vp > 0.0 && vo > 0.0) {
        return Err(Error::InvalidBelief(format!(
            "variances must be positive, got {vp} and {vo}"
        )));
    }
    if !(transition_noise >= 0.0) {
        return Err(Error::InvalidBelief(format!(
            "transition noise must be non-negative, got {transition_noise}"
        )));
    }
    let total = vp + vo;
    let fuse = |a: f64, b: f64| (vo * a + vp * b) / total;
    Ok(GaussianBelief {
        mean: [
            fuse(previous.mean[0], observation.mean[0]),
            fuse(previous.mean[1], observation.mean[1]),
        ],
        variance: vp * vo / total + transition_noise,
    })
}

/// Assigns an observation variance to a per-frame estimate.
pub trait NoiseModel: Send + Sync {
    fn variance(&self, frame_index: usize, frame: &LinearImage, estimate: Illuminant) -> f64;
}

/// The same observation variance for every frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedNoise(pub f64);

impl Default for FixedNoise {
    fn default() -> Self {
        Self(DEFAULT_OBSERVATION_VARIANCE)
    }
}

impl NoiseModel for FixedNoise {
    fn variance(&self, _: usize, _: &LinearImage, _: Illuminant) -> f64 {
        self.0
    }
}

impl<F> NoiseModel for F
where
    F: Fn(usize, &LinearImage, Illuminant) -> f64 + Send + Sync,
{
    fn variance(&self, frame_index: usize, frame: &LinearImage, estimate: Illuminant) -> f64 {
        self(frame_index, frame, estimate)
    }
}

/// Runs `base` on every frame and folds the per-frame beliefs left to right
/// with [`kalman_smooth`].
///
/// Frames where the base estimator fails are skipped with a warning; if it
/// fails on every frame the sequence is degenerate.
pub fn smoothed_sequence_estimate(
    sequence: &[LinearImage],
    base: &dyn FrameEstimator,
    noise_model: &dyn NoiseModel,
    transition_noise: f64,
) -> Result<SequenceEstimate> {
    if sequence.is_empty() {
        return Err(Error::EmptyInput("sequence has no frames"));
    }
    let results: Vec<Result<Illuminant>> = sequence.par_iter().map(|f| base.estimate(f)).collect();

    let mut per_frame = Vec::with_capacity(sequence.len());
    let mut belief: Option<GaussianBelief> = None;
    for (t, result) in results.into_iter().enumerate() {
        let estimate = match result {
            Ok(e) => e,
            Err(e) => {
                warn!("frame {t}: base estimator failed: {e}");
                continue;
            }
        };
        let variance = noise_model.variance(t, &sequence[t], estimate);
        let observation = match GaussianBelief::from_illuminant(estimate, variance) {
            Ok(o) => o,
            Err(e) => {
                warn!("frame {t}: unusable estimate: {e}");
                continue;
            }
        };
        per_frame.push((t, estimate.normalized()?));
        belief = Some(match belief {
            None => observation,
            Some(prev) => kalman_smooth(prev, observation, transition_noise)?,
        });
    }

    let belief = belief.ok_or_else(|| {
        Error::DegenerateSequence("base estimator failed on every frame".into())
    })?;
    Ok(SequenceEstimate {
        illuminant: belief.to_illuminant()?,
        per_frame,
        confidence: Some(1.0 / belief.variance),
    })
}
