//! RMSprop training with batch size 1.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{backward_prepared, forward_prepared, PreparedSequence, TccNetConfig, TccNetParams};
use super::sampling::Augmentation;
use crate::color::{angular_error, Illuminant, LinearImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub frames: Vec<LinearImage>,
    pub illuminant: Illuminant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub epsilon: f64,
    /// Geometric augmentation; `None` trains on the plain frames.
    #[serde(skip)]
    pub augmentation: Option<Augmentation>,
    pub seed: u64,
    /// Evaluate the un-augmented training set after every epoch.
    pub track_clean_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 3e-5,
            rms_decay: 0.99,
            epsilon: 1e-8,
            augmentation: Some(Augmentation::default()),
            seed: 0,
            track_clean_loss: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.rms_decay) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("rms decay must be in [0, 1) and epsilon > 0".into()));
        }
        Ok(())
    }
}

/// Per-epoch curves, angular error in degrees.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainReport {
    /// Mean loss over the samples seen during the epoch (augmented when
    /// augmentation is on), measured before each update.
    pub epoch_loss: Vec<f64>,
    /// Mean error on the plain training set after each epoch.
    pub clean_loss: Vec<f64>,
}

impl TrainReport {
    /// The clean curve when tracked, else the epoch curve.
    pub fn curve(&self) -> &[f64] {
        if self.clean_loss.is_empty() {
            &self.epoch_loss
        } else {
            &self.clean_loss
        }
    }
}

/// Running average of squared gradients; `θ -= lr g / (sqrt(v) + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    square_avg: TccNetParams,
}

impl RmsProp {
    pub fn new(params: &TccNetParams, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            decay,
            epsilon,
            square_avg: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut TccNetParams, grads: &TccNetParams) {
        let (lr, rho, eps) = (self.learning_rate, self.decay, self.epsilon);
        let g = grads.tensors();
        for (((_, p), (_, v)), (_, g)) in params
            .tensors_mut()
            .into_iter()
            .zip(self.square_avg.tensors_mut())
            .zip(g)
        {
            for ((p, v), g) in p.data_mut().iter_mut().zip(v.data_mut()).zip(g.data()) {
                *v = rho * *v + (1.0 - rho) * g * g;
                *p -= lr * g / (v.sqrt() + eps);
            }
        }
    }
}

/// Mean angular error in degrees over prepared sequences.
fn mean_error(
    prepared: &[PreparedSequence],
    truths: &[Illuminant],
    config: &TccNetConfig,
    params: &TccNetParams,
) -> Result<f64> {
    let mut sum = 0.0;
    for (p, &t) in prepared.iter().zip(truths) {
        sum += angular_error(forward_prepared(p, config, params)?.illuminant, t)?.degrees();
    }
    Ok(sum / prepared.len() as f64)
}

pub fn train(
    dataset: &[TrainingSample],
    config: &TccNetConfig,
    hyper: &TrainConfig,
) -> Result<(TccNetParams, TrainReport)> {
    let params = TccNetParams::init(config, hyper.seed)?;
    train_from(params, dataset, config, hyper)
}

/// Continues training from existing weights.
pub fn train_from(
    mut params: TccNetParams,
    dataset: &[TrainingSample],
    config: &TccNetConfig,
    hyper: &TrainConfig,
) -> Result<(TccNetParams, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training set is empty"));
    }
    hyper.validate()?;
    params.check(config)?;
    let clean: Vec<PreparedSequence> = dataset
        .iter()
        .map(|s| PreparedSequence::new(&s.frames, config))
        .collect::<Result<_>>()?;
    let truths: Vec<Illuminant> = dataset.iter().map(|s| s.illuminant).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x5eed);
    let mut opt = RmsProp::new(&params, hyper.learning_rate, hyper.rms_decay, hyper.epsilon);
    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let augmented;
            let input = match &hyper.augmentation {
                Some(aug) => {
                    let frames =
                        aug.apply(&dataset[i].frames, config.input_width, config.input_height, &mut rng)?;
                    augmented = PreparedSequence::new(&frames, config)?;
                    &augmented
                }
                None => &clean[i],
            };
            let g = backward_prepared(input, config, &params, truths[i])?;
            if !g.loss.is_finite() {
                return Err(Error::Numerical(format!("loss diverged at epoch {epoch}")));
            }
            sum += g.loss.to_degrees();
            opt.step(&mut params, &g.params);
        }
        report.epoch_loss.push(sum / dataset.len() as f64);
        if hyper.track_clean_loss {
            report.clean_loss.push(mean_error(&clean, &truths, config, &params)?);
        }
        if epoch % 50 == 0 || epoch + 1 == hyper.epochs {
            log::info!(
                "epoch {epoch}: loss {:.3} deg, clean {:.3} deg",
                report.epoch_loss[epoch],
                report.clean_loss.last().copied().unwrap_or(f64::NAN)
            );
        }
    }
    Ok((params, report))
}

/// Centered moving average with a window clipped at the ends.
pub fn smooth(curve: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..curve.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + window - half).min(curve.len());
            curve[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Trailing moving average over full windows only.
pub fn trailing_average(curve: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || curve.len() < window {
        return Vec::new();
    }
    curve.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_sequence, sample_illuminant, SceneSpec};

    fn samples(n: usize, len: usize) -> Vec<TrainingSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = SceneSpec {
            width: 16,
            height: 16,
            ..SceneSpec::default()
        };
        (0..n)
            .map(|i| {
                let truth = sample_illuminant(&mut rng);
                let (_, frames) = generate_synthetic_sequence(&spec, truth, len, i as u64, "t").unwrap();
                TrainingSample {
                    frames,
                    illuminant: truth,
                }
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_keeps_the_curve_flat() {
        let data = samples(2, 2);
        let hyper = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (params, report) = train(&data, &TccNetConfig::tiny(), &hyper).unwrap();
        assert_eq!(params, TccNetParams::init(&TccNetConfig::tiny(), 0).unwrap());
        assert!(report.clean_loss.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(report.epoch_loss.len(), 5);
    }

    #[test]
    fn training_reduces_loss() {
        let data = samples(2, 2);
        let hyper = TrainConfig {
            epochs: 30,
            learning_rate: 3e-3,
            augmentation: None,
            ..TrainConfig::default()
        };
        let (_, report) = train(&data, &TccNetConfig::tiny(), &hyper).unwrap();
        assert!(report.clean_loss.last().unwrap() < &report.clean_loss[0]);
    }

    #[test]
    fn empty_dataset_errors() {
        assert!(matches!(
            train(&[], &TccNetConfig::tiny(), &TrainConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn rmsprop_first_step_is_sign_scaled() {
        let config = TccNetConfig::tiny();
        let mut p = TccNetParams::zeros(&config).unwrap();
        let mut g = p.zeros_like();
        g.head.b2.data_mut()[0] = 2.0;
        g.head.b2.data_mut()[1] = -0.5;
        let mut opt = RmsProp::new(&p, 0.1, 0.99, 1e-8);
        opt.step(&mut p, &g);
        // v = 0.01 g^2, so the step is lr * g / (0.1 |g|) = sign(g).
        assert!((p.head.b2.data()[0] + 1.0).abs() < 1e-6);
        assert!((p.head.b2.data()[1] - 1.0).abs() < 1e-6);
        assert_eq!(p.head.b2.data()[2], 0.0);
    }

    #[test]
    fn smoothing() {
        assert_eq!(trailing_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
        assert!(trailing_average(&[1.0], 2).is_empty());
        assert_eq!(smooth(&[1.0, 2.0, 3.0], 3), vec![1.5, 2.0, 2.5]);
    }
}
