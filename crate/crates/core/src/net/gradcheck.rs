//! Central finite-difference check of every parameter tensor.

use serde::Serialize;

use super::model::{backward_prepared, forward_prepared, PreparedSequence, TccNetConfig, TccNetParams};
use crate::color::{angular_error, Illuminant, LinearImage};
use crate::error::{Error, Result};

/// Denominator floor so tensors with vanishing gradients do not blow up
/// the relative error.
const NORM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub len: usize,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    /// `|a - n| / max(|a|, |n|)` over the whole tensor.
    pub relative_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub step: f64,
    pub loss: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.relative_error).fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.tensors.iter().all(|t| t.relative_error < tolerance)
    }
}

/// Compares analytic gradients with `(L(θ+h) - L(θ-h)) / 2h` for every
/// scalar parameter.
pub fn gradient_check(
    sequence: &[LinearImage],
    config: &TccNetConfig,
    params: &TccNetParams,
    truth: Illuminant,
    step: f64,
) -> Result<GradCheckReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let input = PreparedSequence::new(sequence, config)?;
    let analytic = backward_prepared(&input, config, params, truth)?;
    let loss_at = |p: &TccNetParams| -> Result<f64> {
        let out = forward_prepared(&input, config, p)?;
        Ok(angular_error(out.illuminant, truth)?.radians())
    };

    let mut probe = params.clone();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let grads = analytic.params.tensors();
    let mut tensors = Vec::with_capacity(names.len());
    for (ti, name) in names.into_iter().enumerate() {
        let a = grads[ti].1.data();
        let mut numeric = vec![0.0; a.len()];
        for (e, slot) in numeric.iter_mut().enumerate() {
            let orig = params.tensors()[ti].1.data()[e];
            probe.tensors_mut()[ti].1.data_mut()[e] = orig + step;
            let plus = loss_at(&probe)?;
            probe.tensors_mut()[ti].1.data_mut()[e] = orig - step;
            let minus = loss_at(&probe)?;
            probe.tensors_mut()[ti].1.data_mut()[e] = orig;
            *slot = (plus - minus) / (2.0 * step);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(&numeric).map(|(x, y)| x - y).collect();
        let (an, nn) = (norm(a), norm(&numeric));
        tensors.push(TensorCheck {
            name,
            len: a.len(),
            analytic_norm: an,
            numeric_norm: nn,
            relative_error: norm(&diff) / an.max(nn).max(NORM_FLOOR),
            max_abs_error: diff.iter().map(|d| d.abs()).fold(0.0, f64::max),
        });
    }
    Ok(GradCheckReport {
        step,
        loss: analytic.loss,
        tensors,
    })
}
