//! Smooths noisy per-frame estimates with the Gaussian belief update.

use tcc_core::estimators::GrayEdgeParams;
use tcc_core::dataset::{generate_synthetic_sequence, SceneSpec};
use tcc_core::estimators::gray_edge_family;
use tcc_core::temporal::{
    kalman_smooth, smoothed_sequence_estimate, FixedNoise, GaussianBelief, DEFAULT_TRANSITION_NOISE,
};
use tcc_core::{angular_error, Illuminant, Result};

fn main() -> Result<()> {
    // One update by hand: equal variances meet halfway.
    let prior = GaussianBelief::new([0.30, 0.40], 1e-3)?;
    let obs = GaussianBelief::new([0.34, 0.36], 1e-3)?;
    let post = kalman_smooth(prior, obs, DEFAULT_TRANSITION_NOISE)?;
    println!("fused mean {:?}, variance {:.2e}", post.mean, post.variance);

    let truth = Illuminant::new(0.7, 1.0, 0.6)?;
    let spec = SceneSpec { width: 64, height: 64, redraw_each_frame: true, noise_sigma: 0.02, ..SceneSpec::default() };
    let (_, frames) = generate_synthetic_sequence(&spec, truth, 10, 11, "kalman")?;
    let base = |f: &tcc_core::LinearImage| gray_edge_family(f, &GrayEdgeParams::gray_world());

    let smoothed = smoothed_sequence_estimate(&frames, &base, &FixedNoise::default(), DEFAULT_TRANSITION_NOISE)?;
    for (t, e) in &smoothed.per_frame {
        println!("frame {t}: raw {:.2} deg", angular_error(*e, truth)?.degrees());
    }
    println!("smoothed: {:.2} deg", angular_error(smoothed.illuminant, truth)?.degrees());
    Ok(())
}
