//! Trains the small network preset on four synthetic sequences, then
//! saves and reloads the checkpoint.
//!
//! `cargo run --release --example tcc_net_training [epochs]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcc_core::dataset::{generate_synthetic_sequence, sample_illuminant, SceneSpec};
use tcc_core::net::train::trailing_average;
use tcc_core::net::{
    load_checkpoint, save_checkpoint, tcc_net_forward, train, TccNetConfig, TrainConfig, TrainingSample,
};
use tcc_core::{angular_error, Result};

fn main() -> Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = SceneSpec::default();
    let data = (0..4)
        .map(|i| {
            let truth = sample_illuminant(&mut rng);
            let (_, frames) = generate_synthetic_sequence(&spec, truth, 3, i, "train")?;
            Ok(TrainingSample { frames, illuminant: truth })
        })
        .collect::<Result<Vec<_>>>()?;

    let config = TccNetConfig::tiny();
    let hyper = TrainConfig { epochs, learning_rate: 3e-4, augmentation: None, ..TrainConfig::default() };
    let (params, report) = train(&data, &config, &hyper)?;
    for e in (0..epochs).step_by((epochs / 10).max(1)) {
        println!("epoch {e:4}: batch {:.3} deg, clean {:.3} deg", report.epoch_loss[e], report.clean_loss[e]);
    }
    // Window-50 averages, each ending at a later epoch.
    let smooth = trailing_average(&report.clean_loss, 50);
    if let (Some(first), Some(last)) = (smooth.first(), smooth.last()) {
        println!("trailing average {first:.3} -> {last:.3} deg");
    }

    let dir = std::env::temp_dir().join("tcc_net_training_example");
    let path = dir.join("tiny.tccnet");
    save_checkpoint(&path, &config, &params)?;
    let (config, params) = load_checkpoint(&path)?;
    println!("saved {} parameters to {}", params.parameter_count(), path.display());
    for s in &data {
        let out = tcc_net_forward(&s.frames, &config, &params)?;
        println!("reloaded error {:.3} deg", angular_error(out.illuminant, s.illuminant)?.degrees());
    }
    Ok(())
}
