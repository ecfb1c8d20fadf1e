//! Pools grayness scores across a sequence whose later frames lack gray
//! surfaces, where the single-frame grayness index has little to work with.

use tcc_core::dataset::{generate_synthetic_sequence, SceneSpec};
use tcc_core::estimators::grayness_index_estimate;
use tcc_core::temporal::temporal_grayness_estimate;
use tcc_core::{angular_error, Illuminant, Result};

fn main() -> Result<()> {
    let truth = Illuminant::new(0.55, 1.0, 0.8)?;
    let spec = SceneSpec {
        width: 96,
        height: 96,
        redraw_each_frame: true,
        gray_until: Some(2),
        ..SceneSpec::default()
    };
    let (_, frames) = generate_synthetic_sequence(&spec, truth, 6, 3, "tgi")?;

    let shot = frames.last().unwrap();
    match grayness_index_estimate(shot, 0.001) {
        Ok(e) => println!("shot frame only:  {:.2} deg", angular_error(e, truth)?.degrees()),
        Err(e) => println!("shot frame only:  failed ({e})"),
    }
    let pooled = temporal_grayness_estimate(&frames, 0.001)?;
    println!("pooled sequence:  {:.2} deg", angular_error(pooled.illuminant, truth)?.degrees());
    for (t, e) in &pooled.per_frame {
        println!("  frame {t}: {:.2} deg", angular_error(*e, truth)?.degrees());
    }
    Ok(())
}
