//! Central-difference check of the network's backward pass.

use tcc_core::dataset::{generate_synthetic_sequence, SceneSpec};
use tcc_core::net::{gradient_check, TccNetConfig, TccNetParams};
use tcc_core::{Illuminant, Result};

fn main() -> Result<()> {
    let config = TccNetConfig::tiny();
    let params = TccNetParams::init(&config, 1)?;
    let spec = SceneSpec { width: 32, height: 32, ..SceneSpec::default() };
    let (_, frames) = generate_synthetic_sequence(&spec, Illuminant::new(0.4, 0.5, 0.3)?, 3, 2, "gc")?;
    let report = gradient_check(&frames, &config, &params, Illuminant::new(0.5, 0.3, 0.4)?, 1e-4)?;
    println!("loss {:.4} rad", report.loss);
    for t in &report.tensors {
        println!("{:<24} {:5} values  rel {:.2e}", t.name, t.len, t.relative_error);
    }
    println!("max relative error {:.2e} ({})", report.max_relative_error(), if report.passed(1e-3) { "ok" } else { "FAILED" });
    Ok(())
}
