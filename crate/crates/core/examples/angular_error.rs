//! Angular error between illuminant estimates and summary statistics of a
//! batch of errors.

use tcc_core::{angular_error, summarize, Illuminant, Result};

fn main() -> Result<()> {
    let truth = Illuminant::new(0.6, 1.0, 0.45)?;
    for (name, estimate) in [
        ("exact", truth),
        ("scaled", Illuminant::new(1.2, 2.0, 0.9)?),
        ("neutral", Illuminant::new(1.0, 1.0, 1.0)?),
        ("reddish", Illuminant::new(0.9, 1.0, 0.3)?),
    ] {
        println!("{name:>8}: {:.3} deg", angular_error(estimate, truth)?.degrees());
    }

    let errors = [0.4, 1.1, 1.9, 2.5, 3.0, 4.2, 6.8, 12.5]
        .iter()
        .map(|&d| tcc_core::AngularError::from_degrees(d))
        .collect::<Result<Vec<_>>>()?;
    let s = summarize(&errors)?;
    println!(
        "mean {:.2}  median {:.2}  trimean {:.2}  best25 {:.2}  worst25 {:.2}  worst5 {:.2}",
        s.mean, s.median, s.trimean, s.best25_mean, s.worst25_mean, s.worst5_mean
    );
    Ok(())
}
