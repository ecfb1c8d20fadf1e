//! Runs every single-frame estimator on one synthetic frame.

use tcc_core::dataset::{generate_synthetic_sequence, SceneSpec};
use tcc_core::estimators::{gray_edge_family, grayness_index_detail, GrayEdgeParams, DEFAULT_TOP_FRACTION};
use tcc_core::{angular_error, Illuminant, Result};

fn main() -> Result<()> {
    let truth = Illuminant::new(0.75, 1.0, 0.5)?;
    let spec = SceneSpec { width: 128, height: 128, ..SceneSpec::default() };
    let (_, frames) = generate_synthetic_sequence(&spec, truth, 1, 7, "demo")?;
    let frame = &frames[0];

    let family = [
        ("White-Patch", GrayEdgeParams::white_patch()),
        ("Gray-World", GrayEdgeParams::gray_world()),
        ("Shades-of-Gray p=4", GrayEdgeParams::shades_of_gray(4.0)),
        ("General Gray-World p=1 s=9", GrayEdgeParams::general_gray_world(1.0, 9.0)),
        ("1st-order Grey-Edge p=1 s=6", GrayEdgeParams::grey_edge_first(1.0, 6.0)),
        ("2nd-order Grey-Edge p=1 s=9", GrayEdgeParams::grey_edge_second(1.0, 9.0)),
    ];
    for (name, params) in family {
        let e = gray_edge_family(frame, &params)?;
        println!("{name:<30} {:6.2} deg", angular_error(e, truth)?.degrees());
    }

    let gi = grayness_index_detail(frame, DEFAULT_TOP_FRACTION)?;
    println!(
        "{:<30} {:6.2} deg ({} pixels selected{})",
        "Grayness Index 0.1%",
        angular_error(gi.illuminant, truth)?.degrees(),
        gi.selected,
        if gi.low_confidence() { ", low confidence" } else { "" }
    );
    Ok(())
}
