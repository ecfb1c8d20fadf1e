//! Evaluates registered methods and one custom method on a synthetic suite.

use tcc_core::bench::{emit_table, evaluate_method, parse_method, EvalContext, FoldSelection, Method, ResultsTable, TableFormat};
use tcc_core::dataset::{write_suite, DatasetManifest, SceneSpec, SuiteSpec};
use tcc_core::{Illuminant, LinearImage, Result};

/// Mean of the brightest pixel per channel over all frames.
struct MeanMax;

impl Method for MeanMax {
    fn label(&self) -> String {
        "Mean of per-frame maxima".into()
    }

    fn is_temporal(&self) -> bool {
        true
    }

    fn estimate(&self, frames: &[LinearImage], _: &EvalContext) -> Result<Illuminant> {
        let mut acc = [0.0; 3];
        for f in frames {
            for c in 0..3 {
                acc[c] += f.channel(c).into_iter().fold(0.0, f64::max);
            }
        }
        Illuminant::from_array(acc)
    }
}

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("tcc_benchmark_example");
    let suite = SuiteSpec { count: 16, lengths: vec![3, 5], scene: SceneSpec::default(), seed: 4 };
    write_suite(&suite, &dir)?;
    let manifest = DatasetManifest::load(dir.join("manifest.jsonl"))?;

    let mut methods: Vec<Box<dyn Method>> = ["gray-world", "shades-of-gray --p 4", "grayness-index", "t-gi", "kalman --base gray-world"]
        .iter()
        .map(|s| parse_method(s))
        .collect::<Result<_>>()?;
    methods.push(Box::new(MeanMax));

    let mut table = ResultsTable::default();
    for m in &methods {
        table.rows.push(evaluate_method(&manifest, FoldSelection::All, m.as_ref(), 0)?);
    }
    table.check_consistency()?;
    print!("{}", String::from_utf8_lossy(&emit_table(&table, TableFormat::Markdown)?));
    Ok(())
}
