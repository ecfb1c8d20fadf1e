//! Writes a small synthetic dataset, splits it, and prints its statistics.

use tcc_core::dataset::{dataset_statistics, fixed_split, write_suite, DatasetManifest, Fold, SceneSpec, SuiteSpec};
use tcc_core::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("tcc_synthetic_example");
    let suite = SuiteSpec { count: 12, lengths: vec![2, 4, 6], scene: SceneSpec::default(), seed: 9 };
    let written = write_suite(&suite, &dir)?;
    let manifest = DatasetManifest::load(dir.join("manifest.jsonl"))?;
    assert_eq!(manifest.records.len(), written.records.len());

    let split = fixed_split(&manifest, 0.5, 1)?;
    println!(
        "{} sequences, {} train / {} test, written to {}",
        split.records.len(),
        split.fold(Fold::Train).count(),
        split.fold(Fold::Test).count(),
        dir.display()
    );
    let stats = dataset_statistics(&split)?;
    println!("mean length {:.2}, median {:.1}", stats.mean_length, stats.median_length);
    println!("length histogram {:?}", stats.length_histogram);
    print!("{}", stats.chroma_csv());
    Ok(())
}
