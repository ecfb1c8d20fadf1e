//! Sequence datasets: frame I/O, the manifest format, synthetic data,
//! statistics and splits.

pub mod frame;
pub mod manifest;
pub mod stats;
pub mod synth;

pub use frame::{load_frame, normalize_raw, normalize_raw_image, save_frame, BLACK_LEVEL, SATURATION_LEVEL};
pub use manifest::{
    image_list_manifest, import_sequence_dirs, single_image_manifest, DatasetManifest, Fold,
    SequenceRecord,
};
pub use stats::{
    apply_split_file, dataset_statistics, fixed_split, pearson, ChromaPoint, Correlation,
    CorrelationStatus, DatasetStatistics,
};
pub use synth::{
    generate_suite, generate_synthetic_sequence, sample_illuminant, write_suite, Drift, SceneSpec,
    SuiteSpec,
};
