//! Dataset statistics and the fixed train/test split.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::manifest::{DatasetManifest, Fold};
use crate::error::{Error, Result};

/// Projective chromaticity of a ground-truth illuminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChromaPoint {
    pub r: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationStatus {
    Defined,
    /// One of the series is constant; reported as 0.
    ZeroVariance,
    /// Fewer than two samples; reported as NaN.
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub value: f64,
    pub status: CorrelationStatus,
    pub samples: usize,
}

/// Pearson correlation coefficient with explicit degenerate cases.
pub fn pearson(x: &[f64], y: &[f64]) -> Correlation {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let n = x.len();
    if n < 2 {
        return Correlation {
            value: f64::NAN,
            status: CorrelationStatus::TooFewSamples,
            samples: n,
        };
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Relative floor: a series constant up to rounding counts as constant.
    let flat = |ss: f64, m: f64| ss.sqrt() <= 1e-12 * (1.0 + m.abs()) * (n as f64).sqrt();
    if flat(sxx, mx) || flat(syy, my) {
        return Correlation {
            value: 0.0,
            status: CorrelationStatus::ZeroVariance,
            samples: n,
        };
    }
    Correlation {
        value: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        status: CorrelationStatus::Defined,
        samples: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStatistics {
    pub chroma_points: Vec<ChromaPoint>,
    /// Sequence length -> number of sequences.
    pub length_histogram: BTreeMap<usize, usize>,
    pub mean_length: f64,
    pub median_length: f64,
    /// Correlation of sequence length with the r, g and b chromaticity.
    pub length_chroma_correlation: [Correlation; 3],
}

impl DatasetStatistics {
    /// `r,g` rows for a chromaticity scatter plot.
    pub fn chroma_csv(&self) -> String {
        let mut out = String::from("r,g\n");
        for p in &self.chroma_points {
            out.push_str(&format!("{:.6},{:.6}\n", p.r, p.g));
        }
        out
    }

    /// `length,count` rows for a histogram plot.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("length,count\n");
        for (len, count) in &self.length_histogram {
            out.push_str(&format!("{len},{count}\n"));
        }
        out
    }
}

pub fn dataset_statistics(manifest: &DatasetManifest) -> Result<DatasetStatistics> {
    if manifest.records.is_empty() {
        return Err(Error::EmptyInput("manifest has no records"));
    }
    let lengths: Vec<f64> = manifest.records.iter().map(|r| r.len() as f64).collect();
    let chroma: Vec<[f64; 3]> = manifest
        .records
        .iter()
        .map(|r| {
            let (cr, cg) = r.illuminant.chromaticity();
            [cr, cg, 1.0 - cr - cg]
        })
        .collect();

    let mut length_histogram = BTreeMap::new();
    for r in &manifest.records {
        *length_histogram.entry(r.len()).or_insert(0) += 1;
    }
    let mut sorted = lengths.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median_length = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    let corr = |c: usize| {
        let series: Vec<f64> = chroma.iter().map(|p| p[c]).collect();
        pearson(&lengths, &series)
    };

    Ok(DatasetStatistics {
        chroma_points: chroma.iter().map(|p| ChromaPoint { r: p[0], g: p[1] }).collect(),
        length_histogram,
        mean_length: lengths.iter().sum::<f64>() / n as f64,
        median_length,
        length_chroma_correlation: [corr(0), corr(1), corr(2)],
    })
}

/// Labels records train/test: a seeded shuffle, then the first
/// `floor(ratio * n)` records are train and the rest test.
pub fn fixed_split(manifest: &DatasetManifest, ratio: f64, seed: u64) -> Result<DatasetManifest> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let n = manifest.records.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 records to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * n as f64).floor() as usize;

    let mut out = manifest.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.records[i].split = Some(if rank < n_train { Fold::Train } else { Fold::Test });
    }
    Ok(out)
}

/// Applies an external split file with `<id> <train|test>` lines. Every
/// record must be listed.
pub fn apply_split_file(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(fold), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Manifest {
                line: i + 1,
                reason: "expected `<id> <train|test>`".into(),
            });
        };
        let fold: Fold = fold.parse().map_err(|e: Error| Error::Manifest {
            line: i + 1,
            reason: e.to_string(),
        })?;
        labels.insert(id.to_string(), fold);
    }
    let mut out = manifest.clone();
    for r in &mut out.records {
        r.split = Some(*labels.get(&r.id).ok_or_else(|| {
            Error::InvalidArgument(format!("split file has no entry for `{}`", r.id))
        })?);
    }
    Ok(out)
}
