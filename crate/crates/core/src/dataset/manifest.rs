//! Line-delimited sequence manifest.
//!
//! One JSON object per line, UTF-8:
//!
//! ```text
//! {"id":"seq_000","frames":["seq_000/00.png","seq_000/01.png"],"illuminant":[0.52,0.61,0.59],"split":"train","meta":{"scene":"indoor"}}
//! ```
//!
//! * `frames` are paths relative to the manifest's directory, shot frame last.
//! * `illuminant` is the unit-norm ground-truth RGB triple.
//! * `split` is `"train"`, `"test"` or absent.
//! * `meta` is an optional string-to-string map.
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::color::{Illuminant, LinearImage};
use crate::dataset::frame::load_frame;
use crate::error::{Error, Result};

/// Frame count bounds of the published sequence format.
pub const TCC_MIN_FRAMES: usize = 3;
pub const TCC_MAX_FRAMES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Test,
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fold::Train => "train",
            Fold::Test => "test",
        })
    }
}

impl std::str::FromStr for Fold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Fold::Train),
            "test" => Ok(Fold::Test),
            other => Err(Error::InvalidArgument(format!("unknown fold `{other}`"))),
        }
    }
}

/// One sequence: its frames (shot frame last) and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub frames: Vec<String>,
    #[serde(with = "illuminant_triple")]
    pub illuminant: Illuminant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Fold>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

mod illuminant_triple {
    use super::Illuminant;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ill: &Illuminant, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ill.to_array())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Illuminant, D::Error> {
        let rgb = <[f64; 3]>::deserialize(d)?;
        Illuminant::from_array(rgb).map_err(D::Error::custom)
    }
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// A set of sequence records rooted at a directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub records: Vec<SequenceRecord>,
    /// Directory that relative frame paths resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(records: Vec<SequenceRecord>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self {
            records,
            base_dir: base_dir.into(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Unique ids and at least one frame per record.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Manifest {
                    line: i + 1,
                    reason: format!("duplicate id `{}`", r.id),
                });
            }
            if r.frames.is_empty() {
                return Err(Error::Manifest {
                    line: i + 1,
                    reason: format!("record `{}` has no frames", r.id),
                });
            }
        }
        Ok(())
    }

    /// Additionally checks the 3 to 17 frame bound of the sequence format.
    pub fn validate_tcc(&self) -> Result<()> {
        self.validate()?;
        for (i, r) in self.records.iter().enumerate() {
            if !(TCC_MIN_FRAMES..=TCC_MAX_FRAMES).contains(&r.len()) {
                return Err(Error::Manifest {
                    line: i + 1,
                    reason: format!("record `{}` has {} frames", r.id, r.len()),
                });
            }
        }
        Ok(())
    }

    /// True when every record carries a split label.
    pub fn is_split(&self) -> bool {
        self.records.iter().all(|r| r.split.is_some())
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record: SequenceRecord =
                serde_json::from_str(trimmed).map_err(|e| Error::Manifest {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            records.push(record);
        }
        Self::new(records, base_dir)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// The same manifest resolved against `new_base`. Relative frame paths
    /// become absolute unless both directories are the same.
    pub fn rebased(&self, new_base: impl AsRef<Path>) -> Result<Self> {
        let new_base = new_base.as_ref();
        let canon = |p: &Path| {
            let p = if p.as_os_str().is_empty() { Path::new(".") } else { p };
            fs::canonicalize(p).map_err(|e| Error::io(p, e))
        };
        let old = canon(&self.base_dir)?;
        let mut out = self.clone();
        out.base_dir = new_base.to_path_buf();
        if canon(new_base).ok().as_deref() == Some(old.as_path()) {
            return Ok(out);
        }
        for r in &mut out.records {
            for f in &mut r.frames {
                if Path::new(f.as_str()).is_relative() {
                    *f = old.join(&*f).to_string_lossy().into_owned();
                }
            }
        }
        Ok(out)
    }

    pub fn frame_path(&self, frame: &str) -> PathBuf {
        self.base_dir.join(frame)
    }

    /// Loads every frame of a record, shot frame last.
    pub fn load_frames(&self, record: &SequenceRecord) -> Result<Vec<LinearImage>> {
        record
            .frames
            .iter()
            .map(|f| load_frame(self.frame_path(f)))
            .collect()
    }

    pub fn fold(&self, fold: Fold) -> impl Iterator<Item = &SequenceRecord> {
        self.records.iter().filter(move |r| r.split == Some(fold))
    }
}

/// Wraps single-image datasets: each `(frame path, ground truth)` becomes a
/// one-frame sequence.
pub fn single_image_manifest(
    entries: impl IntoIterator<Item = (String, Illuminant)>,
    base_dir: impl Into<PathBuf>,
) -> Result<DatasetManifest> {
    let records = entries
        .into_iter()
        .map(|(frame, illuminant)| {
            let id = Path::new(&frame)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| frame.clone());
            Ok(SequenceRecord {
                id,
                frames: vec![frame],
                illuminant: illuminant.normalized()?,
                split: None,
                meta: BTreeMap::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DatasetManifest::new(records, base_dir)
}

/// Reads a plain image list (`<relative path> <r> <g> <b>` per line), the
/// usual export of single-image benchmarks, as one-frame sequences.
pub fn image_list_manifest(list_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let list_path = list_path.as_ref();
    let text = fs::read_to_string(list_path).map_err(|e| Error::io(list_path, e))?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |reason: String| Error::Manifest {
            line: i + 1,
            reason,
        };
        if fields.len() != 4 {
            return Err(bad(format!("expected `path r g b`, got {} fields", fields.len())));
        }
        let mut rgb = [0.0; 3];
        for (c, f) in fields[1..].iter().enumerate() {
            rgb[c] = f.parse().map_err(|_| bad(format!("bad number `{f}`")))?;
        }
        let ill = Illuminant::from_array(rgb).map_err(|e| bad(e.to_string()))?;
        entries.push((fields[0].to_string(), ill));
    }
    let base = list_path.parent().map(Path::to_path_buf).unwrap_or_default();
    single_image_manifest(entries, base)
}

/// Imports a directory tree with one sub-directory per sequence. Each holds
/// numbered PNG frames (sorted numerically, highest = shot frame) and a
/// `groundtruth.txt` with three numbers.
pub fn import_sequence_dirs(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();

    let mut records = Vec::new();
    for dir in dirs {
        let id = dir.file_name().unwrap().to_string_lossy().into_owned();
        let gt_path = dir.join("groundtruth.txt");
        let gt_text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
        let values: Vec<f64> = gt_text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Manifest {
                line: 1,
                reason: format!("{}: {e}", gt_path.display()),
            })?;
        if values.len() != 3 {
            return Err(Error::Manifest {
                line: 1,
                reason: format!("{}: expected 3 values", gt_path.display()),
            });
        }

        let mut frames: Vec<(u64, String)> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .filter_map(|p| {
                let stem = p.file_stem()?.to_string_lossy();
                let n: u64 = stem.parse().ok()?;
                Some((n, format!("{id}/{}", p.file_name()?.to_string_lossy())))
            })
            .collect();
        frames.sort();
        records.push(SequenceRecord {
            id,
            frames: frames.into_iter().map(|f| f.1).collect(),
            illuminant: Illuminant::new(values[0], values[1], values[2])?.normalized()?,
            split: None,
            meta: BTreeMap::new(),
        });
    }
    DatasetManifest::new(records, root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, n: usize) -> SequenceRecord {
        SequenceRecord {
            id: id.into(),
            frames: (0..n).map(|i| format!("{id}/{i:02}.png")).collect(),
            illuminant: Illuminant::new(0.5, 0.6, 0.7).unwrap(),
            split: None,
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn parses_documented_line() {
        let text = r#"
# comment
{"id":"seq_000","frames":["seq_000/00.png","seq_000/01.png"],"illuminant":[0.52,0.61,0.59],"split":"train","meta":{"scene":"indoor"}}
{"id":"seq_001","frames":["a.png"],"illuminant":[1,1,1]}
"#;
        let m = DatasetManifest::parse(text, "/data").unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].split, Some(Fold::Train));
        assert_eq!(m.records[0].meta["scene"], "indoor");
        assert_eq!(m.records[1].split, None);
        assert!(!m.is_split());
        assert_eq!(m.frame_path("a.png"), PathBuf::from("/data/a.png"));
    }

    #[test]
    fn rejects_bad_lines() {
        let dup = "{\"id\":\"a\",\"frames\":[\"x\"],\"illuminant\":[1,1,1]}\n".repeat(2);
        assert!(matches!(
            DatasetManifest::parse(&dup, ""),
            Err(Error::Manifest { line: 2, .. })
        ));
        let zero = r#"{"id":"a","frames":["x"],"illuminant":[0,0,0]}"#;
        assert!(matches!(
            DatasetManifest::parse(zero, ""),
            Err(Error::Manifest { line: 1, .. })
        ));
        let empty = r#"{"id":"a","frames":[],"illuminant":[1,1,1]}"#;
        assert!(DatasetManifest::parse(empty, "").is_err());
    }

    #[test]
    fn tcc_frame_bounds() {
        let ok = DatasetManifest::new(vec![record("a", 3), record("b", 17)], "").unwrap();
        assert!(ok.validate_tcc().is_ok());
        let short = DatasetManifest::new(vec![record("a", 2)], "").unwrap();
        assert!(short.validate_tcc().is_err());
        let long = DatasetManifest::new(vec![record("a", 18)], "").unwrap();
        assert!(long.validate_tcc().is_err());
    }

    #[test]
    fn image_list_adapter() {
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("list.txt");
        fs::write(&list, "img/IMG_0001.png 0.2 0.5 0.3\n\nimg/IMG_0002.png 1 1 1\n").unwrap();
        let m = image_list_manifest(&list).unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].id, "IMG_0001");
        assert_eq!(m.records[0].len(), 1);
        assert!((m.records[1].illuminant.norm() - 1.0).abs() < 1e-12);
        fs::write(&list, "a.png 1 1\n").unwrap();
        assert!(image_list_manifest(&list).is_err());
    }

    #[test]
    fn sequence_dir_adapter() {
        let dir = tempfile::tempdir().unwrap();
        for (seq, n) in [("1", 3), ("2", 11)] {
            let d = dir.path().join(seq);
            fs::create_dir(&d).unwrap();
            for i in 0..n {
                fs::write(d.join(format!("{i}.png")), b"").unwrap();
            }
            fs::write(d.join("groundtruth.txt"), "0.3, 0.5, 0.2\n").unwrap();
        }
        let m = import_sequence_dirs(dir.path()).unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[1].frames.len(), 11);
        // Numeric, not lexicographic, order.
        assert_eq!(m.records[1].frames[2], "2/2.png");
        assert_eq!(m.records[1].frames[10], "2/10.png");
    }

    proptest! {
        #[test]
        fn manifest_round_trips(
            entries in prop::collection::vec(
                (1usize..18, 0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0, any::<Option<bool>>(), "[a-z ]{0,8}"),
                1..12,
            )
        ) {
            let records: Vec<SequenceRecord> = entries
                .iter()
                .enumerate()
                .map(|(i, (n, r, g, b, split, tag))| {
                    let mut rec = record(&format!("s{i}"), *n);
                    rec.illuminant = Illuminant::new(*r, *g, *b).unwrap();
                    rec.split = split.map(|t| if t { Fold::Train } else { Fold::Test });
                    if !tag.is_empty() {
                        rec.meta.insert("tag".into(), tag.clone());
                    }
                    rec
                })
                .collect();
            let m = DatasetManifest::new(records, "base").unwrap();
            let back = DatasetManifest::parse(&m.to_jsonl(), "base").unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
