//! Synthetic sequence generator with exact ground truth.
//!
//! Frames are grids of reflectance patches lit channel-wise by the
//! illuminant of that frame, plus Gaussian sensor noise. Achromatic patches
//! have identical texture in all channels; colored patches get independent
//! per-channel texture. The generator doubles as the oracle for estimator
//! tests: balanced scenes have equal channel means before lighting, and
//! max-white scenes contain an untextured unit-reflectance patch.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::color::{Illuminant, LinearImage};
use crate::dataset::manifest::{DatasetManifest, SequenceRecord};
use crate::error::{Error, Result};

/// Highest reflectance*texture value of an ordinary patch.
const MAX_REFLECTANCE: f64 = 0.95;

/// How the illuminant evolves over a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Drift {
    Constant,
    /// Linear blend from the start illuminant to `end` at the shot frame.
    Linear { end: Illuminant },
    /// Switch to `end` from frame index `at` onward.
    Step { at: usize, end: Illuminant },
}

/// Scene description for [`generate_synthetic_sequence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Patches per side.
    pub grid: usize,
    /// Share of patches that are achromatic.
    pub achromatic_fraction: f64,
    /// Relative per-pixel reflectance jitter, in `[0, 1)`.
    pub texture: f64,
    /// Standard deviation of additive sensor noise.
    pub noise_sigma: f64,
    /// Rescale reflectances so every channel has the same mean.
    pub balanced: bool,
    /// Include one untextured unit-reflectance patch.
    pub white_patch: bool,
    /// Linear value of a white surface under the brightest channel.
    pub exposure: f64,
    /// Draw a new patch layout for every frame instead of one per sequence.
    pub redraw_each_frame: bool,
    /// When set, frames with index `>= gray_until` contain no achromatic patches.
    pub gray_until: Option<usize>,
    pub drift: Drift,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            grid: 4,
            achromatic_fraction: 0.25,
            texture: 0.2,
            noise_sigma: 0.002,
            balanced: false,
            white_patch: false,
            exposure: 0.9,
            redraw_each_frame: false,
            gray_until: None,
            drift: Drift::Constant,
        }
    }
}

impl SceneSpec {
    /// Scenes whose channel means are equal before lighting.
    pub fn balanced() -> Self {
        Self {
            balanced: true,
            ..Self::default()
        }
    }

    /// Scenes with a unit-reflectance patch.
    pub fn max_white() -> Self {
        Self {
            white_patch: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(format!("scene spec: {m}")));
        if self.width < 3 || self.height < 3 {
            return fail(format!("frame {}x{} too small", self.width, self.height));
        }
        if self.grid == 0 || self.grid > self.width.min(self.height) {
            return fail(format!("grid {} does not fit the frame", self.grid));
        }
        if !(0.0..=1.0).contains(&self.achromatic_fraction) {
            return fail(format!("achromatic fraction {}", self.achromatic_fraction));
        }
        if !(0.0..1.0).contains(&self.texture) {
            return fail(format!("texture {}", self.texture));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise sigma {}", self.noise_sigma));
        }
        if !(self.exposure > 0.0 && self.exposure <= 1.0) {
            return fail(format!("exposure {}", self.exposure));
        }
        Ok(())
    }
}

/// Draws an illuminant from a Gaussian over projective chromaticity,
/// roughly matching daylight/indoor white points of phone sensors
/// (r ~ 0.30 +- 0.06, g ~ 0.35 +- 0.05). Approximate.
pub fn sample_illuminant(rng: &mut impl Rng) -> Illuminant {
    let r_dist = Normal::new(0.30, 0.06).unwrap();
    let g_dist = Normal::new(0.35, 0.05).unwrap();
    loop {
        let r: f64 = r_dist.sample(rng);
        let g: f64 = g_dist.sample(rng);
        if r > 0.05 && g > 0.05 && 1.0 - r - g > 0.05 {
            return Illuminant::from_chromaticity(r, g).expect("valid chromaticity");
        }
    }
}

#[derive(Clone, Copy)]
struct Patch {
    reflectance: [f64; 3],
    achromatic: bool,
    white: bool,
}

fn random_colored(rng: &mut impl Rng) -> [f64; 3] {
    // One dominant channel keeps colored patches clearly chromatic.
    let dominant = rng.random_range(0..3);
    let mut c = [0.0; 3];
    for (i, v) in c.iter_mut().enumerate() {
        *v = if i == dominant {
            rng.random_range(0.5..0.8)
        } else {
            rng.random_range(0.05..0.4)
        };
    }
    c
}

fn draw_layout(spec: &SceneSpec, rng: &mut impl Rng) -> Vec<Patch> {
    let n = spec.grid * spec.grid;
    let white_at = spec.white_patch.then(|| rng.random_range(0..n));
    (0..n)
        .map(|i| {
            if Some(i) == white_at {
                return Patch {
                    reflectance: [1.0; 3],
                    achromatic: true,
                    white: true,
                };
            }
            if rng.random_bool(spec.achromatic_fraction) {
                let a = rng.random_range(0.2..0.8);
                Patch {
                    reflectance: [a; 3],
                    achromatic: true,
                    white: false,
                }
            } else {
                Patch {
                    reflectance: random_colored(rng),
                    achromatic: false,
                    white: false,
                }
            }
        })
        .collect()
}

fn illuminant_at(start: Illuminant, drift: Drift, t: usize, len: usize) -> Result<Illuminant> {
    match drift {
        Drift::Constant => start.normalized(),
        Drift::Linear { end } => {
            let a = if len > 1 { t as f64 / (len - 1) as f64 } else { 1.0 };
            let (s, e) = (start.normalized()?.to_array(), end.normalized()?.to_array());
            Illuminant::new(
                (1.0 - a) * s[0] + a * e[0],
                (1.0 - a) * s[1] + a * e[1],
                (1.0 - a) * s[2] + a * e[2],
            )?
            .normalized()
        }
        Drift::Step { at, end } => {
            if t >= at {
                end.normalized()
            } else {
                start.normalized()
            }
        }
    }
}

/// Per-pixel reflectance field of one frame, `width * height * 3` values.
fn reflectance_field(spec: &SceneSpec, layout: &[Patch], rng: &mut impl Rng) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let mut field = vec![0.0; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let px = (x * spec.grid / w).min(spec.grid - 1);
            let py = (y * spec.grid / h).min(spec.grid - 1);
            let patch = layout[py * spec.grid + px];
            let i = (y * w + x) * 3;
            if patch.white {
                field[i..i + 3].copy_from_slice(&patch.reflectance);
            } else if patch.achromatic {
                let t = 1.0 + spec.texture * rng.random_range(-1.0..=1.0);
                for c in 0..3 {
                    field[i + c] = (patch.reflectance[c] * t).min(MAX_REFLECTANCE);
                }
            } else {
                for c in 0..3 {
                    let t = 1.0 + spec.texture * rng.random_range(-1.0..=1.0);
                    field[i + c] = (patch.reflectance[c] * t).min(MAX_REFLECTANCE);
                }
            }
        }
    }
    if spec.balanced {
        let n = (w * h) as f64;
        let means: Vec<f64> = (0..3)
            .map(|c| field.iter().skip(c).step_by(3).sum::<f64>() / n)
            .collect();
        let target = means.iter().sum::<f64>() / 3.0;
        for (i, v) in field.iter_mut().enumerate() {
            *v *= target / means[i % 3];
        }
        let peak = field.iter().cloned().fold(0.0, f64::max);
        if peak > 1.0 {
            field.iter_mut().for_each(|v| *v /= peak);
        }
    }
    field
}

/// Renders a synthetic sequence. The record's ground truth is the
/// (unit-norm) illuminant of the shot frame; frame paths are
/// `<id>/<index>.png` relative names.
pub fn generate_synthetic_sequence(
    spec: &SceneSpec,
    illuminant: Illuminant,
    length: usize,
    seed: u64,
    id: &str,
) -> Result<(SequenceRecord, Vec<LinearImage>)> {
    spec.validate()?;
    if length == 0 {
        return Err(Error::InvalidArgument("sequence length must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let shared_layout = draw_layout(spec, &mut rng);

    let mut frames = Vec::with_capacity(length);
    let mut truth = None;
    for t in 0..length {
        let mut layout = if spec.redraw_each_frame {
            draw_layout(spec, &mut rng)
        } else {
            shared_layout.clone()
        };
        if spec.gray_until.is_some_and(|g| t >= g) {
            for p in layout.iter_mut().filter(|p| p.achromatic) {
                *p = Patch {
                    reflectance: random_colored(&mut rng),
                    achromatic: false,
                    white: false,
                };
            }
        }
        let light = illuminant_at(illuminant, spec.drift, t, length)?;
        let la = light.to_array();
        let peak = la.iter().cloned().fold(0.0, f64::max);
        let gain: Vec<f64> = la.iter().map(|v| spec.exposure * v / peak).collect();

        let field = reflectance_field(spec, &layout, &mut rng);
        let data: Vec<f32> = field
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (rho * gain[i % 3] + n) as f32
            })
            .collect();
        frames.push(LinearImage::from_clamped(spec.width, spec.height, data)?);
        truth = Some(light);
    }

    let mut meta = BTreeMap::new();
    meta.insert("source".to_string(), "synthetic".to_string());
    meta.insert("seed".to_string(), seed.to_string());
    let record = SequenceRecord {
        id: id.to_string(),
        frames: (0..length).map(|t| format!("{id}/{t:02}.png")).collect(),
        illuminant: truth.expect("length >= 1"),
        split: None,
        meta,
    };
    Ok((record, frames))
}

/// A set of generated sequences. Lengths are taken from `lengths`
/// cyclically; illuminants are drawn with [`sample_illuminant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub count: usize,
    pub lengths: Vec<usize>,
    pub scene: SceneSpec,
    pub seed: u64,
}

/// Generates a whole suite in memory.
pub fn generate_suite(suite: &SuiteSpec) -> Result<Vec<(SequenceRecord, Vec<LinearImage>)>> {
    if suite.count == 0 || suite.lengths.is_empty() {
        return Err(Error::InvalidArgument("suite needs a count and lengths".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    (0..suite.count)
        .map(|i| {
            let light = sample_illuminant(&mut rng);
            let seed: u64 = rng.random();
            let len = suite.lengths[i % suite.lengths.len()];
            generate_synthetic_sequence(&suite.scene, light, len, seed, &format!("seq_{i:04}"))
        })
        .collect()
}

/// Generates a suite and writes it to `dir` as 16-bit PNG frames plus
/// `manifest.jsonl`.
pub fn write_suite(suite: &SuiteSpec, dir: &std::path::Path) -> Result<DatasetManifest> {
    let generated = generate_suite(suite)?;
    let mut records = Vec::with_capacity(generated.len());
    for (record, frames) in generated {
        for (path, frame) in record.frames.iter().zip(&frames) {
            crate::dataset::frame::save_frame(dir.join(path), frame)?;
        }
        records.push(record);
    }
    let manifest = DatasetManifest::new(records, dir)?;
    manifest.save(dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
