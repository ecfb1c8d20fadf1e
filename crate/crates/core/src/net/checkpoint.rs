//! Weight checkpoints.
//!
//! Binary layout, all integers `u32` little-endian:
//!
//! ```text
//! magic        8 bytes  "TCCNETv1"
//! config_len   u32      byte length of the config block
//! config       branches, input_width, input_height, hidden, kernel,
//!              head_hidden, share_backbone (0/1), layer_count,
//!              then one u32 per backbone layer width
//! tensor_count u32
//! per tensor:  name_len u32, name (UTF-8), ndim u32, dims u32 x ndim,
//!              values f32 LE, row-major
//! ```
//!
//! A plain-text manifest listing the config and every tensor is written
//! next to the binary as `<path>.txt`. Values are stored as `f32`, so
//! saving rounds the in-memory `f64` weights; a loaded checkpoint saves
//! back to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::model::{TccNetConfig, TccNetParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TCCNETv1";

fn config_words(config: &TccNetConfig) -> Vec<u32> {
    let mut w = vec![
        config.branches as u32,
        config.input_width as u32,
        config.input_height as u32,
        config.hidden as u32,
        config.kernel as u32,
        config.head_hidden as u32,
        config.share_backbone as u32,
        config.backbone_channels.len() as u32,
    ];
    w.extend(config.backbone_channels.iter().map(|&c| c as u32));
    w
}

pub fn encode(config: &TccNetConfig, params: &TccNetParams) -> Result<Vec<u8>> {
    params.check(config)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let words = config_words(config);
    out.extend_from_slice(&((words.len() * 4) as u32).to_le_bytes());
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.dims().len() as u32).to_le_bytes());
        for &d in t.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(TccNetConfig, TccNetParams)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let config_len = r.u32()? as usize;
    if !config_len.is_multiple_of(4) || config_len < 32 {
        return Err(Error::Checkpoint(format!("bad config block length {config_len}")));
    }
    let words: Vec<usize> = (0..config_len / 4).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    if words[7] != words.len() - 8 {
        return Err(Error::Checkpoint("config block layer count mismatch".into()));
    }
    if words[6] > 1 {
        return Err(Error::Checkpoint("share flag must be 0 or 1".into()));
    }
    let config = TccNetConfig {
        branches: words[0],
        input_width: words[1],
        input_height: words[2],
        hidden: words[3],
        kernel: words[4],
        head_hidden: words[5],
        share_backbone: words[6] == 1,
        backbone_channels: words[8..].to_vec(),
    };
    config.validate().map_err(|e| Error::Checkpoint(format!("invalid config: {e}")))?;

    let mut params = TccNetParams::zeros(&config)?;
    let count = r.u32()? as usize;
    let mut slots = params.tensors_mut();
    if count != slots.len() {
        return Err(Error::Checkpoint(format!(
            "{count} tensors stored, config implies {}",
            slots.len()
        )));
    }
    for (expected, t) in slots.iter_mut() {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        if name != expected {
            return Err(Error::Checkpoint(format!("expected tensor {expected}, found {name}")));
        }
        let ndim = r.u32()? as usize;
        let dims: Vec<usize> = (0..ndim).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
        if dims != t.dims() {
            return Err(Error::Checkpoint(format!(
                "{name} stored as {dims:?}, config implies {:?}",
                t.dims()
            )));
        }
        for v in t.data_mut() {
            let x = r.f32()?;
            if !x.is_finite() {
                return Err(Error::Checkpoint(format!("{name} holds a non-finite value")));
            }
            *v = x as f64;
        }
    }
    drop(slots);
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok((config, params))
}

/// Rounds every weight to `f32`, the precision a checkpoint keeps.
pub fn quantize(params: &TccNetParams) -> TccNetParams {
    let mut q = params.clone();
    for (_, t) in q.tensors_mut() {
        for v in t.data_mut() {
            *v = *v as f32 as f64;
        }
    }
    q
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Human-readable listing of a checkpoint.
pub fn manifest_text(config: &TccNetConfig, params: &TccNetParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format TCCNETv1 little-endian f32");
    let _ = writeln!(out, "branches {}", config.branches);
    let _ = writeln!(out, "input {}x{}", config.input_width, config.input_height);
    let _ = writeln!(
        out,
        "backbone {}",
        config.backbone_channels.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(out, "hidden {}", config.hidden);
    let _ = writeln!(out, "kernel {}", config.kernel);
    let _ = writeln!(out, "head_hidden {}", config.head_hidden);
    let _ = writeln!(out, "share_backbone {}", config.share_backbone);
    let _ = writeln!(out, "parameters {}", params.parameter_count());
    for (name, t) in params.tensors() {
        let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "tensor {name} {}", dims.join("x"));
    }
    out
}

/// Writes the binary checkpoint and its `.txt` manifest.
pub fn save_checkpoint(path: impl AsRef<Path>, config: &TccNetConfig, params: &TccNetParams) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(config, params)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let manifest = manifest_path(path);
    fs::write(&manifest, manifest_text(config, params)).map_err(|e| Error::io(&manifest, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(TccNetConfig, TccNetParams)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
