//! Temporal color constancy toolkit.
//!
//! * [`color`]: images, illuminants, the angular error and summary statistics.
//! * [`estimators`]: single-frame estimators (Grey-Edge family, grayness index).
//! * [`temporal`]: moving average, pooled grayness, Kalman-style smoothing.
//! * [`dataset`]: frame I/O, sequence manifests, synthetic sequences, splits.
//! * [`net`]: the two-branch recurrent network (ConvLSTM), training, checkpoints.
//! * [`bench`]: method registry and the evaluation harness behind `tccbench`.

pub mod bench;
pub mod color;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod filter;
pub mod net;
pub mod temporal;

pub use color::{angular_error, normalize, summarize, AngularError, ErrorStats, Illuminant, LinearImage};
pub use error::{Error, Result};
