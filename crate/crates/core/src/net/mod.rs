//! Recurrent illuminant estimator: a two-branch ConvLSTM network with
//! hand-written backward passes, training and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod lstm;
pub mod model;
pub mod ops;
pub mod sampling;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{gradient_check, GradCheckReport, TensorCheck};
pub use lstm::{conv_lstm_step, ConvLstmParams, ConvLstmState};
pub use model::{
    tcc_net_backward, tcc_net_forward, Gradients, PreparedSequence, TccNetConfig, TccNetOutput,
    TccNetParams,
};
pub use sampling::{pseudo_zoom_sequence, Augmentation};
pub use tensor::{FeatureMap, Tensor};
pub use train::{train, train_from, RmsProp, TrainConfig, TrainReport, TrainingSample};
