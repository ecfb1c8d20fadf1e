//! Runs a convolutional LSTM cell over a few random feature maps and prints
//! how the hidden and cell states evolve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcc_core::net::{conv_lstm_step, ConvLstmParams, ConvLstmState, FeatureMap};
use tcc_core::Result;

fn main() -> Result<()> {
    let (channels, hidden, kernel, size) = (4, 6, 3, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ConvLstmParams::init(channels, hidden, kernel, &mut rng)?;
    let mut state = ConvLstmState::zeros(hidden, size, size);
    for t in 0..5 {
        let data = (0..channels * size * size).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = FeatureMap::from_vec(channels, size, size, data)?;
        state = conv_lstm_step(&x, &state, &params)?;
        let mean_abs = |m: &FeatureMap| m.data.iter().map(|v| v.abs()).sum::<f64>() / m.data.len() as f64;
        println!("t={t}: mean |H| {:.4}  mean |C| {:.4}", mean_abs(&state.hidden), mean_abs(&state.cell));
    }
    Ok(())
}
