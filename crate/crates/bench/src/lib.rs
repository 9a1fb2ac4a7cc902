//! Fixtures shared by the criterion benches: a seeded toy model and
//! deterministic synthetic audio, kept free of dev-only dependencies so the
//! benches measure kernels, not setup.

use std::sync::Arc;

use streamac_core::config::RuntimeConfig;
use streamac_core::kernels::Tensor;
use streamac_core::pipeline::Model;

pub fn toy_model(seed: u64) -> Arc<Model> {
    let cfg = RuntimeConfig::toy();
    let w = Model::init_weights(&cfg, seed);
    Model::from_weights(&cfg, &w).expect("toy weights load")
}

/// Three detuned tones with a slow envelope; loud enough to pass the VAD.
pub fn test_signal(seed: u64, n: usize) -> Vec<f32> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
    let mut phase = [0.0f64; 3];
    let freqs = [
        110.0 + (next(&mut state) % 80) as f64,
        350.0 + (next(&mut state) % 120) as f64,
        900.0 + (next(&mut state) % 300) as f64,
    ];
    (0..n)
        .map(|i| {
            let t = i as f64 / 16000.0;
            let env = 0.55 + 0.35 * (2.0 * std::f64::consts::PI * 0.7 * t).sin();
            let mut v = 0.0;
            for (p, f) in phase.iter_mut().zip(freqs) {
                *p += 2.0 * std::f64::consts::PI * f / 16000.0;
                v += p.sin();
            }
            (env * v / 3.0) as f32
        })
        .collect()
}

fn next(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

/// Row-major tensor with reproducible pseudo-random entries in [-1, 1).
pub fn random_tensor(seed: u64, rows: usize, cols: usize) -> Tensor {
    let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d) | 1;
    let data = (0..rows * cols)
        .map(|_| (next(&mut state) >> 40) as f32 / (1u64 << 23) as f32 - 1.0)
        .collect();
    Tensor::from_vec(&[rows, cols], data).unwrap()
}
