//! Shared pieces of the `streamac` binary: WAV IO, the JSON run report,
//! and a deterministic synthetic-input generator used by `bench` and the
//! test suites.

pub mod report;
pub mod wav;

/// Seeded multi-tone test signal with slow amplitude movement; loud enough
/// to clear the voice gate and busy enough to light up every band.
pub fn synth_input(seed: u64, n: usize) -> Vec<f32> {
    // Tiny xorshift so callers do not need an RNG crate for test audio.
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let tau = std::f64::consts::TAU;
    let freqs = [0.021 + 0.05 * uniform(), 0.083 + 0.1 * uniform(), 0.17 + 0.2 * uniform()];
    let mut phases = [uniform() * tau, uniform() * tau, uniform() * tau];
    (0..n)
        .map(|i| {
            let env = 0.55 + 0.35 * ((i as f64) * 0.0007).sin();
            let mut v = 0.0;
            for (p, f) in phases.iter_mut().zip(freqs) {
                *p += f;
                v += p.sin();
            }
            (v / 3.0 * env) as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic_and_bounded() {
        let a = synth_input(5, 4000);
        let b = synth_input(5, 4000);
        let c = synth_input(6, 4000);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| v.abs() <= 1.0));
        let rms = (a.iter().map(|v| v * v).sum::<f32>() / a.len() as f32).sqrt();
        assert!(rms > 0.1, "rms {rms} too quiet for the voice gate");
    }
}
