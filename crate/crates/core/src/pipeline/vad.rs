//! Chunk-level speech gating by RMS level with hangover.
//!
//! The gate only labels chunks; it never ends the session by itself. A
//! hangover holds the speech flag for a few chunks after the level drops so
//! trailing consonants and room decay stay inside the speech region.

#[derive(Debug, Clone)]
pub struct VadGate {
    threshold: f32,
    hangover: usize,
    remaining: usize,
}

impl VadGate {
    pub fn new(threshold: f32, hangover: usize) -> Self {
        VadGate {
            threshold,
            hangover,
            remaining: 0,
        }
    }

    pub fn rms(chunk: &[f32]) -> f32 {
        if chunk.is_empty() {
            return 0.0;
        }
        let sum: f32 = chunk.iter().map(|v| v * v).sum();
        (sum / chunk.len() as f32).sqrt()
    }

    /// Classify one chunk; true means speech (or hangover).
    pub fn update(&mut self, chunk: &[f32]) -> bool {
        if Self::rms(chunk) >= self.threshold {
            self.remaining = self.hangover;
            return true;
        }
        if self.remaining > 0 {
            self.remaining -= 1;
            return true;
        }
        false
    }
}
