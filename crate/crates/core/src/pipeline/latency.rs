//! Playback-clock model for the chunked session.
//!
//! Source audio arrives in real time: chunk `c` is complete at `(c+1)*d`
//! seconds, with `d` the chunk duration. Chunks are converted serially, each
//! costing its compute time, starting as soon as both the chunk and the
//! converter are free. Output chunk `k` is playable once the input chunk it
//! waits for (its index plus the model look-ahead, or the warm-up for early
//! chunks) has been converted.
//!
//! The player starts once the first two output chunks exist and then
//! consumes one chunk per tick, stalling when a chunk is late (an
//! underrun). With compute under real time the start delay is
//! `(warmup + rtf) * d` and every chunk's latency equals it exactly.

use crate::config::RuntimeConfig;

#[derive(Debug, Clone)]
pub struct LatencyModel {
    pub chunk_seconds: f64,
    pub warmup_chunks: usize,
    pub look_chunks: usize,
}

#[derive(Debug, Clone)]
pub struct LatencyReport {
    /// Wall time when playback begins.
    pub start_delay: f64,
    /// Per chunk: playback start minus source start (`k * d`).
    pub latency: Vec<f64>,
    /// Chunks that were not ready at their tick.
    pub underruns: usize,
    /// Smallest count of already-converted future chunks at any tick that
    /// still had two future chunks to come.
    pub min_ahead: usize,
}

impl LatencyReport {
    pub fn max_latency(&self) -> f64 {
        self.latency.iter().copied().fold(0.0, f64::max)
    }
}

impl LatencyModel {
    pub fn from_config(cfg: &RuntimeConfig) -> Self {
        LatencyModel {
            chunk_seconds: cfg.session.chunk_seconds(),
            warmup_chunks: cfg.session.warmup_chunks,
            look_chunks: cfg.lookahead_frames().div_ceil(cfg.session.chunk_frames),
        }
    }

    /// Constant compute cost of `rtf * d` per chunk.
    pub fn simulate(&self, rtf: f64, chunks: usize) -> LatencyReport {
        let costs = vec![rtf * self.chunk_seconds; chunks];
        self.run(&costs)
    }

    /// One cost entry per input chunk, in seconds.
    pub fn run(&self, costs: &[f64]) -> LatencyReport {
        let d = self.chunk_seconds;
        let n = costs.len();
        if n == 0 {
            return LatencyReport {
                start_delay: 0.0,
                latency: Vec::new(),
                underruns: 0,
                min_ahead: 0,
            };
        }

        let mut compute_end = vec![0.0f64; n];
        let mut prev = 0.0f64;
        for c in 0..n {
            let arrival = (c + 1) as f64 * d;
            prev = arrival.max(prev) + costs[c];
            compute_end[c] = prev;
        }

        // Output k waits for input max(k + look, warmup - 1); the final
        // flush resolves everything still pending at the last compute.
        let ready = |k: usize| -> f64 {
            let idx = (k + self.look_chunks)
                .max(self.warmup_chunks.saturating_sub(1))
                .min(n - 1);
            compute_end[idx]
        };

        let start_delay = ready(1.min(n - 1));
        let eps = 1e-9;
        let mut latency = Vec::with_capacity(n);
        let mut underruns = 0;
        let mut playback = vec![0.0f64; n];
        for k in 0..n {
            let due = if k == 0 {
                start_delay
            } else {
                playback[k - 1] + d
            };
            if ready(k) > due + eps {
                underruns += 1;
            }
            playback[k] = due.max(ready(k));
            latency.push(playback[k] - k as f64 * d);
        }

        // Future chunks ready at each tick, over ticks that still have two
        // chunks of audio ahead of them.
        let mut min_ahead = usize::MAX;
        for (k, &pk) in playback.iter().enumerate().take(n.saturating_sub(3)) {
            let ahead = (k + 1..n).take_while(|&j| ready(j) <= pk + eps).count();
            min_ahead = min_ahead.min(ahead);
        }
        if min_ahead == usize::MAX {
            min_ahead = 0;
        }

        LatencyReport {
            start_delay,
            latency,
            underruns,
            min_ahead,
        }
    }
}
