//! JSON run report. `schema` is bumped on any breaking field change so
//! downstream tooling can refuse files it does not understand.

use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChunkStat {
    pub index: usize,
    pub rms: f32,
    pub speech: bool,
    pub emitted_samples: usize,
    pub compute_seconds: f64,
    pub rtf: f64,
}

/// Measured compute replayed through the simulated playback clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatencyStats {
    pub start_delay_seconds: f64,
    pub max_latency_seconds: f64,
    pub min_ahead_chunks: usize,
    pub underruns: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub mode: String,
    pub input: String,
    pub output: Option<String>,
    pub sample_rate: u32,
    pub chunk_samples: usize,
    pub warmup_chunks: usize,
    pub lookahead_frames: usize,
    pub lookahead_seconds: f64,
    pub input_samples: usize,
    pub output_samples: usize,
    pub chunks: usize,
    pub speech_chunks: usize,
    pub audio_seconds: f64,
    pub compute_seconds: f64,
    /// Whole-run compute over audio duration.
    pub rtf: f64,
    pub rtf_mean: f64,
    pub rtf_max: f64,
    pub rtf_p50: f64,
    pub rtf_p95: f64,
    /// Verify runs only: streaming vs offline.
    pub max_abs_diff: Option<f64>,
    /// Streaming runs only.
    pub latency: Option<LatencyStats>,
    pub chunk_stats: Vec<ChunkStat>,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<RunReport> {
        serde_json::from_str(s)
    }
}
