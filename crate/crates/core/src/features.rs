//! Frame-level acoustic front end.
//!
//! Each hop-length block of samples becomes one frame: Hann-windowed band
//! magnitudes at evenly spaced frequencies (avoiding DC and Nyquist), taken
//! to log energies, then projected to the encoder width. Frames never look
//! across block boundaries, so computing features chunk by chunk gives
//! exactly the frames an offline pass computes.

use crate::error::{Error, Result};
use crate::kernels::{linear, Tensor};

const LOG_FLOOR: f32 = 1e-6;

#[derive(Debug, Clone)]
pub struct Frontend {
    hop: usize,
    bands: usize,
    window: Vec<f32>,
    /// cos/sin of `band_freq(b) * n`, flattened `[bands, hop]`.
    cos_t: Vec<f32>,
    sin_t: Vec<f32>,
    proj_w: Tensor, // [bands, hidden]
    proj_b: Vec<f32>,
}

impl Frontend {
    pub fn new(hop: usize, bands: usize, proj_w: Tensor, proj_b: Vec<f32>) -> Result<Self> {
        if hop == 0 || bands == 0 {
            return Err(Error::Shape("frontend: hop and bands must be positive".into()));
        }
        if proj_w.shape() != [bands, proj_b.len()] {
            return Err(Error::Shape(format!(
                "frontend projection {:?} does not map {} bands to {} outputs",
                proj_w.shape(),
                bands,
                proj_b.len()
            )));
        }
        let window: Vec<f32> = (0..hop)
            .map(|n| {
                let phase = std::f64::consts::PI * n as f64 / hop as f64;
                (phase.sin() * phase.sin()) as f32
            })
            .collect();
        let mut cos_t = Vec::with_capacity(bands * hop);
        let mut sin_t = Vec::with_capacity(bands * hop);
        for b in 0..bands {
            let w = Self::band_freq(b, bands);
            for n in 0..hop {
                let a = w * n as f64;
                cos_t.push(a.cos() as f32);
                sin_t.push(a.sin() as f32);
            }
        }
        Ok(Frontend {
            hop,
            bands,
            window,
            cos_t,
            sin_t,
            proj_w,
            proj_b,
        })
    }

    /// Band `b` of `bands` sits at `pi * (b+1) / (bands+1)` rad/sample.
    pub fn band_freq(b: usize, bands: usize) -> f64 {
        std::f64::consts::PI * (b + 1) as f64 / (bands + 1) as f64
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn hidden(&self) -> usize {
        self.proj_b.len()
    }

    /// `[T, bands]` log band energies; `samples` must be whole frames.
    pub fn band_log_energies(&self, samples: &[f32]) -> Result<Tensor> {
        if !samples.len().is_multiple_of(self.hop) {
            return Err(Error::Shape(format!(
                "frontend expects whole frames of {} samples, got {}",
                self.hop,
                samples.len()
            )));
        }
        let frames = samples.len() / self.hop;
        let mut out = Tensor::zeros(&[frames, self.bands]);
        for t in 0..frames {
            let block = &samples[t * self.hop..(t + 1) * self.hop];
            let row = out.row_mut(t);
            for (b, out_b) in row.iter_mut().enumerate() {
                let cos = &self.cos_t[b * self.hop..(b + 1) * self.hop];
                let sin = &self.sin_t[b * self.hop..(b + 1) * self.hop];
                let mut re = 0.0f32;
                let mut im = 0.0f32;
                for n in 0..self.hop {
                    let v = block[n] * self.window[n];
                    re += v * cos[n];
                    im += v * sin[n];
                }
                *out_b = (re * re + im * im + LOG_FLOOR).ln();
            }
        }
        Ok(out)
    }

    /// `[T, hidden]` encoder-ready features.
    pub fn features(&self, samples: &[f32]) -> Result<Tensor> {
        let bands = self.band_log_energies(samples)?;
        linear(&bands, &self.proj_w, &self.proj_b)
    }
}
