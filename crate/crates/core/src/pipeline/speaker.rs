//! Speaker embedding from the warm-up audio.
//!
//! Band log energies are mean-pooled over all warm-up frames, projected to
//! the embedding width, and length-normalized. Silence carries no speaker
//! information, so it is reported as [`Error::Degenerate`]; callers fall
//! back to [`fallback_embedding`] so a silent warm-up still converts,
//! identically in the streaming and offline paths.

use crate::error::{Error, Result};
use crate::features::Frontend;
use crate::kernels::{matmul, Tensor};

/// `[1, 0, 0, ...]`: the deterministic stand-in when extraction degenerates.
pub fn fallback_embedding(dim: usize) -> Vec<f32> {
    let mut g = vec![0.0; dim];
    if dim > 0 {
        g[0] = 1.0;
    }
    g
}

/// Extract from whole-frame samples using the shared front end and a
/// `[bands, dim]` projection.
pub fn extract(frontend: &Frontend, proj: &Tensor, samples: &[f32]) -> Result<Vec<f32>> {
    if samples.is_empty() {
        return Err(Error::Degenerate("no warm-up samples".into()));
    }
    let energy: f32 = samples.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::Degenerate("warm-up audio is silent".into()));
    }
    let bands = frontend.band_log_energies(samples)?;
    let t = bands.dim0();
    let nb = bands.dim1();
    let mut pooled = Tensor::zeros(&[1, nb]);
    for r in 0..t {
        for (o, v) in pooled.row_mut(0).iter_mut().zip(bands.row(r)) {
            *o += v;
        }
    }
    for v in pooled.data_mut() {
        *v /= t as f32;
    }
    let mut g = matmul(&pooled, proj)?.data().to_vec();
    let norm = g.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate("embedding projected to zero".into()));
    }
    for v in &mut g {
        *v /= norm;
    }
    Ok(g)
}

/// [`extract`] with the degenerate case mapped to the fallback.
pub fn extract_or_fallback(frontend: &Frontend, proj: &Tensor, samples: &[f32]) -> Result<Vec<f32>> {
    match extract(frontend, proj, samples) {
        Ok(g) => Ok(g),
        Err(Error::Degenerate(_)) => Ok(fallback_embedding(proj.dim1())),
        Err(e) => Err(e),
    }
}
