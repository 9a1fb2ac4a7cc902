//! Matrix multiply, layer norm and pointwise activations.
//!
//! Every routine here is pure and accumulates in a fixed order (ascending
//! inner index), so repeated calls and differently-batched calls over the
//! same values produce bit-identical f32 results. That property is what the
//! streaming/offline equivalence of the higher modules rests on; do not
//! introduce reordered or parallel reductions.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// `a [m, k] x b [k, n] -> [m, n]`.
///
/// Accumulation order per output element is ascending `k`, regardless of the
/// loop nesting used here.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if !a.is_matrix() || !b.is_matrix() || a.dim1() != b.dim0() {
        return Err(Error::Shape(format!(
            "matmul: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (m, kk, n) = (a.dim0(), a.dim1(), b.dim1());
    let mut out = Tensor::zeros(&[m, n]);
    for i in 0..m {
        let arow = a.row(i);
        for (k, &aik) in arow.iter().enumerate().take(kk) {
            let brow = b.row(k);
            let orow = out.row_mut(i);
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
    debug_assert!(out.all_finite(), "matmul produced non-finite values");
    Ok(out)
}

/// `x [t, c] x w [c, n] + bias [n]` applied to every row.
pub fn linear(x: &Tensor, w: &Tensor, bias: &[f32]) -> Result<Tensor> {
    if bias.len() != w.dim1() {
        return Err(Error::Shape(format!(
            "linear: bias {} vs w {:?}",
            bias.len(),
            w.shape()
        )));
    }
    let mut out = matmul(x, w)?;
    for r in 0..out.dim0() {
        let row = out.row_mut(r);
        for (o, b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
    Ok(out)
}

/// Per-row layer norm over the channel axis: `gamma * (x - mean)/sqrt(var + eps) + beta`.
pub fn layer_norm(x: &Tensor, gamma: &[f32], beta: &[f32], eps: f32) -> Result<Tensor> {
    let c = x.dim1();
    if gamma.len() != c || beta.len() != c {
        return Err(Error::Shape(format!(
            "layer_norm: gamma {} / beta {} vs channels {}",
            gamma.len(),
            beta.len(),
            c
        )));
    }
    let mut out = x.clone();
    for r in 0..out.dim0() {
        let row = out.row_mut(r);
        let mut mean = 0.0f32;
        for v in row.iter() {
            mean += v;
        }
        mean /= c as f32;
        let mut var = 0.0f32;
        for v in row.iter() {
            let d = v - mean;
            var += d * d;
        }
        var /= c as f32;
        let inv = 1.0 / (var + eps).sqrt();
        for (i, v) in row.iter_mut().enumerate() {
            *v = gamma[i] * ((*v - mean) * inv) + beta[i];
        }
    }
    debug_assert!(out.all_finite(), "layer_norm produced non-finite values");
    Ok(out)
}

// ── Pointwise activations ───────────────────────────────────────────────────

pub fn relu(x: f32) -> f32 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn leaky_relu(x: f32, slope: f32) -> f32 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub fn map(x: &Tensor, f: impl Fn(f32) -> f32) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = f(*v);
    }
    out
}
