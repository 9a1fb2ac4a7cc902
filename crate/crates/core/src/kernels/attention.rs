//! Single-head scaled-dot-product attention with a boolean mask.
//!
//! Multi-head models call this once per head on reshaped slices; head
//! bookkeeping lives with the caller. Scores for disallowed positions are
//! never computed, and softmax normalizes over the allowed set only, in
//! ascending key order (deterministic accumulation).

use super::tensor::{BoolMatrix, Tensor};
use crate::error::{Error, Result};

/// `softmax(q k^T / sqrt(d)) v` restricted to `mask[i][j] == true`.
///
/// `q [Tq, d]`, `k [Tk, d]`, `v [Tk, dv]`, `mask [Tq, Tk]` -> `[Tq, dv]`.
/// A fully masked query row has no defined distribution and is an error.
// Index loops: j walks scores, the mask row and the k/v rows in lockstep.
#[allow(clippy::needless_range_loop)]
pub fn masked_softmax_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    mask: &BoolMatrix,
) -> Result<Tensor> {
    if q.dim1() != k.dim1() {
        return Err(Error::Shape(format!(
            "attention: q {:?} vs k {:?}",
            q.shape(),
            k.shape()
        )));
    }
    if k.dim0() != v.dim0() {
        return Err(Error::Shape(format!(
            "attention: k {:?} vs v {:?}",
            k.shape(),
            v.shape()
        )));
    }
    if mask.rows() != q.dim0() || mask.cols() != k.dim0() {
        return Err(Error::Shape(format!(
            "attention: mask {}x{} vs q {} x k {}",
            mask.rows(),
            mask.cols(),
            q.dim0(),
            k.dim0()
        )));
    }
    let scale = 1.0 / (q.dim1() as f32).sqrt();
    let (tq, tk, dv) = (q.dim0(), k.dim0(), v.dim1());
    let mut out = Tensor::zeros(&[tq, dv]);
    let mut scores = vec![0.0f32; tk];

    for i in 0..tq {
        let qrow = q.row(i);
        let mut max = f32::NEG_INFINITY;
        for j in 0..tk {
            if !mask.get(i, j) {
                continue;
            }
            let krow = k.row(j);
            let mut dot = 0.0f32;
            for (a, b) in qrow.iter().zip(krow) {
                dot += a * b;
            }
            let s = dot * scale;
            scores[j] = s;
            if s > max {
                max = s;
            }
        }
        if max == f32::NEG_INFINITY {
            return Err(Error::Mask(format!("attention: query row {i} is fully masked")));
        }
        let mut denom = 0.0f32;
        for j in 0..tk {
            if mask.get(i, j) {
                scores[j] = (scores[j] - max).exp();
                denom += scores[j];
            }
        }
        let orow = out.row_mut(i);
        for j in 0..tk {
            if !mask.get(i, j) {
                continue;
            }
            let p = scores[j] / denom;
            let vrow = v.row(j);
            for (o, val) in orow.iter_mut().zip(vrow) {
                *o += p * val;
            }
        }
    }
    debug_assert!(out.all_finite(), "attention produced non-finite values");
    Ok(out)
}

/// Attention with every position allowed. Used where the caller has already
/// assembled exactly the visible window.
pub fn full_attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    let mask = BoolMatrix::new(q.dim0(), k.dim0(), true);
    masked_softmax_attention(q, k, v, &mask)
}

/// Row-wise softmax, exposed for tests and diagnostics.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for r in 0..out.dim0() {
        let row = out.row_mut(r);
        let max = row.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v));
        let mut denom = 0.0f32;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            denom += *v;
        }
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    out
}

// Re-export so callers can write `attention::linear` style helpers if needed.
