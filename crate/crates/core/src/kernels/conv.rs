//! 1-D convolution kernels over time-major tensors.
//!
//! # Layout
//!
//! Input  `x [T, Cin]`, frame-major.
//! `conv1d` weights `w [Cout, Cin, K]`; output `[T', Cout]` with
//! `T' = (T + left_pad + right_pad - dilation*(K-1) - 1)/stride + 1`.
//! `conv1d_transposed` weights `w [Cin, Cout, K]`; output
//! `[T*factor + (K - factor), Cout]`.
//!
//! Neither kernel pads implicitly: padding amounts are caller decisions
//! passed explicitly, and the padded positions contribute zeros. Accumulation
//! order is fixed (ascending tap, ascending input channel), so a call over a
//! zero-materialized buffer equals a call with the same amounts as pad
//! arguments, bit-for-bit. Streaming wrappers depend on that.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    /// Taps per output.
    pub kernel_size: usize,
    /// Gap between taps, in frames.
    pub dilation: usize,
    /// Output step, in frames.
    pub stride: usize,
    /// Causal convolutions take all padding on the left and reach zero frames
    /// into the future; non-causal ones pad symmetrically and require an odd
    /// kernel.
    pub causal: bool,
}

impl ConvSpec {
    pub fn new(kernel_size: usize, dilation: usize) -> Self {
        ConvSpec {
            kernel_size,
            dilation,
            stride: 1,
            causal: false,
        }
    }

    pub fn causal(kernel_size: usize, dilation: usize) -> Self {
        ConvSpec {
            kernel_size,
            dilation,
            stride: 1,
            causal: true,
        }
    }

    /// Frames spanned by one output: `dilation*(K-1) + 1`.
    pub fn span(&self) -> usize {
        self.dilation * (self.kernel_size - 1) + 1
    }

    /// Padding that keeps length at stride 1: symmetric `(p, p)` for
    /// non-causal, `(2p, 0)` for causal, where `p = dilation*(K-1)/2`.
    pub fn same_padding(&self) -> (usize, usize) {
        let total = self.dilation * (self.kernel_size - 1);
        if self.causal {
            (total, 0)
        } else {
            (total / 2, total - total / 2)
        }
    }

    /// Frames of future input one output depends on.
    pub fn future_reach(&self) -> usize {
        if self.causal {
            0
        } else {
            self.dilation * (self.kernel_size - 1) / 2
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.dilation == 0 || self.stride == 0 {
            return Err(Error::Config(
                "conv: kernel_size, dilation and stride must be positive".into(),
            ));
        }
        if !self.causal && self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "conv: non-causal kernel must be odd, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }
}

/// Valid convolution over the explicitly padded sequence.
pub fn conv1d(
    x: &Tensor,
    w: &Tensor,
    spec: &ConvSpec,
    left_pad: usize,
    right_pad: usize,
) -> Result<Tensor> {
    spec.validate()?;
    if w.rank() != 3 || w.shape()[2] != spec.kernel_size {
        return Err(Error::Shape(format!(
            "conv1d: weights {:?} vs kernel_size {}",
            w.shape(),
            spec.kernel_size
        )));
    }
    let (c_out, c_in, kk) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    if x.dim1() != c_in {
        return Err(Error::Shape(format!(
            "conv1d: input {:?} vs weights {:?}",
            x.shape(),
            w.shape()
        )));
    }
    let t = x.dim0();
    let padded = t + left_pad + right_pad;
    let span = spec.span();
    if padded < span {
        return Err(Error::Shape(format!(
            "conv1d: padded length {} shorter than span {}",
            padded, span
        )));
    }
    let t_out = (padded - span) / spec.stride + 1;

    let mut out = Tensor::zeros(&[t_out, c_out]);
    let wdat = w.data();
    for to in 0..t_out {
        let base = to * spec.stride;
        let orow = out.row_mut(to);
        for co in 0..c_out {
            let mut acc = 0.0f32;
            for k in 0..kk {
                let pos = base + k * spec.dilation;
                // Positions inside the pad regions hold zeros and add nothing.
                if pos < left_pad || pos >= left_pad + t {
                    continue;
                }
                let xrow = x.row(pos - left_pad);
                let wk = &wdat[(co * c_in) * kk..];
                for ci in 0..c_in {
                    acc += xrow[ci] * wk[ci * kk + k];
                }
            }
            orow[co] = acc;
        }
    }
    debug_assert!(out.all_finite(), "conv1d produced non-finite values");
    Ok(out)
}

/// Transposed convolution (fractional stride upsampling) by scatter-add.
///
/// Every input frame `t` contributes `w`-weighted values to output positions
/// `[t*factor, t*factor + K)`; overlaps sum in ascending frame order.
pub fn conv1d_transposed(x: &Tensor, w: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(Error::Config("conv1d_transposed: factor must be positive".into()));
    }
    if w.rank() != 3 {
        return Err(Error::Shape(format!(
            "conv1d_transposed: weights must be [Cin, Cout, K], got {:?}",
            w.shape()
        )));
    }
    let (c_in, c_out, kk) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    if kk < factor {
        return Err(Error::Config(format!(
            "conv1d_transposed: kernel {} shorter than factor {}",
            kk, factor
        )));
    }
    if x.dim1() != c_in {
        return Err(Error::Shape(format!(
            "conv1d_transposed: input {:?} vs weights {:?}",
            x.shape(),
            w.shape()
        )));
    }
    let t = x.dim0();
    if t == 0 {
        return Err(Error::Shape("conv1d_transposed: empty input".into()));
    }
    let t_out = t * factor + (kk - factor);

    let mut out = Tensor::zeros(&[t_out, c_out]);
    let wdat = w.data();
    for tin in 0..t {
        let xrow = x.row(tin);
        for k in 0..kk {
            let orow = out.row_mut(tin * factor + k);
            for co in 0..c_out {
                let mut acc = 0.0f32;
                for ci in 0..c_in {
                    acc += xrow[ci] * wdat[(ci * c_out + co) * kk + k];
                }
                orow[co] += acc;
            }
        }
    }
    debug_assert!(out.all_finite(), "conv1d_transposed produced non-finite values");
    Ok(out)
}
