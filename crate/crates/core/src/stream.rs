//! Stateful frame-at-a-time counterparts of the convolution kernels.
//!
//! Each wrapper materializes the padding an offline call would apply as
//! explicit zero frames inside its carry buffers and evaluates the same
//! kernel over the same window contents in the same order. Streaming output
//! therefore equals offline output bit for bit, regardless of how the input
//! is split into pushes. Every wrapper follows push*/flush; pushing after a
//! flush is a state error.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::kernels::{conv1d, ConvSpec, Tensor};

/// Alternating-sign bump for fault-injection hooks. A uniform shift would
/// be removed exactly by any downstream mean subtraction; alternating signs
/// survive it.
pub(crate) fn alternate_bump<'a>(vals: impl Iterator<Item = &'a mut f32>, eps: f32) -> bool {
    let mut hit = false;
    for (i, v) in vals.enumerate() {
        *v += if i % 2 == 0 { eps } else { -eps };
        hit = true;
    }
    hit
}

/// Rows-of-f32 FIFO.
#[derive(Debug, Clone)]
pub(crate) struct RowBuf {
    cols: usize,
    data: VecDeque<f32>,
}

impl RowBuf {
    pub fn new(cols: usize) -> Self {
        RowBuf {
            cols,
            data: VecDeque::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn push_tensor(&mut self, x: &Tensor) {
        debug_assert_eq!(x.dim1(), self.cols);
        self.data.extend(x.data().iter().copied());
    }

    pub fn take(&mut self, n: usize) -> Tensor {
        debug_assert!(n <= self.rows());
        let flat: Vec<f32> = self.data.drain(..n * self.cols).collect();
        Tensor::from_vec(&[n, self.cols], flat).expect("RowBuf take")
    }

    pub fn take_all(&mut self) -> Tensor {
        self.take(self.rows())
    }
}

/// Emits its input delayed by a fixed number of frames; `flush` releases the
/// remainder. Used to align identity shortcuts with conv paths that lag by
/// their future reach.
#[derive(Debug, Clone)]
pub struct DelayLine {
    delay: usize,
    buf: RowBuf,
}

impl DelayLine {
    pub fn new(delay: usize, cols: usize) -> Self {
        DelayLine {
            delay,
            buf: RowBuf::new(cols),
        }
    }

    pub fn push(&mut self, x: &Tensor) -> Tensor {
        self.buf.push_tensor(x);
        let ready = self.buf.rows().saturating_sub(self.delay);
        self.buf.take(ready)
    }

    pub fn flush(&mut self) -> Tensor {
        self.buf.take_all()
    }
}

/// Streaming stride-1 convolution with the same-padding semantics of
/// [`ConvSpec::same_padding`]: emits exactly one output frame per input
/// frame once `flush` has run.
#[derive(Debug, Clone)]
pub struct ConvStream {
    w: Tensor,
    spec: ConvSpec,
    carry: Tensor,
    rpad: usize,
    finished: bool,
}

impl ConvStream {
    pub fn new(w: Tensor, spec: ConvSpec) -> Result<Self> {
        spec.validate()?;
        if spec.stride != 1 {
            return Err(Error::Shape("ConvStream requires stride 1".into()));
        }
        let cin = w.shape()[1];
        let (lpad, rpad) = spec.same_padding();
        Ok(ConvStream {
            w,
            spec,
            carry: Tensor::zeros(&[lpad, cin]),
            rpad,
            finished: false,
        })
    }

    /// Input frames the conv must see beyond frame `t` before output `t`
    /// can be emitted.
    pub fn lag(&self) -> usize {
        self.spec.future_reach()
    }

    pub fn push(&mut self, x: &Tensor) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("ConvStream pushed after flush".into()));
        }
        self.advance(x)
    }

    pub fn flush(&mut self) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("ConvStream flushed twice".into()));
        }
        self.finished = true;
        let cin = self.carry.dim1();
        let zeros = Tensor::zeros(&[self.rpad, cin]);
        self.advance(&zeros)
    }

    fn advance(&mut self, x: &Tensor) -> Result<Tensor> {
        let span = self.spec.span();
        let joined = Tensor::concat_rows(&[&self.carry, x])?;
        if joined.dim0() < span {
            self.carry = joined;
            return Ok(Tensor::zeros(&[0, self.w.dim0()]));
        }
        // Identical window contents and accumulation order as the offline
        // call with padding arguments; zeros here are materialized instead.
        let out = conv1d(&joined, &self.w, &self.spec, 0, 0)?;
        self.carry = joined.slice_rows(joined.dim0() - (span - 1), joined.dim0());
        Ok(out)
    }

    /// Test hook: corrupt the carried window tail.
    pub fn perturb_carry(&mut self, eps: f32) -> bool {
        alternate_bump(self.carry.data_mut().iter_mut(), eps)
    }
}

/// Streaming transposed convolution (upsampler). Scatter contributions per
/// input frame overlap across `kernel - factor` positions; that overhang is
/// carried, and the symmetric trim of `(kernel - factor) / 2` positions per
/// side is applied on emission so total output is `factor` per input frame.
#[derive(Debug, Clone)]
pub struct TransposedStream {
    w: Tensor, // [Cin, Cout, K]
    factor: usize,
    tail: RowBuf,
    lead_to_trim: usize,
    trim_l: usize,
    frames_in: usize,
    finished: bool,
}

impl TransposedStream {
    pub fn new(w: Tensor, factor: usize) -> Result<Self> {
        let k = w.shape()[2];
        if factor == 0 || k < factor {
            return Err(Error::Shape(format!(
                "transposed conv kernel {k} must cover factor {factor}"
            )));
        }
        if !(k - factor).is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "transposed conv overhang {} must be even",
                k - factor
            )));
        }
        let cout = w.shape()[1];
        let trim_l = (k - factor) / 2;
        let mut tail = RowBuf::new(cout);
        tail.push_tensor(&Tensor::zeros(&[k - factor, cout]));
        Ok(TransposedStream {
            w,
            factor,
            tail,
            lead_to_trim: trim_l,
            trim_l,
            frames_in: 0,
            finished: false,
        })
    }

    /// Test hook: corrupt the carried overlap-add tail.
    pub fn perturb_tail(&mut self, eps: f32) -> bool {
        alternate_bump(self.tail.data.iter_mut(), eps)
    }

    pub fn push(&mut self, x: &Tensor) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("TransposedStream pushed after flush".into()));
        }
        let (cin, cout, k) = (self.w.shape()[0], self.w.shape()[1], self.w.shape()[2]);
        if x.dim1() != cin {
            return Err(Error::Shape(format!(
                "transposed stream expected {cin} channels, got {}",
                x.dim1()
            )));
        }
        let mut emitted = RowBuf::new(cout);
        for t in 0..x.dim0() {
            let frame = x.row(t);
            self.tail.push_tensor(&Tensor::zeros(&[self.factor, cout]));
            // tail now spans kernel positions [0, k) relative to this frame.
            for kk in 0..k {
                for co in 0..cout {
                    let mut acc = 0.0f32;
                    for (ci, &xv) in frame.iter().enumerate() {
                        acc += xv * self.w.data()[(ci * cout + co) * k + kk];
                    }
                    self.tail.data[kk * cout + co] += acc;
                }
            }
            let done = self.tail.take(self.factor);
            emitted.push_tensor(&done);
        }
        self.frames_in += x.dim0();
        Ok(self.drop_lead(emitted))
    }

    pub fn flush(&mut self) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("TransposedStream flushed twice".into()));
        }
        self.finished = true;
        let cout = self.w.shape()[1];
        if self.frames_in == 0 {
            return Ok(Tensor::zeros(&[0, cout]));
        }
        let mut out = RowBuf::new(cout);
        out.push_tensor(&self.tail.take(self.trim_l));
        Ok(self.drop_lead(out))
    }

    fn drop_lead(&mut self, mut buf: RowBuf) -> Tensor {
        let drop = self.lead_to_trim.min(buf.rows());
        self.lead_to_trim -= drop;
        buf.take(drop);
        buf.take_all()
    }
}

/// Sums per-position rows from several sources, releasing a position only
/// once every source has produced it. Rows are added in source order, so
/// the sum is bitwise what a single offline pass computes, no matter in what
/// order positions arrive.
#[derive(Debug, Clone)]
pub struct Aligner {
    queues: Vec<RowBuf>,
    scale: f32,
}

impl Aligner {
    /// `scale` multiplies each released sum (1.0 for plain sums, `1/n` for
    /// averaged branch stacks).
    pub fn new(sources: usize, cols: usize, scale: f32) -> Self {
        Aligner {
            queues: (0..sources).map(|_| RowBuf::new(cols)).collect(),
            scale,
        }
    }

    pub fn push(&mut self, source: usize, x: &Tensor) {
        self.queues[source].push_tensor(x);
    }

    /// Release every position now present in all sources.
    pub fn drain(&mut self) -> Tensor {
        let ready = self.queues.iter().map(RowBuf::rows).min().unwrap_or(0);
        let cols = self.queues[0].cols;
        let parts: Vec<Tensor> = self.queues.iter_mut().map(|q| q.take(ready)).collect();
        let mut out = Tensor::zeros(&[ready, cols]);
        for t in 0..ready {
            for c in 0..cols {
                let mut acc = 0.0f32;
                for p in &parts {
                    acc += p.data()[t * cols + c];
                }
                out.data_mut()[t * cols + c] = acc * self.scale;
            }
        }
        out
    }

    /// Rows buffered in the slowest source (diagnostic).
    pub fn pending(&self) -> usize {
        self.queues.iter().map(RowBuf::rows).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::conv1d_transposed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rng_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-1.0f32..1.0))
    }

    fn offline_same(x: &Tensor, w: &Tensor, spec: &ConvSpec) -> Tensor {
        let (l, r) = spec.same_padding();
        conv1d(x, w, spec, l, r).unwrap()
    }

    fn stream_in_pieces(x: &Tensor, w: &Tensor, spec: &ConvSpec, cuts: &[usize]) -> Tensor {
        let mut s = ConvStream::new(w.clone(), *spec).unwrap();
        let mut outs: Vec<Tensor> = Vec::new();
        let mut at = 0;
        for &cut in cuts {
            let piece = x.slice_rows(at, cut);
            outs.push(s.push(&piece).unwrap());
            at = cut;
        }
        outs.push(s.push(&x.slice_rows(at, x.dim0())).unwrap());
        outs.push(s.flush().unwrap());
        let refs: Vec<&Tensor> = outs.iter().collect();
        Tensor::concat_rows(&refs).unwrap()
    }

    #[test]
    fn conv_stream_matches_offline_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (k, d, causal) in [(3, 1, false), (3, 4, false), (5, 2, false), (4, 2, true), (1, 1, false)] {
            let spec = if causal {
                ConvSpec::causal(k, d)
            } else {
                ConvSpec::new(k, d)
            };
            let w = rng_tensor(&mut rng, 2 * 3 * k, 1).reshaped(vec![2, 3, k]);
            let x = rng_tensor(&mut rng, 17, 3);
            let want = offline_same(&x, &w, &spec);
            let got = stream_in_pieces(&x, &w, &spec, &[1, 2, 7, 8, 15]);
            assert_eq!(want.shape(), got.shape());
            assert_eq!(want.data(), got.data(), "k={k} d={d} causal={causal}");
        }
    }

    #[test]
    fn conv_stream_emits_one_output_per_input_after_flush() {
        let spec = ConvSpec::new(3, 4);
        let w = Tensor::zeros(&[1, 1, 3]);
        let mut s = ConvStream::new(w, spec).unwrap();
        let mut total = 0;
        for _ in 0..5 {
            total += s.push(&Tensor::zeros(&[2, 1])).unwrap().dim0();
        }
        total += s.flush().unwrap().dim0();
        assert_eq!(total, 10);
    }

    #[test]
    fn conv_stream_rejects_use_after_flush() {
        let mut s = ConvStream::new(Tensor::zeros(&[1, 1, 3]), ConvSpec::new(3, 1)).unwrap();
        s.flush().unwrap();
        assert!(matches!(s.push(&Tensor::zeros(&[1, 1])), Err(Error::State(_))));
        assert!(matches!(s.flush(), Err(Error::State(_))));
    }

    fn offline_transposed_trimmed(x: &Tensor, w: &Tensor, f: usize) -> Tensor {
        let k = w.shape()[2];
        let full = conv1d_transposed(x, w, f).unwrap();
        let trim = (k - f) / 2;
        full.slice_rows(trim, trim + x.dim0() * f)
    }

    #[test]
    fn transposed_stream_matches_offline_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (f, k) in [(2, 4), (3, 9), (8, 16), (5, 11), (4, 4)] {
            let w = rng_tensor(&mut rng, 3 * 2 * k, 1).reshaped(vec![3, 2, k]);
            let x = rng_tensor(&mut rng, 9, 3);
            let want = offline_transposed_trimmed(&x, &w, f);

            let mut s = TransposedStream::new(w, f).unwrap();
            let mut outs = Vec::new();
            for cut in [(0, 1), (1, 2), (2, 5), (5, 9)] {
                outs.push(s.push(&x.slice_rows(cut.0, cut.1)).unwrap());
            }
            outs.push(s.flush().unwrap());
            let refs: Vec<&Tensor> = outs.iter().collect();
            let got = Tensor::concat_rows(&refs).unwrap();
            assert_eq!(want.shape(), got.shape(), "f={f} k={k}");
            assert_eq!(want.data(), got.data(), "f={f} k={k}");
        }
    }

    #[test]
    fn transposed_stream_output_length_is_factor_per_frame() {
        let mut s = TransposedStream::new(Tensor::zeros(&[1, 1, 16]), 8).unwrap();
        let mut n = 0;
        for _ in 0..4 {
            n += s.push(&Tensor::zeros(&[1, 1])).unwrap().dim0();
        }
        n += s.flush().unwrap().dim0();
        assert_eq!(n, 32);
    }

    #[test]
    fn delay_line_shifts_by_delay() {
        let mut d = DelayLine::new(2, 1);
        let a = d.push(&Tensor::from_vec(&[3, 1], vec![1.0, 2.0, 3.0]).unwrap());
        assert_eq!(a.data(), &[1.0]);
        let b = d.push(&Tensor::from_vec(&[1, 1], vec![4.0]).unwrap());
        assert_eq!(b.data(), &[2.0]);
        assert_eq!(d.flush().data(), &[3.0, 4.0]);
    }

    #[test]
    fn aligner_sums_in_source_order_when_arrival_is_reversed() {
        let mut a = Aligner::new(2, 1, 0.5);
        a.push(1, &Tensor::from_vec(&[2, 1], vec![10.0, 20.0]).unwrap());
        assert_eq!(a.drain().dim0(), 0);
        a.push(0, &Tensor::from_vec(&[1, 1], vec![1.0]).unwrap());
        assert_eq!(a.drain().data(), &[5.5]);
        a.push(0, &Tensor::from_vec(&[1, 1], vec![2.0]).unwrap());
        assert_eq!(a.drain().data(), &[11.0]);
        assert_eq!(a.pending(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn conv_stream_split_invariant(
            seed in 0u64..1000,
            t in 6usize..40,
            k in proptest::sample::select(vec![1usize, 3, 5]),
            d in 1usize..4,
            cut_a in 0usize..20,
            cut_b in 0usize..40,
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let spec = ConvSpec::new(k, d);
            let w = rng_tensor(&mut rng, 2 * 2 * k, 1).reshaped(vec![2, 2, k]);
            let x = rng_tensor(&mut rng, t, 2);
            let mut cuts = vec![cut_a.min(t), cut_b.min(t)];
            cuts.sort_unstable();
            let want = offline_same(&x, &w, &spec);
            let got = stream_in_pieces(&x, &w, &spec, &cuts);
            prop_assert_eq!(want.data(), got.data());
        }

        #[test]
        fn transposed_stream_split_invariant(
            seed in 0u64..1000,
            t in 2usize..16,
            fk in proptest::sample::select(vec![(2usize, 4usize), (3, 5), (4, 8), (5, 11)]),
            cut in 0usize..16,
        ) {
            let (f, k) = fk;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = rng_tensor(&mut rng, 2 * 2 * k, 1).reshaped(vec![2, 2, k]);
            let x = rng_tensor(&mut rng, t, 2);
            let want = offline_transposed_trimmed(&x, &w, f);

            let mut s = TransposedStream::new(w, f).unwrap();
            let c = cut.min(t);
            let a = s.push(&x.slice_rows(0, c)).unwrap();
            let b = s.push(&x.slice_rows(c, t)).unwrap();
            let fl = s.flush().unwrap();
            let got = Tensor::concat_rows(&[&a, &b, &fl]).unwrap();
            prop_assert_eq!(want.data(), got.data());
        }
    }
}
