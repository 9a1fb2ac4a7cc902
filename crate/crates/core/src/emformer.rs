//! Segment-attention content encoder.
//!
//! The input is cut into segments of S frames. Each segment is processed
//! together with a copy of the next R input frames (its right context) and
//! attends to the keys/values of at most L preceding frames, which are
//! cached per layer. The copy's per-layer outputs feed the next layer's
//! right context, so the whole stack sees exactly R frames past the segment
//! end no matter how deep it is.
//!
//! [`Emformer::forward`] walks the segments layer by layer; [`EmformerStream`]
//! walks them segment by segment with per-layer caches. Both orders evaluate
//! the same per-(segment, layer) computations on the same inputs, so their
//! outputs are bitwise identical.

use std::sync::Arc;

use crate::config::EmformerConfig;
use crate::error::{Error, Result};
use crate::kernels::{
    full_attention, layer_norm, linear, masked_softmax_attention, relu, BoolMatrix, Tensor,
};
use crate::weights::{TensorSpec, WeightMap};

pub const LN_EPS: f32 = 1e-5;

// ── Attention reach bookkeeping ──────────────────────────────────────────────

/// Frame-level attention reach of one encoder layer: query frame `q` in
/// segment `i = q / segment` may attend key frames
/// `[max(0, i*segment - left), min(len, (i+1)*segment + right))`.
///
/// The window is contiguous, which is what lets the runtime slice keys and
/// values instead of materializing a dense mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionBlockMask {
    pub seq_len: usize,
    pub segment: usize,
    pub left: usize,
    pub right: usize,
}

impl AttentionBlockMask {
    pub fn new(seq_len: usize, segment: usize, left: usize, right: usize) -> Result<Self> {
        if segment == 0 {
            return Err(Error::Mask("segment must be positive".into()));
        }
        Ok(AttentionBlockMask {
            seq_len,
            segment,
            left,
            right,
        })
    }

    pub fn segments(&self) -> usize {
        self.seq_len.div_ceil(self.segment)
    }

    /// Key range `[lo, hi)` for query frame `q`.
    pub fn allowed_range(&self, q: usize) -> (usize, usize) {
        debug_assert!(q < self.seq_len);
        let seg = q / self.segment;
        let start = seg * self.segment;
        let lo = start.saturating_sub(self.left);
        let hi = (start + self.segment + self.right).min(self.seq_len);
        (lo, hi)
    }

    /// Key range `[lo, hi)` for all query frames of segment `i`.
    pub fn segment_range(&self, i: usize) -> (usize, usize) {
        let start = i * self.segment;
        (
            start.saturating_sub(self.left),
            (start + self.segment + self.right).min(self.seq_len),
        )
    }

    pub fn allows(&self, q: usize, key: usize) -> bool {
        let (lo, hi) = self.allowed_range(q);
        key >= lo && key < hi
    }

    pub fn to_bool_matrix(&self) -> BoolMatrix {
        let mut m = BoolMatrix::new(self.seq_len, self.seq_len, false);
        for q in 0..self.seq_len {
            let (lo, hi) = self.allowed_range(q);
            for key in lo..hi {
                m.set(q, key, true);
            }
        }
        m
    }

    pub fn allowed_count(&self) -> usize {
        (0..self.seq_len)
            .map(|q| {
                let (lo, hi) = self.allowed_range(q);
                hi - lo
            })
            .sum()
    }

    /// Fraction of query/key pairs the pattern disallows.
    pub fn sparsity(&self) -> f64 {
        if self.seq_len == 0 {
            return 0.0;
        }
        let total = self.seq_len * self.seq_len;
        1.0 - self.allowed_count() as f64 / total as f64
    }
}

/// Multi-head attention where every query attends its mask window and
/// nothing else, evaluated by slicing each segment's contiguous key window.
/// Matches dense masked attention on the same mask (the sliced window holds
/// exactly the allowed keys, in the same order).
pub fn blocksparse_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    mask: &AttentionBlockMask,
    heads: usize,
) -> Result<Tensor> {
    if q.dim0() != mask.seq_len || k.dim0() != mask.seq_len || v.dim0() != mask.seq_len {
        return Err(Error::Mask(format!(
            "mask covers {} frames, got q {:?} k {:?} v {:?}",
            mask.seq_len,
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let mut parts = Vec::with_capacity(mask.segments());
    for i in 0..mask.segments() {
        let q_lo = i * mask.segment;
        let q_hi = (q_lo + mask.segment).min(mask.seq_len);
        let (lo, hi) = mask.segment_range(i);
        let qs = q.slice_rows(q_lo, q_hi);
        let ks = k.slice_rows(lo, hi);
        let vs = v.slice_rows(lo, hi);
        parts.push(multi_head_full(&qs, &ks, &vs, heads)?);
    }
    let refs: Vec<&Tensor> = parts.iter().collect();
    Tensor::concat_rows(&refs)
}

/// Dense reference for [`blocksparse_attention`]: the same mask applied
/// entry-wise.
pub fn dense_masked_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    mask: &AttentionBlockMask,
    heads: usize,
) -> Result<Tensor> {
    let m = mask.to_bool_matrix();
    multi_head(q, k, v, heads, |qh, kh, vh| {
        masked_softmax_attention(qh, kh, vh, &m)
    })
}

fn multi_head_full(q: &Tensor, k: &Tensor, v: &Tensor, heads: usize) -> Result<Tensor> {
    multi_head(q, k, v, heads, full_attention)
}

fn multi_head(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    heads: usize,
    attend: impl Fn(&Tensor, &Tensor, &Tensor) -> Result<Tensor>,
) -> Result<Tensor> {
    let hidden = q.dim1();
    if heads == 0 || !hidden.is_multiple_of(heads) {
        return Err(Error::Shape(format!(
            "hidden {hidden} does not split into {heads} heads"
        )));
    }
    let d = hidden / heads;
    let mut out = Tensor::zeros(&[q.dim0(), hidden]);
    for h in 0..heads {
        let (lo, hi) = (h * d, (h + 1) * d);
        let oh = attend(&q.slice_cols(lo, hi), &k.slice_cols(lo, hi), &v.slice_cols(lo, hi))?;
        for r in 0..out.dim0() {
            out.row_mut(r)[lo..hi].copy_from_slice(oh.row(r));
        }
    }
    Ok(out)
}

// ── The encoder ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct LayerWeights {
    wq: Tensor,
    bq: Vec<f32>,
    wk: Tensor,
    bk: Vec<f32>,
    wv: Tensor,
    bv: Vec<f32>,
    wo: Tensor,
    bo: Vec<f32>,
    ln1_g: Vec<f32>,
    ln1_b: Vec<f32>,
    ln2_g: Vec<f32>,
    ln2_b: Vec<f32>,
    w1: Tensor,
    b1: Vec<f32>,
    w2: Tensor,
    b2: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct Emformer {
    cfg: EmformerConfig,
    layers: Vec<LayerWeights>,
}

/// Keys and values one layer has cached for the frames a future segment may
/// attend on its left.
#[derive(Debug, Clone)]
struct KvCache {
    k: Tensor,
    v: Tensor,
}

impl KvCache {
    fn empty(hidden: usize) -> Self {
        KvCache {
            k: Tensor::zeros(&[0, hidden]),
            v: Tensor::zeros(&[0, hidden]),
        }
    }

    fn extend_trimmed(&mut self, k_new: &Tensor, v_new: &Tensor, keep: usize) -> Result<()> {
        let k = Tensor::concat_rows(&[&self.k, k_new])?;
        let v = Tensor::concat_rows(&[&self.v, v_new])?;
        let cut = k.dim0().saturating_sub(keep);
        self.k = k.slice_rows(cut, k.dim0());
        self.v = v.slice_rows(cut, v.dim0());
        Ok(())
    }
}

impl Emformer {
    pub fn weight_specs(cfg: &EmformerConfig) -> Vec<TensorSpec> {
        let h = cfg.hidden;
        let f = cfg.ff;
        let mut specs = Vec::new();
        for l in 0..cfg.layers {
            let p = format!("emformer.l{l}");
            for name in ["wq", "wk", "wv", "wo"] {
                specs.push(TensorSpec::new(format!("{p}.attn.{name}"), &[h, h], h));
                specs.push(TensorSpec::new(
                    format!("{p}.attn.{}", name.replace('w', "b")),
                    &[h],
                    h,
                ));
            }
            specs.push(TensorSpec::new(format!("{p}.ln1.g"), &[h], 1));
            specs.push(TensorSpec::new(format!("{p}.ln1.b"), &[h], 1));
            specs.push(TensorSpec::new(format!("{p}.ln2.g"), &[h], 1));
            specs.push(TensorSpec::new(format!("{p}.ln2.b"), &[h], 1));
            specs.push(TensorSpec::new(format!("{p}.ff.w1"), &[h, f], h));
            specs.push(TensorSpec::new(format!("{p}.ff.b1"), &[f], h));
            specs.push(TensorSpec::new(format!("{p}.ff.w2"), &[f, h], f));
            specs.push(TensorSpec::new(format!("{p}.ff.b2"), &[h], f));
        }
        specs
    }

    pub fn from_weights(cfg: &EmformerConfig, w: &WeightMap) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden;
        let f = cfg.ff;
        let mut layers = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let p = format!("emformer.l{l}");
            layers.push(LayerWeights {
                wq: w.get_shaped(&format!("{p}.attn.wq"), &[h, h])?.clone(),
                bq: w.get_vec(&format!("{p}.attn.bq"), h)?.to_vec(),
                wk: w.get_shaped(&format!("{p}.attn.wk"), &[h, h])?.clone(),
                bk: w.get_vec(&format!("{p}.attn.bk"), h)?.to_vec(),
                wv: w.get_shaped(&format!("{p}.attn.wv"), &[h, h])?.clone(),
                bv: w.get_vec(&format!("{p}.attn.bv"), h)?.to_vec(),
                wo: w.get_shaped(&format!("{p}.attn.wo"), &[h, h])?.clone(),
                bo: w.get_vec(&format!("{p}.attn.bo"), h)?.to_vec(),
                ln1_g: w.get_vec(&format!("{p}.ln1.g"), h)?.to_vec(),
                ln1_b: w.get_vec(&format!("{p}.ln1.b"), h)?.to_vec(),
                ln2_g: w.get_vec(&format!("{p}.ln2.g"), h)?.to_vec(),
                ln2_b: w.get_vec(&format!("{p}.ln2.b"), h)?.to_vec(),
                w1: w.get_shaped(&format!("{p}.ff.w1"), &[h, f])?.clone(),
                b1: w.get_vec(&format!("{p}.ff.b1"), f)?.to_vec(),
                w2: w.get_shaped(&format!("{p}.ff.w2"), &[f, h])?.clone(),
                b2: w.get_vec(&format!("{p}.ff.b2"), h)?.to_vec(),
            });
        }
        Ok(Emformer { cfg: cfg.clone(), layers })
    }

    pub fn config(&self) -> &EmformerConfig {
        &self.cfg
    }

    /// One layer over one segment: pre-norm attention over
    /// `[cache | segment | right copy]`, then a pre-norm feed-forward.
    /// Returns the segment/copy outputs and the keys/values the segment's
    /// frames contribute to the layer's cache.
    fn layer_segment(
        &self,
        layer: usize,
        c_in: &Tensor,
        r_in: &Tensor,
        cache: &KvCache,
    ) -> Result<(Tensor, Tensor, Tensor, Tensor)> {
        let lw = &self.layers[layer];
        let joint = Tensor::concat_rows(&[c_in, r_in])?;
        let c_len = c_in.dim0();

        let h = layer_norm(&joint, &lw.ln1_g, &lw.ln1_b, LN_EPS)?;
        let q = linear(&h, &lw.wq, &lw.bq)?;
        let k_cur = linear(&h, &lw.wk, &lw.bk)?;
        let v_cur = linear(&h, &lw.wv, &lw.bv)?;

        let k_win = Tensor::concat_rows(&[&cache.k, &k_cur])?;
        let v_win = Tensor::concat_rows(&[&cache.v, &v_cur])?;
        let attn = multi_head_full(&q, &k_win, &v_win, self.cfg.heads)?;
        let proj = linear(&attn, &lw.wo, &lw.bo)?;

        let mut x = joint;
        for (o, p) in x.data_mut().iter_mut().zip(proj.data()) {
            *o += p;
        }

        let h2 = layer_norm(&x, &lw.ln2_g, &lw.ln2_b, LN_EPS)?;
        let inner = crate::kernels::map(&linear(&h2, &lw.w1, &lw.b1)?, relu);
        let ff = linear(&inner, &lw.w2, &lw.b2)?;
        for (o, p) in x.data_mut().iter_mut().zip(ff.data()) {
            *o += p;
        }

        Ok((
            x.slice_rows(0, c_len),
            x.slice_rows(c_len, x.dim0()),
            k_cur.slice_rows(0, c_len),
            v_cur.slice_rows(0, c_len),
        ))
    }

    /// Offline pass: all segments at layer 0, then all at layer 1, and so on.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.dim1() != self.cfg.hidden {
            return Err(Error::Shape(format!(
                "encoder expects {} channels, got {:?}",
                self.cfg.hidden,
                x.shape()
            )));
        }
        let t = x.dim0();
        let s = self.cfg.segment;
        let r = self.cfg.right_context;
        let n = t.div_ceil(s);

        let mut cs: Vec<Tensor> = Vec::with_capacity(n);
        let mut rs: Vec<Tensor> = Vec::with_capacity(n);
        for i in 0..n {
            let c_hi = ((i + 1) * s).min(t);
            cs.push(x.slice_rows(i * s, c_hi));
            rs.push(x.slice_rows(c_hi, (c_hi + r).min(t)));
        }

        for layer in 0..self.layers.len() {
            let mut cache = KvCache::empty(self.cfg.hidden);
            for i in 0..n {
                let (c_out, r_out, k_new, v_new) =
                    self.layer_segment(layer, &cs[i], &rs[i], &cache)?;
                cache.extend_trimmed(&k_new, &v_new, self.cfg.left_context)?;
                cs[i] = c_out;
                rs[i] = r_out;
            }
        }

        let refs: Vec<&Tensor> = cs.iter().collect();
        Tensor::concat_rows(&refs)
    }
}

/// Streaming pass: per-layer caches, one segment at a time. Frames buffer
/// until the segment and its full right context are present; `flush`
/// processes the remainder with the right context clipped, exactly as the
/// offline pass clips it at the end of the input.
#[derive(Debug)]
pub struct EmformerStream {
    model: Arc<Emformer>,
    caches: Vec<KvCache>,
    buf: Tensor,
    finished: bool,
}

impl EmformerStream {
    pub fn new(model: Arc<Emformer>) -> Self {
        let hidden = model.cfg.hidden;
        let layers = model.layers.len();
        EmformerStream {
            model,
            caches: (0..layers).map(|_| KvCache::empty(hidden)).collect(),
            buf: Tensor::zeros(&[0, hidden]),
            finished: false,
        }
    }

    /// Frames that must arrive beyond a segment before it can be emitted.
    pub fn lag(&self) -> usize {
        self.model.cfg.right_context
    }

    pub fn push(&mut self, x: &Tensor) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("EmformerStream pushed after flush".into()));
        }
        self.buf = Tensor::concat_rows(&[&self.buf, x])?;
        let s = self.model.cfg.segment;
        let r = self.model.cfg.right_context;
        let mut outs = Vec::new();
        while self.buf.dim0() >= s + r {
            let c = self.buf.slice_rows(0, s);
            let rc = self.buf.slice_rows(s, s + r);
            outs.push(self.process_segment(&c, &rc)?);
            self.buf = self.buf.slice_rows(s, self.buf.dim0());
        }
        if outs.is_empty() {
            return Ok(Tensor::zeros(&[0, self.model.cfg.hidden]));
        }
        let refs: Vec<&Tensor> = outs.iter().collect();
        Tensor::concat_rows(&refs)
    }

    pub fn flush(&mut self) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("EmformerStream flushed twice".into()));
        }
        self.finished = true;
        let s = self.model.cfg.segment;
        let r = self.model.cfg.right_context;
        let mut outs = Vec::new();
        while self.buf.dim0() > 0 {
            let t = self.buf.dim0();
            let c = self.buf.slice_rows(0, s.min(t));
            let rc = self.buf.slice_rows(s.min(t), (s + r).min(t));
            outs.push(self.process_segment(&c, &rc)?);
            self.buf = self.buf.slice_rows(s.min(t), t);
        }
        if outs.is_empty() {
            return Ok(Tensor::zeros(&[0, self.model.cfg.hidden]));
        }
        let refs: Vec<&Tensor> = outs.iter().collect();
        Tensor::concat_rows(&refs)
    }

    /// Test hook: corrupt every non-empty layer cache so downstream
    /// verification provably detects state divergence. The sign alternates
    /// per element: a uniform shift of every value channel would move the
    /// attention output by a constant vector, which the next layer norm
    /// subtracts away exactly. An alternating pattern survives the mean
    /// subtraction and rides the value path into the output. Hitting the
    /// top layer matters most; a fault in an early layer alone can be
    /// renormalized into the noise by the stack above it.
    /// Returns false while every cache is still empty.
    pub fn perturb_cache(&mut self, eps: f32) -> bool {
        let mut hit = false;
        for cache in &mut self.caches {
            hit |= crate::stream::alternate_bump(cache.k.data_mut().iter_mut(), eps);
            hit |= crate::stream::alternate_bump(cache.v.data_mut().iter_mut(), eps);
        }
        hit
    }

    fn process_segment(&mut self, c: &Tensor, r: &Tensor) -> Result<Tensor> {
        let mut c_cur = c.clone();
        let mut r_cur = r.clone();
        for layer in 0..self.model.layers.len() {
            let (c_out, r_out, k_new, v_new) =
                self.model
                    .layer_segment(layer, &c_cur, &r_cur, &self.caches[layer])?;
            self.caches[layer].extend_trimmed(&k_new, &v_new, self.model.cfg.left_context)?;
            c_cur = c_out;
            r_cur = r_out;
        }
        Ok(c_cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RuntimeConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_model(seed: u64) -> Arc<Emformer> {
        let cfg = RuntimeConfig::toy().emformer;
        let w = WeightMap::generate(&Emformer::weight_specs(&cfg), seed);
        Arc::new(Emformer::from_weights(&cfg, &w).unwrap())
    }

    fn model_with(cfg: EmformerConfig, seed: u64) -> Arc<Emformer> {
        let w = WeightMap::generate(&Emformer::weight_specs(&cfg), seed);
        Arc::new(Emformer::from_weights(&cfg, &w).unwrap())
    }

    fn rng_frames(rng: &mut impl Rng, t: usize, c: usize) -> Tensor {
        Tensor::from_fn(t, c, |_, _| rng.gen_range(-1.0f32..1.0))
    }

    #[test]
    fn streaming_equals_offline_bitwise() {
        let model = toy_model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = rng_frames(&mut rng, 40, 16);
        let want = model.forward(&x).unwrap();

        for pushes in [vec![4usize; 10], vec![8, 12, 4, 16], vec![1; 40], vec![40]] {
            let mut s = EmformerStream::new(model.clone());
            let mut outs = Vec::new();
            let mut at = 0;
            for n in pushes {
                outs.push(s.push(&x.slice_rows(at, at + n)).unwrap());
                at += n;
            }
            outs.push(s.flush().unwrap());
            let refs: Vec<&Tensor> = outs.iter().collect();
            let got = Tensor::concat_rows(&refs).unwrap();
            assert_eq!(want.shape(), got.shape());
            assert_eq!(want.data(), got.data());
        }
    }

    #[test]
    fn ragged_tail_still_matches() {
        let model = toy_model(4);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        // 38 frames: last segment is 2 frames, right contexts clip.
        let x = rng_frames(&mut rng, 38, 16);
        let want = model.forward(&x).unwrap();
        let mut s = EmformerStream::new(model);
        let a = s.push(&x.slice_rows(0, 23)).unwrap();
        let b = s.push(&x.slice_rows(23, 38)).unwrap();
        let fl = s.flush().unwrap();
        let got = Tensor::concat_rows(&[&a, &b, &fl]).unwrap();
        assert_eq!(want.data(), got.data());
    }

    #[test]
    fn output_never_depends_on_frames_past_right_context() {
        // Toy: S=4, R=4. Segment 0's output may see frames [0, 8). Changing
        // frame 8 and beyond must leave it bit-identical, at any depth.
        let model = toy_model(5);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = rng_frames(&mut rng, 24, 16);
        let base = model.forward(&x).unwrap();

        let mut perturbed = x.clone();
        for t in 8..24 {
            for c in 0..16 {
                perturbed.row_mut(t)[c] += 7.0;
            }
        }
        let out = model.forward(&perturbed).unwrap();
        assert_eq!(&base.data()[..4 * 16], &out.data()[..4 * 16]);
        // Sensitivity check: frame 7 is inside the window and must matter.
        let mut inside = x.clone();
        inside.row_mut(7)[0] += 1.0;
        let out2 = model.forward(&inside).unwrap();
        assert_ne!(&base.data()[..4 * 16], &out2.data()[..4 * 16]);
    }

    #[test]
    fn left_context_truncates_in_a_single_layer() {
        // One layer, L=4: segment 3 (frames 12..16) sees keys from frame 8
        // on. Frame 0 must not affect it; frame 8 must.
        let mut cfg = RuntimeConfig::toy().emformer;
        cfg.layers = 1;
        cfg.left_context = 4;
        let model = model_with(cfg.clone(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x = rng_frames(&mut rng, 20, 16);
        let base = model.forward(&x).unwrap();

        let mut far = x.clone();
        far.row_mut(0)[3] += 5.0;
        let out = model.forward(&far).unwrap();
        assert_eq!(&base.data()[12 * 16..16 * 16], &out.data()[12 * 16..16 * 16]);

        let mut near = x.clone();
        near.row_mut(8)[3] += 5.0;
        let out2 = model.forward(&near).unwrap();
        assert_ne!(&base.data()[12 * 16..16 * 16], &out2.data()[12 * 16..16 * 16]);

        // Reach compounds by L per layer: segment 3 starts at frame 12, so
        // three layers (3*4 = 12) are needed before frame 0 can touch it.
        cfg.layers = 3;
        let deep = model_with(cfg, 6);
        let base2 = deep.forward(&x).unwrap();
        let out3 = deep.forward(&far).unwrap();
        assert_ne!(
            &base2.data()[12 * 16..16 * 16],
            &out3.data()[12 * 16..16 * 16]
        );
    }

    #[test]
    fn zero_right_context_streams_without_lag() {
        let mut cfg = RuntimeConfig::toy().emformer;
        cfg.right_context = 0;
        let model = model_with(cfg, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = rng_frames(&mut rng, 16, 16);
        let want = model.forward(&x).unwrap();

        let mut s = EmformerStream::new(model);
        // Every full segment emits immediately.
        let out = s.push(&x.slice_rows(0, 4)).unwrap();
        assert_eq!(out.dim0(), 4);
        let rest = s.push(&x.slice_rows(4, 16)).unwrap();
        assert_eq!(rest.dim0(), 12);
        let fl = s.flush().unwrap();
        assert_eq!(fl.dim0(), 0);
        let got = Tensor::concat_rows(&[&out, &rest, &fl]).unwrap();
        assert_eq!(want.data(), got.data());
    }

    #[test]
    fn emission_lags_by_right_context() {
        // Toy S=4, R=4: segment i emits once frames through (i+1)*4+4 exist.
        let model = toy_model(8);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = rng_frames(&mut rng, 40, 16);
        let mut s = EmformerStream::new(model);
        let mut emitted = 0;
        for i in 0..10 {
            emitted += s.push(&x.slice_rows(i * 4, (i + 1) * 4)).unwrap().dim0();
        }
        assert_eq!(emitted, 36);
        assert_eq!(s.flush().unwrap().dim0(), 4);
    }

    #[test]
    fn push_after_flush_is_a_state_error() {
        let model = toy_model(9);
        let mut s = EmformerStream::new(model);
        s.flush().unwrap();
        assert!(matches!(
            s.push(&Tensor::zeros(&[4, 16])),
            Err(Error::State(_))
        ));
    }

    // ── mask properties ──────────────────────────────────────────────

    #[test]
    fn mask_ranges_match_brute_force_matrix() {
        let mask = AttentionBlockMask::new(37, 4, 30, 8).unwrap();
        let m = mask.to_bool_matrix();
        assert_eq!(mask.allowed_count(), m.count_true());
        for q in 0..37 {
            for key in 0..37 {
                assert_eq!(mask.allows(q, key), m.get(q, key));
            }
        }
    }

    #[test]
    fn sparsity_values_for_production_shape() {
        // S=4, L=30, R=8 at frame granularity.
        let s200 = AttentionBlockMask::new(200, 4, 30, 8).unwrap().sparsity();
        let s400 = AttentionBlockMask::new(400, 4, 30, 8).unwrap().sparsity();
        let s800 = AttentionBlockMask::new(800, 4, 30, 8).unwrap().sparsity();
        assert!((s200 - 0.804).abs() < 1e-12, "got {s200}");
        assert!((s400 - 0.8985).abs() < 1e-12, "got {s400}");
        assert!((s800 - 0.948375).abs() < 1e-12, "got {s800}");
        assert!(s200 < s400 && s400 < s800);
    }

    #[test]
    fn blocksparse_matches_dense_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (t, s, l, r, heads) in [(20, 4, 8, 4, 2), (33, 5, 7, 3, 1), (16, 4, 0, 0, 4)] {
            let mask = AttentionBlockMask::new(t, s, l, r).unwrap();
            let q = rng_frames(&mut rng, t, 8);
            let k = rng_frames(&mut rng, t, 8);
            let v = rng_frames(&mut rng, t, 8);
            let sparse = blocksparse_attention(&q, &k, &v, &mask, heads).unwrap();
            let dense = dense_masked_attention(&q, &k, &v, &mask, heads).unwrap();
            assert_eq!(sparse.data(), dense.data());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sparsity_grows_with_length(
            s in 1usize..6,
            l in 0usize..16,
            r in 0usize..8,
            t1 in 2usize..30,
            grow in 1usize..30,
        ) {
            // Longer sequences with the same window are sparser, as long as
            // the window does not already cover everything.
            let t1 = t1 * s;
            let t2 = t1 + grow * s;
            let a = AttentionBlockMask::new(t1, s, l, r).unwrap();
            let b = AttentionBlockMask::new(t2, s, l, r).unwrap();
            prop_assert!(a.sparsity() <= b.sparsity() + 1e-12);
        }

        #[test]
        fn allowed_count_matches_matrix(
            t in 1usize..40,
            s in 1usize..6,
            l in 0usize..12,
            r in 0usize..6,
        ) {
            let mask = AttentionBlockMask::new(t, s, l, r).unwrap();
            prop_assert_eq!(mask.allowed_count(), mask.to_bool_matrix().count_true());
        }
    }
}
