//! Upsampling vocoder: bottleneck frames to waveform samples.
//!
//! A speaker embedding is projected and added onto every input frame, a
//! pre conv widens it, then each stage upsamples by its factor through a
//! transposed conv (symmetrically trimmed) and refines through parallel
//! residual blocks whose outputs are averaged. A post conv and tanh produce
//! one sample channel; total output is exactly `frames * product(factors)`.
//!
//! Streaming uses the stateful kernels from [`crate::stream`]: scatter
//! overhangs carry across pushes, branch outputs meet in an
//! [`Aligner`], and samples leave only in whole hop blocks so downstream
//! chunk accounting stays frame-aligned.

use std::sync::Arc;

use crate::config::VocoderConfig;
use crate::error::{Error, Result};
use crate::kernels::{conv1d, conv1d_transposed, leaky_relu, map, matmul, ConvSpec, Tensor};
use crate::stream::{Aligner, ConvStream, DelayLine, TransposedStream};
use crate::weights::{TensorSpec, WeightMap};

pub const LRELU_SLOPE: f32 = 0.1;

fn lrelu_map(x: &Tensor) -> Tensor {
    map(x, |v| leaky_relu(v, LRELU_SLOPE))
}

fn add_bias(mut t: Tensor, b: &[f32]) -> Tensor {
    debug_assert_eq!(t.dim1(), b.len());
    for r in 0..t.dim0() {
        for (o, bv) in t.row_mut(r).iter_mut().zip(b) {
            *o += bv;
        }
    }
    t
}

fn add_rows(a: &Tensor, b: &Tensor) -> Tensor {
    debug_assert_eq!(a.shape(), b.shape());
    let mut out = a.clone();
    for (o, v) in out.data_mut().iter_mut().zip(b.data()) {
        *o += v;
    }
    out
}

#[derive(Debug, Clone)]
struct PairW {
    dilation: usize,
    c1_w: Tensor, // [c, c, k]
    c1_b: Vec<f32>,
    c2_w: Tensor, // [c, c, k]  dilation 1
    c2_b: Vec<f32>,
}

impl PairW {
    /// Output positions lag inputs by the two convs' future reach.
    fn reach(&self, kernel: usize) -> usize {
        let half = (kernel - 1) / 2;
        self.dilation * half + half
    }
}

#[derive(Debug, Clone)]
struct BlockW {
    kernel: usize,
    pairs: Vec<PairW>,
}

#[derive(Debug, Clone)]
struct StageW {
    factor: usize,
    up_w: Tensor, // [in_c, out_c, K]
    up_b: Vec<f32>,
    blocks: Vec<BlockW>,
}

#[derive(Debug, Clone)]
pub struct Vocoder {
    cfg: VocoderConfig,
    cond_w: Tensor, // [speaker_dim, in_channels], no bias
    pre_w: Tensor,  // [channels, in_channels, pre_kernel]
    pre_b: Vec<f32>,
    stages: Vec<StageW>,
    post_w: Tensor, // [1, last, post_kernel]
    post_b: Vec<f32>,
}

impl Vocoder {
    pub fn weight_specs(cfg: &VocoderConfig) -> Vec<TensorSpec> {
        let mut specs = vec![
            TensorSpec::new(
                "vocoder.cond.w",
                &[cfg.speaker_dim, cfg.in_channels],
                cfg.speaker_dim,
            ),
            TensorSpec::new(
                "vocoder.pre.w",
                &[cfg.channels, cfg.in_channels, cfg.pre_kernel],
                cfg.in_channels * cfg.pre_kernel,
            ),
            TensorSpec::new("vocoder.pre.b", &[cfg.channels], cfg.in_channels * cfg.pre_kernel),
        ];
        for s in 0..cfg.stages() {
            let (ic, oc) = (cfg.stage_in_channels(s), cfg.stage_out_channels(s));
            let k = cfg.kernels[s];
            let p = format!("vocoder.s{s}");
            specs.push(TensorSpec::new(format!("{p}.up.w"), &[ic, oc, k], ic * k));
            specs.push(TensorSpec::new(format!("{p}.up.b"), &[oc], ic * k));
            for (b, (rk, ds)) in cfg
                .resblock_kernels
                .iter()
                .zip(&cfg.resblock_dilations)
                .enumerate()
            {
                for (q, _d) in ds.iter().enumerate() {
                    let bp = format!("{p}.b{b}.p{q}");
                    specs.push(TensorSpec::new(format!("{bp}.c1.w"), &[oc, oc, *rk], oc * rk));
                    specs.push(TensorSpec::new(format!("{bp}.c1.b"), &[oc], oc * rk));
                    specs.push(TensorSpec::new(format!("{bp}.c2.w"), &[oc, oc, *rk], oc * rk));
                    specs.push(TensorSpec::new(format!("{bp}.c2.b"), &[oc], oc * rk));
                }
            }
        }
        let last = cfg.stage_out_channels(cfg.stages() - 1);
        specs.push(TensorSpec::new(
            "vocoder.post.w",
            &[1, last, cfg.post_kernel],
            last * cfg.post_kernel,
        ));
        specs.push(TensorSpec::new("vocoder.post.b", &[1], last * cfg.post_kernel));
        specs
    }

    pub fn from_weights(cfg: &VocoderConfig, w: &WeightMap) -> Result<Self> {
        cfg.validate()?;
        let mut stages = Vec::with_capacity(cfg.stages());
        for s in 0..cfg.stages() {
            let (ic, oc) = (cfg.stage_in_channels(s), cfg.stage_out_channels(s));
            let k = cfg.kernels[s];
            let p = format!("vocoder.s{s}");
            let mut blocks = Vec::new();
            for (b, (rk, ds)) in cfg
                .resblock_kernels
                .iter()
                .zip(&cfg.resblock_dilations)
                .enumerate()
            {
                let mut pairs = Vec::new();
                for (q, d) in ds.iter().enumerate() {
                    let bp = format!("{p}.b{b}.p{q}");
                    pairs.push(PairW {
                        dilation: *d,
                        c1_w: w.get_shaped(&format!("{bp}.c1.w"), &[oc, oc, *rk])?.clone(),
                        c1_b: w.get_vec(&format!("{bp}.c1.b"), oc)?.to_vec(),
                        c2_w: w.get_shaped(&format!("{bp}.c2.w"), &[oc, oc, *rk])?.clone(),
                        c2_b: w.get_vec(&format!("{bp}.c2.b"), oc)?.to_vec(),
                    });
                }
                blocks.push(BlockW { kernel: *rk, pairs });
            }
            stages.push(StageW {
                factor: cfg.factors[s],
                up_w: w.get_shaped(&format!("{p}.up.w"), &[ic, oc, k])?.clone(),
                up_b: w.get_vec(&format!("{p}.up.b"), oc)?.to_vec(),
                blocks,
            });
        }
        let last = cfg.stage_out_channels(cfg.stages() - 1);
        Ok(Vocoder {
            cfg: cfg.clone(),
            cond_w: w
                .get_shaped("vocoder.cond.w", &[cfg.speaker_dim, cfg.in_channels])?
                .clone(),
            pre_w: w
                .get_shaped(
                    "vocoder.pre.w",
                    &[cfg.channels, cfg.in_channels, cfg.pre_kernel],
                )?
                .clone(),
            pre_b: w.get_vec("vocoder.pre.b", cfg.channels)?.to_vec(),
            stages,
            post_w: w
                .get_shaped("vocoder.post.w", &[1, last, cfg.post_kernel])?
                .clone(),
            post_b: w.get_vec("vocoder.post.b", 1)?.to_vec(),
        })
    }

    pub fn config(&self) -> &VocoderConfig {
        &self.cfg
    }

    pub fn hop(&self) -> usize {
        self.cfg.factors.iter().product()
    }

    /// Speaker embedding projected to the input width.
    fn cond_vector(&self, g: &[f32]) -> Result<Vec<f32>> {
        if g.len() != self.cfg.speaker_dim {
            return Err(Error::Shape(format!(
                "speaker embedding must be {} wide, got {}",
                self.cfg.speaker_dim,
                g.len()
            )));
        }
        let gt = Tensor::from_vec(&[1, g.len()], g.to_vec())?;
        Ok(matmul(&gt, &self.cond_w)?.data().to_vec())
    }

    fn add_cond(x: &Tensor, cond: &[f32]) -> Tensor {
        let mut out = x.clone();
        for r in 0..out.dim0() {
            for (o, c) in out.row_mut(r).iter_mut().zip(cond) {
                *o += c;
            }
        }
        out
    }

    fn block_forward(block: &BlockW, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for pair in &block.pairs {
            let s1 = ConvSpec::new(block.kernel, pair.dilation);
            let (l1, r1) = s1.same_padding();
            let t1 = add_bias(conv1d(&lrelu_map(&h), &pair.c1_w, &s1, l1, r1)?, &pair.c1_b);
            let s2 = ConvSpec::new(block.kernel, 1);
            let (l2, r2) = s2.same_padding();
            let t2 = add_bias(conv1d(&lrelu_map(&t1), &pair.c2_w, &s2, l2, r2)?, &pair.c2_b);
            h = add_rows(&h, &t2);
        }
        Ok(h)
    }

    /// Offline pass; returns `frames * hop` samples.
    pub fn forward(&self, feats: &Tensor, g: &[f32]) -> Result<Vec<f32>> {
        if feats.dim1() != self.cfg.in_channels {
            return Err(Error::Shape(format!(
                "vocoder expects {} channels, got {:?}",
                self.cfg.in_channels,
                feats.shape()
            )));
        }
        let cond = self.cond_vector(g)?;
        let x = Self::add_cond(feats, &cond);
        let pre_spec = ConvSpec::new(self.cfg.pre_kernel, 1);
        let (pl, pr) = pre_spec.same_padding();
        let mut h = add_bias(conv1d(&x, &self.pre_w, &pre_spec, pl, pr)?, &self.pre_b);

        for stage in &self.stages {
            let act = lrelu_map(&h);
            let full = conv1d_transposed(&act, &stage.up_w, stage.factor)?;
            let k = stage.up_w.shape()[2];
            let trim = (k - stage.factor) / 2;
            h = add_bias(
                full.slice_rows(trim, trim + act.dim0() * stage.factor),
                &stage.up_b,
            );
            if !stage.blocks.is_empty() {
                let inv = 1.0f32 / stage.blocks.len() as f32;
                let mut acc = Self::block_forward(&stage.blocks[0], &h)?;
                for b in &stage.blocks[1..] {
                    acc = add_rows(&acc, &Self::block_forward(b, &h)?);
                }
                for v in acc.data_mut() {
                    *v *= inv;
                }
                h = acc;
            }
        }

        let post_spec = ConvSpec::new(self.cfg.post_kernel, 1);
        let (ql, qr) = post_spec.same_padding();
        let s = add_bias(
            conv1d(&lrelu_map(&h), &self.post_w, &post_spec, ql, qr)?,
            &self.post_b,
        );
        Ok(s.data().iter().map(|v| v.tanh()).collect())
    }
}

// ── Streaming ────────────────────────────────────────────────────────────────

#[derive(Debug)]
struct PairStream {
    c1: ConvStream,
    c1_b: Vec<f32>,
    c2: ConvStream,
    c2_b: Vec<f32>,
    delay: DelayLine,
}

#[derive(Debug)]
struct BlockStream {
    pairs: Vec<PairStream>,
}

impl BlockStream {
    fn new(block: &BlockW, channels: usize) -> Result<Self> {
        let mut pairs = Vec::with_capacity(block.pairs.len());
        for pw in &block.pairs {
            pairs.push(PairStream {
                c1: ConvStream::new(pw.c1_w.clone(), ConvSpec::new(block.kernel, pw.dilation))?,
                c1_b: pw.c1_b.clone(),
                c2: ConvStream::new(pw.c2_w.clone(), ConvSpec::new(block.kernel, 1))?,
                c2_b: pw.c2_b.clone(),
                delay: DelayLine::new(pw.reach(block.kernel), channels),
            });
        }
        Ok(BlockStream { pairs })
    }

    fn run_from(&mut self, from: usize, h: Tensor) -> Result<Tensor> {
        let mut h = h;
        for i in from..self.pairs.len() {
            let p = &mut self.pairs[i];
            let t1 = add_bias(p.c1.push(&lrelu_map(&h))?, &p.c1_b);
            let t2 = add_bias(p.c2.push(&lrelu_map(&t1))?, &p.c2_b);
            let sc = p.delay.push(&h);
            h = add_rows(&sc, &t2);
        }
        Ok(h)
    }

    fn perturb_state(&mut self, eps: f32) -> bool {
        let mut hit = false;
        for p in &mut self.pairs {
            hit |= p.c1.perturb_carry(eps);
            hit |= p.c2.perturb_carry(eps);
        }
        hit
    }

    fn push(&mut self, h: &Tensor) -> Result<Tensor> {
        self.run_from(0, h.clone())
    }

    fn flush(&mut self) -> Result<Tensor> {
        let mut out: Option<Tensor> = None;
        for i in 0..self.pairs.len() {
            let p = &mut self.pairs[i];
            let t1 = add_bias(p.c1.flush()?, &p.c1_b);
            let t2a = add_bias(p.c2.push(&lrelu_map(&t1))?, &p.c2_b);
            let t2b = add_bias(p.c2.flush()?, &p.c2_b);
            let t2 = Tensor::concat_rows(&[&t2a, &t2b])?;
            let sc = p.delay.flush();
            let tail = self.run_from(i + 1, add_rows(&sc, &t2))?;
            out = Some(match out {
                Some(prev) => Tensor::concat_rows(&[&prev, &tail])?,
                None => tail,
            });
        }
        Ok(out.expect("blocks always have at least one pair"))
    }
}

#[derive(Debug)]
struct StageStream {
    up: TransposedStream,
    up_b: Vec<f32>,
    blocks: Vec<BlockStream>,
    aligner: Aligner,
}

impl StageStream {
    fn new(stage: &StageW, out_channels: usize) -> Result<Self> {
        let blocks = stage
            .blocks
            .iter()
            .map(|b| BlockStream::new(b, out_channels))
            .collect::<Result<Vec<_>>>()?;
        let n = blocks.len().max(1);
        Ok(StageStream {
            up: TransposedStream::new(stage.up_w.clone(), stage.factor)?,
            up_b: stage.up_b.clone(),
            blocks,
            aligner: Aligner::new(n, out_channels, 1.0 / n as f32),
        })
    }

    fn feed_blocks(&mut self, y: Tensor) -> Result<Tensor> {
        if self.blocks.is_empty() {
            return Ok(y);
        }
        for (b, block) in self.blocks.iter_mut().enumerate() {
            let out = block.push(&y)?;
            self.aligner.push(b, &out);
        }
        Ok(self.aligner.drain())
    }

    fn perturb_state(&mut self, eps: f32) -> bool {
        let mut hit = self.up.perturb_tail(eps);
        for b in &mut self.blocks {
            hit |= b.perturb_state(eps);
        }
        hit
    }

    fn push(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = add_bias(self.up.push(&lrelu_map(x))?, &self.up_b);
        self.feed_blocks(y)
    }

    fn flush(&mut self) -> Result<Tensor> {
        let y = add_bias(self.up.flush()?, &self.up_b);
        let mut out = self.feed_blocks(y)?;
        if !self.blocks.is_empty() {
            for (b, block) in self.blocks.iter_mut().enumerate() {
                let tail = block.flush()?;
                self.aligner.push(b, &tail);
            }
            out = Tensor::concat_rows(&[&out, &self.aligner.drain()])?;
        }
        Ok(out)
    }
}

/// Streaming vocoder bound to one speaker embedding. Emits complete hop
/// blocks of samples; `flush` drains the rest so totals equal
/// `frames * hop` exactly.
#[derive(Debug)]
pub struct VocoderStream {
    model: Arc<Vocoder>,
    cond: Vec<f32>,
    pre: ConvStream,
    stages: Vec<StageStream>,
    post: ConvStream,
    hop: usize,
    sample_buf: Vec<f32>,
    finished: bool,
}

impl VocoderStream {
    pub fn new(model: Arc<Vocoder>, g: &[f32]) -> Result<Self> {
        let cond = model.cond_vector(g)?;
        let cfg = &model.cfg;
        let pre = ConvStream::new(model.pre_w.clone(), ConvSpec::new(cfg.pre_kernel, 1))?;
        let mut stages = Vec::with_capacity(model.stages.len());
        for (s, stage) in model.stages.iter().enumerate() {
            stages.push(StageStream::new(stage, cfg.stage_out_channels(s))?);
        }
        let post = ConvStream::new(model.post_w.clone(), ConvSpec::new(cfg.post_kernel, 1))?;
        Ok(VocoderStream {
            cond,
            pre,
            stages,
            post,
            hop: model.hop(),
            model,
            sample_buf: Vec::new(),
            finished: false,
        })
    }

    /// Input frames held back until enough future context exists.
    pub fn lag(&self) -> usize {
        self.model.cfg.future_frames(self.hop)
    }

    /// Test hook: corrupt every carried conv window and overlap-add tail.
    pub fn perturb_state(&mut self, eps: f32) -> bool {
        let mut hit = self.pre.perturb_carry(eps);
        for s in &mut self.stages {
            hit |= s.perturb_state(eps);
        }
        hit |= self.post.perturb_carry(eps);
        hit
    }

    fn finish_samples(&mut self, s: Tensor) -> Vec<f32> {
        self.sample_buf.extend(s.data().iter().map(|v| v.tanh()));
        let whole = (self.sample_buf.len() / self.hop) * self.hop;
        self.sample_buf.drain(..whole).collect()
    }

    pub fn push(&mut self, feats: &Tensor) -> Result<Vec<f32>> {
        if self.finished {
            return Err(Error::State("VocoderStream pushed after flush".into()));
        }
        let x = Vocoder::add_cond(feats, &self.cond);
        let mut h = add_bias(self.pre.push(&x)?, &self.model.pre_b);
        for stage in &mut self.stages {
            h = stage.push(&h)?;
        }
        let s = add_bias(self.post.push(&lrelu_map(&h))?, &self.model.post_b);
        Ok(self.finish_samples(s))
    }

    pub fn flush(&mut self) -> Result<Vec<f32>> {
        if self.finished {
            return Err(Error::State("VocoderStream flushed twice".into()));
        }
        self.finished = true;
        // Cascade: each part's tail travels through everything downstream
        // before the next part flushes.
        let mut sample_rows: Vec<Tensor> = Vec::new();
        let pre_tail = add_bias(self.pre.flush()?, &self.model.pre_b);
        let mut cur = pre_tail;
        for st in self.stages.iter_mut() {
            cur = st.push(&cur)?;
        }
        sample_rows.push(add_bias(
            self.post.push(&lrelu_map(&cur))?,
            &self.model.post_b,
        ));
        for s in 0..self.stages.len() {
            let mut tail = self.stages[s].flush()?;
            for st in self.stages[s + 1..].iter_mut() {
                tail = st.push(&tail)?;
            }
            sample_rows.push(add_bias(
                self.post.push(&lrelu_map(&tail))?,
                &self.model.post_b,
            ));
        }
        sample_rows.push(add_bias(self.post.flush()?, &self.model.post_b));

        let mut out = Vec::new();
        for rows in sample_rows {
            out.extend(self.finish_samples(rows));
        }
        out.append(&mut self.sample_buf);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RuntimeConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model_for(cfg: &VocoderConfig, seed: u64) -> Arc<Vocoder> {
        let w = WeightMap::generate(&Vocoder::weight_specs(cfg), seed);
        Arc::new(Vocoder::from_weights(cfg, &w).unwrap())
    }

    fn rng_frames(rng: &mut impl Rng, t: usize, c: usize) -> Tensor {
        Tensor::from_fn(t, c, |_, _| rng.gen_range(-1.0f32..1.0))
    }

    fn rng_embedding(rng: &mut impl Rng, d: usize) -> Vec<f32> {
        (0..d).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
    }

    fn stream_all(model: &Arc<Vocoder>, x: &Tensor, g: &[f32], cuts: &[usize]) -> Vec<f32> {
        let mut s = VocoderStream::new(model.clone(), g).unwrap();
        let mut out = Vec::new();
        let mut at = 0;
        for &cut in cuts {
            out.extend(s.push(&x.slice_rows(at, cut)).unwrap());
            at = cut;
        }
        out.extend(s.push(&x.slice_rows(at, x.dim0())).unwrap());
        out.extend(s.flush().unwrap());
        out
    }

    #[test]
    fn streaming_equals_offline_bitwise() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 41);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = rng_frames(&mut rng, 18, cfg.in_channels);
        let g = rng_embedding(&mut rng, cfg.speaker_dim);
        let want = model.forward(&x, &g).unwrap();
        for cuts in [vec![4usize, 8, 12], vec![1, 2, 3, 5], vec![17]] {
            let got = stream_all(&model, &x, &g, &cuts);
            assert_eq!(want.len(), got.len());
            assert_eq!(want, got);
        }
    }

    #[test]
    fn variant_shapes_stream_equal_offline() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        // No resblocks at all.
        let mut plain = RuntimeConfig::toy().vocoder;
        plain.resblock_kernels = vec![];
        plain.resblock_dilations = vec![];
        // Four stages.
        let mut four = RuntimeConfig::toy().vocoder;
        four.factors = vec![4, 4, 4, 5];
        four.kernels = vec![8, 8, 8, 11];
        // Two branches of different reach.
        let mut multi = RuntimeConfig::toy().vocoder;
        multi.factors = vec![16, 20];
        multi.kernels = vec![32, 40];
        multi.resblock_kernels = vec![3, 7];
        multi.resblock_dilations = vec![vec![1, 3], vec![1, 3, 5]];
        for cfg in [plain, four, multi] {
            cfg.validate().unwrap();
            let model = model_for(&cfg, 44);
            let x = rng_frames(&mut rng, 11, cfg.in_channels);
            let g = rng_embedding(&mut rng, cfg.speaker_dim);
            let want = model.forward(&x, &g).unwrap();
            let got = stream_all(&model, &x, &g, &[3, 4, 9]);
            assert_eq!(want, got, "factors {:?}", cfg.factors);
        }
    }

    #[test]
    fn doubling_upsampler_by_hand() {
        // One stage, factor 2 = kernel 2 (no trim), all-ones weights, unit
        // pre/post convs, two channels collapsing to one: y = tanh(4 * x+),
        // each input frame repeated twice. lrelu passes positives through.
        let cfg = VocoderConfig {
            in_channels: 1,
            channels: 2,
            factors: vec![2],
            kernels: vec![2],
            resblock_kernels: vec![],
            resblock_dilations: vec![],
            pre_kernel: 1,
            post_kernel: 1,
            speaker_dim: 1,
        };
        let mut w = WeightMap::new();
        w.insert("vocoder.cond.w", Tensor::zeros(&[1, 1]));
        w.insert("vocoder.pre.w", Tensor::from_vec(&[2, 1, 1], vec![1.0, 1.0]).unwrap());
        w.insert("vocoder.pre.b", Tensor::zeros(&[2]));
        w.insert(
            "vocoder.s0.up.w",
            Tensor::from_vec(&[2, 1, 2], vec![1.0; 4]).unwrap(),
        );
        w.insert("vocoder.s0.up.b", Tensor::zeros(&[1]));
        w.insert("vocoder.post.w", Tensor::from_vec(&[1, 1, 1], vec![2.0]).unwrap());
        w.insert("vocoder.post.b", Tensor::zeros(&[1]));
        let model = Vocoder::from_weights(&cfg, &w).unwrap();
        let x = Tensor::from_vec(&[2, 1], vec![0.25, 0.5]).unwrap();
        let got = model.forward(&x, &[0.0]).unwrap();
        // pre: [0.25, 0.25], up scatters 0.25+0.25 onto both offsets, post *2.
        let a = (4.0f32 * 0.25).tanh();
        let b = (4.0f32 * 0.5).tanh();
        assert_eq!(got, vec![a, a, b, b]);
    }

    #[test]
    fn sample_count_is_frames_times_hop() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 45);
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for t in [1usize, 2, 5, 9] {
            let x = rng_frames(&mut rng, t, cfg.in_channels);
            let g = rng_embedding(&mut rng, cfg.speaker_dim);
            assert_eq!(model.forward(&x, &g).unwrap().len(), t * 320);
        }
    }

    #[test]
    fn stream_emits_whole_hop_blocks() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 47);
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let x = rng_frames(&mut rng, 16, cfg.in_channels);
        let g = rng_embedding(&mut rng, cfg.speaker_dim);
        let mut s = VocoderStream::new(model, &g).unwrap();
        let mut total = 0;
        for t in 0..16 {
            let out = s.push(&x.slice_rows(t, t + 1)).unwrap();
            assert_eq!(out.len() % 320, 0, "push {t} emitted {}", out.len());
            total += out.len();
        }
        // F = 5 future frames: 11 blocks before flush.
        assert_eq!(total, 11 * 320);
        assert_eq!(s.flush().unwrap().len(), 5 * 320);
    }

    #[test]
    fn speaker_embedding_changes_output() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 49);
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let x = rng_frames(&mut rng, 6, cfg.in_channels);
        let g = rng_embedding(&mut rng, cfg.speaker_dim);
        let neg: Vec<f32> = g.iter().map(|v| -v).collect();
        let a = model.forward(&x, &g).unwrap();
        let b = model.forward(&x, &neg).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn conditioning_is_a_broadcast_add_on_the_input() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 51);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let g = rng_embedding(&mut rng, cfg.speaker_dim);
        let cond = model.cond_vector(&g).unwrap();
        // zero input + g  ==  cond broadcast as input + zero embedding
        let t = 5;
        let zeros = Tensor::zeros(&[t, cfg.in_channels]);
        let broadcast = Tensor::from_fn(t, cfg.in_channels, |_, c| cond[c]);
        let a = model.forward(&zeros, &g).unwrap();
        let b = model.forward(&broadcast, &vec![0.0; cfg.speaker_dim]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_embedding_width_rejected() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 53);
        let x = Tensor::zeros(&[2, cfg.in_channels]);
        assert!(model.forward(&x, &[0.0; 3]).is_err());
        assert!(VocoderStream::new(model, &[0.0; 3]).is_err());
    }

    #[test]
    fn flush_twice_is_a_state_error() {
        let cfg = RuntimeConfig::toy().vocoder;
        let model = model_for(&cfg, 54);
        let g = vec![0.0; cfg.speaker_dim];
        let mut s = VocoderStream::new(model, &g).unwrap();
        s.push(&Tensor::zeros(&[2, cfg.in_channels])).unwrap();
        s.flush().unwrap();
        assert!(matches!(s.flush(), Err(Error::State(_))));
        assert!(matches!(
            s.push(&Tensor::zeros(&[1, cfg.in_channels])),
            Err(Error::State(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn split_points_never_change_output(
            seed in 0u64..200,
            t in 1usize..14,
            cut_a in 0usize..14,
            cut_b in 0usize..14,
        ) {
            let cfg = RuntimeConfig::toy().vocoder;
            let model = model_for(&cfg, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55aa);
            let x = rng_frames(&mut rng, t, cfg.in_channels);
            let g = rng_embedding(&mut rng, cfg.speaker_dim);
            let want = model.forward(&x, &g).unwrap();
            let mut cuts = vec![cut_a.min(t), cut_b.min(t)];
            cuts.sort_unstable();
            let got = stream_all(&model, &x, &g, &cuts);
            prop_assert_eq!(want.len(), t * 320);
            prop_assert_eq!(want, got);
        }
    }
}
