//! Dilated-convolution bottleneck between the encoder and the vocoder.
//!
//! A 1x1 input projection feeds a stack of dilated conv layers. Each layer
//! optionally gates its conv output (tanh times sigmoid), projects it back
//! to the stack width through a 1x1 residual conv, and contributes a 1x1
//! skip projection to a running sum. The output head maps the skip sum (or
//! the stack output when skips are off) through relu -> 1x1 -> relu -> 1x1.
//!
//! Non-causal layers see `dilation * (kernel-1) / 2` frames past each
//! position; the stack's total is its look-ahead. The streaming path runs
//! the same convs over ring-buffered windows and delays each layer's
//! shortcut to match, so it emits exactly what the offline pass computes.

use std::sync::Arc;

use crate::config::BottleneckConfig;
use crate::error::{Error, Result};
use crate::kernels::{conv1d, linear, relu, sigmoid, ConvSpec, Tensor};
use crate::stream::{Aligner, ConvStream, DelayLine};
use crate::weights::{TensorSpec, WeightMap};

#[derive(Debug, Clone)]
struct BnLayer {
    conv_w: Tensor, // [gate_channels, ch, K]
    conv_b: Vec<f32>,
    res_w: Tensor, // [ch, ch]
    res_b: Vec<f32>,
    skip_w: Option<Tensor>, // [ch, ch]
    skip_b: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct Bottleneck {
    cfg: BottleneckConfig,
    in_w: Tensor, // [in, ch]
    in_b: Vec<f32>,
    layers: Vec<BnLayer>,
    head1_w: Tensor, // [ch, ch]
    head1_b: Vec<f32>,
    head2_w: Tensor, // [ch, out]
    head2_b: Vec<f32>,
}

impl Bottleneck {
    fn gate_channels(cfg: &BottleneckConfig) -> usize {
        if cfg.gated {
            2 * cfg.channels
        } else {
            cfg.channels
        }
    }

    fn spec(cfg: &BottleneckConfig, dilation: usize) -> ConvSpec {
        if cfg.causal {
            ConvSpec::causal(cfg.kernel_size, dilation)
        } else {
            ConvSpec::new(cfg.kernel_size, dilation)
        }
    }

    pub fn weight_specs(cfg: &BottleneckConfig) -> Vec<TensorSpec> {
        let ch = cfg.channels;
        let gc = Self::gate_channels(cfg);
        let k = cfg.kernel_size;
        let mut specs = vec![
            TensorSpec::new("bottleneck.in.w", &[cfg.in_channels, ch], cfg.in_channels),
            TensorSpec::new("bottleneck.in.b", &[ch], cfg.in_channels),
        ];
        for l in 0..cfg.dilations.len() {
            let p = format!("bottleneck.l{l}");
            specs.push(TensorSpec::new(format!("{p}.conv.w"), &[gc, ch, k], ch * k));
            specs.push(TensorSpec::new(format!("{p}.conv.b"), &[gc], ch * k));
            specs.push(TensorSpec::new(format!("{p}.res.w"), &[ch, ch], ch));
            specs.push(TensorSpec::new(format!("{p}.res.b"), &[ch], ch));
            if cfg.skip {
                specs.push(TensorSpec::new(format!("{p}.skip.w"), &[ch, ch], ch));
                specs.push(TensorSpec::new(format!("{p}.skip.b"), &[ch], ch));
            }
        }
        specs.push(TensorSpec::new("bottleneck.head.w1", &[ch, ch], ch));
        specs.push(TensorSpec::new("bottleneck.head.b1", &[ch], ch));
        specs.push(TensorSpec::new(
            "bottleneck.head.w2",
            &[ch, cfg.out_channels],
            ch,
        ));
        specs.push(TensorSpec::new("bottleneck.head.b2", &[cfg.out_channels], ch));
        specs
    }

    pub fn from_weights(cfg: &BottleneckConfig, w: &WeightMap) -> Result<Self> {
        cfg.validate()?;
        let ch = cfg.channels;
        let gc = Self::gate_channels(cfg);
        let k = cfg.kernel_size;
        let mut layers = Vec::with_capacity(cfg.dilations.len());
        for l in 0..cfg.dilations.len() {
            let p = format!("bottleneck.l{l}");
            layers.push(BnLayer {
                conv_w: w.get_shaped(&format!("{p}.conv.w"), &[gc, ch, k])?.clone(),
                conv_b: w.get_vec(&format!("{p}.conv.b"), gc)?.to_vec(),
                res_w: w.get_shaped(&format!("{p}.res.w"), &[ch, ch])?.clone(),
                res_b: w.get_vec(&format!("{p}.res.b"), ch)?.to_vec(),
                skip_w: if cfg.skip {
                    Some(w.get_shaped(&format!("{p}.skip.w"), &[ch, ch])?.clone())
                } else {
                    None
                },
                skip_b: if cfg.skip {
                    w.get_vec(&format!("{p}.skip.b"), ch)?.to_vec()
                } else {
                    Vec::new()
                },
            });
        }
        Ok(Bottleneck {
            cfg: cfg.clone(),
            in_w: w
                .get_shaped("bottleneck.in.w", &[cfg.in_channels, ch])?
                .clone(),
            in_b: w.get_vec("bottleneck.in.b", ch)?.to_vec(),
            layers,
            head1_w: w.get_shaped("bottleneck.head.w1", &[ch, ch])?.clone(),
            head1_b: w.get_vec("bottleneck.head.b1", ch)?.to_vec(),
            head2_w: w
                .get_shaped("bottleneck.head.w2", &[ch, cfg.out_channels])?
                .clone(),
            head2_b: w.get_vec("bottleneck.head.b2", cfg.out_channels)?.to_vec(),
        })
    }

    pub fn config(&self) -> &BottleneckConfig {
        &self.cfg
    }

    /// tanh/sigmoid gate (or plain relu) on the conv output, plus bias.
    fn activate(&self, conv_out: &Tensor, layer: &BnLayer) -> Tensor {
        let ch = self.cfg.channels;
        let t = conv_out.dim0();
        let mut g = Tensor::zeros(&[t, ch]);
        for i in 0..t {
            let row = conv_out.row(i);
            let out = g.row_mut(i);
            if self.cfg.gated {
                for c in 0..ch {
                    let a = row[c] + layer.conv_b[c];
                    let b = row[ch + c] + layer.conv_b[ch + c];
                    out[c] = a.tanh() * sigmoid(b);
                }
            } else {
                for c in 0..ch {
                    out[c] = relu(row[c] + layer.conv_b[c]);
                }
            }
        }
        g
    }

    fn head(&self, x: &Tensor) -> Result<Tensor> {
        let h = crate::kernels::map(x, relu);
        let h = linear(&h, &self.head1_w, &self.head1_b)?;
        let h = crate::kernels::map(&h, relu);
        linear(&h, &self.head2_w, &self.head2_b)
    }

    /// One layer's pointwise tail: gate, skip contribution, residual merge.
    /// `shortcut` must hold the layer inputs for the same positions as
    /// `conv_out`.
    fn layer_tail(
        &self,
        l: usize,
        conv_out: &Tensor,
        shortcut: &Tensor,
    ) -> Result<(Tensor, Option<Tensor>)> {
        let layer = &self.layers[l];
        let g = self.activate(conv_out, layer);
        let skip = match &layer.skip_w {
            Some(w) => Some(linear(&g, w, &layer.skip_b)?),
            None => None,
        };
        let res = linear(&g, &layer.res_w, &layer.res_b)?;
        let next = if self.cfg.residual {
            let mut out = shortcut.clone();
            for (o, r) in out.data_mut().iter_mut().zip(res.data()) {
                *o += r;
            }
            out
        } else {
            res
        };
        Ok((next, skip))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.dim1() != self.cfg.in_channels {
            return Err(Error::Shape(format!(
                "bottleneck expects {} channels, got {:?}",
                self.cfg.in_channels,
                x.shape()
            )));
        }
        let t = x.dim0();
        let ch = self.cfg.channels;
        let mut cur = linear(x, &self.in_w, &self.in_b)?;
        let mut skip_sum = Tensor::zeros(&[t, ch]);
        for (l, dil) in self.cfg.dilations.iter().enumerate() {
            let spec = Self::spec(&self.cfg, *dil);
            let (lp, rp) = spec.same_padding();
            let conv_out = conv1d(&cur, &self.layers[l].conv_w, &spec, lp, rp)?;
            let (next, skip) = self.layer_tail(l, &conv_out, &cur)?;
            if let Some(s) = skip {
                for (o, v) in skip_sum.data_mut().iter_mut().zip(s.data()) {
                    *o += v;
                }
            }
            cur = next;
        }
        let head_in = if self.cfg.skip { &skip_sum } else { &cur };
        self.head(head_in)
    }
}

/// Streaming pass over the same weights. Each layer's conv output lags its
/// input by the layer's future reach, so shortcuts ride a [`DelayLine`] and
/// skip contributions meet in an [`Aligner`] that releases a position once
/// every layer has reached it.
#[derive(Debug)]
pub struct BottleneckStream {
    model: Arc<Bottleneck>,
    convs: Vec<ConvStream>,
    delays: Vec<DelayLine>,
    skips: Option<Aligner>,
    finished: bool,
}

impl BottleneckStream {
    pub fn new(model: Arc<Bottleneck>) -> Result<Self> {
        let cfg = &model.cfg;
        let ch = cfg.channels;
        let mut convs = Vec::new();
        let mut delays = Vec::new();
        for (l, dil) in cfg.dilations.iter().enumerate() {
            let spec = Bottleneck::spec(cfg, *dil);
            convs.push(ConvStream::new(model.layers[l].conv_w.clone(), spec)?);
            delays.push(DelayLine::new(spec.future_reach(), ch));
        }
        let skips = if cfg.skip {
            Some(Aligner::new(cfg.dilations.len(), ch, 1.0))
        } else {
            None
        };
        Ok(BottleneckStream {
            model: model.clone(),
            convs,
            delays,
            skips,
            finished: false,
        })
    }

    /// Frames the stream holds back until enough future input exists.
    pub fn lag(&self) -> usize {
        self.model.cfg.future_frames()
    }

    /// Test hook: corrupt every layer's carried conv window.
    pub fn perturb_state(&mut self, eps: f32) -> bool {
        let mut hit = false;
        for c in &mut self.convs {
            hit |= c.perturb_carry(eps);
        }
        hit
    }

    /// Run `x` through layers `from..`, returning the last layer's emitted
    /// rows. Skip contributions land in the aligner.
    fn run_from(&mut self, from: usize, x: Tensor) -> Result<Tensor> {
        let mut cur = x;
        for l in from..self.convs.len() {
            let conv_out = self.convs[l].push(&cur)?;
            let shortcut = self.delays[l].push(&cur);
            let (next, skip) = self.model.layer_tail(l, &conv_out, &shortcut)?;
            if let (Some(al), Some(s)) = (self.skips.as_mut(), skip) {
                al.push(l, &s);
            }
            cur = next;
        }
        Ok(cur)
    }

    fn emit(&mut self, stack_out: Tensor) -> Result<Tensor> {
        let ready = match self.skips.as_mut() {
            Some(al) => al.drain(),
            None => stack_out,
        };
        self.model.head(&ready)
    }

    pub fn push(&mut self, x: &Tensor) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("BottleneckStream pushed after flush".into()));
        }
        let cur = linear(x, &self.model.in_w, &self.model.in_b)?;
        let out = self.run_from(0, cur)?;
        self.emit(out)
    }

    /// Flush layer by layer: a layer's tail must travel through every layer
    /// below it before that one can flush in turn.
    pub fn flush(&mut self) -> Result<Tensor> {
        if self.finished {
            return Err(Error::State("BottleneckStream flushed twice".into()));
        }
        self.finished = true;
        let ch = self.model.cfg.channels;
        let mut stack_tail = Tensor::zeros(&[0, ch]);
        for l in 0..self.convs.len() {
            let conv_out = self.convs[l].flush()?;
            let shortcut = self.delays[l].flush();
            let (next, skip) = self.model.layer_tail(l, &conv_out, &shortcut)?;
            if let (Some(al), Some(s)) = (self.skips.as_mut(), skip) {
                al.push(l, &s);
            }
            let rest = self.run_from(l + 1, next)?;
            stack_tail = Tensor::concat_rows(&[&stack_tail, &rest])?;
        }
        self.emit(stack_tail)
    }
}
