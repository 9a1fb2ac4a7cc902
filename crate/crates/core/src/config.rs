//! Runtime configuration: typed per-stage configs, cross-stage validation,
//! presets, and a flat `key = value` text format.
//!
//! The text format is one assignment per line, `#` comments, integer lists
//! comma-separated, and list-of-lists groups separated by `;`
//! (e.g. `vocoder.resblock_dilations = 1,3,5; 1,3,5`). Unknown keys are
//! errors so typos do not silently fall back to defaults.

use crate::error::{config_err, Result};

/// Chunking, warm-up and gating parameters of the stream scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Audio sample rate. The runtime is fixed to 16 kHz end to end.
    pub sample_rate: u32,
    /// Samples per feature frame.
    pub hop: usize,
    /// Frames per chunk; must equal the encoder segment length.
    pub chunk_frames: usize,
    /// Chunks buffered before the first forward pass and the speaker
    /// embedding extraction.
    pub warmup_chunks: usize,
    /// RMS level above which a chunk counts as speech.
    pub vad_threshold: f32,
    /// Chunks the speech flag is held after the level drops.
    pub vad_hangover: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            sample_rate: 16_000,
            hop: 320,
            chunk_frames: 4,
            warmup_chunks: 10,
            vad_threshold: 0.01,
            vad_hangover: 2,
        }
    }
}

impl SessionConfig {
    pub fn chunk_samples(&self) -> usize {
        self.hop * self.chunk_frames
    }

    pub fn chunk_seconds(&self) -> f64 {
        self.chunk_samples() as f64 / self.sample_rate as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate != 16_000 {
            return config_err(format!(
                "session.sample_rate: only 16000 is supported, got {}",
                self.sample_rate
            ));
        }
        if self.hop == 0 || self.chunk_frames == 0 {
            return config_err("session.hop and session.chunk_frames must be positive");
        }
        if self.warmup_chunks == 0 {
            return config_err("session.warmup_chunks must be positive");
        }
        if !(self.vad_threshold.is_finite() && self.vad_threshold >= 0.0) {
            return config_err("session.vad_threshold must be finite and >= 0");
        }
        Ok(())
    }
}

/// Frame-level feature front end (log band energies + learned projection).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    /// Frequency bands per frame.
    pub bands: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { bands: 16 }
    }
}

/// Segment-attention content encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EmformerConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    /// Feed-forward inner width.
    pub ff: usize,
    /// Segment length S, in frames.
    pub segment: usize,
    /// Left context L: cached frames visible behind the segment.
    pub left_context: usize,
    /// Right context R: look-ahead frames carried with each segment.
    pub right_context: usize,
}

impl EmformerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.ff == 0 {
            return config_err("emformer: layers, hidden, heads, ff must be positive");
        }
        if self.segment == 0 {
            return config_err("emformer.segment must be positive");
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return config_err(format!(
                "emformer.hidden ({}) must divide by emformer.heads ({})",
                self.hidden, self.heads
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// Look-ahead in frames: outputs of a segment never depend on input past
    /// the segment end plus R, regardless of depth.
    pub fn future_frames(&self) -> usize {
        self.right_context
    }

    /// Worst-case history an output frame can depend on: L cached frames per
    /// layer compound across layers, plus the frame's own segment.
    pub fn past_frames(&self) -> usize {
        self.layers * self.left_context + (self.segment - 1)
    }
}

/// Gated dilated-convolution bottleneck.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckConfig {
    pub in_channels: usize,
    pub channels: usize,
    pub out_channels: usize,
    /// Taps per dilated conv; odd when non-causal.
    pub kernel_size: usize,
    /// One stack layer per entry.
    pub dilations: Vec<usize>,
    /// tanh x sigmoid gating on each layer's conv output.
    pub gated: bool,
    /// Identity shortcut around each layer.
    pub residual: bool,
    /// Per-layer skip projections summed into the output head.
    pub skip: bool,
    /// Causal layers pad left only and have zero future reach.
    pub causal: bool,
}

impl BottleneckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.channels == 0 || self.out_channels == 0 {
            return config_err("bottleneck: channel counts must be positive");
        }
        if self.dilations.is_empty() {
            return config_err("bottleneck.dilations must not be empty");
        }
        if self.dilations.contains(&0) {
            return config_err("bottleneck.dilations must be positive");
        }
        if self.kernel_size == 0 {
            return config_err("bottleneck.kernel must be positive");
        }
        if !self.causal && self.kernel_size.is_multiple_of(2) {
            return config_err(format!(
                "bottleneck.kernel must be odd when non-causal, got {}",
                self.kernel_size
            ));
        }
        Ok(())
    }

    /// Per-layer future reach `d*(K-1)/2` summed over the stack.
    pub fn future_frames(&self) -> usize {
        if self.causal {
            return 0;
        }
        self.dilations
            .iter()
            .map(|d| d * (self.kernel_size - 1) / 2)
            .sum()
    }

    pub fn past_frames(&self) -> usize {
        let per_side: usize = self
            .dilations
            .iter()
            .map(|d| d * (self.kernel_size - 1) / 2)
            .sum();
        if self.causal {
            self.dilations
                .iter()
                .map(|d| d * (self.kernel_size - 1))
                .sum()
        } else {
            per_side
        }
    }
}

/// Upsampling vocoder: transposed convs with multi-kernel residual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct VocoderConfig {
    pub in_channels: usize,
    /// Width before the first upsample; halves per stage.
    pub channels: usize,
    /// Per-stage upsampling factors; their product must equal the hop.
    pub factors: Vec<usize>,
    /// Per-stage transposed kernel sizes; `kernels[i] - factors[i]` must be
    /// even so the overhang trims symmetrically.
    pub kernels: Vec<usize>,
    /// Kernel sizes of the parallel residual blocks after each stage
    /// (may be empty: pure transposed-conv vocoder).
    pub resblock_kernels: Vec<usize>,
    /// Dilation chain per residual block, same length as `resblock_kernels`.
    pub resblock_dilations: Vec<Vec<usize>>,
    /// Input conv kernel (frame rate), odd.
    pub pre_kernel: usize,
    /// Output conv kernel (sample rate), odd.
    pub post_kernel: usize,
    /// Speaker embedding width projected onto the input features.
    pub speaker_dim: usize,
}

impl VocoderConfig {
    pub fn stages(&self) -> usize {
        self.factors.len()
    }

    /// Channel count entering stage `s` (0 = first upsample).
    pub fn stage_in_channels(&self, s: usize) -> usize {
        self.channels >> s
    }

    pub fn stage_out_channels(&self, s: usize) -> usize {
        self.channels >> (s + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.channels == 0 || self.speaker_dim == 0 {
            return config_err("vocoder: channel and speaker widths must be positive");
        }
        if self.factors.is_empty() {
            return config_err("vocoder.factors must not be empty");
        }
        if self.factors.len() != self.kernels.len() {
            return config_err("vocoder.kernels must match vocoder.factors in length");
        }
        for (f, k) in self.factors.iter().zip(&self.kernels) {
            if *f == 0 {
                return config_err("vocoder.factors must be positive");
            }
            if k < f {
                return config_err(format!("vocoder kernel {k} shorter than factor {f}"));
            }
            if (k - f) % 2 != 0 {
                return config_err(format!(
                    "vocoder kernel {k} minus factor {f} must be even for symmetric trims"
                ));
            }
        }
        if self.resblock_kernels.len() != self.resblock_dilations.len() {
            return config_err("vocoder.resblock_dilations must match vocoder.resblock_kernels");
        }
        for k in &self.resblock_kernels {
            if *k == 0 || k % 2 == 0 {
                return config_err("vocoder.resblock_kernels must be odd and positive");
            }
        }
        for ds in &self.resblock_dilations {
            if ds.is_empty() || ds.contains(&0) {
                return config_err("vocoder.resblock_dilations entries must be non-empty and positive");
            }
        }
        if self.pre_kernel.is_multiple_of(2) || self.post_kernel.is_multiple_of(2) {
            return config_err("vocoder.pre_kernel and post_kernel must be odd");
        }
        if !self.channels.is_multiple_of(1 << self.stages()) {
            return config_err(format!(
                "vocoder.channels ({}) must divide by 2^stages ({})",
                self.channels,
                1 << self.stages()
            ));
        }
        Ok(())
    }

    /// Future reach of one stage's residual blocks, in that stage's output
    /// positions. Blocks run in parallel, so the slowest branch decides.
    pub fn resblock_reach(&self) -> usize {
        self.resblock_kernels
            .iter()
            .zip(&self.resblock_dilations)
            .map(|(k, ds)| {
                let half = (k - 1) / 2;
                ds.iter().map(|d| d * half + half).sum::<usize>()
            })
            .max()
            .unwrap_or(0)
    }

    fn half(k: usize) -> i64 {
        ((k - 1) / 2) as i64
    }

    /// Latest input frame index any sample in `[0, hop*m)` depends on.
    fn last_frame_needed(&self, hop: usize, m: usize) -> i64 {
        let mut p = (hop * m) as i64 - 1 + Self::half(self.post_kernel);
        let reach = self.resblock_reach() as i64;
        for s in (0..self.stages()).rev() {
            let trim_l = ((self.kernels[s] - self.factors[s]) / 2) as i64;
            p = (p + reach + trim_l).div_euclid(self.factors[s] as i64);
        }
        p + Self::half(self.pre_kernel)
    }

    /// Earliest input frame index any sample in `[hop*(m-1), hop*m)` depends on.
    fn first_frame_needed(&self, hop: usize, m: usize) -> i64 {
        let mut p = (hop * (m - 1)) as i64 - Self::half(self.post_kernel);
        let reach = self.resblock_reach() as i64;
        for s in (0..self.stages()).rev() {
            let k = self.kernels[s] as i64;
            let trim_l = ((self.kernels[s] - self.factors[s]) / 2) as i64;
            // Earliest contributor through the transposed conv: ceil((p + trim_l - K + 1)/u).
            p = (p - reach + trim_l - k + 1).div_euclid(self.factors[s] as i64)
                + i64::from((p - reach + trim_l - k + 1).rem_euclid(self.factors[s] as i64) != 0);
        }
        p - Self::half(self.pre_kernel)
    }

    /// Input frames beyond frame `m-1` needed before output frame `m-1`
    /// (samples `[hop*(m-1), hop*m)`) is final. Constant in `m`.
    pub fn future_frames(&self, hop: usize) -> usize {
        let m = 4; // away from the start so nothing clips
        (self.last_frame_needed(hop, m) + 1 - m as i64).max(0) as usize
    }

    pub fn past_frames(&self, hop: usize) -> usize {
        let m = 64;
        ((m as i64 - 1) - self.first_frame_needed(hop, m)).max(0) as usize
    }
}

/// Full runtime configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub session: SessionConfig,
    pub features: FeatureConfig,
    pub emformer: EmformerConfig,
    pub bottleneck: BottleneckConfig,
    pub vocoder: VocoderConfig,
}

impl RuntimeConfig {
    /// Small, fast shape used by tests and as the CLI default.
    pub fn toy() -> Self {
        RuntimeConfig {
            session: SessionConfig::default(),
            features: FeatureConfig::default(),
            emformer: EmformerConfig {
                layers: 2,
                hidden: 16,
                heads: 4,
                ff: 32,
                segment: 4,
                left_context: 8,
                right_context: 4,
            },
            bottleneck: BottleneckConfig {
                in_channels: 16,
                channels: 8,
                out_channels: 8,
                kernel_size: 3,
                dilations: vec![1, 2, 4, 8],
                gated: true,
                residual: true,
                skip: true,
                causal: false,
            },
            vocoder: VocoderConfig {
                in_channels: 8,
                channels: 16,
                factors: vec![8, 8, 5],
                kernels: vec![16, 16, 11],
                resblock_kernels: vec![3],
                resblock_dilations: vec![vec![1, 3]],
                pre_kernel: 7,
                post_kernel: 7,
                speaker_dim: 32,
            },
        }
    }

    /// Production temporal shape (12 encoder layers, S=4, L=30, R=8,
    /// hop 320 = 8*8*5) at reduced widths. The composed look-ahead is
    /// exactly 32 frames = 0.64 s; widths do not affect it.
    pub fn production_shaped() -> Self {
        let mut cfg = Self::toy();
        cfg.emformer = EmformerConfig {
            layers: 12,
            hidden: 64,
            heads: 4,
            ff: 128,
            segment: 4,
            left_context: 30,
            right_context: 8,
        };
        cfg.bottleneck = BottleneckConfig {
            in_channels: 64,
            channels: 16,
            out_channels: 16,
            kernel_size: 3,
            dilations: vec![1, 2, 4, 8],
            gated: true,
            residual: true,
            skip: true,
            causal: false,
        };
        cfg.vocoder = VocoderConfig {
            in_channels: 16,
            channels: 16,
            factors: vec![8, 8, 5],
            kernels: vec![16, 16, 11],
            resblock_kernels: vec![3, 7],
            resblock_dilations: vec![vec![1, 3, 5], vec![1, 3, 5]],
            pre_kernel: 7,
            post_kernel: 7,
            speaker_dim: 32,
        };
        cfg
    }

    /// `production_shaped` at full width (hidden 1024). Static analysis only; far
    /// too slow to run scalar on a CPU.
    pub fn production_full_width() -> Self {
        let mut cfg = Self::production_shaped();
        cfg.emformer.hidden = 1024;
        cfg.emformer.heads = 8;
        cfg.emformer.ff = 2048;
        cfg.bottleneck.in_channels = 1024;
        cfg.bottleneck.channels = 256;
        cfg.bottleneck.out_channels = 128;
        cfg.vocoder.in_channels = 128;
        cfg.vocoder.channels = 256;
        cfg
    }

    /// Assorted small shapes exercising different depths, head counts,
    /// context sizes, gating/causality and upsample factorizations.
    pub fn toy_variants() -> Vec<RuntimeConfig> {
        let mut v = Vec::new();

        v.push(Self::toy());

        let mut b = Self::toy();
        b.emformer.hidden = 24;
        b.emformer.ff = 48;
        b.emformer.left_context = 4;
        b.emformer.right_context = 8;
        b.bottleneck.in_channels = 24;
        v.push(b);

        let mut c = Self::toy();
        c.bottleneck.gated = false;
        c.bottleneck.causal = true;
        c.bottleneck.kernel_size = 4;
        c.vocoder.resblock_kernels = vec![];
        c.vocoder.resblock_dilations = vec![];
        v.push(c);

        let mut d = Self::toy();
        d.emformer.layers = 1;
        d.emformer.right_context = 0;
        d.bottleneck.dilations = vec![1, 2, 4];
        d.vocoder.factors = vec![4, 4, 4, 5];
        d.vocoder.kernels = vec![8, 8, 8, 11];
        d.vocoder.channels = 16;
        v.push(d);

        let mut e = Self::toy();
        e.emformer.heads = 1;
        e.emformer.ff = 64;
        e.emformer.left_context = 0;
        e.bottleneck.skip = false;
        e.vocoder.factors = vec![16, 20];
        e.vocoder.kernels = vec![32, 40];
        e.vocoder.resblock_kernels = vec![5];
        e.vocoder.resblock_dilations = vec![vec![1, 2]];
        v.push(e);

        v
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        if self.features.bands == 0 {
            return config_err("features.bands must be positive");
        }
        self.emformer.validate()?;
        self.bottleneck.validate()?;
        self.vocoder.validate()?;
        if self.emformer.segment != self.session.chunk_frames {
            return config_err(format!(
                "emformer.segment ({}) must equal session.chunk_frames ({}): one chunk is one segment",
                self.emformer.segment, self.session.chunk_frames
            ));
        }
        if self.bottleneck.in_channels != self.emformer.hidden {
            return config_err(format!(
                "bottleneck.in_channels ({}) must equal emformer.hidden ({})",
                self.bottleneck.in_channels, self.emformer.hidden
            ));
        }
        if self.vocoder.in_channels != self.bottleneck.out_channels {
            return config_err(format!(
                "vocoder.in_channels ({}) must equal bottleneck.out_channels ({})",
                self.vocoder.in_channels, self.bottleneck.out_channels
            ));
        }
        let product: usize = self.vocoder.factors.iter().product();
        if product != self.session.hop {
            return config_err(format!(
                "vocoder.factors product ({product}) must equal session.hop ({})",
                self.session.hop
            ));
        }
        // Playback starts once two output chunks exist; the warm-up must
        // cover the composed look-ahead plus those two chunks or the player
        // can never engage.
        let look = self.lookahead_frames();
        let look_chunks = look.div_ceil(self.session.chunk_frames);
        if self.session.warmup_chunks < look_chunks + 2 {
            return config_err(format!(
                "session.warmup_chunks ({}) must be at least look-ahead chunks ({look_chunks}) + 2",
                self.session.warmup_chunks
            ));
        }
        Ok(())
    }

    /// Composed model look-ahead in frames.
    pub fn lookahead_frames(&self) -> usize {
        self.emformer.future_frames()
            + self.bottleneck.future_frames()
            + self.vocoder.future_frames(self.session.hop)
    }
}

// ── Text format ──────────────────────────────────────────────────────────────

impl RuntimeConfig {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("session.sample_rate", self.session.sample_rate.to_string());
        kv("session.hop", self.session.hop.to_string());
        kv("session.chunk_frames", self.session.chunk_frames.to_string());
        kv("session.warmup_chunks", self.session.warmup_chunks.to_string());
        kv("session.vad_threshold", format!("{}", self.session.vad_threshold));
        kv("session.vad_hangover", self.session.vad_hangover.to_string());
        kv("features.bands", self.features.bands.to_string());
        kv("emformer.layers", self.emformer.layers.to_string());
        kv("emformer.hidden", self.emformer.hidden.to_string());
        kv("emformer.heads", self.emformer.heads.to_string());
        kv("emformer.ff", self.emformer.ff.to_string());
        kv("emformer.segment", self.emformer.segment.to_string());
        kv("emformer.left_context", self.emformer.left_context.to_string());
        kv("emformer.right_context", self.emformer.right_context.to_string());
        kv("bottleneck.channels", self.bottleneck.channels.to_string());
        kv("bottleneck.out_channels", self.bottleneck.out_channels.to_string());
        kv("bottleneck.kernel", self.bottleneck.kernel_size.to_string());
        kv("bottleneck.dilations", join(&self.bottleneck.dilations));
        kv("bottleneck.gated", self.bottleneck.gated.to_string());
        kv("bottleneck.residual", self.bottleneck.residual.to_string());
        kv("bottleneck.skip", self.bottleneck.skip.to_string());
        kv("bottleneck.causal", self.bottleneck.causal.to_string());
        kv("vocoder.channels", self.vocoder.channels.to_string());
        kv("vocoder.factors", join(&self.vocoder.factors));
        kv("vocoder.kernels", join(&self.vocoder.kernels));
        kv("vocoder.resblock_kernels", join(&self.vocoder.resblock_kernels));
        kv(
            "vocoder.resblock_dilations",
            self.vocoder
                .resblock_dilations
                .iter()
                .map(|g| join(g))
                .collect::<Vec<_>>()
                .join("; "),
        );
        kv("vocoder.pre_kernel", self.vocoder.pre_kernel.to_string());
        kv("vocoder.post_kernel", self.vocoder.post_kernel.to_string());
        kv("speaker.dim", self.vocoder.speaker_dim.to_string());
        s
    }

    /// Parse overrides on top of the toy defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::toy();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config_err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.apply(key, value)
                .map_err(|e| crate::error::Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        // in_channels follow the upstream stage; keep them consistent after
        // overrides so config files never have to repeat widths.
        cfg.bottleneck.in_channels = cfg.emformer.hidden;
        cfg.vocoder.in_channels = cfg.bottleneck.out_channels;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "session.sample_rate" => self.session.sample_rate = parse(value)?,
            "session.hop" => self.session.hop = parse(value)?,
            "session.chunk_frames" => self.session.chunk_frames = parse(value)?,
            "session.warmup_chunks" => self.session.warmup_chunks = parse(value)?,
            "session.vad_threshold" => self.session.vad_threshold = parse(value)?,
            "session.vad_hangover" => self.session.vad_hangover = parse(value)?,
            "features.bands" => self.features.bands = parse(value)?,
            "emformer.layers" => self.emformer.layers = parse(value)?,
            "emformer.hidden" => self.emformer.hidden = parse(value)?,
            "emformer.heads" => self.emformer.heads = parse(value)?,
            "emformer.ff" => self.emformer.ff = parse(value)?,
            "emformer.segment" => self.emformer.segment = parse(value)?,
            "emformer.left_context" => self.emformer.left_context = parse(value)?,
            "emformer.right_context" => self.emformer.right_context = parse(value)?,
            "bottleneck.channels" => self.bottleneck.channels = parse(value)?,
            "bottleneck.out_channels" => self.bottleneck.out_channels = parse(value)?,
            "bottleneck.kernel" => self.bottleneck.kernel_size = parse(value)?,
            "bottleneck.dilations" => self.bottleneck.dilations = parse_list(value)?,
            "bottleneck.gated" => self.bottleneck.gated = parse(value)?,
            "bottleneck.residual" => self.bottleneck.residual = parse(value)?,
            "bottleneck.skip" => self.bottleneck.skip = parse(value)?,
            "bottleneck.causal" => self.bottleneck.causal = parse(value)?,
            "vocoder.channels" => self.vocoder.channels = parse(value)?,
            "vocoder.factors" => self.vocoder.factors = parse_list(value)?,
            "vocoder.kernels" => self.vocoder.kernels = parse_list(value)?,
            "vocoder.resblock_kernels" => self.vocoder.resblock_kernels = parse_list(value)?,
            "vocoder.resblock_dilations" => {
                self.vocoder.resblock_dilations = parse_groups(value)?
            }
            "vocoder.pre_kernel" => self.vocoder.pre_kernel = parse(value)?,
            "vocoder.post_kernel" => self.vocoder.post_kernel = parse(value)?,
            "speaker.dim" => self.vocoder.speaker_dim = parse(value)?,
            _ => return config_err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| crate::error::Error::Config(format!("cannot parse '{value}'")))
}

fn parse_list(value: &str) -> Result<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|p| parse(p.trim())).collect()
}

fn parse_groups(value: &str) -> Result<Vec<Vec<usize>>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(';').map(|g| parse_list(g.trim())).collect()
}
