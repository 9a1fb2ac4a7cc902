//! End-to-end runtime: front end, encoder, bottleneck and vocoder behind a
//! chunked session, plus the offline reference path over the same weights.
//!
//! A session buffers its warm-up chunks, extracts the speaker embedding from
//! them, then replays them through the same streaming stages every later
//! chunk uses; there is no separate warm-up code path. `finalize` pads the
//! staged remainder to a whole chunk and flushes every stage in pipeline
//! order, so the total output length equals the padded input length and the
//! samples are bitwise the ones [`Model::offline_convert`] produces.

pub mod latency;
pub mod speaker;
pub mod vad;

use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::bottleneck::{Bottleneck, BottleneckStream};
use crate::config::RuntimeConfig;
use crate::emformer::{Emformer, EmformerStream};
use crate::error::{Error, Result};
use crate::features::Frontend;
use crate::kernels::Tensor;
use crate::vocoder::{Vocoder, VocoderStream};
use crate::weights::{TensorSpec, WeightMap};
use vad::VadGate;

/// Temporal reach of the composed model, at chunk granularity: output chunk
/// c depends on input chunks <= c + future_frames / chunk_frames, and the
/// streaming lag equals future_frames exactly. Sub-chunk reach varies inside
/// the last chunk because the encoder attends per segment, so an individual
/// frame near a segment start can see up to segment - 1 frames further.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptiveField {
    pub encoder_future: usize,
    pub bottleneck_future: usize,
    pub vocoder_future: usize,
    pub future_frames: usize,
    pub past_frames: usize,
    pub future_seconds: f64,
}

pub fn receptive_field(cfg: &RuntimeConfig) -> ReceptiveField {
    let hop = cfg.session.hop;
    let enc = cfg.emformer.future_frames();
    let bn = cfg.bottleneck.future_frames();
    let voc = cfg.vocoder.future_frames(hop);
    let future = enc + bn + voc;
    ReceptiveField {
        encoder_future: enc,
        bottleneck_future: bn,
        vocoder_future: voc,
        future_frames: future,
        past_frames: cfg.emformer.past_frames()
            + cfg.bottleneck.past_frames()
            + cfg.vocoder.past_frames(hop),
        future_seconds: (future * hop) as f64 / cfg.session.sample_rate as f64,
    }
}

#[derive(Debug)]
pub struct Model {
    cfg: RuntimeConfig,
    frontend: Arc<Frontend>,
    speaker_proj: Tensor, // [bands, speaker_dim]
    emformer: Arc<Emformer>,
    bottleneck: Arc<Bottleneck>,
    vocoder: Arc<Vocoder>,
}

/// Offline conversion result.
#[derive(Debug, Clone)]
pub struct Conversion {
    pub samples: Vec<f32>,
    pub embedding: Vec<f32>,
    /// Input length after zero-padding to whole chunks.
    pub padded_len: usize,
}

impl Model {
    pub fn weight_specs(cfg: &RuntimeConfig) -> Vec<TensorSpec> {
        let bands = cfg.features.bands;
        let mut specs = vec![
            TensorSpec::new("frontend.proj.w", &[bands, cfg.emformer.hidden], bands),
            TensorSpec::new("frontend.proj.b", &[cfg.emformer.hidden], bands),
            TensorSpec::new("speaker.proj.w", &[bands, cfg.vocoder.speaker_dim], bands),
        ];
        specs.extend(Emformer::weight_specs(&cfg.emformer));
        specs.extend(Bottleneck::weight_specs(&cfg.bottleneck));
        specs.extend(Vocoder::weight_specs(&cfg.vocoder));
        specs
    }

    /// Seeded weights for the full manifest; same seed, same bytes.
    pub fn init_weights(cfg: &RuntimeConfig, seed: u64) -> WeightMap {
        WeightMap::generate(&Self::weight_specs(cfg), seed)
    }

    pub fn from_weights(cfg: &RuntimeConfig, w: &WeightMap) -> Result<Arc<Model>> {
        cfg.validate()?;
        let bands = cfg.features.bands;
        let frontend = Frontend::new(
            cfg.session.hop,
            bands,
            w.get_shaped("frontend.proj.w", &[bands, cfg.emformer.hidden])?
                .clone(),
            w.get_vec("frontend.proj.b", cfg.emformer.hidden)?.to_vec(),
        )?;
        Ok(Arc::new(Model {
            cfg: cfg.clone(),
            frontend: Arc::new(frontend),
            speaker_proj: w
                .get_shaped("speaker.proj.w", &[bands, cfg.vocoder.speaker_dim])?
                .clone(),
            emformer: Arc::new(Emformer::from_weights(&cfg.emformer, w)?),
            bottleneck: Arc::new(Bottleneck::from_weights(&cfg.bottleneck, w)?),
            vocoder: Arc::new(Vocoder::from_weights(&cfg.vocoder, w)?),
        }))
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.cfg
    }

    pub fn receptive_field(&self) -> ReceptiveField {
        receptive_field(&self.cfg)
    }

    fn chunk_samples(&self) -> usize {
        self.cfg.session.chunk_samples()
    }

    fn warmup_window(&self, padded: &[f32]) -> usize {
        (self.cfg.session.warmup_chunks * self.chunk_samples()).min(padded.len())
    }

    /// Embedding from the given warm-up samples, with the silence fallback.
    pub fn extract_embedding(&self, samples: &[f32]) -> Result<Vec<f32>> {
        speaker::extract_or_fallback(&self.frontend, &self.speaker_proj, samples)
    }

    /// Whole-utterance conversion: the reference the streaming path must
    /// reproduce bit for bit.
    pub fn offline_convert(&self, samples: &[f32]) -> Result<Conversion> {
        let cs = self.chunk_samples();
        if samples.is_empty() {
            return Ok(Conversion {
                samples: Vec::new(),
                embedding: speaker::fallback_embedding(self.cfg.vocoder.speaker_dim),
                padded_len: 0,
            });
        }
        let padded_len = samples.len().div_ceil(cs) * cs;
        let mut padded = samples.to_vec();
        padded.resize(padded_len, 0.0);

        let g = self.extract_embedding(&padded[..self.warmup_window(&padded)])?;
        let feats = self.frontend.features(&padded)?;
        let enc = self.emformer.forward(&feats)?;
        let bn = self.bottleneck.forward(&enc)?;
        let out = self.vocoder.forward(&bn, &g)?;
        Ok(Conversion {
            samples: out,
            embedding: g,
            padded_len,
        })
    }

    pub fn stream_session(self: &Arc<Model>) -> StreamSession {
        StreamSession::new(self.clone())
    }
}

/// Per-chunk session bookkeeping.
#[derive(Debug, Clone)]
pub struct ChunkRecord {
    pub index: usize,
    pub rms: f32,
    pub speech: bool,
    pub emitted_samples: usize,
    pub compute_seconds: f64,
}

/// Chunked streaming conversion over a shared [`Model`].
#[derive(Debug)]
pub struct StreamSession {
    model: Arc<Model>,
    vad: VadGate,
    stage_buf: Vec<f32>,
    warm_buf: Vec<f32>,
    chunks_in: usize,
    embedding: Option<Vec<f32>>,
    enc: Option<EmformerStream>,
    bn: Option<BottleneckStream>,
    voc: Option<VocoderStream>,
    records: Vec<ChunkRecord>,
    emitted: usize,
    finished: bool,
}

impl StreamSession {
    pub fn new(model: Arc<Model>) -> Self {
        let s = &model.cfg.session;
        let vad = VadGate::new(s.vad_threshold, s.vad_hangover);
        StreamSession {
            model,
            vad,
            stage_buf: Vec::new(),
            warm_buf: Vec::new(),
            chunks_in: 0,
            embedding: None,
            enc: None,
            bn: None,
            voc: None,
            records: Vec::new(),
            emitted: 0,
            finished: false,
        }
    }

    /// Push exactly one chunk of samples.
    pub fn push_chunk(&mut self, chunk: &[f32]) -> Result<Vec<f32>> {
        if self.finished {
            return Err(Error::State("session pushed after finalize".into()));
        }
        let cs = self.model.chunk_samples();
        if chunk.len() != cs {
            return Err(Error::ChunkSize {
                expected: cs,
                got: chunk.len(),
            });
        }
        let started = Instant::now();
        let rms = VadGate::rms(chunk);
        let speech = self.vad.update(chunk);
        self.chunks_in += 1;

        let out = if self.embedding.is_none() {
            self.warm_buf.extend_from_slice(chunk);
            if self.chunks_in >= self.model.cfg.session.warmup_chunks {
                self.engage()?
            } else {
                Vec::new()
            }
        } else {
            self.process(chunk)?
        };

        self.emitted += out.len();
        self.records.push(ChunkRecord {
            index: self.chunks_in - 1,
            rms,
            speech,
            emitted_samples: out.len(),
            compute_seconds: started.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    /// Stage arbitrary sample counts; whole chunks are pushed as they fill.
    pub fn push_samples(&mut self, samples: &[f32]) -> Result<Vec<f32>> {
        if self.finished {
            return Err(Error::State("session pushed after finalize".into()));
        }
        self.stage_buf.extend_from_slice(samples);
        let cs = self.model.chunk_samples();
        let mut out = Vec::new();
        while self.stage_buf.len() >= cs {
            let chunk: Vec<f32> = self.stage_buf.drain(..cs).collect();
            out.extend(self.push_chunk(&chunk)?);
        }
        Ok(out)
    }

    /// Extract the embedding from the buffered warm-up audio and replay the
    /// buffered chunks through the streaming stages.
    fn engage(&mut self) -> Result<Vec<f32>> {
        let g = self.model.extract_embedding(&self.warm_buf)?;
        self.enc = Some(EmformerStream::new(self.model.emformer.clone()));
        self.bn = Some(BottleneckStream::new(self.model.bottleneck.clone())?);
        self.voc = Some(VocoderStream::new(self.model.vocoder.clone(), &g)?);
        self.embedding = Some(g);
        let warm = std::mem::take(&mut self.warm_buf);
        let cs = self.model.chunk_samples();
        let mut out = Vec::new();
        for chunk in warm.chunks(cs) {
            out.extend(self.process(chunk)?);
        }
        Ok(out)
    }

    fn process(&mut self, chunk: &[f32]) -> Result<Vec<f32>> {
        let feats = self.model.frontend.features(chunk)?;
        let e = self.enc.as_mut().expect("engaged").push(&feats)?;
        let b = self.bn.as_mut().expect("engaged").push(&e)?;
        self.voc.as_mut().expect("engaged").push(&b)
    }

    /// Pad the staged remainder to a whole chunk, engage if the input ended
    /// inside the warm-up, and flush every stage in pipeline order.
    pub fn finalize(&mut self) -> Result<Vec<f32>> {
        if self.finished {
            return Err(Error::State("session finalized twice".into()));
        }
        let cs = self.model.chunk_samples();
        let mut out = Vec::new();
        if !self.stage_buf.is_empty() {
            let mut chunk = std::mem::take(&mut self.stage_buf);
            chunk.resize(cs, 0.0);
            out.extend(self.push_chunk(&chunk)?);
        }
        if self.chunks_in == 0 {
            self.finished = true;
            return Ok(out);
        }
        if self.embedding.is_none() {
            out.extend(self.engage()?);
        }

        let e = self.enc.as_mut().expect("engaged").flush()?;
        let b = self.bn.as_mut().expect("engaged").push(&e)?;
        out.extend(self.voc.as_mut().expect("engaged").push(&b)?);
        let b2 = self.bn.as_mut().expect("engaged").flush()?;
        out.extend(self.voc.as_mut().expect("engaged").push(&b2)?);
        out.extend(self.voc.as_mut().expect("engaged").flush()?);

        self.emitted += out.len();
        self.finished = true;
        Ok(out)
    }

    /// Measured per-chunk compute replayed through the simulated playback
    /// clock, plus per-chunk real-time factors. Requires a finalized session
    /// so the cost series is complete.
    pub fn latency_report(&self) -> Result<SessionLatency> {
        if !self.finished {
            return Err(Error::State(
                "latency report requires a finalized session".into(),
            ));
        }
        let s = &self.model.cfg.session;
        let budget = s.chunk_samples() as f64 / s.sample_rate as f64;
        let costs: Vec<f64> = self.records.iter().map(|r| r.compute_seconds).collect();
        let rtf: Vec<f64> = costs.iter().map(|c| c / budget).collect();
        let rtf_max = rtf.iter().copied().fold(0.0, f64::max);
        let rtf_mean = if rtf.is_empty() {
            0.0
        } else {
            rtf.iter().sum::<f64>() / rtf.len() as f64
        };
        let clock = latency::LatencyModel::from_config(&self.model.cfg).run(&costs);
        Ok(SessionLatency {
            rtf,
            rtf_max,
            rtf_mean,
            clock,
        })
    }

    pub fn records(&self) -> &[ChunkRecord] {
        &self.records
    }

    pub fn embedding(&self) -> Option<&[f32]> {
        self.embedding.as_deref()
    }

    pub fn chunks_in(&self) -> usize {
        self.chunks_in
    }

    pub fn emitted_samples(&self) -> usize {
        self.emitted
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Test hook: perturb every streaming cache at once so downstream
    /// verification provably catches state corruption: encoder key/value
    /// windows, conv carries in the bottleneck and vocoder, and upsampler
    /// overlap-add tails. The vocoder carries sit next to the output, so
    /// the fault survives with near-unit gain no matter how strongly the
    /// encoder stack attenuates for a given input. Fails if the session
    /// has not engaged or there is no state to corrupt yet.
    pub fn inject_cache_fault(&mut self) -> Result<()> {
        let enc = self
            .enc
            .as_mut()
            .ok_or_else(|| Error::State("session has not engaged yet".into()))?;
        let mut hit = enc.perturb_cache(4.0);
        hit |= self.bn.as_mut().expect("engaged").perturb_state(4.0);
        hit |= self.voc.as_mut().expect("engaged").perturb_state(4.0);
        if hit {
            Ok(())
        } else {
            Err(Error::State("stream caches are empty".into()))
        }
    }
}

/// Per-chunk real-time factors plus the measured costs replayed through the
/// simulated playback clock.
#[derive(Debug, Clone)]
pub struct SessionLatency {
    pub rtf: Vec<f64>,
    pub rtf_max: f64,
    pub rtf_mean: f64,
    pub clock: latency::LatencyReport,
}

/// Cloneable, thread-safe handle so a producer can feed chunks while a
/// consumer inspects progress.
#[derive(Debug, Clone)]
pub struct SharedSession(Arc<Mutex<StreamSession>>);

impl SharedSession {
    pub fn new(session: StreamSession) -> Self {
        SharedSession(Arc::new(Mutex::new(session)))
    }

    fn lock(&self) -> Result<std::sync::MutexGuard<'_, StreamSession>> {
        self.0
            .lock()
            .map_err(|_| Error::State("session mutex poisoned".into()))
    }

    pub fn push_chunk(&self, chunk: &[f32]) -> Result<Vec<f32>> {
        self.lock()?.push_chunk(chunk)
    }

    pub fn push_samples(&self, samples: &[f32]) -> Result<Vec<f32>> {
        self.lock()?.push_samples(samples)
    }

    pub fn finalize(&self) -> Result<Vec<f32>> {
        self.lock()?.finalize()
    }

    pub fn with<R>(&self, f: impl FnOnce(&StreamSession) -> R) -> Result<R> {
        let guard = self.lock()?;
        Ok(f(&guard))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_model(seed: u64) -> Arc<Model> {
        let cfg = RuntimeConfig::toy();
        let w = Model::init_weights(&cfg, seed);
        Model::from_weights(&cfg, &w).unwrap()
    }

    fn speechlike(rng: &mut impl Rng, n: usize) -> Vec<f32> {
        // A few wandering tones so band energies move around.
        let mut phase = [0.0f64; 3];
        let mut freq = [0.02f64, 0.07, 0.19];
        (0..n)
            .map(|i| {
                if i % 800 == 0 {
                    for f in freq.iter_mut() {
                        *f *= 1.0 + 0.1 * (rng.gen_range(-1.0f64..1.0));
                    }
                }
                let mut v = 0.0;
                for (p, f) in phase.iter_mut().zip(freq) {
                    *p += f;
                    v += p.sin() * 0.2;
                }
                v as f32 + rng.gen_range(-0.02f32..0.02)
            })
            .collect()
    }

    #[test]
    fn weight_specs_have_unique_names() {
        let specs = Model::weight_specs(&RuntimeConfig::toy());
        let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
        let n = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), n);
    }

    #[test]
    fn same_seed_same_weights() {
        let cfg = RuntimeConfig::toy();
        let a = Model::init_weights(&cfg, 7);
        let b = Model::init_weights(&cfg, 7);
        let c = Model::init_weights(&cfg, 8);
        assert_eq!(
            a.get("vocoder.pre.w").unwrap().data(),
            b.get("vocoder.pre.w").unwrap().data()
        );
        assert_ne!(
            a.get("vocoder.pre.w").unwrap().data(),
            c.get("vocoder.pre.w").unwrap().data()
        );
    }

    #[test]
    fn streaming_equals_offline_bitwise() {
        let model = toy_model(61);
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        // 14.5 chunks: exercises warm-up replay, steady state and padding.
        let input = speechlike(&mut rng, 14 * 1280 + 640);
        let offline = model.offline_convert(&input).unwrap();

        let mut session = model.stream_session();
        let mut got = Vec::new();
        // Deliberately misaligned push sizes.
        for piece in input.chunks(999) {
            got.extend(session.push_samples(piece).unwrap());
        }
        got.extend(session.finalize().unwrap());

        assert_eq!(offline.padded_len, 15 * 1280);
        assert_eq!(got.len(), offline.padded_len);
        assert_eq!(got, offline.samples);
        assert_eq!(session.embedding().unwrap(), &offline.embedding[..]);
    }

    #[test]
    fn short_input_still_matches_offline() {
        // Ends inside the warm-up: embedding comes from everything pushed.
        let model = toy_model(63);
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let input = speechlike(&mut rng, 3 * 1280 + 100);
        let offline = model.offline_convert(&input).unwrap();

        let mut session = model.stream_session();
        let mut got = session.push_samples(&input).unwrap();
        got.extend(session.finalize().unwrap());
        assert_eq!(got, offline.samples);
        assert_eq!(got.len(), 4 * 1280);
    }

    #[test]
    fn warmup_emits_exactly_the_composed_lag() {
        // Toy look-ahead is 24 frames = 6 chunks; at the 10-chunk warm-up
        // the pipeline can emit 10 - 6 = 4 chunks, then 1 per chunk.
        let model = toy_model(65);
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let input = speechlike(&mut rng, 12 * 1280);
        let mut session = model.stream_session();
        for (i, chunk) in input.chunks(1280).enumerate() {
            let out = session.push_chunk(chunk).unwrap();
            let want = match i {
                0..=8 => 0,
                9 => 4 * 1280,
                _ => 1280,
            };
            assert_eq!(out.len(), want, "chunk {i}");
        }
        let tail = session.finalize().unwrap();
        assert_eq!(tail.len(), 6 * 1280);
    }

    #[test]
    fn silent_input_uses_fallback_embedding_in_both_paths() {
        let model = toy_model(67);
        let input = vec![0.0f32; 11 * 1280];
        let offline = model.offline_convert(&input).unwrap();
        assert_eq!(offline.embedding, speaker::fallback_embedding(32));

        let mut session = model.stream_session();
        let mut got = session.push_samples(&input).unwrap();
        got.extend(session.finalize().unwrap());
        assert_eq!(session.embedding().unwrap(), &offline.embedding[..]);
        assert_eq!(got, offline.samples);
        // Silence was classified as non-speech throughout.
        assert!(session.records().iter().all(|r| !r.speech));
    }

    #[test]
    fn strict_chunk_size_is_enforced() {
        let model = toy_model(68);
        let mut session = model.stream_session();
        let err = session.push_chunk(&vec![0.0; 100]).unwrap_err();
        assert!(matches!(
            err,
            Error::ChunkSize {
                expected: 1280,
                got: 100
            }
        ));
    }

    #[test]
    fn finalize_is_terminal() {
        let model = toy_model(69);
        let mut session = model.stream_session();
        session.push_chunk(&vec![0.1; 1280]).unwrap();
        session.finalize().unwrap();
        assert!(matches!(
            session.push_chunk(&vec![0.1; 1280]),
            Err(Error::State(_))
        ));
        assert!(matches!(
            session.push_samples(&[0.0; 10]),
            Err(Error::State(_))
        ));
        assert!(matches!(session.finalize(), Err(Error::State(_))));
    }

    #[test]
    fn empty_finalize_is_empty() {
        let model = toy_model(70);
        let mut session = model.stream_session();
        assert_eq!(session.finalize().unwrap().len(), 0);
    }

    #[test]
    fn output_length_always_equals_padded_input() {
        let model = toy_model(71);
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for n in [1usize, 1279, 1280, 1281, 5 * 1280 + 7, 11 * 1280] {
            let input = speechlike(&mut rng, n);
            let mut session = model.stream_session();
            let mut got = session.push_samples(&input).unwrap();
            got.extend(session.finalize().unwrap());
            assert_eq!(got.len(), n.div_ceil(1280) * 1280, "n = {n}");
            assert_eq!(session.emitted_samples(), got.len());
        }
    }

    #[test]
    fn records_track_chunks_and_vad() {
        let model = toy_model(73);
        let mut session = model.stream_session();
        // 2 loud chunks, enough quiet ones to outlast the hangover of 2.
        for _ in 0..2 {
            session.push_chunk(&vec![0.3; 1280]).unwrap();
        }
        for _ in 0..5 {
            session.push_chunk(&vec![0.0; 1280]).unwrap();
        }
        let r = session.records();
        assert_eq!(r.len(), 7);
        assert!(r[0].speech && r[1].speech);
        assert!(r[2].speech && r[3].speech, "hangover holds two chunks");
        assert!(!r[4].speech && !r[5].speech && !r[6].speech);
        assert!(r.iter().all(|c| c.compute_seconds >= 0.0));
    }

    #[test]
    fn cache_fault_hook_perturbs_the_stream() {
        let model = toy_model(74);
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let input = speechlike(&mut rng, 14 * 1280);
        let offline = model.offline_convert(&input).unwrap();

        let mut session = model.stream_session();
        assert!(session.inject_cache_fault().is_err(), "not engaged yet");
        let mut got = Vec::new();
        for (i, chunk) in input.chunks(1280).enumerate() {
            got.extend(session.push_chunk(chunk).unwrap());
            if i == 10 {
                session.inject_cache_fault().unwrap();
            }
        }
        got.extend(session.finalize().unwrap());
        assert_eq!(got.len(), offline.samples.len());
        assert_ne!(got, offline.samples, "fault must break equality");
    }

    #[test]
    fn shared_session_feeds_from_another_thread() {
        let model = toy_model(76);
        let shared = SharedSession::new(model.stream_session());
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let input = speechlike(&mut rng, 12 * 1280);

        let worker = {
            let shared = shared.clone();
            let input = input.clone();
            std::thread::spawn(move || {
                let mut out = Vec::new();
                for chunk in input.chunks(1280) {
                    out.extend(shared.push_chunk(chunk).unwrap());
                }
                out
            })
        };
        let mut got = worker.join().unwrap();
        assert_eq!(shared.with(|s| s.chunks_in()).unwrap(), 12);
        got.extend(shared.finalize().unwrap());

        let offline = toy_model(76).offline_convert(&input).unwrap();
        assert_eq!(got, offline.samples);
    }

    #[test]
    fn latency_report_needs_finalize_then_reflects_measured_costs() {
        let model = toy_model(78);
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let input = speechlike(&mut rng, 20 * 1280);
        let mut session = model.stream_session();
        session.push_samples(&input).unwrap();
        assert!(matches!(session.latency_report(), Err(Error::State(_))));
        session.finalize().unwrap();

        let lat = session.latency_report().unwrap();
        assert_eq!(lat.rtf.len(), 20);
        assert!(lat.rtf_max < 1.0, "toy model must run under budget");
        assert!(lat.rtf_mean <= lat.rtf_max);
        assert_eq!(lat.clock.underruns, 0);
        // Real compute is tiny, so the clock sits at the warm-up delay.
        assert!((lat.clock.start_delay - 0.8).abs() < 0.08);
        assert!(lat.clock.max_latency() < 0.88);
        assert!(lat.clock.min_ahead >= 2);
    }

    #[test]
    fn receptive_field_composition() {
        let rf = receptive_field(&RuntimeConfig::production_shaped());
        assert_eq!(rf.encoder_future, 8);
        assert_eq!(rf.bottleneck_future, 15);
        assert_eq!(rf.vocoder_future, 9);
        assert_eq!(rf.future_frames, 32);
        assert!((rf.future_seconds - 0.64).abs() < 1e-12);
        let toy = receptive_field(&RuntimeConfig::toy());
        assert_eq!(toy.future_frames, 24);
    }
}
