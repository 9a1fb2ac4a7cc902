use std::error::Error;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use streamac_cli::report::{ChunkStat, LatencyStats, RunReport, SCHEMA};
use streamac_cli::{synth_input, wav};
use streamac_core::config::RuntimeConfig;
use streamac_core::pipeline::{Model, StreamSession};
use streamac_core::weights::WeightMap;

#[derive(Parser)]
#[command(name = "streamac", version, about = "Streaming voice conversion runtime")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Streaming,
    Offline,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded weight file for the chosen config
    InitWeights {
        /// Config file; the built-in toy config when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output .sacw path
        out: PathBuf,
    },
    /// Convert a PCM16 mono wav file
    Convert {
        #[arg(long, value_enum, default_value_t = Mode::Streaming)]
        mode: Mode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        weights: PathBuf,
        /// Pace chunk submission at the audio clock instead of full speed
        #[arg(long)]
        realtime: bool,
        /// Write a JSON run report here
        #[arg(long)]
        report: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Run both paths on a wav file and compare them sample by sample
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        weights: PathBuf,
        /// Write a JSON run report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Corrupt the encoder cache mid-stream; verification must then fail
        #[arg(long, hide = true)]
        inject_cache_fault: bool,
        input: PathBuf,
    },
    /// Measure throughput on synthetic input; prints a JSON report to stdout
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Weight file; seeded weights for the config when omitted
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

const VERIFY_TOL: f32 = 1e-5;

fn main() {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RuntimeConfig, Box<dyn Error>> {
    Ok(match path {
        Some(p) => RuntimeConfig::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => RuntimeConfig::toy(),
    })
}

fn load_model(config: &Option<PathBuf>, weights: &Path) -> Result<Arc<Model>, Box<dyn Error>> {
    let cfg = load_config(config)?;
    let w = WeightMap::load(weights).map_err(|e| format!("{}: {e}", weights.display()))?;
    Ok(Model::from_weights(&cfg, &w)?)
}

fn read_input(path: &Path, cfg: &RuntimeConfig) -> Result<Vec<f32>, Box<dyn Error>> {
    let (samples, rate) = wav::read(path)?;
    if rate != cfg.session.sample_rate {
        return Err(format!(
            "{}: sample rate {rate} does not match the configured {}",
            path.display(),
            cfg.session.sample_rate
        )
        .into());
    }
    Ok(samples)
}

/// Streaming pass over `input`; the finalized session carries the ledger.
fn run_streaming(
    model: &Arc<Model>,
    input: &[f32],
    realtime: bool,
    inject_fault: bool,
) -> Result<(Vec<f32>, StreamSession), Box<dyn Error>> {
    let cs = model.config().session.chunk_samples();
    let chunk_seconds = cs as f64 / model.config().session.sample_rate as f64;
    let mut session = model.stream_session();
    let mut out = Vec::with_capacity(input.len() + cs);
    let started = Instant::now();
    let mut faulted = !inject_fault;
    for (i, chunk) in input.chunks(cs).enumerate() {
        if realtime {
            let target = started + Duration::from_secs_f64(i as f64 * chunk_seconds);
            if let Some(wait) = target.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        if chunk.len() == cs {
            out.extend(session.push_chunk(chunk)?);
        } else {
            out.extend(session.push_samples(chunk)?);
        }
        if inject_fault {
            // Re-corrupt after every chunk so the fault cannot age out of
            // the encoder's bounded left-context window.
            faulted |= session.inject_cache_fault().is_ok();
        }
    }
    out.extend(session.finalize()?);
    if !faulted {
        return Err("input too short to inject a cache fault".into());
    }
    Ok((out, session))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted[((sorted.len() - 1) as f64 * q) as usize]
}

/// Assemble the report; `session` is None for offline runs.
#[allow(clippy::too_many_arguments)]
fn make_report(
    model: &Model,
    mode: &str,
    input_name: String,
    output_name: Option<String>,
    input_samples: usize,
    output_samples: usize,
    wall_compute: f64,
    session: Option<&StreamSession>,
    max_abs_diff: Option<f64>,
) -> Result<RunReport, Box<dyn Error>> {
    let cfg = model.config();
    let budget = cfg.session.chunk_samples() as f64 / cfg.session.sample_rate as f64;
    let rf = model.receptive_field();

    let chunk_stats: Vec<ChunkStat> = session
        .map(|s| {
            s.records()
                .iter()
                .map(|r| ChunkStat {
                    index: r.index,
                    rms: r.rms,
                    speech: r.speech,
                    emitted_samples: r.emitted_samples,
                    compute_seconds: r.compute_seconds,
                    rtf: r.compute_seconds / budget,
                })
                .collect()
        })
        .unwrap_or_default();

    let (rtf_mean, rtf_max, rtf_p50, rtf_p95, latency) = match session {
        Some(s) if !s.records().is_empty() => {
            let lat = s.latency_report()?;
            let mut sorted = lat.rtf.clone();
            sorted.sort_by(f64::total_cmp);
            (
                lat.rtf_mean,
                lat.rtf_max,
                percentile(&sorted, 0.5),
                percentile(&sorted, 0.95),
                Some(LatencyStats {
                    start_delay_seconds: lat.clock.start_delay,
                    max_latency_seconds: lat.clock.max_latency(),
                    min_ahead_chunks: lat.clock.min_ahead,
                    underruns: lat.clock.underruns,
                }),
            )
        }
        _ => (0.0, 0.0, 0.0, 0.0, None),
    };

    // Pure compute when the ledger has it; wall time otherwise.
    let compute_seconds = if chunk_stats.is_empty() {
        wall_compute
    } else {
        chunk_stats.iter().map(|s| s.compute_seconds).sum()
    };
    let audio_seconds = output_samples as f64 / cfg.session.sample_rate as f64;

    Ok(RunReport {
        schema: SCHEMA,
        mode: mode.into(),
        input: input_name,
        output: output_name,
        sample_rate: cfg.session.sample_rate,
        chunk_samples: cfg.session.chunk_samples(),
        warmup_chunks: cfg.session.warmup_chunks,
        lookahead_frames: rf.future_frames,
        lookahead_seconds: rf.future_seconds,
        input_samples,
        output_samples,
        chunks: input_samples.div_ceil(cfg.session.chunk_samples()),
        speech_chunks: chunk_stats.iter().filter(|s| s.speech).count(),
        audio_seconds,
        compute_seconds,
        rtf: if audio_seconds > 0.0 {
            compute_seconds / audio_seconds
        } else {
            0.0
        },
        rtf_mean,
        rtf_max,
        rtf_p50,
        rtf_p95,
        max_abs_diff,
        latency,
        chunk_stats,
    })
}

fn run(cmd: Cmd) -> Result<i32, Box<dyn Error>> {
    match cmd {
        Cmd::InitWeights { config, seed, out } => {
            let cfg = load_config(&config)?;
            let w = Model::init_weights(&cfg, seed);
            w.save(&out)?;
            println!("wrote {} tensors to {}", w.len(), out.display());
            Ok(0)
        }

        Cmd::Convert {
            mode,
            config,
            weights,
            realtime,
            report,
            input,
            output,
        } => {
            let model = load_model(&config, &weights)?;
            let samples = read_input(&input, model.config())?;

            let started = Instant::now();
            let (out, session) = match mode {
                Mode::Streaming => {
                    let (out, session) = run_streaming(&model, &samples, realtime, false)?;
                    (out, Some(session))
                }
                Mode::Offline => (model.offline_convert(&samples)?.samples, None),
            };
            let wall = started.elapsed().as_secs_f64();

            wav::write(&output, &out, model.config().session.sample_rate)?;

            let r = make_report(
                &model,
                match mode {
                    Mode::Streaming => "streaming",
                    Mode::Offline => "offline",
                },
                input.display().to_string(),
                Some(output.display().to_string()),
                samples.len(),
                out.len(),
                wall,
                session.as_ref(),
                None,
            )?;
            println!(
                "{} -> {}: {} samples in, {} out, rtf {:.4}",
                input.display(),
                output.display(),
                samples.len(),
                out.len(),
                r.rtf
            );
            if let Some(path) = report {
                std::fs::write(&path, r.to_json()?)?;
                println!("report: {}", path.display());
            }
            Ok(0)
        }

        Cmd::Verify {
            config,
            weights,
            report,
            inject_cache_fault,
            input,
        } => {
            let model = load_model(&config, &weights)?;
            let samples = read_input(&input, model.config())?;
            if samples.is_empty() {
                println!("zero-length input: both paths produce no output");
                println!("verify: PASS");
                return Ok(0);
            }

            let offline = model.offline_convert(&samples)?;
            let (streamed, session) =
                run_streaming(&model, &samples, false, inject_cache_fault)?;

            if streamed.len() != offline.samples.len() {
                println!(
                    "length mismatch: streaming {} vs offline {}",
                    streamed.len(),
                    offline.samples.len()
                );
                println!("verify: FAIL");
                return Ok(1);
            }
            let mut max_diff = 0.0f32;
            let mut first_bad = None;
            for (i, (s, o)) in streamed.iter().zip(&offline.samples).enumerate() {
                let d = (s - o).abs();
                if d > max_diff {
                    max_diff = d;
                }
                if d > VERIFY_TOL && first_bad.is_none() {
                    first_bad = Some(i);
                }
            }
            println!(
                "max |streaming - offline| = {max_diff:e} over {} samples (tolerance {VERIFY_TOL:e})",
                streamed.len()
            );
            if let Some(path) = report {
                let r = make_report(
                    &model,
                    "verify",
                    input.display().to_string(),
                    None,
                    samples.len(),
                    streamed.len(),
                    0.0,
                    Some(&session),
                    Some(max_diff as f64),
                )?;
                std::fs::write(&path, r.to_json()?)?;
            }
            match first_bad {
                None => {
                    println!("verify: PASS");
                    Ok(0)
                }
                Some(i) => {
                    println!(
                        "first mismatch at sample {i}: streaming {} vs offline {}",
                        streamed[i], offline.samples[i]
                    );
                    println!("verify: FAIL");
                    Ok(1)
                }
            }
        }

        Cmd::Bench {
            config,
            weights,
            seconds,
            seed,
            report,
        } => {
            let cfg = load_config(&config)?;
            let model = match weights {
                Some(p) => load_model(&config, &p)?,
                None => Model::from_weights(&cfg, &Model::init_weights(&cfg, seed))?,
            };
            let cs = cfg.session.chunk_samples();
            let rate = cfg.session.sample_rate as f64;
            let n = ((seconds * rate).ceil() as usize).div_ceil(cs).max(1) * cs;
            let input = synth_input(seed, n);

            let (out, session) = run_streaming(&model, &input, false, false)?;
            let r = make_report(
                &model,
                "bench",
                format!("synthetic:{seconds}s:seed{seed}"),
                None,
                input.len(),
                out.len(),
                0.0,
                Some(&session),
                None,
            )?;
            eprintln!(
                "audio {:.2} s in {} chunks, compute {:.3} s, rtf {:.4} ({:.1}x realtime)",
                r.audio_seconds,
                r.chunks,
                r.compute_seconds,
                r.rtf,
                if r.rtf > 0.0 { 1.0 / r.rtf } else { f64::INFINITY }
            );
            eprintln!(
                "per-chunk rtf: p50 {:.4}, p95 {:.4}, max {:.4} (budget 1.0)",
                r.rtf_p50, r.rtf_p95, r.rtf_max
            );
            let json = r.to_json()?;
            if let Some(path) = report {
                std::fs::write(&path, &json)?;
            }
            println!("{json}");
            Ok(0)
        }
    }
}
