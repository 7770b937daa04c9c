use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};

use lpcnet::dsp::{read_features, read_wav, write_features, write_wav, AudioBuffer};
use lpcnet::model::{complexity_gflops, dump, Model, ModelConfig, WeightFile, OVERHEAD_GFLOPS};
use lpcnet::sampler::{SamplerConfig, DEFAULT_THRESHOLD};
use lpcnet::synth::{self, BenchConfig};

#[derive(Parser)]
#[command(name = "lpcnet", version, about = "LPCNet vocoder: feature analysis and neural synthesis at 16 kHz")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct SamplingArgs {
    /// Seed of the excitation sampler
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplier on the pitch-dependent sampling temperature
    #[arg(long, default_value_t = 1.0)]
    temp_scale: f64,
    /// Probability floor applied after sharpening
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    floor: f64,
}

impl SamplingArgs {
    fn config(self) -> SamplerConfig {
        SamplerConfig {
            threshold: self.floor,
            temp_scale: self.temp_scale,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Extract 20-dim features (18 cepstra, pitch period, correlation) per 10 ms frame
    Features { input: PathBuf, output: PathBuf },
    /// Synthesize audio from a feature file
    Synth {
        weights: PathBuf,
        features: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Analyze a WAV file and resynthesize it
    Copy {
        weights: PathBuf,
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Arithmetic cost of the sample-rate network
    Complexity {
        #[arg(long, default_value_t = 384)]
        na: usize,
        #[arg(long, default_value_t = 16)]
        nb: usize,
        /// Output levels
        #[arg(long, default_value_t = 256)]
        q: usize,
        /// GRU_A recurrent density
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        /// Sample rate in Hz
        #[arg(long, default_value_t = 16000.0)]
        rate: f64,
    },
    /// List the tensors of a weight file
    Dump { weights: PathBuf },
    /// Time single-stream synthesis. Without a weight file, uses random
    /// weights at N_A=384, N_B=16, density 0.1
    Bench {
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        #[arg(long, default_value_t = 1000)]
        frames: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a weight file with random parameters
    Init {
        output: PathBuf,
        #[arg(long, default_value_t = 384)]
        na: usize,
        #[arg(long, default_value_t = 16)]
        nb: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_model(path: &PathBuf) -> Result<Model> {
    let model = Model::load(path).with_context(|| format!("loading weights from {}", path.display()))?;
    info!(
        "loaded {}: N_A={} N_B={} GRU_A density {:.4}",
        path.display(),
        model.n_a(),
        model.n_b(),
        model.gru_a_density()
    );
    Ok(model)
}

fn save_audio(path: &PathBuf, samples: Vec<f32>) -> Result<()> {
    write_wav(path, &AudioBuffer::saturating(samples)).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Features { input, output } => {
            let audio = read_wav(&input)?;
            let frames = lpcnet::dsp::extract_features(&audio)?;
            write_features(&output, &frames)?;
            info!("{} frames written to {}", frames.len(), output.display());
        }
        Command::Synth {
            weights,
            features,
            output,
            sampling,
        } => {
            let model = load_model(&weights)?;
            let frames = read_features(&features)?;
            let samples = synth::synthesize(&model, &frames, sampling.config())?;
            save_audio(&output, samples)?;
        }
        Command::Copy {
            weights,
            input,
            output,
            sampling,
        } => {
            let model = load_model(&weights)?;
            let audio = read_wav(&input)?;
            let out = synth::copy_synthesis(&model, &audio, sampling.config())?;
            save_audio(&output, out.into_samples())?;
        }
        Command::Complexity {
            na,
            nb,
            q,
            density,
            rate,
        } => {
            let c = complexity_gflops(na, nb, q, density, rate)?;
            println!("N_A={na} N_B={nb} Q={q} d={density} F_s={rate}");
            println!("network: {c:.3} GFLOPS");
            println!(
                "total with ~{OVERHEAD_GFLOPS} GFLOPS for sampling, LPC and the frame-rate network: {:.1} GFLOPS",
                c + OVERHEAD_GFLOPS
            );
        }
        Command::Dump { weights } => {
            let f = WeightFile::load(&weights).with_context(|| format!("reading {}", weights.display()))?;
            print!("{}", dump(&f));
        }
        Command::Bench {
            weights,
            warmup,
            frames,
            runs,
            seed,
        } => {
            let model = match weights {
                Some(p) => load_model(&p)?,
                None => Model::random(ModelConfig::default(), seed)?,
            };
            let report = synth::bench(
                &model,
                BenchConfig {
                    warmup_frames: warmup,
                    timed_frames: frames,
                    runs,
                    seed,
                },
            )?;
            if report.median.fallbacks > 0 {
                warn!("{} sampling floor fallbacks", report.median.fallbacks);
            }
            print!("{report}");
        }
        Command::Init {
            output,
            na,
            nb,
            density,
            seed,
        } => {
            let model = Model::random(ModelConfig { n_a: na, n_b: nb, density }, seed)?;
            model.save(&output)?;
            info!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LPCNET_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
