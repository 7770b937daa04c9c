//! Per-stream synthesis loop: frame setup once per 10 ms, then per sample
//! predict, run the sample-rate network, draw an excitation, reconstruct
//! and de-emphasize.
//!
//! Synthesis runs in the pre-emphasized domain throughout; only the emitted
//! audio goes through the de-emphasis filter. The LPC history holds the
//! μ-law quantized reconstruction, the same values the network sees.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{
    extract_features, mulaw_decode, mulaw_encode, saturate, AudioBuffer, EmphasisState, FeatureFrame, MuLawLevel,
    FRAME_SIZE, NB_BANDS, NB_FEATURES, SAMPLE_RATE,
};
use crate::error::Result;
use crate::exec;
use crate::lpc::{CepstrumToLpc, LpcState};
use crate::model::{flops_per_sample, window_at, ConditioningContribution, FeatureWindow, Model, SampleRateState, LEVELS};
use crate::sampler::{Sampler, SamplerConfig};

/// Future frames the frame-rate network looks at. Streaming output lags
/// input by this many frames.
pub const LOOKAHEAD: usize = 2;
const CONTEXT: usize = 2 * LOOKAHEAD + 1;

/// Values observed at one sample step, for inspecting the signal path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTrace {
    pub prediction: f32,
    pub prediction_level: MuLawLevel,
    pub excitation_level: MuLawLevel,
    /// p + decode(e), pre-emphasized domain.
    pub signal: f32,
    /// Value pushed into the LPC history.
    pub lpc_input: f32,
    /// Emitted, de-emphasized sample.
    pub output: f32,
}

/// One synthesis stream over a shared model.
#[derive(Debug, Clone)]
pub struct SynthStream<'m> {
    model: &'m Model,
    net: SampleRateState,
    lpc: LpcState,
    lpc_conv: CepstrumToLpc,
    deemph: EmphasisState,
    sampler: Sampler,
    s_prev: MuLawLevel,
    e_prev: MuLawLevel,
    cond: ConditioningContribution,
    /// Sliding window of pushed frames; slot `CONTEXT − 1` is the newest.
    context: [Option<FeatureFrame>; CONTEXT],
    inputs: [[f32; NB_FEATURES]; CONTEXT],
    pushed: u64,
    emitted_frames: u64,
}

impl<'m> SynthStream<'m> {
    pub fn new(model: &'m Model, config: SamplerConfig) -> Result<Self> {
        Ok(Self {
            model,
            net: SampleRateState::new(&model.sample),
            lpc: LpcState::default(),
            lpc_conv: CepstrumToLpc::new(),
            deemph: EmphasisState::default(),
            sampler: Sampler::new(config)?,
            s_prev: MuLawLevel::ZERO,
            e_prev: MuLawLevel::ZERO,
            cond: ConditioningContribution::zeros(model.n_a()),
            context: [None; CONTEXT],
            inputs: [[0.0; NB_FEATURES]; CONTEXT],
            pushed: 0,
            emitted_frames: 0,
        })
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn frames_emitted(&self) -> u64 {
        self.emitted_frames
    }

    /// Times the sampling floor removed all probability mass.
    pub fn fallbacks(&self) -> u64 {
        self.sampler.fallbacks()
    }

    pub fn lpc_state(&self) -> &LpcState {
        &self.lpc
    }

    /// Feeds one frame. Once `LOOKAHEAD` frames are buffered, appends the
    /// 160 samples of frame `pushed − LOOKAHEAD` to `out`. Returns the
    /// number of samples appended.
    pub fn push_frame(&mut self, frame: &FeatureFrame, out: &mut Vec<f32>) -> Result<usize> {
        self.context.rotate_left(1);
        self.inputs.rotate_left(1);
        self.context[CONTEXT - 1] = Some(*frame);
        self.inputs[CONTEXT - 1] = frame.to_input();
        self.pushed += 1;
        if self.pushed > LOOKAHEAD as u64 {
            self.emit(out)
        } else {
            Ok(0)
        }
    }

    /// Flushes the frames still waiting on lookahead, treating the frames
    /// past the end as padding. The stream can keep going afterwards as if
    /// a new utterance started (network and filter states carry over).
    pub fn finish(&mut self, out: &mut Vec<f32>) -> Result<usize> {
        let mut n = 0;
        for _ in 0..LOOKAHEAD {
            self.context.rotate_left(1);
            self.inputs.rotate_left(1);
            self.context[CONTEXT - 1] = None;
            if self.context[LOOKAHEAD].is_some() {
                n += self.emit(out)?;
            }
        }
        self.context = [None; CONTEXT];
        self.pushed = 0;
        Ok(n)
    }

    fn emit(&mut self, out: &mut Vec<f32>) -> Result<usize> {
        let frame = self.context[LOOKAHEAD].expect("center frame present");
        let window: FeatureWindow = std::array::from_fn(|k| self.context[k].map(|_| &self.inputs[k]));
        let f = self.model.conditioning(&window)?;
        let start = out.len();
        out.resize(start + FRAME_SIZE, 0.0);
        let block: &mut [f32; FRAME_SIZE] = (&mut out[start..]).try_into().expect("frame sized");
        self.synthesize_with_conditioning(&frame, &f, block, None)?;
        Ok(FRAME_SIZE)
    }

    /// Runs one frame given its conditioning vector: LPC and g setup, then
    /// 160 sample steps.
    pub fn synthesize_with_conditioning(
        &mut self,
        frame: &FeatureFrame,
        conditioning: &[f32],
        out: &mut [f32; FRAME_SIZE],
        mut trace: Option<&mut Vec<SampleTrace>>,
    ) -> Result<()> {
        let coeffs = self.lpc_conv.convert(&frame.cepstrum)?;
        self.lpc.set_coeffs(&coeffs)?;
        self.model.sample.frame_setup_into(conditioning, &mut self.cond)?;
        let corr = frame.correlation;

        for slot in out.iter_mut() {
            let p = self.lpc.predict();
            let p_level = mulaw_encode(p);
            let logits = self
                .model
                .sample
                .logits(&mut self.net, self.s_prev, p_level, self.e_prev, &self.cond)?;
            let e_level = self.sampler.sample_logits(logits, corr);
            let s = p + mulaw_decode(e_level);
            let s_level = mulaw_encode(s);
            let lpc_input = mulaw_decode(s_level);
            self.lpc.update_history(lpc_input);
            self.s_prev = s_level;
            self.e_prev = e_level;
            *slot = saturate(self.deemph.deemphasize_sample(s));
            if let Some(t) = trace.as_deref_mut() {
                t.push(SampleTrace {
                    prediction: p,
                    prediction_level: p_level,
                    excitation_level: e_level,
                    signal: s,
                    lpc_input,
                    output: *slot,
                });
            }
        }
        self.emitted_frames += 1;
        Ok(())
    }

    /// One frame from an explicit 5-frame window (center at index 2).
    pub fn synthesize_frame(&mut self, window: &FeatureWindow, frame: &FeatureFrame) -> Result<[f32; FRAME_SIZE]> {
        let f = self.model.conditioning(window)?;
        let mut out = [0.0; FRAME_SIZE];
        self.synthesize_with_conditioning(frame, &f, &mut out, None)?;
        Ok(out)
    }
}

/// Synthesizes a whole feature sequence. The frame-rate network runs
/// layer by layer over the sequence (in parallel when enabled); the sample
/// loop is the same as streaming, so the result is bit-identical to
/// pushing every frame and calling [`SynthStream::finish`].
pub fn synthesize(model: &Model, frames: &[FeatureFrame], config: SamplerConfig) -> Result<Vec<f32>> {
    let inputs: Vec<[f32; NB_FEATURES]> = frames.iter().map(FeatureFrame::to_input).collect();
    let cond = model.frame.forward_sequence(&inputs)?;
    let mut stream = SynthStream::new(model, config)?;
    let mut out = vec![0.0; frames.len() * FRAME_SIZE];
    for ((frame, f), block) in frames.iter().zip(&cond).zip(out.chunks_exact_mut(FRAME_SIZE)) {
        let block: &mut [f32; FRAME_SIZE] = block.try_into().expect("frame sized");
        stream.synthesize_with_conditioning(frame, f, block, None)?;
    }
    Ok(out)
}

/// Frame-by-frame streaming over a whole sequence.
pub fn synthesize_streaming(model: &Model, frames: &[FeatureFrame], config: SamplerConfig) -> Result<Vec<f32>> {
    let mut stream = SynthStream::new(model, config)?;
    let mut out = Vec::with_capacity(frames.len() * FRAME_SIZE);
    for frame in frames {
        stream.push_frame(frame, &mut out)?;
    }
    stream.finish(&mut out)?;
    Ok(out)
}

/// Independent streams over one model, in parallel when enabled.
pub fn synthesize_many(model: &Model, jobs: &[(Vec<FeatureFrame>, SamplerConfig)]) -> Vec<Result<Vec<f32>>> {
    exec::map_slice(jobs, |(frames, config)| synthesize(model, frames, *config))
}

/// Analysis followed by synthesis. Output length is the input length
/// rounded down to whole frames.
pub fn copy_synthesis(model: &Model, audio: &AudioBuffer, config: SamplerConfig) -> Result<AudioBuffer> {
    let features = extract_features(audio)?;
    let samples = synthesize(model, &features, config)?;
    Ok(AudioBuffer::saturating(samples))
}

/// Counts and timing for one synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub frames: u64,
    pub samples: u64,
    pub wall: Duration,
    /// Compute seconds per second of audio: 16000 / (samples per second).
    pub real_time_factor: f64,
    pub fallbacks: u64,
}

impl SynthesisReport {
    pub fn new(frames: u64, wall: Duration, fallbacks: u64) -> Self {
        let samples = frames * FRAME_SIZE as u64;
        let rate = samples as f64 / wall.as_secs_f64().max(f64::MIN_POSITIVE);
        Self {
            frames,
            samples,
            wall,
            real_time_factor: SAMPLE_RATE as f64 / rate,
            fallbacks,
        }
    }

    pub fn samples_per_second(&self) -> f64 {
        self.samples as f64 / self.wall.as_secs_f64().max(f64::MIN_POSITIVE)
    }
}

impl std::fmt::Display for SynthesisReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "frames {}  samples {}  wall {:.3} s  {:.0} samples/s  real-time factor {:.4}  floor fallbacks {}",
            self.frames,
            self.samples,
            self.wall.as_secs_f64(),
            self.samples_per_second(),
            self.real_time_factor,
            self.fallbacks
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub warmup_frames: usize,
    pub timed_frames: usize,
    pub runs: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            warmup_frames: 100,
            timed_frames: 1000,
            runs: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// The median run.
    pub median: SynthesisReport,
    pub runs: Vec<Duration>,
    /// Two operations per stored sample-rate weight, counted from the model.
    pub counted_flops_per_sample: f64,
    /// The closed-form count for the model's N_A, N_B and GRU_A density.
    pub formula_flops_per_sample: f64,
}

impl BenchReport {
    pub fn counted_gflops(&self) -> f64 {
        self.counted_flops_per_sample * SAMPLE_RATE as f64 / 1e9
    }

    pub fn formula_gflops(&self) -> f64 {
        self.formula_flops_per_sample * SAMPLE_RATE as f64 / 1e9
    }

    /// |counted / formula − 1|.
    pub fn flops_relative_error(&self) -> f64 {
        (self.counted_flops_per_sample / self.formula_flops_per_sample - 1.0).abs()
    }
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{}", self.median)?;
        let runs: Vec<String> = self.runs.iter().map(|d| format!("{:.3}", d.as_secs_f64())).collect();
        writeln!(f, "runs (s): {}", runs.join(" "))?;
        writeln!(
            f,
            "FLOPs/sample counted {:.0} ({:.3} GFLOPS at 16 kHz), formula {:.0} ({:.3} GFLOPS), deviation {:.2}%",
            self.counted_flops_per_sample,
            self.counted_gflops(),
            self.formula_flops_per_sample,
            self.formula_gflops(),
            100.0 * self.flops_relative_error()
        )
    }
}

/// Plausible random feature frames: smooth cepstra, integer periods.
pub fn synthetic_features(n: usize, seed: u64) -> Vec<FeatureFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cep = [0.0f32; NB_BANDS];
    (0..n)
        .map(|_| {
            for (k, c) in cep.iter_mut().enumerate() {
                let scale = if k == 0 { 2.0 } else { 0.5 / k as f32 };
                *c = 0.8 * *c + 0.2 * rng.random_range(-scale..=scale);
            }
            let period = rng.random_range(32..=256) as f32;
            let corr = rng.random_range(0.0f32..=1.0);
            FeatureFrame::new(cep, period, corr).expect("finite")
        })
        .collect()
}

/// Warm-up, then `runs` timed passes over `timed_frames` frames each,
/// streaming through one [`SynthStream`]. Reports the median pass.
pub fn bench(model: &Model, config: BenchConfig) -> Result<BenchReport> {
    let frames = synthetic_features(config.warmup_frames + config.timed_frames, config.seed);
    let (warm, timed) = frames.split_at(config.warmup_frames);
    let sampler = SamplerConfig {
        seed: config.seed,
        ..SamplerConfig::default()
    };
    let mut out = Vec::with_capacity((LOOKAHEAD + 1) * FRAME_SIZE);
    let mut runs = Vec::with_capacity(config.runs);
    let mut fallbacks = 0;
    for _ in 0..config.runs.max(1) {
        let mut stream = SynthStream::new(model, sampler)?;
        for f in warm {
            stream.push_frame(f, &mut out)?;
            out.clear();
        }
        let before = stream.fallbacks();
        let start = Instant::now();
        for f in timed {
            stream.push_frame(f, &mut out)?;
            out.clear();
        }
        runs.push(start.elapsed());
        fallbacks = stream.fallbacks() - before;
    }
    let mut sorted = runs.clone();
    sorted.sort();
    let median = sorted[sorted.len() / 2];
    let s = &model.sample;
    Ok(BenchReport {
        median: SynthesisReport::new(timed.len() as u64, median, fallbacks),
        runs,
        counted_flops_per_sample: model.flops_per_sample(),
        formula_flops_per_sample: flops_per_sample(s.n_a(), s.n_b(), LEVELS, model.gru_a_density()),
    })
}

/// Window for frame `t` of a sequence of feature frames.
pub fn input_window(inputs: &[[f32; NB_FEATURES]], t: usize) -> FeatureWindow<'_> {
    window_at(inputs, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn small_model(seed: u64) -> Model {
        Model::random(
            ModelConfig {
                n_a: 32,
                n_b: 8,
                density: 0.25,
            },
            seed,
        )
        .unwrap()
    }

    fn cfg(seed: u64) -> SamplerConfig {
        SamplerConfig {
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn streaming_equals_batch() {
        let m = small_model(1);
        for n in [1usize, 2, 3, 9] {
            let frames = synthetic_features(n, n as u64);
            let a = synthesize(&m, &frames, cfg(4)).unwrap();
            let b = synthesize_streaming(&m, &frames, cfg(4)).unwrap();
            assert_eq!(a.len(), n * FRAME_SIZE);
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn output_lags_by_lookahead() {
        let m = small_model(1);
        let frames = synthetic_features(4, 0);
        let mut s = SynthStream::new(&m, cfg(0)).unwrap();
        let mut out = Vec::new();
        assert_eq!(s.push_frame(&frames[0], &mut out).unwrap(), 0);
        assert_eq!(s.push_frame(&frames[1], &mut out).unwrap(), 0);
        assert_eq!(s.push_frame(&frames[2], &mut out).unwrap(), FRAME_SIZE);
        assert_eq!(s.push_frame(&frames[3], &mut out).unwrap(), FRAME_SIZE);
        assert_eq!(s.finish(&mut out).unwrap(), 2 * FRAME_SIZE);
        assert_eq!(out.len(), 4 * FRAME_SIZE);
        assert_eq!(s.frames_emitted(), 4);
    }

    #[test]
    fn seed_changes_output_and_repeats_exactly() {
        let m = small_model(2);
        let frames = synthetic_features(3, 1);
        let a = synthesize(&m, &frames, cfg(1)).unwrap();
        let b = synthesize(&m, &frames, cfg(1)).unwrap();
        let c = synthesize(&m, &frames, cfg(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_model_output_is_bounded() {
        let m = Model::zeros(ModelConfig {
            n_a: 16,
            n_b: 4,
            density: 0.0,
        })
        .unwrap();
        let silent = FeatureFrame::new([-4.0; NB_BANDS], 100.0, 0.0).unwrap();
        let out = synthesize(&m, &vec![silent; 20], cfg(0)).unwrap();
        assert_eq!(out.len(), 20 * FRAME_SIZE);
        assert!(out.iter().all(|s| s.is_finite() && s.abs() <= 1.2));
    }

    #[test]
    fn signal_path_order() {
        let m = small_model(3);
        let frames = synthetic_features(5, 3);
        let inputs: Vec<_> = frames.iter().map(FeatureFrame::to_input).collect();
        let mut s = SynthStream::new(&m, cfg(9)).unwrap();
        let mut trace = Vec::new();
        let mut deemph = EmphasisState::default();
        let mut history: Vec<f32> = Vec::new();
        for (t, frame) in frames.iter().enumerate() {
            let f = m.conditioning(&input_window(&inputs, t)).unwrap();
            let mut out = [0.0; FRAME_SIZE];
            trace.clear();
            s.synthesize_with_conditioning(frame, &f, &mut out, Some(&mut trace)).unwrap();
            for (st, o) in trace.iter().zip(&out) {
                // reconstruction in the pre-emphasized domain
                assert_eq!(st.signal, st.prediction + mulaw_decode(st.excitation_level));
                assert_eq!(st.prediction_level, mulaw_encode(st.prediction));
                // LPC history gets the quantized, not de-emphasized, sample
                assert_eq!(st.lpc_input, mulaw_decode(mulaw_encode(st.signal)));
                history.push(st.lpc_input);
                // de-emphasis applied exactly once, at the output
                assert_eq!(*o, saturate(deemph.deemphasize_sample(st.signal)));
                assert_eq!(st.output, *o);
            }
            let h = s.lpc_state().history();
            for k in 0..16 {
                assert_eq!(h[k], history[history.len() - 1 - k]);
            }
        }
    }

    #[test]
    fn prediction_uses_history() {
        let m = small_model(4);
        let frames = synthetic_features(2, 5);
        let inputs: Vec<_> = frames.iter().map(FeatureFrame::to_input).collect();
        let mut s = SynthStream::new(&m, cfg(0)).unwrap();
        let mut trace = Vec::new();
        let f = m.conditioning(&input_window(&inputs, 0)).unwrap();
        let mut out = [0.0; FRAME_SIZE];
        s.synthesize_with_conditioning(&frames[0], &f, &mut out, Some(&mut trace)).unwrap();
        // first sample: zero history, so zero prediction
        assert_eq!(trace[0].prediction, 0.0);
        let a = s.lpc_state().coeffs();
        let hist: Vec<f32> = trace.iter().map(|t| t.lpc_input).collect();
        for t in 16..FRAME_SIZE {
            let want: f32 = (0..16).map(|k| a[k] * hist[t - 1 - k]).sum();
            assert!((trace[t].prediction - want).abs() <= 1e-6 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn many_streams_match_single() {
        let m = small_model(5);
        let jobs: Vec<_> = (0..4).map(|i| (synthetic_features(3, i), cfg(i))).collect();
        let many = synthesize_many(&m, &jobs);
        for ((frames, c), got) in jobs.iter().zip(many) {
            assert_eq!(got.unwrap(), synthesize(&m, frames, *c).unwrap());
        }
    }

    #[test]
    fn copy_synthesis_length() {
        let m = small_model(6);
        let audio = AudioBuffer::new((0..1000).map(|i| 0.3 * (i as f32 * 0.05).sin()).collect()).unwrap();
        let out = copy_synthesis(&m, &audio, cfg(0)).unwrap();
        assert_eq!(out.len(), 960);
    }

    #[test]
    fn bench_report_shape() {
        let m = small_model(7);
        let r = bench(
            &m,
            BenchConfig {
                warmup_frames: 2,
                timed_frames: 5,
                runs: 3,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(r.runs.len(), 3);
        assert_eq!(r.median.samples, 5 * FRAME_SIZE as u64);
        let rate = r.median.samples_per_second();
        assert!((r.median.real_time_factor - 16000.0 / rate).abs() < 1e-9 * r.median.real_time_factor.max(1.0));
        assert!(r.to_string().contains("real-time factor"));
    }
}
