use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use super::bands::{band_energies, cepstrum_from_log_energies, LOG_ENERGY_FLOOR, NB_BANDS};
use super::pitch::{PitchEstimator, PITCH_MAX_PERIOD};
use super::{AudioBuffer, FeatureFrame, FRAME_SIZE, FREQ_BINS, PREEMPHASIS, WINDOW_SIZE};
use crate::error::{Error, Result};
use crate::exec;

/// Computes [`FeatureFrame`]s from audio. Holds the FFT plan and window so
/// repeated frames avoid re-planning; shareable across threads.
pub struct FeatureExtractor {
    fft: Arc<dyn Fft<f32>>,
    window: [f32; WINDOW_SIZE],
    window_energy: f32,
    pitch: PitchEstimator,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(WINDOW_SIZE);
        let window: [f32; WINDOW_SIZE] = std::array::from_fn(|n| {
            (std::f64::consts::PI * (n as f64 + 0.5) / WINDOW_SIZE as f64).sin() as f32
        });
        let window_energy = window.iter().map(|w| w * w).sum();
        Self {
            fft,
            window,
            window_energy,
            pitch: PitchEstimator::default(),
        }
    }

    fn shared() -> &'static FeatureExtractor {
        static EXTRACTOR: OnceLock<FeatureExtractor> = OnceLock::new();
        EXTRACTOR.get_or_init(FeatureExtractor::new)
    }

    /// Cepstrum of one 320-sample (already pre-emphasized) segment.
    pub fn cepstrum(&self, segment: &[f32; WINDOW_SIZE]) -> [f32; NB_BANDS] {
        let mut buf: Vec<Complex32> = segment
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex32::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let mut psd = [0.0f32; FREQ_BINS];
        for (p, x) in psd.iter_mut().zip(&buf) {
            *p = x.norm_sqr() / self.window_energy;
        }
        let energies = band_energies(&psd);
        let log_e = energies.map(|e| e.max(LOG_ENERGY_FLOOR).log10());
        cepstrum_from_log_energies(&log_e)
    }

    /// Features of frame `frame_index`: samples `[160·i, 160·i + 160)`.
    ///
    /// The analysis window spans `[160·i − 80, 160·i + 240)`. Samples before
    /// the start of the buffer count as silence; the window must not run
    /// past the end.
    pub fn analyze(&self, audio: &AudioBuffer, frame_index: usize) -> Result<FeatureFrame> {
        let x = audio.samples();
        let end = frame_index * FRAME_SIZE + FRAME_SIZE + FRAME_SIZE / 2;
        if end > x.len() {
            return Err(Error::InsufficientSamples {
                frame: frame_index,
                needed: end,
                available: x.len(),
            });
        }
        let start = end as isize - WINDOW_SIZE as isize;
        let first = start - PITCH_MAX_PERIOD as isize;
        let at = |i: isize| if i < 0 { 0.0 } else { x[i as usize] };

        let local: Vec<f32> = (first..end as isize)
            .map(|i| at(i) - PREEMPHASIS * at(i - 1))
            .collect();
        let segment: &[f32; WINDOW_SIZE] = local[PITCH_MAX_PERIOD..].try_into().unwrap();

        let cepstrum = self.cepstrum(segment);
        let pitch = self.pitch.estimate(&local, PITCH_MAX_PERIOD, WINDOW_SIZE);
        FeatureFrame::new(cepstrum, pitch.period as f32, pitch.correlation)
    }

    /// One frame per whole 10 ms of input. The final half window is
    /// zero-padded so every frame can be analyzed.
    pub fn extract(&self, audio: &AudioBuffer) -> Result<Vec<FeatureFrame>> {
        let frames = audio.frames();
        let mut padded = audio.samples().to_vec();
        padded.resize(frames * FRAME_SIZE + FRAME_SIZE / 2, 0.0);
        let padded = AudioBuffer::saturating(padded);
        exec::map_indexed(frames, |i| self.analyze(&padded, i))
            .into_iter()
            .collect()
    }
}

pub fn analyze_frame(audio: &AudioBuffer, frame_index: usize) -> Result<FeatureFrame> {
    FeatureExtractor::shared().analyze(audio, frame_index)
}

pub fn extract_features(audio: &AudioBuffer) -> Result<Vec<FeatureFrame>> {
    FeatureExtractor::shared().extract(audio)
}
