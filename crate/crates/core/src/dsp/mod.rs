//! Sample-domain primitives: emphasis filters, μ-law companding, Bark-band
//! cepstral analysis, open-loop pitch estimation and file I/O.

mod analysis;
mod bands;
mod emphasis;
mod features;
mod mulaw;
mod pitch;
mod wav;

pub use analysis::{analyze_frame, extract_features, FeatureExtractor};
pub use bands::{
    band_energies, cepstrum_from_log_energies, log_energies_from_cepstrum, psd_from_log_energies,
    BAND_CENTERS_BINS, BAND_CENTERS_HZ, LOG_ENERGY_FLOOR, NB_BANDS,
};
pub use emphasis::{deemphasize, preemphasize, EmphasisState, PREEMPHASIS};
pub use features::{read_features, write_features, FeatureFrame, NB_FEATURES};
pub use mulaw::{mulaw_decode, mulaw_encode, MuLawLevel};
pub use pitch::{PitchEstimate, PitchEstimator, PITCH_MAX_PERIOD, PITCH_MIN_PERIOD};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;
/// Samples per 10 ms frame.
pub const FRAME_SIZE: usize = 160;
/// 20 ms analysis window centered on each frame.
pub const WINDOW_SIZE: usize = 2 * FRAME_SIZE;
/// Bins in the half spectrum of a `WINDOW_SIZE` FFT, DC and Nyquist included.
pub const FREQ_BINS: usize = WINDOW_SIZE / 2 + 1;

/// Mono PCM at 16 kHz with samples in [-1, 1).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>) -> Result<Self> {
        if let Some((i, x)) = samples
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < -1.0 || **x >= 1.0)
        {
            return Err(Error::InvalidValue {
                what: "audio sample",
                detail: format!("sample {i} = {x} outside [-1, 1)"),
            });
        }
        Ok(Self { samples })
    }

    /// Builds a buffer by saturating every sample into [-1, 1).
    ///
    /// Non-finite values become 0.
    pub fn saturating(mut samples: Vec<f32>) -> Self {
        for x in &mut samples {
            *x = saturate(*x);
        }
        Self { samples }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            samples: vec![0.0; len],
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    /// Number of whole 10 ms frames.
    pub fn frames(&self) -> usize {
        self.samples.len() / FRAME_SIZE
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }
}

/// Largest representable sample below 1.0 at 16-bit resolution.
pub const MAX_SAMPLE: f32 = 32767.0 / 32768.0;

#[inline]
pub fn saturate(x: f32) -> f32 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1.0, MAX_SAMPLE)
    }
}
