//! Excitation sampling with pitch-adaptive temperature and a probability
//! floor.
//!
//! Random stream: ChaCha8 keyed with the 64-bit seed in little-endian order
//! (key bytes 0..8, remaining key bytes and the stream id zero). Each draw
//! consumes one `u64` word `w` (low 32-bit output first) and uses
//! `u = (w >> 11) · 2⁻⁵³ ∈ [0, 1)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::MuLawLevel;
use crate::error::{Error, Result};

/// Default floor T.
pub const DEFAULT_THRESHOLD: f64 = 0.002;

/// Categorical distribution, entries ≥ 0 summing to 1. Up to 256 bins so
/// that every index is a μ-law level.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    p: Vec<f64>,
}

impl ProbDist {
    const TOLERANCE: f64 = 1e-6;

    pub fn new(p: Vec<f64>) -> Result<Self> {
        let invalid = |detail: String| Error::InvalidValue {
            what: "probability distribution",
            detail,
        };
        if p.is_empty() || p.len() > MuLawLevel::COUNT {
            return Err(invalid(format!("{} bins, expected 1..=256", p.len())));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("negative or non-finite entry".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(invalid(format!("sums to {sum}")));
        }
        Ok(Self { p })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Self { p }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.p.iter().enumerate() {
            if v > self.p[best] {
                best = i;
            }
        }
        best
    }

    pub(crate) fn as_mut_vec(&mut self) -> &mut Vec<f64> {
        &mut self.p
    }

    pub(crate) fn is_normalized(&self) -> bool {
        (self.p.iter().sum::<f64>() - 1.0).abs() <= Self::TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Floor T subtracted after sharpening.
    pub threshold: f64,
    /// Multiplier applied to the pitch-derived temperature factor c.
    pub temp_scale: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            temp_scale: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidValue {
                what: "sampling floor",
                detail: format!("{} outside [0, 1)", self.threshold),
            });
        }
        if !(self.temp_scale.is_finite() && self.temp_scale > 0.0) {
            return Err(Error::InvalidValue {
                what: "temperature scale",
                detail: format!("{} must be positive", self.temp_scale),
            });
        }
        Ok(())
    }
}

/// c = 1 + max(0, 1.5·g_p − 0.5), with g_p clamped to [0, 1].
pub fn temperature(pitch_correlation: f32) -> f64 {
    let g = if pitch_correlation.is_nan() {
        0.0
    } else {
        pitch_correlation.clamp(0.0, 1.0) as f64
    };
    1.0 + (1.5 * g - 0.5).max(0.0)
}

/// R(max[R(P^c) − T, 0]) where R renormalizes to unit sum.
///
/// Exact zeros stay zero under the power. If the floor removes all mass
/// the result is one-hot at the argmax.
pub fn sharpen_and_floor(dist: &ProbDist, c: f64, threshold: f64) -> ProbDist {
    sharpen_and_floor_checked(dist, c, threshold).0
}

/// As [`sharpen_and_floor`]; the flag reports the one-hot fallback.
pub fn sharpen_and_floor_checked(dist: &ProbDist, c: f64, threshold: f64) -> (ProbDist, bool) {
    let mut p: Vec<f64> = dist
        .as_slice()
        .iter()
        .map(|&v| if v > 0.0 { (c * v.ln()).exp() } else { 0.0 })
        .collect();
    normalize(&mut p);
    let mut out = ProbDist { p };
    let fell_back = apply_floor(&mut out, threshold);
    (out, fell_back)
}

fn normalize(p: &mut [f64]) -> f64 {
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        let inv = 1.0 / sum;
        p.iter_mut().for_each(|v| *v *= inv);
    }
    sum
}

/// Subtracts T, clips at zero and renormalizes in place. Returns true on
/// the one-hot fallback.
fn apply_floor(dist: &mut ProbDist, threshold: f64) -> bool {
    let argmax = dist.argmax();
    let p = dist.as_mut_vec();
    for v in p.iter_mut() {
        *v = (*v - threshold).max(0.0);
    }
    if normalize(p) > 0.0 {
        return false;
    }
    log::warn!("sampling floor {threshold} removed all probability mass; using argmax");
    p.fill(0.0);
    p[argmax] = 1.0;
    true
}

/// The documented random stream. See the module docs.
#[derive(Debug, Clone)]
pub struct SampleRng(ChaCha8Rng);

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self(ChaCha8Rng::from_seed(key))
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Inverse-CDF draw. The returned level always has nonzero probability.
pub fn draw(dist: &ProbDist, rng: &mut SampleRng) -> MuLawLevel {
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut last_nonzero = 0;
    for (i, &v) in dist.as_slice().iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        cum += v;
        last_nonzero = i;
        if u < cum {
            return MuLawLevel::new(i as u8);
        }
    }
    MuLawLevel::new(last_nonzero as u8)
}

/// Per-stream sampler: logits in, μ-law level out.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    rng: SampleRng,
    dist: ProbDist,
    fallbacks: u64,
}

impl Sampler {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: SampleRng::new(config.seed),
            dist: ProbDist::uniform(MuLawLevel::COUNT),
            fallbacks: 0,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Times the floor removed all mass.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn temperature_for(&self, pitch_correlation: f32) -> f64 {
        self.config.temp_scale * temperature(pitch_correlation)
    }

    /// Sharpened, floored distribution for these logits. Since
    /// R(softmax(z)^c) = softmax(c·z), the power is folded into the softmax.
    pub fn distribution(&mut self, logits: &[f32], pitch_correlation: f32) -> &ProbDist {
        let c = self.temperature_for(pitch_correlation);
        crate::nn::softmax_scaled_into(logits, c, &mut self.dist);
        if apply_floor(&mut self.dist, self.config.threshold) {
            self.fallbacks += 1;
        }
        debug_assert!(self.dist.is_normalized());
        &self.dist
    }

    pub fn sample_logits(&mut self, logits: &[f32], pitch_correlation: f32) -> MuLawLevel {
        self.distribution(logits, pitch_correlation);
        draw(&self.dist, &mut self.rng)
    }

    pub fn rng(&mut self) -> &mut SampleRng {
        &mut self.rng
    }
}
