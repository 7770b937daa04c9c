//! LPCNet vocoder inference: a linear-prediction front end plus a small
//! block-sparse recurrent network that models the prediction residual, one
//! 16 kHz sample at a time.
//!
//! The pipeline, per 10 ms frame of 20 features:
//!
//! 1. [`model::FrameRateParams`] turns a 5-frame feature window into a
//!    conditioning vector, and [`lpc::cepstrum_to_lpc`] turns the cepstrum
//!    into prediction coefficients.
//! 2. For each of the 160 samples, the LPC prediction and previous samples
//!    enter [`model::SampleRateParams`] as μ-law levels; the output
//!    distribution is sharpened and floored by [`sampler::Sampler`], an
//!    excitation level is drawn, and the sample is reconstructed.
//!
//! [`synth::SynthStream`] runs that loop for one stream. Independent streams
//! share one immutable [`model::Model`].
//!
//! With the default `parallel` feature, batch work that has no sequential
//! dependency (feature extraction, layerwise frame-rate evaluation, multiple
//! streams) runs on rayon; without it the same code runs on one thread and
//! produces identical results.

pub mod dsp;
pub mod error;
pub mod exec;
pub mod lpc;
pub mod model;
pub mod nn;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result, WeightError};
pub use model::{Model, ModelConfig};
pub use sampler::{ProbDist, SamplerConfig};
pub use synth::{SynthStream, SynthesisReport};

