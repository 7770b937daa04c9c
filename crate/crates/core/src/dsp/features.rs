//! Per-frame acoustic features and the raw `.f32` feature file.
//!
//! File layout: no header, one record per frame of 20 little-endian f32
//! values `[c0..c17, (period - 100) / 50, correlation]`.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::NB_BANDS;
use crate::error::{Error, Result};

pub const NB_FEATURES: usize = NB_BANDS + 2;

const PERIOD_OFFSET: f32 = 100.0;
const PERIOD_SCALE: f32 = 50.0;

/// 18 Bark cepstral coefficients plus pitch period and correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureFrame {
    pub cepstrum: [f32; NB_BANDS],
    /// Pitch period in samples.
    pub period: f32,
    /// Pitch correlation g_p in [0, 1].
    pub correlation: f32,
}

impl Default for FeatureFrame {
    fn default() -> Self {
        Self::from_input(&[0.0; NB_FEATURES])
    }
}

impl FeatureFrame {
    pub fn new(cepstrum: [f32; NB_BANDS], period: f32, correlation: f32) -> Result<Self> {
        if cepstrum.iter().any(|c| !c.is_finite()) || !period.is_finite() || !correlation.is_finite() {
            return Err(Error::InvalidValue {
                what: "feature frame",
                detail: "non-finite value".into(),
            });
        }
        Ok(Self {
            cepstrum,
            period,
            correlation: correlation.clamp(0.0, 1.0),
        })
    }

    /// The 20-value network input (and file record).
    pub fn to_input(&self) -> [f32; NB_FEATURES] {
        let mut v = [0.0f32; NB_FEATURES];
        v[..NB_BANDS].copy_from_slice(&self.cepstrum);
        v[NB_BANDS] = (self.period - PERIOD_OFFSET) / PERIOD_SCALE;
        v[NB_BANDS + 1] = self.correlation;
        v
    }

    pub fn from_input(v: &[f32; NB_FEATURES]) -> Self {
        let mut cepstrum = [0.0f32; NB_BANDS];
        cepstrum.copy_from_slice(&v[..NB_BANDS]);
        Self {
            cepstrum,
            period: v[NB_BANDS] * PERIOD_SCALE + PERIOD_OFFSET,
            correlation: v[NB_BANDS + 1],
        }
    }
}

pub fn encode_features(frames: &[FeatureFrame]) -> Vec<u8> {
    let mut out = Vec::with_capacity(frames.len() * NB_FEATURES * 4);
    for f in frames {
        for v in f.to_input() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> std::result::Result<Vec<FeatureFrame>, String> {
    const RECORD: usize = NB_FEATURES * 4;
    if !bytes.len().is_multiple_of(RECORD) {
        return Err(format!(
            "length {} is not a multiple of the {RECORD}-byte frame record",
            bytes.len()
        ));
    }
    bytes
        .chunks_exact(RECORD)
        .enumerate()
        .map(|(i, rec)| {
            let mut v = [0.0f32; NB_FEATURES];
            for (dst, b) in v.iter_mut().zip(rec.chunks_exact(4)) {
                *dst = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("frame {i} contains a non-finite value"));
            }
            Ok(FeatureFrame::from_input(&v))
        })
        .collect()
}

pub fn write_features(path: impl AsRef<Path>, frames: &[FeatureFrame]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_features(frames))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureFrame>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&bytes).map_err(|detail| Error::FeatureFile {
        path: path.to_path_buf(),
        detail,
    })
}
