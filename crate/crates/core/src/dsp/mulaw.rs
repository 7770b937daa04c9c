//! 8-bit μ-law companding with μ = 255, referenced to full scale |x| = 1.

use std::fmt;

use crate::error::{Error, Result};

const MU: f32 = 255.0;
const HALF_LEVELS: f32 = 128.0;

/// One of the 256 μ-law levels. Level 128 decodes to exactly 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MuLawLevel(u8);

impl MuLawLevel {
    pub const ZERO: MuLawLevel = MuLawLevel(128);
    pub const COUNT: usize = 256;

    pub const fn new(level: u8) -> Self {
        MuLawLevel(level)
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<i32> for MuLawLevel {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        u8::try_from(v).map(MuLawLevel).map_err(|_| Error::InvalidValue {
            what: "mu-law level",
            detail: format!("{v} outside [0, 255]"),
        })
    }
}

impl TryFrom<usize> for MuLawLevel {
    type Error = Error;

    fn try_from(v: usize) -> Result<Self> {
        u8::try_from(v).map(MuLawLevel).map_err(|_| Error::InvalidValue {
            what: "mu-law level",
            detail: format!("{v} outside [0, 255]"),
        })
    }
}

impl From<MuLawLevel> for u8 {
    fn from(l: MuLawLevel) -> u8 {
        l.0
    }
}

impl fmt::Display for MuLawLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Inputs outside [-1, 1] are clamped; NaN maps to level 128.
#[inline]
pub fn mulaw_encode(x: f32) -> MuLawLevel {
    let x = x.clamp(-1.0, 1.0);
    let y = x.signum() * (MU * x.abs()).ln_1p() / (MU + 1.0).ln();
    let level = (HALF_LEVELS * y).round() as i32 + 128;
    MuLawLevel(level.clamp(0, 255) as u8)
}

#[inline]
pub fn mulaw_decode(level: MuLawLevel) -> f32 {
    let u = level.0 as f32 - HALF_LEVELS;
    // 256^(|u|/128) = 2^(|u|/16)
    let mag = ((u.abs() / 16.0).exp2() - 1.0) / MU;
    mag.copysign(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn center_and_extremes() {
        assert_eq!(mulaw_encode(0.0), MuLawLevel::ZERO);
        assert_eq!(mulaw_decode(MuLawLevel::ZERO), 0.0);
        assert_eq!(mulaw_decode(MuLawLevel::new(0)), -1.0);
        let top = mulaw_decode(MuLawLevel::new(255));
        assert!(top > 0.94 && top < 1.0, "top level decodes to {top}");
        assert_eq!(mulaw_encode(1.0), MuLawLevel::new(255));
        assert_eq!(mulaw_encode(7.0), MuLawLevel::new(255));
        assert_eq!(mulaw_encode(-7.0), MuLawLevel::new(0));
        assert_eq!(mulaw_encode(f32::NAN), MuLawLevel::ZERO);
    }

    #[test]
    fn roundtrip_every_level() {
        for l in 0..=255u8 {
            let level = MuLawLevel::new(l);
            assert_eq!(mulaw_encode(mulaw_decode(level)), level, "level {l}");
        }
    }

    #[test]
    fn out_of_range_level_rejected() {
        assert!(MuLawLevel::try_from(256i32).is_err());
        assert!(MuLawLevel::try_from(-1i32).is_err());
        assert_eq!(MuLawLevel::try_from(17i32).unwrap().get(), 17);
    }

    #[test]
    fn sine_roundtrip_snr() {
        let n = 16000;
        let x: Vec<f32> = (0..n)
            .map(|t| 0.5 * (2.0 * std::f32::consts::PI * 1000.0 * t as f32 / 16000.0).sin())
            .collect();
        let (mut sig, mut err) = (0.0f64, 0.0f64);
        for &v in &x {
            let q = mulaw_decode(mulaw_encode(v));
            sig += (v as f64).powi(2);
            err += ((v - q) as f64).powi(2);
        }
        let snr = 10.0 * (sig / err).log10();
        assert!(snr > 30.0, "snr {snr}");
    }

    proptest! {
        #[test]
        fn monotone(a in -1.5f32..1.5, b in -1.5f32..1.5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(mulaw_encode(lo) <= mulaw_encode(hi));
        }

        #[test]
        fn odd_symmetry(x in 0.0f32..0.9) {
            // above ~0.92 the positive side clamps at 255 while the negative reaches 0
            let pos = mulaw_encode(x).get() as i32;
            let neg = mulaw_encode(-x).get() as i32;
            prop_assert_eq!(neg, 256 - pos);
        }
    }
}
