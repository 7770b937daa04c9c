//! Open-loop pitch search by normalized cross-correlation.

pub const PITCH_MIN_PERIOD: usize = 32;
pub const PITCH_MAX_PERIOD: usize = 256;

/// Ratio of the best correlation a submultiple lag must reach to be
/// preferred over the global maximum.
const SUBMULTIPLE_RATIO: f64 = 0.85;

/// Period reported when the segment has no energy.
const SILENT_PERIOD: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    pub period: usize,
    /// Normalized cross-correlation at `period`, clamped to [0, 1].
    pub correlation: f32,
}

#[derive(Debug, Clone, Copy)]
pub struct PitchEstimator {
    pub min_period: usize,
    pub max_period: usize,
}

impl Default for PitchEstimator {
    fn default() -> Self {
        Self {
            min_period: PITCH_MIN_PERIOD,
            max_period: PITCH_MAX_PERIOD,
        }
    }
}

impl PitchEstimator {
    /// Searches `signal[start..start + len]` against itself delayed by each
    /// candidate lag. Requires `start >= max_period`.
    pub fn estimate(&self, signal: &[f32], start: usize, len: usize) -> PitchEstimate {
        assert!(start >= self.max_period, "pitch search needs {} samples of history", self.max_period);
        assert!(start + len <= signal.len());
        let seg = &signal[start..start + len];
        let energy: f64 = seg.iter().map(|&v| (v as f64) * (v as f64)).sum();
        if energy <= 0.0 {
            return PitchEstimate {
                period: SILENT_PERIOD,
                correlation: 0.0,
            };
        }

        let corr: Vec<f64> = (self.min_period..=self.max_period)
            .map(|lag| normalized_xcorr(signal, start, len, lag, energy))
            .collect();
        let at = |lag: usize| corr[lag - self.min_period];

        let (mut best, mut best_corr) = (self.min_period, f64::MIN);
        for lag in self.min_period..=self.max_period {
            if at(lag) > best_corr {
                best = lag;
                best_corr = at(lag);
            }
        }

        // Prefer the shortest submultiple that is nearly as periodic, which
        // removes most octave-down errors.
        let max_div = best / self.min_period;
        'search: for k in (2..=max_div).rev() {
            let center = (best as f64 / k as f64).round() as usize;
            let lo = center.saturating_sub(1).max(self.min_period);
            let hi = (center + 1).min(self.max_period);
            for lag in lo..=hi {
                if at(lag) >= SUBMULTIPLE_RATIO * best_corr {
                    let (mut l, mut c) = (lag, at(lag));
                    for cand in lo..=hi {
                        if at(cand) > c {
                            l = cand;
                            c = at(cand);
                        }
                    }
                    best = l;
                    best_corr = c;
                    break 'search;
                }
            }
        }

        PitchEstimate {
            period: best,
            correlation: best_corr.clamp(0.0, 1.0) as f32,
        }
    }
}

fn normalized_xcorr(signal: &[f32], start: usize, len: usize, lag: usize, energy: f64) -> f64 {
    let cur = &signal[start..start + len];
    let past = &signal[start - lag..start - lag + len];
    let (mut xy, mut yy) = (0.0f64, 0.0f64);
    for (&x, &y) in cur.iter().zip(past) {
        xy += x as f64 * y as f64;
        yy += y as f64 * y as f64;
    }
    if yy <= 0.0 {
        0.0
    } else {
        xy / (energy * yy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pulse_train(period: usize, n: usize) -> Vec<f32> {
        (0..n).map(|i| if i % period == 0 { 0.8 } else { 0.0 }).collect()
    }

    #[test]
    fn pulse_train_period() {
        let x = pulse_train(80, 1200);
        let est = PitchEstimator::default().estimate(&x, 400, 320);
        assert!((est.period as i64 - 80).abs() <= 2, "{est:?}");
        assert!(est.correlation > 0.9);
    }

    #[test]
    fn silence_is_unvoiced() {
        let est = PitchEstimator::default().estimate(&[0.0; 800], 300, 320);
        assert_eq!(est.correlation, 0.0);
    }

    #[test]
    fn noise_has_low_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f32> = (0..1000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let est = PitchEstimator::default().estimate(&x, 300, 320);
        assert!(est.correlation < 0.4, "{est:?}");
    }

    #[test]
    fn periodic_signals_across_range() {
        // Random harmonic content, at least four periods in the window.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let est = PitchEstimator::default();
        let mut octave_errors = 0;
        for period in 40..=250usize {
            let amps: Vec<f32> = (0..6).map(|_| rng.random_range(0.1..1.0)).collect();
            let phases: Vec<f32> = (0..6).map(|_| rng.random_range(0.0..std::f32::consts::TAU)).collect();
            let len = (4 * period).max(320);
            let n = PITCH_MAX_PERIOD + len;
            let x: Vec<f32> = (0..n)
                .map(|t| {
                    let w = std::f32::consts::TAU * t as f32 / period as f32;
                    amps.iter()
                        .zip(&phases)
                        .enumerate()
                        .map(|(h, (a, p))| a * ((h + 1) as f32 * w + p).sin())
                        .sum::<f32>()
                        * 0.1
                })
                .collect();
            let got = est.estimate(&x, PITCH_MAX_PERIOD, len).period as f64;
            let p = period as f64;
            let exact = (got - p).abs() <= 2.0;
            let multiple = (1..=8).any(|k| {
                let k = k as f64;
                (got - p * k).abs() <= 2.0 * k || (got - p / k).abs() <= 2.0
            });
            assert!(exact || multiple, "period {period}: detected {got}");
            if !exact {
                octave_errors += 1;
            }
        }
        // Octave errors are tolerated but should be rare.
        assert!(octave_errors < 20, "{octave_errors} octave errors");
    }
}
