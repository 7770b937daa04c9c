//! Linear prediction from the band cepstrum.
//!
//! cepstrum → log band energies (DCT-III) → PSD on the 320-point FFT grid →
//! autocorrelation (inverse FFT) → lag window and noise floor →
//! Levinson-Durbin. The predictor is p_t = Σ a_k s_{t−k}.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dsp::{log_energies_from_cepstrum, psd_from_log_energies, NB_BANDS, WINDOW_SIZE};
use crate::error::{Error, Result};

pub const LPC_ORDER: usize = 16;

/// White-noise floor added to lag 0, relative to r_0.
const NOISE_FLOOR: f64 = 1e-4;
/// Order of the binomial lag window; w_k ≈ exp(−k²/N), about 40 Hz of
/// Gaussian smoothing at 16 kHz.
const LAG_WINDOW_ORDER: f64 = 4000.0;

/// Predictor coefficients a_1..a_M.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcCoeffs {
    a: Vec<f64>,
}

impl LpcCoeffs {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue {
                what: "LPC coefficient",
                detail: "non-finite".into(),
            });
        }
        Ok(Self { a })
    }

    pub fn zeros(order: usize) -> Self {
        Self { a: vec![0.0; order] }
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Coefficients of A(z) = 1 − Σ a_k z⁻ᵏ, constant term first.
    pub fn inverse_filter(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.a.iter().map(|a| -a)).collect()
    }
}

/// Autocorrelation lags r_0..r_M.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    r: Vec<f64>,
}

impl Autocorrelation {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        let invalid = |detail: String| Error::InvalidValue {
            what: "autocorrelation",
            detail,
        };
        let Some(&r0) = r.first() else {
            return Err(invalid("empty".into()));
        };
        if !r0.is_finite() || r0 <= 0.0 {
            return Err(invalid(format!("r0 = {r0} must be positive")));
        }
        if let Some((k, v)) = r.iter().enumerate().skip(1).find(|(_, v)| !v.is_finite() || v.abs() > r0) {
            return Err(invalid(format!("|r{k}| = {} exceeds r0 = {r0}", v.abs())));
        }
        Ok(Self { r })
    }

    pub fn lags(&self) -> &[f64] {
        &self.r
    }

    pub fn max_order(&self) -> usize {
        self.r.len() - 1
    }
}

/// Solves the Toeplitz normal equations by the Levinson-Durbin recursion.
pub fn levinson_durbin(r: &Autocorrelation, order: usize) -> Result<LpcCoeffs> {
    if order > r.max_order() {
        return Err(Error::dim("levinson_durbin order", r.max_order(), order));
    }
    let r = r.lags();
    let mut a = vec![0.0f64; order];
    let mut prev = vec![0.0f64; order];
    let mut err = r[0];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        if k.is_nan() || k.abs() >= 1.0 {
            return Err(Error::DegenerateLpc {
                step: i + 1,
                detail: format!("reflection coefficient {k}"),
            });
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err.is_nan() || err <= 0.0 {
            return Err(Error::DegenerateLpc {
                step: i + 1,
                detail: format!("prediction error energy {err}"),
            });
        }
    }
    LpcCoeffs::new(a)
}

/// Cepstrum-to-predictor conversion with a cached inverse FFT plan.
pub struct CepstrumToLpc {
    ifft: Arc<dyn Fft<f64>>,
    lag_window: [f64; LPC_ORDER + 1],
    buf: Vec<Complex64>,
}

impl Clone for CepstrumToLpc {
    fn clone(&self) -> Self {
        Self {
            ifft: Arc::clone(&self.ifft),
            lag_window: self.lag_window,
            buf: self.buf.clone(),
        }
    }
}

impl std::fmt::Debug for CepstrumToLpc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CepstrumToLpc").field("fft_len", &self.ifft.len()).finish()
    }
}

impl Default for CepstrumToLpc {
    fn default() -> Self {
        Self::new()
    }
}

impl CepstrumToLpc {
    pub fn new() -> Self {
        static PLAN: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
        let ifft = PLAN
            .get_or_init(|| FftPlanner::new().plan_fft_inverse(WINDOW_SIZE))
            .clone();
        Self {
            ifft,
            lag_window: binomial_lag_window(),
            buf: vec![Complex64::default(); WINDOW_SIZE],
        }
    }

    /// Raw autocorrelation (before regularization) of the PSD described by
    /// `cepstrum`.
    pub fn autocorrelation(&mut self, cepstrum: &[f32; NB_BANDS]) -> [f64; LPC_ORDER + 1] {
        let psd = psd_from_log_energies(&log_energies_from_cepstrum(cepstrum));
        let n = WINDOW_SIZE;
        for (j, p) in psd.iter().enumerate() {
            self.buf[j] = Complex64::new(*p as f64, 0.0);
            if j > 0 && j < n / 2 {
                self.buf[n - j] = Complex64::new(*p as f64, 0.0);
            }
        }
        self.ifft.process(&mut self.buf);
        std::array::from_fn(|k| self.buf[k].re / n as f64)
    }

    pub fn convert(&mut self, cepstrum: &[f32; NB_BANDS]) -> Result<LpcCoeffs> {
        if cepstrum.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidValue {
                what: "cepstrum",
                detail: "non-finite coefficient".into(),
            });
        }
        let mut r = self.autocorrelation(cepstrum);
        r[0] *= 1.0 + NOISE_FLOOR;
        for (rk, w) in r.iter_mut().zip(&self.lag_window).skip(1) {
            *rk *= w;
        }
        levinson_durbin(&Autocorrelation::new(r.to_vec())?, LPC_ORDER)
    }
}

/// w_k = C(2N, N−k) / C(2N, N).
fn binomial_lag_window() -> [f64; LPC_ORDER + 1] {
    let n = LAG_WINDOW_ORDER;
    let mut w = [1.0f64; LPC_ORDER + 1];
    for k in 1..=LPC_ORDER {
        w[k] = w[k - 1] * (n - k as f64 + 1.0) / (n + k as f64);
    }
    w
}

pub fn cepstrum_to_lpc(cepstrum: &[f32; NB_BANDS]) -> Result<LpcCoeffs> {
    CepstrumToLpc::new().convert(cepstrum)
}

/// Per-frame predictor plus the last M reconstructed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcState {
    coeffs: [f32; LPC_ORDER],
    /// `history[k]` holds s_{t−1−k}.
    history: [f32; LPC_ORDER],
}

impl Default for LpcState {
    fn default() -> Self {
        Self {
            coeffs: [0.0; LPC_ORDER],
            history: [0.0; LPC_ORDER],
        }
    }
}

impl LpcState {
    pub fn new(coeffs: &LpcCoeffs, history: [f32; LPC_ORDER]) -> Result<Self> {
        let mut st = Self {
            history,
            ..Self::default()
        };
        st.set_coeffs(coeffs)?;
        Ok(st)
    }

    pub fn set_coeffs(&mut self, coeffs: &LpcCoeffs) -> Result<()> {
        if coeffs.order() != LPC_ORDER {
            return Err(Error::dim("LpcState coefficients", LPC_ORDER, coeffs.order()));
        }
        for (dst, a) in self.coeffs.iter_mut().zip(coeffs.as_slice()) {
            *dst = *a as f32;
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[f32; LPC_ORDER] {
        &self.coeffs
    }

    pub fn history(&self) -> &[f32; LPC_ORDER] {
        &self.history
    }

    #[inline]
    pub fn predict(&self) -> f32 {
        self.coeffs
            .iter()
            .zip(&self.history)
            .map(|(a, s)| a * s)
            .sum()
    }

    /// Pushes s_t; the oldest sample drops out.
    #[inline]
    pub fn update_history(&mut self, s: f32) {
        self.history.copy_within(0..LPC_ORDER - 1, 1);
        self.history[0] = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{cepstrum_from_log_energies, BAND_CENTERS_BINS};

    #[test]
    fn levinson_first_order() {
        let r = Autocorrelation::new(vec![1.0, 0.5]).unwrap();
        assert_eq!(levinson_durbin(&r, 1).unwrap().as_slice(), &[0.5]);
    }

    #[test]
    fn levinson_second_order_hand_solved() {
        let r = Autocorrelation::new(vec![1.0, 0.5, 0.25]).unwrap();
        let a = levinson_durbin(&r, 2).unwrap();
        assert!((a.as_slice()[0] - 0.5).abs() < 1e-15);
        assert!(a.as_slice()[1].abs() < 1e-15);
    }

    #[test]
    fn levinson_rejects_singular() {
        // Perfectly predictable: r_k = 1 for all k.
        let r = Autocorrelation::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(levinson_durbin(&r, 2), Err(Error::DegenerateLpc { step: 1, .. })));
        let r = Autocorrelation::new(vec![1.0, 0.5]).unwrap();
        assert!(levinson_durbin(&r, 2).is_err());
    }

    #[test]
    fn autocorrelation_validation() {
        assert!(Autocorrelation::new(vec![]).is_err());
        assert!(Autocorrelation::new(vec![0.0, 0.0]).is_err());
        assert!(Autocorrelation::new(vec![1.0, 1.5]).is_err());
    }

    #[test]
    fn white_cepstrum_gives_zero_predictor() {
        let cep = cepstrum_from_log_energies(&[-2.0; NB_BANDS]);
        let a = cepstrum_to_lpc(&cep).unwrap();
        assert_eq!(a.order(), LPC_ORDER);
        for v in a.as_slice() {
            assert!(v.abs() < 1e-3, "{:?}", a);
        }
    }

    #[test]
    fn single_pole_spectrum() {
        // Band energies sampled from |1 / (1 − 0.9 z⁻¹)|² at band centers.
        let log_e: [f32; NB_BANDS] = std::array::from_fn(|i| {
            let w = std::f64::consts::PI * BAND_CENTERS_BINS[i] as f64 / 160.0;
            let mag2 = 1.0 - 1.8 * w.cos() + 0.81;
            (1.0 / mag2).log10() as f32
        });
        let a = cepstrum_to_lpc(&cepstrum_from_log_energies(&log_e)).unwrap();
        let a = a.as_slice();
        assert!((a[0] - 0.9).abs() < 0.05, "{a:?}");
        for v in &a[1..] {
            assert!(v.abs() < 0.05, "{a:?}");
        }
    }

    #[test]
    fn predict_and_history() {
        let mut a = vec![0.0; LPC_ORDER];
        a[0] = 0.5;
        let mut st = LpcState::new(&LpcCoeffs::new(a).unwrap(), [0.8; LPC_ORDER]).unwrap();
        assert!((st.predict() - 0.4).abs() < 1e-7);

        let hist: [f32; LPC_ORDER] = std::array::from_fn(|i| (i + 1) as f32);
        st = LpcState::new(&LpcCoeffs::zeros(LPC_ORDER), hist).unwrap();
        assert_eq!(st.predict(), 0.0);
        st.update_history(0.0);
        let expected: [f32; LPC_ORDER] = std::array::from_fn(|i| i as f32);
        assert_eq!(st.history(), &expected);

        for k in 0..LPC_ORDER {
            st.update_history(100.0 + k as f32);
        }
        assert!(st.history().iter().all(|&v| v >= 100.0));

        let mut a = vec![0.0; LPC_ORDER];
        a[0] = 1.0;
        st.set_coeffs(&LpcCoeffs::new(a).unwrap()).unwrap();
        st.update_history(-3.0);
        assert_eq!(st.predict(), -3.0);
    }

    #[test]
    fn wrong_order_rejected() {
        let mut st = LpcState::default();
        assert!(st.set_coeffs(&LpcCoeffs::zeros(4)).is_err());
    }

    #[test]
    fn lag_window_is_decreasing() {
        let w = binomial_lag_window();
        assert_eq!(w[0], 1.0);
        assert!(w.windows(2).all(|p| p[1] < p[0]));
        assert!((w[LPC_ORDER] - (-(256.0) / LAG_WINDOW_ORDER).exp()).abs() < 1e-3);
    }
}
