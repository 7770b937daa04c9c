//! 18-band Bark-like layout, triangular band energies, and the DCT pair
//! linking log band energies to cepstral coefficients.
//!
//! | band | 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9 | 10 | 11 | 12 | 13 | 14 | 15 | 16 | 17 |
//! |------|---|---|---|---|---|---|---|---|---|---|----|----|----|----|----|----|----|----|
//! | Hz   | 0 |200|400|600|800|1000|1200|1400|1600|2000|2400|2800|3200|4000|4800|5600|6800|8000|
//!
//! Each band is a triangle centered at its frequency, reaching zero at the
//! neighbouring centers. Bins are 50 Hz apart (320-point FFT at 16 kHz).

use std::sync::OnceLock;

use super::FREQ_BINS;

pub const NB_BANDS: usize = 18;

/// Band centers as FFT bin indices.
pub const BAND_CENTERS_BINS: [usize; NB_BANDS] = [
    0, 4, 8, 12, 16, 20, 24, 28, 32, 40, 48, 56, 64, 80, 96, 112, 136, 160,
];

pub const BAND_CENTERS_HZ: [f32; NB_BANDS] = [
    0.0, 200.0, 400.0, 600.0, 800.0, 1000.0, 1200.0, 1400.0, 1600.0, 2000.0, 2400.0, 2800.0,
    3200.0, 4000.0, 4800.0, 5600.0, 6800.0, 8000.0,
];

/// Energies are floored here before taking log10.
pub const LOG_ENERGY_FLOOR: f32 = 1e-10;

/// Sum of triangular weights per band.
fn band_weights() -> &'static [f32; NB_BANDS] {
    static W: OnceLock<[f32; NB_BANDS]> = OnceLock::new();
    W.get_or_init(|| {
        let ones = [1.0f32; FREQ_BINS];
        triangular_sums(&ones)
    })
}

fn triangular_sums(psd: &[f32; FREQ_BINS]) -> [f32; NB_BANDS] {
    let mut sum = [0.0f32; NB_BANDS];
    for i in 0..NB_BANDS - 1 {
        let lo = BAND_CENTERS_BINS[i];
        let width = BAND_CENTERS_BINS[i + 1] - lo;
        for j in 0..width {
            let frac = j as f32 / width as f32;
            sum[i] += (1.0 - frac) * psd[lo + j];
            sum[i + 1] += frac * psd[lo + j];
        }
    }
    sum[NB_BANDS - 1] += psd[FREQ_BINS - 1];
    sum
}

/// Mean power per bin under each triangular band. A flat PSD yields equal
/// energies in every band.
pub fn band_energies(psd: &[f32; FREQ_BINS]) -> [f32; NB_BANDS] {
    let mut e = triangular_sums(psd);
    for (e, w) in e.iter_mut().zip(band_weights()) {
        *e /= w;
    }
    e
}

fn dct_basis() -> &'static [[f32; NB_BANDS]; NB_BANDS] {
    static B: OnceLock<[[f32; NB_BANDS]; NB_BANDS]> = OnceLock::new();
    B.get_or_init(|| {
        let n = NB_BANDS as f64;
        let mut b = [[0.0f32; NB_BANDS]; NB_BANDS];
        for (k, row) in b.iter_mut().enumerate() {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for (i, v) in row.iter_mut().enumerate() {
                let arg = std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n;
                *v = (scale * arg.cos()) as f32;
            }
        }
        b
    })
}

/// Orthonormal DCT-II.
pub fn cepstrum_from_log_energies(log_e: &[f32; NB_BANDS]) -> [f32; NB_BANDS] {
    let basis = dct_basis();
    let mut c = [0.0f32; NB_BANDS];
    for (ck, row) in c.iter_mut().zip(basis) {
        *ck = row.iter().zip(log_e).map(|(b, l)| b * l).sum();
    }
    c
}

/// Orthonormal DCT-III, the inverse of [`cepstrum_from_log_energies`].
pub fn log_energies_from_cepstrum(cep: &[f32; NB_BANDS]) -> [f32; NB_BANDS] {
    let basis = dct_basis();
    let mut l = [0.0f32; NB_BANDS];
    for (ck, row) in cep.iter().zip(basis) {
        for (li, b) in l.iter_mut().zip(row) {
            *li += ck * b;
        }
    }
    l
}

/// Expands log10 band energies to a linear PSD on the FFT grid,
/// interpolating linearly in the log domain between band centers.
pub fn psd_from_log_energies(log_e: &[f32; NB_BANDS]) -> [f32; FREQ_BINS] {
    let mut psd = [0.0f32; FREQ_BINS];
    for i in 0..NB_BANDS - 1 {
        let lo = BAND_CENTERS_BINS[i];
        let width = BAND_CENTERS_BINS[i + 1] - lo;
        for j in 0..width {
            let frac = j as f32 / width as f32;
            let l = (1.0 - frac) * log_e[i] + frac * log_e[i + 1];
            psd[lo + j] = 10f32.powf(l);
        }
    }
    psd[FREQ_BINS - 1] = 10f32.powf(log_e[NB_BANDS - 1]);
    psd
}
