//! tanh and sigmoid built on a polynomial exp. Branch-free and written so
//! that loops over slices auto-vectorize; std's `tanhf` is a libm call.

/// Beyond this |x|, tanh is 1 in f32.
const TANH_CLAMP: f32 = 9.0;

/// e^y for y in [−87, 87]: y = n·ln2 + r with |r| ≤ ln2/2, e^r by its
/// degree-7 Taylor polynomial (truncation below 1e-8 relative), 2^n by
/// writing the exponent bits.
#[inline(always)]
fn exp(y: f32) -> f32 {
    const LN2_HI: f32 = 0.693_145_75;
    const LN2_LO: f32 = 1.428_606_8e-6;
    // adding 1.5·2^23 rounds to the nearest integer without a libm call
    const ROUND: f32 = 12_582_912.0;
    let y = if y < -87.0 { -87.0 } else { y };
    let y = if y > 87.0 { 87.0 } else { y };
    let k = y * std::f32::consts::LOG2_E + ROUND;
    let n = k - ROUND;
    // the low mantissa bits of k hold n; reading them avoids a float to int
    // conversion, which blocks vectorization
    let n_int = k.to_bits().wrapping_sub(ROUND.to_bits());
    let r = y - n * LN2_HI - n * LN2_LO;
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0 + r * (1.0 / 5040.0)))))));
    p * f32::from_bits(n_int.wrapping_add(127) << 23)
}

/// Absolute error below 2e-7.
#[inline(always)]
pub fn tanh(x: f32) -> f32 {
    let a = x.abs();
    let a = if a > TANH_CLAMP { TANH_CLAMP } else { a };
    let t = 1.0 - 2.0 / (exp(2.0 * a) + 1.0);
    t.copysign(x)
}

/// σ(x) = (1 + tanh(x/2)) / 2.
#[inline(always)]
pub fn sigmoid(x: f32) -> f32 {
    0.5 + 0.5 * tanh(0.5 * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_matches_f64_on_dense_grid() {
        let mut worst = 0.0f64;
        for i in -2_000_000..=2_000_000 {
            let x = i as f32 * 1e-5;
            let err = (tanh(x) as f64 - (x as f64).tanh()).abs();
            worst = worst.max(err);
        }
        for x in [-1e30f32, -50.0, -9.0, 9.0, 50.0, 1e30, f32::INFINITY, f32::NEG_INFINITY] {
            let err = (tanh(x) as f64 - (x as f64).tanh()).abs();
            worst = worst.max(err);
        }
        assert!(worst < 2e-7, "max error {worst:e}");
    }

    #[test]
    fn tanh_is_odd_bounded_and_monotone() {
        let mut prev = -1.0f32;
        for i in -100_000..=100_000 {
            let x = i as f32 * 1e-4;
            let y = tanh(x);
            assert_eq!(y, -tanh(-x));
            assert!(y.abs() <= 1.0);
            // exp's range reduction can leave 1-ulp steps backwards
            assert!(y >= prev - 1.2e-7, "not monotone at {x}");
            prev = y;
        }
        assert_eq!(tanh(0.0), 0.0);
    }

    #[test]
    fn exp_relative_error() {
        for i in -86_900..=86_900 {
            let y = i as f32 * 1e-3;
            let want = (y as f64).exp();
            assert!(((exp(y) as f64 - want) / want).abs() < 3e-7, "{y}");
        }
    }

    #[test]
    fn sigmoid_matches_f64() {
        for i in -20_000..=20_000 {
            let x = i as f32 * 1e-3;
            let want = 1.0 / (1.0 + (-(x as f64)).exp());
            assert!((sigmoid(x) as f64 - want).abs() < 2e-7, "{x}");
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
