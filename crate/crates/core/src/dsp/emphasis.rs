/// Pre-emphasis coefficient α of E(z) = 1 − αz⁻¹.
pub const PREEMPHASIS: f32 = 0.85;

/// One-sample memory of a first-order emphasis filter.
///
/// For pre-emphasis `mem` holds the last input sample; for de-emphasis it
/// holds the last output sample. Use one state per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmphasisState {
    alpha: f32,
    pub mem: f32,
}

impl Default for EmphasisState {
    fn default() -> Self {
        Self::new(PREEMPHASIS)
    }
}

impl EmphasisState {
    pub fn new(alpha: f32) -> Self {
        Self { alpha, mem: 0.0 }
    }

    pub fn alpha(&self) -> f32 {
        self.alpha
    }

    #[inline]
    pub fn preemphasize_sample(&mut self, x: f32) -> f32 {
        let y = x - self.alpha * self.mem;
        self.mem = x;
        y
    }

    #[inline]
    pub fn deemphasize_sample(&mut self, x: f32) -> f32 {
        let y = x + self.alpha * self.mem;
        self.mem = y;
        y
    }

    pub fn preemphasize_in_place(&mut self, buf: &mut [f32]) {
        for x in buf {
            *x = self.preemphasize_sample(*x);
        }
    }

    pub fn deemphasize_in_place(&mut self, buf: &mut [f32]) {
        for x in buf {
            *x = self.deemphasize_sample(*x);
        }
    }
}

/// y[t] = x[t] − α·x[t−1]. Streaming: chunks may be fed in any split.
pub fn preemphasize(input: &[f32], state: &mut EmphasisState) -> Vec<f32> {
    let mut out = input.to_vec();
    state.preemphasize_in_place(&mut out);
    out
}

/// y[t] = x[t] + α·y[t−1], the inverse of [`preemphasize`].
pub fn deemphasize(input: &[f32], state: &mut EmphasisState) -> Vec<f32> {
    let mut out = input.to_vec();
    state.deemphasize_in_place(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_in_zero_out() {
        let mut st = EmphasisState::default();
        assert_eq!(preemphasize(&[0.0; 3], &mut st), vec![0.0; 3]);
        let mut st = EmphasisState::default();
        assert_eq!(deemphasize(&[0.0; 3], &mut st), vec![0.0; 3]);
    }

    #[test]
    fn impulse_responses() {
        let mut st = EmphasisState::default();
        assert_eq!(preemphasize(&[1.0, 0.0, 0.0], &mut st), vec![1.0, -0.85, 0.0]);
        assert_eq!(st.mem, 0.0);

        let mut st = EmphasisState::default();
        let y = deemphasize(&[1.0, 0.0, 0.0], &mut st);
        assert_eq!(y[0], 1.0);
        assert!((y[1] - 0.85).abs() < 1e-7);
        assert!((y[2] - 0.7225).abs() < 1e-7);
    }

    #[test]
    fn nyquist_gains() {
        // |E(e^{iπ})| = 1 + α, |D(e^{iπ})| = 1 / (1 + α); at DC |D| = 1 / (1 − α).
        let mut st = EmphasisState::default();
        let alt: Vec<f32> = (0..64).map(|n| if n % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let y = preemphasize(&alt, &mut st);
        let gain = y[63].abs() / 0.5;
        assert!((gain - 1.85).abs() < 1e-6);
        assert!((20.0 * gain.log10() - 5.343).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn deemphasis_inverts_preemphasis_across_chunks(
            x in prop::collection::vec(-1.0f32..1.0, 1..400),
            cuts in prop::collection::vec(0usize..400, 0..6),
        ) {
            let mut pre = EmphasisState::default();
            let whole = preemphasize(&x, &mut pre);

            let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c % (x.len() + 1)).collect();
            cuts.push(0);
            cuts.push(x.len());
            cuts.sort_unstable();
            let mut pre = EmphasisState::default();
            let mut de = EmphasisState::default();
            let mut chunked = Vec::new();
            let mut restored = Vec::new();
            for w in cuts.windows(2) {
                let part = preemphasize(&x[w[0]..w[1]], &mut pre);
                restored.extend(deemphasize(&part, &mut de));
                chunked.extend(part);
            }
            prop_assert_eq!(&whole, &chunked);
            for (a, b) in x.iter().zip(&restored) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}
