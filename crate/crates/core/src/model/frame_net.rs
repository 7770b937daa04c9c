//! Frame-rate network: two 3-tap convolutions, a residual connection from
//! the input features, and two fully-connected layers, all tanh. Output is
//! the conditioning vector f, held for the whole frame.

use crate::dsp::NB_FEATURES;
use crate::error::{Error, Result};
use crate::exec;
use crate::nn::{conv1d_3, Conv1d, Dense};

pub const COND_SIZE: usize = 128;

/// Network inputs for frames t−2..=t+2; `None` marks padding outside the
/// sequence.
pub type FeatureWindow<'a> = [Option<&'a [f32; NB_FEATURES]>; 5];

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRateParams {
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub fc1: Dense,
    pub fc2: Dense,
}

impl FrameRateParams {
    pub fn new(conv1: Conv1d, conv2: Conv1d, fc1: Dense, fc2: Dense) -> Result<Self> {
        if conv1.in_dim() != NB_FEATURES {
            return Err(Error::dim("frame conv1 input", NB_FEATURES, conv1.in_dim()));
        }
        if conv2.in_dim() != conv1.out_dim() {
            return Err(Error::dim("frame conv2 input", conv1.out_dim(), conv2.in_dim()));
        }
        if conv2.out_dim() < NB_FEATURES {
            return Err(Error::dim("frame residual width", NB_FEATURES, conv2.out_dim()));
        }
        if fc1.weights.cols() != conv2.out_dim() {
            return Err(Error::dim("frame fc1 input", conv2.out_dim(), fc1.weights.cols()));
        }
        if fc2.weights.cols() != fc1.weights.rows() {
            return Err(Error::dim("frame fc2 input", fc1.weights.rows(), fc2.weights.cols()));
        }
        if fc2.weights.rows() != COND_SIZE {
            return Err(Error::dim("conditioning size", COND_SIZE, fc2.weights.rows()));
        }
        Ok(Self {
            conv1,
            conv2,
            fc1,
            fc2,
        })
    }

    /// Conditioning vector for the center frame of `window`.
    pub fn forward(&self, window: &FeatureWindow) -> Result<Vec<f32>> {
        let w = |i: usize| window[i].map(|v| v.as_slice());
        let c1: [Vec<f32>; 3] = [
            self.conv1.forward_window([w(0), w(1), w(2)])?,
            self.conv1.forward_window([w(1), w(2), w(3)])?,
            self.conv1.forward_window([w(2), w(3), w(4)])?,
        ];
        let c2 = self
            .conv2
            .forward_window([Some(&c1[0]), Some(&c1[1]), Some(&c1[2])])?;
        self.head(c2, window[2])
    }

    /// Conditioning vectors for a whole sequence, evaluated layer by layer.
    /// Equals calling [`forward`](Self::forward) on every window.
    pub fn forward_sequence(&self, inputs: &[[f32; NB_FEATURES]]) -> Result<Vec<Vec<f32>>> {
        let n = inputs.len();
        // conv1 positions −1..=n, stored at index t + 1.
        let c1: Vec<Vec<f32>> = exec::map_indexed(n + 2, |i| conv1d_3(&self.conv1, inputs, i as isize - 1))
            .into_iter()
            .collect::<Result<_>>()?;
        exec::map_indexed(n, |t| {
            let c2 = self
                .conv2
                .forward_window([Some(&c1[t]), Some(&c1[t + 1]), Some(&c1[t + 2])])?;
            self.head(c2, Some(&inputs[t]))
        })
        .into_iter()
        .collect()
    }

    fn head(&self, mut c2: Vec<f32>, center: Option<&[f32; NB_FEATURES]>) -> Result<Vec<f32>> {
        if let Some(x) = center {
            for (a, b) in c2.iter_mut().zip(x) {
                *a += b;
            }
        }
        let h = self.fc1.forward(&c2)?;
        self.fc2.forward(&h)
    }
}

/// Window around frame `t` of a sequence, padded with `None`.
pub fn window_at(inputs: &[[f32; NB_FEATURES]], t: usize) -> FeatureWindow<'_> {
    std::array::from_fn(|k| {
        let i = t as isize + k as isize - 2;
        (i >= 0 && (i as usize) < inputs.len()).then(|| &inputs[i as usize])
    })
}
