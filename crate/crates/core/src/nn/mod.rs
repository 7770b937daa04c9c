//! Inference-only kernels: dense and 16×1 block-sparse matrix-vector
//! products, the GRU cell, 3-tap 1-D convolution, DualFC and softmax.
//! All arithmetic is f32 except softmax, which accumulates in f64.

mod activation;
mod dense;
mod gru;
mod layers;
mod sparse;

pub use activation::{sigmoid, tanh};
pub use dense::DenseMatrix;
pub use gru::{Gate, GruParams, GruScratch, Recurrent, GATES};
pub use layers::{conv1d_3, dual_fc, Conv1d, Dense, DualFcParams};
pub use sparse::{BlockSparseMatrix, BLOCK_HEIGHT};

use crate::sampler::ProbDist;

#[inline]
pub fn relu(x: f32) -> f32 {
    x.max(0.0)
}

/// Max-subtracted softmax.
pub fn softmax(x: &[f32]) -> ProbDist {
    let mut out = ProbDist::uniform(x.len().max(1));
    softmax_scaled_into(x, 1.0, &mut out);
    out
}

/// softmax(scale · x) into `out`, reusing its storage.
pub fn softmax_scaled_into(x: &[f32], scale: f64, out: &mut ProbDist) {
    let p = out.as_mut_vec();
    p.clear();
    let max = x.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let mut sum = 0.0f64;
    p.extend(x.iter().map(|&v| {
        let e = (scale * (v as f64 - max)).exp();
        sum += e;
        e
    }));
    let inv = 1.0 / sum;
    for v in p.iter_mut() {
        *v *= inv;
    }
}
