use super::{tanh, DenseMatrix};
use crate::error::{Error, Result};

/// Fully-connected layer with tanh activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DenseMatrix,
    pub bias: Vec<f32>,
}

impl Dense {
    pub fn new(weights: DenseMatrix, bias: Vec<f32>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::dim("Dense bias", weights.rows(), bias.len()));
        }
        Ok(Self { weights, bias })
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        let mut y = self.bias.clone();
        self.weights.gemv_acc(x, &mut y)?;
        y.iter_mut().for_each(|v| *v = tanh(*v));
        Ok(y)
    }
}

/// Kernel-size-3 convolution over time with tanh activation.
/// `taps[k]` multiplies the frame at offset `k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub taps: [DenseMatrix; 3],
    pub bias: Vec<f32>,
}

impl Conv1d {
    pub fn new(taps: [DenseMatrix; 3], bias: Vec<f32>) -> Result<Self> {
        let (rows, cols) = (taps[0].rows(), taps[0].cols());
        for t in &taps {
            if t.rows() != rows || t.cols() != cols {
                return Err(Error::dim("Conv1d tap shape", rows * cols, t.rows() * t.cols()));
            }
        }
        if bias.len() != rows {
            return Err(Error::dim("Conv1d bias", rows, bias.len()));
        }
        Ok(Self { taps, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.taps[0].cols()
    }

    pub fn out_dim(&self) -> usize {
        self.taps[0].rows()
    }

    /// Output for one position from its three input frames; `None` is a
    /// zero frame.
    pub fn forward_window(&self, window: [Option<&[f32]>; 3]) -> Result<Vec<f32>> {
        let mut y = self.bias.clone();
        for (tap, frame) in self.taps.iter().zip(window) {
            if let Some(x) = frame {
                tap.gemv_acc(x, &mut y)?;
            }
        }
        y.iter_mut().for_each(|v| *v = tanh(*v));
        Ok(y)
    }
}

/// Output at position `t` of a sequence zero-padded on both sides.
pub fn conv1d_3<F: AsRef<[f32]>>(layer: &Conv1d, frames: &[F], t: isize) -> Result<Vec<f32>> {
    let get = |i: isize| {
        (i >= 0 && (i as usize) < frames.len()).then(|| frames[i as usize].as_ref())
    };
    layer.forward_window([get(t - 1), get(t), get(t + 1)])
}

/// a₁ ∘ tanh(W₁x + b₁) + a₂ ∘ tanh(W₂x + b₂).
#[derive(Debug, Clone, PartialEq)]
pub struct DualFcParams {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b1: Vec<f32>,
    pub b2: Vec<f32>,
    pub a1: Vec<f32>,
    pub a2: Vec<f32>,
}

impl DualFcParams {
    pub fn new(
        w1: DenseMatrix,
        w2: DenseMatrix,
        b1: Vec<f32>,
        b2: Vec<f32>,
        a1: Vec<f32>,
        a2: Vec<f32>,
    ) -> Result<Self> {
        let n = w1.rows();
        if w2.rows() != n || w2.cols() != w1.cols() {
            return Err(Error::dim("DualFC W2 shape", n * w1.cols(), w2.rows() * w2.cols()));
        }
        for (v, ctx) in [(&b1, "DualFC b1"), (&b2, "DualFC b2"), (&a1, "DualFC a1"), (&a2, "DualFC a2")] {
            if v.len() != n {
                return Err(Error::dim(ctx, n, v.len()));
            }
        }
        Ok(Self {
            w1,
            w2,
            b1,
            b2,
            a1,
            a2,
        })
    }

    pub fn outputs(&self) -> usize {
        self.w1.rows()
    }

    pub fn inputs(&self) -> usize {
        self.w1.cols()
    }

    /// `tmp` must have `outputs()` entries.
    pub fn forward_into(&self, x: &[f32], out: &mut [f32], tmp: &mut [f32]) -> Result<()> {
        if out.len() != self.outputs() || tmp.len() != self.outputs() {
            return Err(Error::dim("DualFC output", self.outputs(), out.len()));
        }
        self.w1.gemv_into(x, out)?;
        self.w2.gemv_into(x, tmp)?;
        let params = self.a1.iter().zip(&self.a2).zip(self.b1.iter().zip(&self.b2));
        for ((o, t), ((a1, a2), (b1, b2))) in out.iter_mut().zip(tmp.iter()).zip(params) {
            *o = a1 * tanh(*o + b1) + a2 * tanh(t + b2);
        }
        Ok(())
    }
}

pub fn dual_fc(p: &DualFcParams, x: &[f32]) -> Result<Vec<f32>> {
    let mut out = vec![0.0; p.outputs()];
    let mut tmp = vec![0.0; p.outputs()];
    p.forward_into(x, &mut out, &mut tmp)?;
    Ok(out)
}
