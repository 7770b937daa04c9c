use super::{sigmoid, tanh, BlockSparseMatrix, DenseMatrix};
use crate::error::{Error, Result};

/// GRU gates in serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Update = 0,
    Reset = 1,
    Candidate = 2,
}

pub const GATES: [Gate; 3] = [Gate::Update, Gate::Reset, Gate::Candidate];

impl Gate {
    pub fn tag(self) -> &'static str {
        match self {
            Gate::Update => "u",
            Gate::Reset => "r",
            Gate::Candidate => "h",
        }
    }
}

/// Recurrent weight matrix, dense or block-sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Recurrent {
    Dense(DenseMatrix),
    Sparse(BlockSparseMatrix),
}

impl Recurrent {
    pub fn rows(&self) -> usize {
        match self {
            Recurrent::Dense(m) => m.rows(),
            Recurrent::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Recurrent::Dense(m) => m.cols(),
            Recurrent::Sparse(m) => m.cols(),
        }
    }

    pub fn nonzeros(&self) -> usize {
        match self {
            Recurrent::Dense(m) => m.rows() * m.cols(),
            Recurrent::Sparse(m) => m.nonzeros(),
        }
    }

    #[inline]
    pub fn gemv_into(&self, x: &[f32], y: &mut [f32]) -> Result<()> {
        match self {
            Recurrent::Dense(m) => m.gemv_into(x, y),
            Recurrent::Sparse(m) => m.gemv_into(x, y),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Recurrent::Dense(m) => m.clone(),
            Recurrent::Sparse(m) => m.densify(),
        }
    }
}

/// Weights of one GRU layer, gates ordered (u, r, h).
///
/// `input` holds the U matrices; it is `None` when every non-recurrent
/// contribution is supplied precomputed (folded embeddings, cached
/// conditioning terms).
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub recurrent: [Recurrent; 3],
    pub input: Option<[DenseMatrix; 3]>,
    pub bias: [Vec<f32>; 3],
}

/// Per-gate work buffers for [`GruParams::step_in_place`].
#[derive(Debug, Clone)]
pub struct GruScratch {
    rec: [Vec<f32>; 3],
}

impl GruScratch {
    pub fn new(hidden: usize) -> Self {
        Self {
            rec: std::array::from_fn(|_| vec![0.0; hidden]),
        }
    }
}

impl GruParams {
    pub fn new(recurrent: [Recurrent; 3], input: Option<[DenseMatrix; 3]>, bias: [Vec<f32>; 3]) -> Result<Self> {
        let n = recurrent[0].rows();
        for g in 0..3 {
            if recurrent[g].rows() != n || recurrent[g].cols() != n {
                return Err(Error::dim("GRU recurrent matrix", n, recurrent[g].cols()));
            }
            if bias[g].len() != n {
                return Err(Error::dim("GRU bias", n, bias[g].len()));
            }
        }
        if let Some(u) = &input {
            let cols = u[0].cols();
            for m in u {
                if m.rows() != n {
                    return Err(Error::dim("GRU input matrix rows", n, m.rows()));
                }
                if m.cols() != cols {
                    return Err(Error::dim("GRU input matrix cols", cols, m.cols()));
                }
            }
        }
        Ok(Self {
            recurrent,
            input,
            bias,
        })
    }

    pub fn hidden(&self) -> usize {
        self.recurrent[0].rows()
    }

    pub fn input_size(&self) -> Option<usize> {
        self.input.as_ref().map(|u| u[0].cols())
    }

    /// U^(g)·x for each gate.
    pub fn input_terms(&self, x: &[f32]) -> Result<[Vec<f32>; 3]> {
        let u = self.input.as_ref().ok_or(Error::InvalidValue {
            what: "GRU input",
            detail: "layer has no input matrices".into(),
        })?;
        Ok([u[0].gemv(x)?, u[1].gemv(x)?, u[2].gemv(x)?])
    }

    /// One step given the summed non-recurrent term of each gate:
    ///
    /// u = σ(W_u h + i_u + b_u), r = σ(W_r h + i_r + b_r),
    /// h̃ = tanh(r ∘ (W_h h) + i_h + b_h), h' = u ∘ h + (1 − u) ∘ h̃.
    pub fn step(&self, h_prev: &[f32], gate_inputs: [&[f32]; 3]) -> Result<Vec<f32>> {
        let mut h = h_prev.to_vec();
        self.step_in_place(&mut h, gate_inputs, &mut GruScratch::new(self.hidden()))?;
        Ok(h)
    }

    /// Step with explicit input `x`, i.e. gate inputs U^(g)·x.
    pub fn step_with_input(&self, h_prev: &[f32], x: &[f32]) -> Result<Vec<f32>> {
        let t = self.input_terms(x)?;
        self.step(h_prev, [&t[0], &t[1], &t[2]])
    }

    pub fn step_in_place(&self, h: &mut [f32], gate_inputs: [&[f32]; 3], scratch: &mut GruScratch) -> Result<()> {
        let n = self.hidden();
        if h.len() != n {
            return Err(Error::dim("GRU state", n, h.len()));
        }
        for inp in gate_inputs {
            if inp.len() != n {
                return Err(Error::dim("GRU gate input", n, inp.len()));
            }
        }
        for g in 0..3 {
            self.recurrent[g].gemv_into(h, &mut scratch.rec[g])?;
        }
        let [ru, rr, rh] = &scratch.rec;
        let [iu, ir, ih] = gate_inputs;
        let [bu, br, bh] = &self.bias;
        for i in 0..n {
            let u = sigmoid(ru[i] + iu[i] + bu[i]);
            let r = sigmoid(rr[i] + ir[i] + br[i]);
            let cand = tanh(r * rh[i] + ih[i] + bh[i]);
            h[i] = u * h[i] + (1.0 - u) * cand;
        }
        Ok(())
    }
}
