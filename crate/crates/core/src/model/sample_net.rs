//! Sample-rate network: sparse GRU_A fed by folded embedding lookups and
//! cached per-frame conditioning terms, dense GRU_B, DualFC, softmax.

use super::frame_net::COND_SIZE;
use crate::dsp::MuLawLevel;
use crate::error::{Error, Result};
use crate::nn::{softmax, DenseMatrix, DualFcParams, GruParams, GruScratch};
use crate::sampler::ProbDist;

pub const LEVELS: usize = MuLawLevel::COUNT;

/// Sample-domain inputs that enter GRU_A through an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddedInput {
    /// Previous signal sample s_{t−1}.
    Signal = 0,
    /// Current prediction p_t.
    Prediction = 1,
    /// Previous excitation e_{t−1}.
    Excitation = 2,
}

pub const EMBEDDED_INPUTS: [EmbeddedInput; 3] = [
    EmbeddedInput::Signal,
    EmbeddedInput::Prediction,
    EmbeddedInput::Excitation,
];

impl EmbeddedInput {
    pub fn tag(self) -> &'static str {
        match self {
            EmbeddedInput::Signal => "s",
            EmbeddedInput::Prediction => "p",
            EmbeddedInput::Excitation => "e",
        }
    }
}

/// V^(g,i) = U^(g,i)·E for each gate g and embedded input i, stored level
/// major so one lookup is a contiguous slice of `n_a` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedEmbeddings {
    n_a: usize,
    tables: [[Vec<f32>; 3]; 3],
}

impl FoldedEmbeddings {
    /// `tables[gate][input]` has `256 · n_a` entries, level major.
    pub fn new(n_a: usize, tables: [[Vec<f32>; 3]; 3]) -> Result<Self> {
        for row in &tables {
            for t in row {
                if t.len() != LEVELS * n_a {
                    return Err(Error::dim("folded embedding table", LEVELS * n_a, t.len()));
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidValue {
                        what: "folded embedding",
                        detail: "non-finite entry".into(),
                    });
                }
            }
        }
        Ok(Self { n_a, tables })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn table(&self, gate: usize, input: EmbeddedInput) -> &[f32] {
        &self.tables[gate][input as usize]
    }

    /// Column `level` of V^(gate, input).
    #[inline]
    pub fn lookup(&self, gate: usize, input: EmbeddedInput, level: MuLawLevel) -> &[f32] {
        let start = level.index() * self.n_a;
        &self.tables[gate][input as usize][start..start + self.n_a]
    }
}

/// Precomputes V^(g,i) = U^(g,i)·E.
///
/// `embedding` is 256 × d (row j embeds level j); `input_sub[g][i]` is the
/// N_A × d block of gate g's input matrix acting on embedded input i.
pub fn fold_embeddings(embedding: &DenseMatrix, input_sub: &[[DenseMatrix; 3]; 3]) -> Result<FoldedEmbeddings> {
    if embedding.rows() != LEVELS {
        return Err(Error::dim("embedding rows", LEVELS, embedding.rows()));
    }
    let n_a = input_sub[0][0].rows();
    let mut tables: [[Vec<f32>; 3]; 3] = Default::default();
    for (g, row) in input_sub.iter().enumerate() {
        for (i, u) in row.iter().enumerate() {
            if u.rows() != n_a {
                return Err(Error::dim("embedding input block rows", n_a, u.rows()));
            }
            if u.cols() != embedding.cols() {
                return Err(Error::dim("embedding input block cols", embedding.cols(), u.cols()));
            }
            let mut t = vec![0.0f32; LEVELS * n_a];
            for (level, out) in t.chunks_exact_mut(n_a).enumerate() {
                u.gemv_into(embedding.row(level), out)?;
            }
            tables[g][i] = t;
        }
    }
    FoldedEmbeddings::new(n_a, tables)
}

/// g^(·) = U^(·)·f, computed once per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningContribution {
    pub g: [Vec<f32>; 3],
}

impl ConditioningContribution {
    pub fn zeros(n_a: usize) -> Self {
        Self {
            g: std::array::from_fn(|_| vec![0.0; n_a]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRateParams {
    /// Block-sparse recurrent weights; no input matrices.
    pub gru_a: GruParams,
    pub folded: FoldedEmbeddings,
    /// U^(g) restricted to the conditioning vector, N_A × 128 each.
    pub cond: [DenseMatrix; 3],
    /// Dense, input is GRU_A's state.
    pub gru_b: GruParams,
    pub dual_fc: DualFcParams,
}

impl SampleRateParams {
    pub fn new(
        gru_a: GruParams,
        folded: FoldedEmbeddings,
        cond: [DenseMatrix; 3],
        gru_b: GruParams,
        dual_fc: DualFcParams,
    ) -> Result<Self> {
        let n_a = gru_a.hidden();
        if gru_a.input.is_some() {
            return Err(Error::InvalidValue {
                what: "GRU_A",
                detail: "input matrices must be folded".into(),
            });
        }
        if folded.n_a() != n_a {
            return Err(Error::dim("folded embeddings height", n_a, folded.n_a()));
        }
        for c in &cond {
            if c.rows() != n_a || c.cols() != COND_SIZE {
                return Err(Error::dim("conditioning matrix", n_a * COND_SIZE, c.rows() * c.cols()));
            }
        }
        if gru_b.input_size() != Some(n_a) {
            return Err(Error::dim("GRU_B input", n_a, gru_b.input_size().unwrap_or(0)));
        }
        if dual_fc.inputs() != gru_b.hidden() {
            return Err(Error::dim("DualFC input", gru_b.hidden(), dual_fc.inputs()));
        }
        if dual_fc.outputs() != LEVELS {
            return Err(Error::dim("DualFC output", LEVELS, dual_fc.outputs()));
        }
        Ok(Self {
            gru_a,
            folded,
            cond,
            gru_b,
            dual_fc,
        })
    }

    pub fn n_a(&self) -> usize {
        self.gru_a.hidden()
    }

    pub fn n_b(&self) -> usize {
        self.gru_b.hidden()
    }

    pub fn frame_setup(&self, f: &[f32]) -> Result<ConditioningContribution> {
        let mut g = ConditioningContribution::zeros(self.n_a());
        self.frame_setup_into(f, &mut g)?;
        Ok(g)
    }

    pub fn frame_setup_into(&self, f: &[f32], out: &mut ConditioningContribution) -> Result<()> {
        if f.len() != COND_SIZE {
            return Err(Error::dim("conditioning vector", COND_SIZE, f.len()));
        }
        for (m, g) in self.cond.iter().zip(out.g.iter_mut()) {
            m.gemv_into(f, g)?;
        }
        Ok(())
    }

    /// Advances both GRUs and returns the 256 output logits.
    pub fn logits<'s>(
        &self,
        state: &'s mut SampleRateState,
        s_prev: MuLawLevel,
        p_cur: MuLawLevel,
        e_prev: MuLawLevel,
        cond: &ConditioningContribution,
    ) -> Result<&'s [f32]> {
        let n_a = self.n_a();
        if state.h_a.len() != n_a || state.h_b.len() != self.n_b() {
            return Err(Error::dim("sample-rate state", n_a, state.h_a.len()));
        }
        for (gate, inp) in state.in_a.iter_mut().enumerate() {
            let vs = self.folded.lookup(gate, EmbeddedInput::Signal, s_prev);
            let vp = self.folded.lookup(gate, EmbeddedInput::Prediction, p_cur);
            let ve = self.folded.lookup(gate, EmbeddedInput::Excitation, e_prev);
            let g = &cond.g[gate];
            for i in 0..n_a {
                inp[i] = vs[i] + vp[i] + ve[i] + g[i];
            }
        }
        let [ia, ib, ic] = &state.in_a;
        self.gru_a
            .step_in_place(&mut state.h_a, [ia, ib, ic], &mut state.scratch_a)?;

        let u_b = self.gru_b.input.as_ref().expect("validated at construction");
        for (m, inp) in u_b.iter().zip(state.in_b.iter_mut()) {
            m.gemv_into(&state.h_a, inp)?;
        }
        let [ja, jb, jc] = &state.in_b;
        self.gru_b
            .step_in_place(&mut state.h_b, [ja, jb, jc], &mut state.scratch_b)?;

        self.dual_fc
            .forward_into(&state.h_b, &mut state.logits, &mut state.tmp)?;
        Ok(&state.logits)
    }

    /// P(e_t) for one sample step.
    pub fn step(
        &self,
        state: &mut SampleRateState,
        s_prev: MuLawLevel,
        p_cur: MuLawLevel,
        e_prev: MuLawLevel,
        cond: &ConditioningContribution,
    ) -> Result<ProbDist> {
        let p = softmax(self.logits(state, s_prev, p_cur, e_prev, cond)?);
        debug_assert!(p.is_normalized());
        Ok(p)
    }
}

/// Recurrent states of both GRUs plus work buffers. Starts at zero.
#[derive(Debug, Clone)]
pub struct SampleRateState {
    pub h_a: Vec<f32>,
    pub h_b: Vec<f32>,
    in_a: [Vec<f32>; 3],
    in_b: [Vec<f32>; 3],
    scratch_a: GruScratch,
    scratch_b: GruScratch,
    logits: Vec<f32>,
    tmp: Vec<f32>,
}

impl SampleRateState {
    pub fn new(params: &SampleRateParams) -> Self {
        let (n_a, n_b) = (params.n_a(), params.n_b());
        Self {
            h_a: vec![0.0; n_a],
            h_b: vec![0.0; n_b],
            in_a: std::array::from_fn(|_| vec![0.0; n_a]),
            in_b: std::array::from_fn(|_| vec![0.0; n_b]),
            scratch_a: GruScratch::new(n_a),
            scratch_b: GruScratch::new(n_b),
            logits: vec![0.0; LEVELS],
            tmp: vec![0.0; LEVELS],
        }
    }

    pub fn reset(&mut self) {
        self.h_a.fill(0.0);
        self.h_b.fill(0.0);
    }
}
