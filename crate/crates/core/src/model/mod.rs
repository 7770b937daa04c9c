//! Network topology, parameter containers and the weight file.

mod complexity;
mod frame_net;
mod sample_net;
pub mod weights;

pub use complexity::{complexity_gflops, flops_per_sample, OVERHEAD_GFLOPS};
pub use frame_net::{window_at, FeatureWindow, FrameRateParams, COND_SIZE};
pub use sample_net::{
    fold_embeddings, ConditioningContribution, EmbeddedInput, FoldedEmbeddings, SampleRateParams, SampleRateState,
    EMBEDDED_INPUTS, LEVELS,
};
pub use weights::{Tensor, WeightFile, FLAG_FOLDED, FORMAT_VERSION};

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::NB_FEATURES;
use crate::error::{Error, Result, WeightError};
use crate::nn::{BlockSparseMatrix, Conv1d, Dense, DenseMatrix, DualFcParams, GruParams, Recurrent, BLOCK_HEIGHT};

/// Width of both convolutions and both FC layers of the frame-rate net.
pub const FRAME_HIDDEN: usize = 128;

const GATE_TAGS: [&str; 3] = ["u", "r", "h"];

/// Sizes of a model to build from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub n_a: usize,
    pub n_b: usize,
    /// Target GRU_A recurrent density, diagonal included.
    pub density: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_a: 384,
            n_b: 16,
            density: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || !self.n_a.is_multiple_of(BLOCK_HEIGHT) {
            return Err(Error::InvalidValue {
                what: "N_A",
                detail: format!("{} is not a positive multiple of {BLOCK_HEIGHT}", self.n_a),
            });
        }
        if self.n_b == 0 {
            return Err(Error::InvalidValue {
                what: "N_B",
                detail: "must be positive".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidValue {
                what: "density",
                detail: format!("{} is outside [0, 1]", self.density),
            });
        }
        Ok(())
    }
}

/// A loaded model. Immutable; share it between streams by reference or
/// `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub frame: FrameRateParams,
    pub sample: SampleRateParams,
}

impl Model {
    pub fn new(frame: FrameRateParams, sample: SampleRateParams) -> Self {
        Self { frame, sample }
    }

    /// Random weights, for benchmarks and tests. Scales keep activations
    /// out of saturation and the output distribution moderately peaked.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let ModelConfig { n_a, n_b, density } = config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let vec = |n: usize, s: f32, rng: &mut ChaCha8Rng| -> Vec<f32> { (0..n).map(|_| rng.random_range(-s..=s)).collect() };
        let fan = |n: usize| 1.0 / (n as f32).sqrt();

        let conv = |i: usize, o: usize, rng: &mut ChaCha8Rng| {
            let taps = std::array::from_fn(|_| DenseMatrix::random(o, i, fan(3 * i), rng));
            Conv1d::new(taps, vec(o, 0.1, rng))
        };
        let dense = |i: usize, o: usize, rng: &mut ChaCha8Rng| {
            let w = DenseMatrix::random(o, i, fan(i), rng);
            Dense::new(w, vec(o, 0.1, rng))
        };
        let frame = FrameRateParams::new(
            conv(NB_FEATURES, FRAME_HIDDEN, rng)?,
            conv(FRAME_HIDDEN, FRAME_HIDDEN, rng)?,
            dense(FRAME_HIDDEN, FRAME_HIDDEN, rng)?,
            dense(FRAME_HIDDEN, COND_SIZE, rng)?,
        )?;

        let rec_scale = fan(((density * n_a as f64).max(1.0)) as usize);
        let recurrent: [Recurrent; 3] = [
            Recurrent::Sparse(BlockSparseMatrix::random(n_a, n_a, density, rec_scale, rng)?),
            Recurrent::Sparse(BlockSparseMatrix::random(n_a, n_a, density, rec_scale, rng)?),
            Recurrent::Sparse(BlockSparseMatrix::random(n_a, n_a, density, rec_scale, rng)?),
        ];
        let gru_a = GruParams::new(recurrent, None, std::array::from_fn(|_| vec(n_a, 0.1, rng)))?;
        let tables = std::array::from_fn(|_| std::array::from_fn(|_| vec(LEVELS * n_a, 0.3, rng)));
        let folded = FoldedEmbeddings::new(n_a, tables)?;
        let cond = std::array::from_fn(|_| DenseMatrix::random(n_a, COND_SIZE, fan(COND_SIZE), rng));

        let gru_b = GruParams::new(
            std::array::from_fn(|_| Recurrent::Dense(DenseMatrix::random(n_b, n_b, fan(n_b), rng))),
            Some(std::array::from_fn(|_| DenseMatrix::random(n_b, n_a, fan(n_a), rng))),
            std::array::from_fn(|_| vec(n_b, 0.1, rng)),
        )?;
        let dual_fc = DualFcParams::new(
            DenseMatrix::random(LEVELS, n_b, 2.0 * fan(n_b), rng),
            DenseMatrix::random(LEVELS, n_b, 2.0 * fan(n_b), rng),
            vec(LEVELS, 0.5, rng),
            vec(LEVELS, 0.5, rng),
            vec(LEVELS, 3.0, rng),
            vec(LEVELS, 3.0, rng),
        )?;
        let sample = SampleRateParams::new(gru_a, folded, cond, gru_b, dual_fc)?;
        Ok(Self { frame, sample })
    }

    /// Every weight and bias zero. The GRU_A recurrent matrices hold only
    /// their (zero) diagonals.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let ModelConfig { n_a, n_b, .. } = config;
        let conv = |i: usize, o: usize| Conv1d::new(std::array::from_fn(|_| DenseMatrix::zeros(o, i)), vec![0.0; o]);
        let dense = |i: usize, o: usize| Dense::new(DenseMatrix::zeros(o, i), vec![0.0; o]);
        let frame = FrameRateParams::new(
            conv(NB_FEATURES, FRAME_HIDDEN)?,
            conv(FRAME_HIDDEN, FRAME_HIDDEN)?,
            dense(FRAME_HIDDEN, FRAME_HIDDEN)?,
            dense(FRAME_HIDDEN, COND_SIZE)?,
        )?;
        let gru_a = GruParams::new(
            std::array::from_fn(|_| {
                Recurrent::Sparse(BlockSparseMatrix::diagonal_only(n_a, n_a, vec![0.0; n_a]).expect("valid geometry"))
            }),
            None,
            std::array::from_fn(|_| vec![0.0; n_a]),
        )?;
        let folded = FoldedEmbeddings::new(n_a, std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; LEVELS * n_a])))?;
        let gru_b = GruParams::new(
            std::array::from_fn(|_| Recurrent::Dense(DenseMatrix::zeros(n_b, n_b))),
            Some(std::array::from_fn(|_| DenseMatrix::zeros(n_b, n_a))),
            std::array::from_fn(|_| vec![0.0; n_b]),
        )?;
        let z = || vec![0.0; LEVELS];
        let dual_fc = DualFcParams::new(DenseMatrix::zeros(LEVELS, n_b), DenseMatrix::zeros(LEVELS, n_b), z(), z(), z(), z())?;
        let sample = SampleRateParams::new(
            gru_a,
            folded,
            std::array::from_fn(|_| DenseMatrix::zeros(n_a, COND_SIZE)),
            gru_b,
            dual_fc,
        )?;
        Ok(Self { frame, sample })
    }

    pub fn n_a(&self) -> usize {
        self.sample.n_a()
    }

    pub fn n_b(&self) -> usize {
        self.sample.n_b()
    }

    /// Stored GRU_A recurrent weights (blocks plus diagonals) over the
    /// dense element count, across all three gates.
    pub fn gru_a_density(&self) -> f64 {
        let nnz: usize = self.sample.gru_a.recurrent.iter().map(Recurrent::nonzeros).sum();
        nnz as f64 / (3 * self.n_a() * self.n_a()) as f64
    }

    /// Multiply-adds per sample in the sample-rate network, counted from
    /// the stored weights, times two. Embedding lookups, conditioning terms
    /// and biases are excluded, as is the per-frame work.
    pub fn flops_per_sample(&self) -> f64 {
        let s = &self.sample;
        let rec_a: usize = s.gru_a.recurrent.iter().map(Recurrent::nonzeros).sum();
        let (n_a, n_b) = (s.n_a(), s.n_b());
        let gru_b = 3 * n_b * n_a + s.gru_b.recurrent.iter().map(Recurrent::nonzeros).sum::<usize>();
        let dual = 2 * s.dual_fc.outputs() * s.dual_fc.inputs();
        2.0 * (rec_a + gru_b + dual) as f64
    }

    pub fn to_weight_file(&self) -> WeightFile {
        let mut f = WeightFile::new(FLAG_FOLDED);
        let fr = &self.frame;
        for (name, conv) in [("frame.conv1", &fr.conv1), ("frame.conv2", &fr.conv2)] {
            let (o, i) = (conv.out_dim(), conv.in_dim());
            let values = conv.taps.iter().flat_map(|t| t.values().iter().copied()).collect();
            f.push(format!("{name}.weight"), Tensor::dense(vec![3, o, i], values));
            f.push(format!("{name}.bias"), Tensor::vector(&conv.bias));
        }
        for (name, d) in [("frame.fc1", &fr.fc1), ("frame.fc2", &fr.fc2)] {
            f.push(format!("{name}.weight"), Tensor::matrix(&d.weights));
            f.push(format!("{name}.bias"), Tensor::vector(&d.bias));
        }

        let s = &self.sample;
        let n_a = s.n_a();
        for (g, tag) in GATE_TAGS.iter().enumerate() {
            f.push(format!("gru_a.cond.{tag}"), Tensor::matrix(&s.cond[g]));
        }
        for (g, tag) in GATE_TAGS.iter().enumerate() {
            for input in EMBEDDED_INPUTS {
                let t = s.folded.table(g, input).to_vec();
                f.push(format!("gru_a.embed.{tag}.{}", input.tag()), Tensor::dense(vec![LEVELS, n_a], t));
            }
        }
        for (g, tag) in GATE_TAGS.iter().enumerate() {
            f.push(format!("gru_a.recurrent.{tag}"), recurrent_tensor(&s.gru_a.recurrent[g]));
            f.push(format!("gru_a.bias.{tag}"), Tensor::vector(&s.gru_a.bias[g]));
        }
        let u_b = s.gru_b.input.as_ref().expect("GRU_B has input weights");
        for (g, tag) in GATE_TAGS.iter().enumerate() {
            f.push(format!("gru_b.input.{tag}"), Tensor::matrix(&u_b[g]));
            f.push(format!("gru_b.recurrent.{tag}"), recurrent_tensor(&s.gru_b.recurrent[g]));
            f.push(format!("gru_b.bias.{tag}"), Tensor::vector(&s.gru_b.bias[g]));
        }
        let d = &s.dual_fc;
        f.push("dual_fc.w1", Tensor::matrix(&d.w1));
        f.push("dual_fc.w2", Tensor::matrix(&d.w2));
        for (name, v) in [("b1", &d.b1), ("b2", &d.b2), ("a1", &d.a1), ("a2", &d.a2)] {
            f.push(format!("dual_fc.{name}"), Tensor::vector(v));
        }
        f
    }

    /// Builds a model from a decoded file. Files without the folded flag
    /// carry `gru_a.embedding` (256 × d) and `gru_a.input.{gate}.{s,p,e}`
    /// (N_A × d) instead of the V tables; those are folded here.
    pub fn from_weight_file(f: &WeightFile) -> Result<Self> {
        let conv = |name: &str, o: usize, i: usize| -> Result<Conv1d> {
            let w = f.dense(&format!("{name}.weight"), &[3, o, i])?;
            let taps = std::array::from_fn(|k| {
                DenseMatrix::new(o, i, w[k * o * i..(k + 1) * o * i].to_vec()).expect("sized")
            });
            Conv1d::new(taps, f.vector(&format!("{name}.bias"), o)?)
        };
        let fc_in = f.get("frame.fc1.weight")?.dims();
        let hidden = *fc_in.first().ok_or_else(|| shape("frame.fc1.weight", vec![FRAME_HIDDEN, FRAME_HIDDEN], fc_in.clone()))?;
        let conv1 = conv("frame.conv1", hidden, NB_FEATURES)?;
        let conv2 = conv("frame.conv2", hidden, hidden)?;
        let dense = |name: &str, o: usize, i: usize| -> Result<Dense> {
            Dense::new(
                f.dense_matrix(&format!("{name}.weight"), o, i)?,
                f.vector(&format!("{name}.bias"), o)?,
            )
        };
        let frame = FrameRateParams::new(
            conv1,
            conv2,
            dense("frame.fc1", hidden, hidden)?,
            dense("frame.fc2", COND_SIZE, hidden)?,
        )?;

        let n_a = f.get("gru_a.bias.u")?.dims().iter().product::<usize>();
        let n_b = f.get("gru_b.bias.u")?.dims().iter().product::<usize>();
        ModelConfig { n_a, n_b, density: 0.0 }.validate()?;

        let cond = try_gates(|tag| Ok(f.dense_matrix(&format!("gru_a.cond.{tag}"), n_a, COND_SIZE)?))?;
        let folded = if f.is_folded() {
            let mut tables: [[Vec<f32>; 3]; 3] = Default::default();
            for (g, tag) in GATE_TAGS.iter().enumerate() {
                for input in EMBEDDED_INPUTS {
                    let name = format!("gru_a.embed.{tag}.{}", input.tag());
                    tables[g][input as usize] = f.dense(&name, &[LEVELS, n_a])?.to_vec();
                }
            }
            FoldedEmbeddings::new(n_a, tables)?
        } else {
            let e_dims = f.get("gru_a.embedding")?.dims();
            let d = match e_dims.as_slice() {
                [LEVELS, d] => *d,
                _ => return Err(shape("gru_a.embedding", vec![LEVELS, 0], e_dims).into()),
            };
            let e = f.dense_matrix("gru_a.embedding", LEVELS, d)?;
            let mut subs: [[DenseMatrix; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| DenseMatrix::zeros(0, 0)));
            for (g, tag) in GATE_TAGS.iter().enumerate() {
                for input in EMBEDDED_INPUTS {
                    subs[g][input as usize] = f.dense_matrix(&format!("gru_a.input.{tag}.{}", input.tag()), n_a, d)?;
                }
            }
            fold_embeddings(&e, &subs)?
        };
        let rec_a = try_gates(|tag| recurrent_from(f, &format!("gru_a.recurrent.{tag}"), n_a, n_a))?;
        let bias_a = try_gates(|tag| Ok(f.vector(&format!("gru_a.bias.{tag}"), n_a)?))?;
        let gru_a = GruParams::new(rec_a, None, bias_a)?;

        let u_b = try_gates(|tag| Ok(f.dense_matrix(&format!("gru_b.input.{tag}"), n_b, n_a)?))?;
        let rec_b = try_gates(|tag| recurrent_from(f, &format!("gru_b.recurrent.{tag}"), n_b, n_b))?;
        let bias_b = try_gates(|tag| Ok(f.vector(&format!("gru_b.bias.{tag}"), n_b)?))?;
        let gru_b = GruParams::new(rec_b, Some(u_b), bias_b)?;

        let dual_fc = DualFcParams::new(
            f.dense_matrix("dual_fc.w1", LEVELS, n_b)?,
            f.dense_matrix("dual_fc.w2", LEVELS, n_b)?,
            f.vector("dual_fc.b1", LEVELS)?,
            f.vector("dual_fc.b2", LEVELS)?,
            f.vector("dual_fc.a1", LEVELS)?,
            f.vector("dual_fc.a2", LEVELS)?,
        )?;
        let sample = SampleRateParams::new(gru_a, folded, cond, gru_b, dual_fc)?;
        Ok(Self { frame, sample })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_weight_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = WeightFile::load(path)?;
        Self::from_weight_file(&f)
    }

    /// Conditioning vector f for the center of `window`.
    pub fn conditioning(&self, window: &FeatureWindow) -> Result<Vec<f32>> {
        self.frame.forward(window)
    }
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Model> {
    Model::load(path)
}

/// One line per tensor: name, kind, shape, density.
pub fn dump(f: &WeightFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "format version {FORMAT_VERSION}, flags {:#x}{}, {} tensors",
        f.flags,
        if f.is_folded() { " (folded)" } else { "" },
        f.tensors.len()
    );
    let mut total = 0usize;
    for (name, t) in &f.tensors {
        let dims = t.dims().iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        total += t.parameter_count();
        let _ = write!(out, "{name:<24} {:<12} {dims:<12} density {:.4}", t.kind(), t.density());
        if let Tensor::Sparse(m) = t {
            let _ = write!(out, "  blocks {}", m.block_count());
        }
        out.push('\n');
    }
    let _ = writeln!(out, "stored parameters: {total}");
    out
}

fn recurrent_tensor(r: &Recurrent) -> Tensor {
    match r {
        Recurrent::Dense(m) => Tensor::matrix(m),
        Recurrent::Sparse(m) => Tensor::Sparse(m.clone()),
    }
}

fn recurrent_from(f: &WeightFile, name: &str, rows: usize, cols: usize) -> Result<Recurrent> {
    match f.get(name)? {
        Tensor::Sparse(m) if m.rows() == rows && m.cols() == cols => Ok(Recurrent::Sparse(m.clone())),
        Tensor::Sparse(m) => Err(shape(name, vec![rows, cols], vec![m.rows(), m.cols()]).into()),
        Tensor::Dense { .. } => Ok(Recurrent::Dense(f.dense_matrix(name, rows, cols)?)),
    }
}

fn try_gates<T>(mut f: impl FnMut(&str) -> Result<T>) -> Result<[T; 3]> {
    let [a, b, c] = GATE_TAGS;
    Ok([f(a)?, f(b)?, f(c)?])
}

fn shape(record: &str, expected: Vec<usize>, found: Vec<usize>) -> WeightError {
    WeightError::Shape {
        record: record.to_string(),
        expected,
        found,
    }
}
