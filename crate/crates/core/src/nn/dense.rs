use rand::Rng;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dim("DenseMatrix values", rows * cols, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue {
                what: "DenseMatrix",
                detail: "non-finite entry".into(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self { rows, cols, values }
    }

    /// Uniform entries in ±scale.
    pub fn random(rows: usize, cols: usize, scale: f32, rng: &mut impl Rng) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.values[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// y = M·x.
    pub fn gemv(&self, x: &[f32]) -> Result<Vec<f32>> {
        let mut y = vec![0.0; self.rows];
        self.gemv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn gemv_into(&self, x: &[f32], y: &mut [f32]) -> Result<()> {
        self.check(x, y)?;
        for (yi, row) in y.iter_mut().zip(self.values.chunks_exact(self.cols.max(1))) {
            *yi = dot(row, x);
        }
        if self.cols == 0 {
            y.fill(0.0);
        }
        Ok(())
    }

    /// y += M·x.
    pub fn gemv_acc(&self, x: &[f32], y: &mut [f32]) -> Result<()> {
        self.check(x, y)?;
        if self.cols == 0 {
            return Ok(());
        }
        for (yi, row) in y.iter_mut().zip(self.values.chunks_exact(self.cols)) {
            *yi += dot(row, x);
        }
        Ok(())
    }

    fn check(&self, x: &[f32], y: &[f32]) -> Result<()> {
        if x.len() != self.cols {
            return Err(Error::dim("gemv input", self.cols, x.len()));
        }
        if y.len() != self.rows {
            return Err(Error::dim("gemv output", self.rows, y.len()));
        }
        Ok(())
    }
}

/// Eight independent accumulators so the compiler can vectorize.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
