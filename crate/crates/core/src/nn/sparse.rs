//! 16×1 block-sparse matrices with a separately stored main diagonal.
//!
//! Each block covers rows `row_start..row_start + 16` of one column. The
//! diagonal is always present and blocks hold zero where they cross it, so
//! every entry has exactly one owner.

use rand::seq::index::sample;
use rand::Rng;

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const BLOCK_HEIGHT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    rows: usize,
    cols: usize,
    /// `(row_start, col)` per block, sorted by row group then column.
    index: Vec<(u32, u32)>,
    /// `BLOCK_HEIGHT` values per block.
    values: Vec<f32>,
    diagonal: Vec<f32>,
}

impl BlockSparseMatrix {
    /// Blocks may arrive in any order; they are sorted on construction.
    pub fn new(
        rows: usize,
        cols: usize,
        index: Vec<(u32, u32)>,
        values: Vec<f32>,
        diagonal: Vec<f32>,
    ) -> Result<Self> {
        let layout = |msg: String| Err(Error::SparseLayout(msg));
        if !rows.is_multiple_of(BLOCK_HEIGHT) {
            return layout(format!("rows {rows} not a multiple of {BLOCK_HEIGHT}"));
        }
        if values.len() != index.len() * BLOCK_HEIGHT {
            return layout(format!(
                "{} values for {} blocks",
                values.len(),
                index.len()
            ));
        }
        if diagonal.len() != rows.min(cols) {
            return layout(format!(
                "diagonal has {} entries, expected {}",
                diagonal.len(),
                rows.min(cols)
            ));
        }
        if values.iter().chain(&diagonal).any(|v| !v.is_finite()) {
            return layout("non-finite value".into());
        }

        let mut order: Vec<usize> = (0..index.len()).collect();
        order.sort_by_key(|&b| index[b]);
        let mut sorted_index = Vec::with_capacity(index.len());
        let mut sorted_values = Vec::with_capacity(values.len());
        for &b in &order {
            let (r0, c) = index[b];
            let (r0u, cu) = (r0 as usize, c as usize);
            if r0u % BLOCK_HEIGHT != 0 {
                return layout(format!("block row start {r0} not a multiple of {BLOCK_HEIGHT}"));
            }
            if r0u + BLOCK_HEIGHT > rows || cu >= cols {
                return layout(format!("block ({r0}, {c}) out of bounds for {rows}x{cols}"));
            }
            if sorted_index.last() == Some(&(r0, c)) {
                return layout(format!("duplicate block ({r0}, {c})"));
            }
            let vals = &values[b * BLOCK_HEIGHT..(b + 1) * BLOCK_HEIGHT];
            if (r0u..r0u + BLOCK_HEIGHT).contains(&cu) && vals[cu - r0u] != 0.0 {
                return layout(format!(
                    "block ({r0}, {c}) has a nonzero entry on the diagonal"
                ));
            }
            sorted_index.push((r0, c));
            sorted_values.extend_from_slice(vals);
        }
        Ok(Self {
            rows,
            cols,
            index: sorted_index,
            values: sorted_values,
            diagonal,
        })
    }

    /// Diagonal only, no blocks.
    pub fn diagonal_only(rows: usize, cols: usize, diagonal: Vec<f32>) -> Result<Self> {
        Self::new(rows, cols, Vec::new(), Vec::new(), diagonal)
    }

    /// Keeps the blocks of `dense` selected by `keep(row_start, col)` plus
    /// the full diagonal. The diagonal is taken out of the blocks first.
    pub fn from_dense(dense: &DenseMatrix, mut keep: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let (rows, cols) = (dense.rows(), dense.cols());
        let diagonal: Vec<f32> = (0..rows.min(cols)).map(|i| dense.get(i, i)).collect();
        let mut index = Vec::new();
        let mut values = Vec::new();
        for r0 in (0..rows).step_by(BLOCK_HEIGHT) {
            for c in 0..cols {
                if !keep(r0, c) {
                    continue;
                }
                index.push((r0 as u32, c as u32));
                for r in r0..r0 + BLOCK_HEIGHT {
                    values.push(if r == c { 0.0 } else { dense.get(r, c) });
                }
            }
        }
        Self::new(rows, cols, index, values, diagonal)
    }

    /// Random matrix whose nonzero count (blocks plus diagonal) is as close
    /// as possible to `density · rows · cols`.
    pub fn random(rows: usize, cols: usize, density: f64, scale: f32, rng: &mut impl Rng) -> Result<Self> {
        let slots = (rows / BLOCK_HEIGHT) * cols;
        let diag = rows.min(cols);
        let target = density * (rows * cols) as f64 - diag as f64;
        let blocks = ((target / BLOCK_HEIGHT as f64).round().max(0.0) as usize).min(slots);
        let chosen = sample(rng, slots, blocks);
        let mut index = Vec::with_capacity(blocks);
        let mut values = Vec::with_capacity(blocks * BLOCK_HEIGHT);
        for slot in chosen.iter() {
            let (g, c) = (slot / cols, slot % cols);
            let r0 = g * BLOCK_HEIGHT;
            index.push((r0 as u32, c as u32));
            for r in r0..r0 + BLOCK_HEIGHT {
                values.push(if r == c { 0.0 } else { rng.random_range(-scale..=scale) });
            }
        }
        let diagonal = (0..diag).map(|_| rng.random_range(-scale..=scale)).collect();
        Self::new(rows, cols, index, values, diagonal)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_count(&self) -> usize {
        self.index.len()
    }

    pub fn block_index(&self) -> &[(u32, u32)] {
        &self.index
    }

    pub fn block_values(&self) -> &[f32] {
        &self.values
    }

    pub fn diagonal(&self) -> &[f32] {
        &self.diagonal
    }

    /// Stored weights: all block entries plus the diagonal.
    pub fn nonzeros(&self) -> usize {
        self.values.len() + self.diagonal.len()
    }

    pub fn density(&self) -> f64 {
        self.nonzeros() as f64 / (self.rows * self.cols) as f64
    }

    pub fn densify(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m.set(i, i, d);
        }
        for (b, &(r0, c)) in self.index.iter().enumerate() {
            for k in 0..BLOCK_HEIGHT {
                let r = r0 as usize + k;
                let v = m.get(r, c as usize) + self.values[b * BLOCK_HEIGHT + k];
                m.set(r, c as usize, v);
            }
        }
        m
    }

    pub fn gemv(&self, x: &[f32]) -> Result<Vec<f32>> {
        let mut y = vec![0.0; self.rows];
        self.gemv_into(x, &mut y)?;
        Ok(y)
    }

    /// y = M·x: diagonal product, then every block's axpy.
    pub fn gemv_into(&self, x: &[f32], y: &mut [f32]) -> Result<()> {
        if x.len() != self.cols {
            return Err(Error::dim("sparse gemv input", self.cols, x.len()));
        }
        if y.len() != self.rows {
            return Err(Error::dim("sparse gemv output", self.rows, y.len()));
        }
        let n = self.diagonal.len();
        for ((yi, d), xi) in y[..n].iter_mut().zip(&self.diagonal).zip(&x[..n]) {
            *yi = d * xi;
        }
        y[n..].fill(0.0);
        for (&(r0, c), vals) in self.index.iter().zip(self.values.chunks_exact(BLOCK_HEIGHT)) {
            let xc = x[c as usize];
            let r0 = r0 as usize;
            let out: &mut [f32; BLOCK_HEIGHT] = (&mut y[r0..r0 + BLOCK_HEIGHT]).try_into().unwrap();
            let vals: &[f32; BLOCK_HEIGHT] = vals.try_into().unwrap();
            for k in 0..BLOCK_HEIGHT {
                out[k] += vals[k] * xc;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_only_is_elementwise() {
        let d: Vec<f32> = (0..32).map(|i| i as f32 * 0.5).collect();
        let m = BlockSparseMatrix::diagonal_only(32, 32, d.clone()).unwrap();
        let x: Vec<f32> = (0..32).map(|i| 1.0 - i as f32 * 0.1).collect();
        let y = m.gemv(&x).unwrap();
        for i in 0..32 {
            assert_eq!(y[i], d[i] * x[i]);
        }
    }

    #[test]
    fn single_block_geometry() {
        let mut diag = vec![0.0; 32];
        diag[5] = 2.0;
        let mut vals = vec![1.0; 16];
        vals[5] = 0.0;
        let m = BlockSparseMatrix::new(32, 32, vec![(0, 5)], vals, diag).unwrap();
        let mut x = vec![0.0; 32];
        x[5] = 1.0;
        let y = m.gemv(&x).unwrap();
        for (r, v) in y.iter().enumerate() {
            let expected = match r {
                5 => 2.0,
                0..=15 => 1.0,
                _ => 0.0,
            };
            assert_eq!(*v, expected, "row {r}");
        }
    }

    #[test]
    fn layout_errors() {
        let diag = vec![0.0; 32];
        let blk = vec![0.5; 16];
        assert!(BlockSparseMatrix::new(32, 32, vec![(8, 0)], blk.clone(), diag.clone()).is_err());
        assert!(BlockSparseMatrix::new(32, 32, vec![(16, 32)], blk.clone(), diag.clone()).is_err());
        assert!(BlockSparseMatrix::new(32, 32, vec![(16, 20)], blk.clone(), diag.clone()).is_err());
        let two = [blk.clone(), blk.clone()].concat();
        assert!(BlockSparseMatrix::new(32, 32, vec![(16, 0), (16, 0)], two, diag.clone()).is_err());
        assert!(BlockSparseMatrix::new(30, 30, vec![], vec![], vec![0.0; 30]).is_err());
        assert!(BlockSparseMatrix::new(32, 32, vec![], vec![], vec![0.0; 31]).is_err());
    }

    #[test]
    fn from_dense_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = BlockSparseMatrix::random(64, 48, 0.2, 0.5, &mut rng).unwrap();
        let dense = m.densify();
        let kept: std::collections::HashSet<_> = m.block_index().iter().copied().collect();
        let back = BlockSparseMatrix::from_dense(&dense, |r, c| kept.contains(&(r as u32, c as u32))).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn random_density_near_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = BlockSparseMatrix::random(384, 384, 0.1, 0.1, &mut rng).unwrap();
        assert!((m.density() - 0.1).abs() < 0.001, "{}", m.density());
    }
}
