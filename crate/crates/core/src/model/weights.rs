//! Binary weight container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "LPCW" | u32 version | u32 flags | u32 tensor_count
//! tensor_count × record:
//!     u32 name_len | name (UTF-8) | u8 dtype | u8 rank | rank × u32 dims | payload
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! dtype 0 is dense f32 (`prod(dims)` values, row major). dtype 1 is a
//! block-sparse f32 matrix (rank 2): u32 block_count, block_count pairs of
//! u32 (row_start, col), 16 · block_count values, then `min(rows, cols)`
//! diagonal values.

use std::path::Path;

use crate::error::{Error, Result, WeightError};
use crate::nn::{BlockSparseMatrix, DenseMatrix, BLOCK_HEIGHT};

pub const MAGIC: [u8; 4] = *b"LPCW";
pub const FORMAT_VERSION: u32 = 1;
/// Set when the file carries folded V tables instead of E and U^(g,i).
pub const FLAG_FOLDED: u32 = 1;

const DTYPE_DENSE: u8 = 0;
const DTYPE_SPARSE: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Dense { dims: Vec<usize>, values: Vec<f32> },
    Sparse(BlockSparseMatrix),
}

impl Tensor {
    pub fn dense(dims: Vec<usize>, values: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), values.len());
        Tensor::Dense { dims, values }
    }

    pub fn vector(values: &[f32]) -> Self {
        Tensor::Dense {
            dims: vec![values.len()],
            values: values.to_vec(),
        }
    }

    pub fn matrix(m: &DenseMatrix) -> Self {
        Tensor::Dense {
            dims: vec![m.rows(), m.cols()],
            values: m.values().to_vec(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            Tensor::Dense { dims, .. } => dims.clone(),
            Tensor::Sparse(m) => vec![m.rows(), m.cols()],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Tensor::Dense { .. } => "dense",
            Tensor::Sparse(_) => "block-sparse",
        }
    }

    /// Stored nonzero count over element count.
    pub fn density(&self) -> f64 {
        match self {
            Tensor::Dense { values, .. } => {
                if values.is_empty() {
                    return 0.0;
                }
                values.iter().filter(|v| **v != 0.0).count() as f64 / values.len() as f64
            }
            Tensor::Sparse(m) => m.density(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Tensor::Dense { values, .. } => values.len(),
            Tensor::Sparse(m) => m.nonzeros(),
        }
    }
}

/// Ordered set of named tensors plus header flags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightFile {
    pub flags: u32,
    pub tensors: Vec<(String, Tensor)>,
}

impl WeightFile {
    pub fn new(flags: u32) -> Self {
        Self {
            flags,
            tensors: Vec::new(),
        }
    }

    pub fn is_folded(&self) -> bool {
        self.flags & FLAG_FOLDED != 0
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.push((name.into(), tensor));
    }

    pub fn get(&self, name: &str) -> std::result::Result<&Tensor, WeightError> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| WeightError::Missing(name.to_string()))
    }

    /// Dense tensor with exactly these dims.
    pub fn dense(&self, name: &str, dims: &[usize]) -> std::result::Result<&[f32], WeightError> {
        match self.get(name)? {
            Tensor::Dense { dims: d, values } if d == dims => Ok(values),
            Tensor::Dense { dims: d, .. } => Err(WeightError::Shape {
                record: name.to_string(),
                expected: dims.to_vec(),
                found: d.clone(),
            }),
            Tensor::Sparse(_) => Err(WeightError::Malformed {
                record: name.to_string(),
                detail: "expected a dense tensor, found block-sparse".into(),
            }),
        }
    }

    pub fn dense_matrix(&self, name: &str, rows: usize, cols: usize) -> std::result::Result<DenseMatrix, WeightError> {
        let v = self.dense(name, &[rows, cols])?;
        Ok(DenseMatrix::new(rows, cols, v.to_vec()).expect("shape checked"))
    }

    pub fn vector(&self, name: &str, len: usize) -> std::result::Result<Vec<f32>, WeightError> {
        self.dense(name, &[len]).map(<[f32]>::to_vec)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, self.flags);
        put_u32(&mut out, self.tensors.len() as u32);
        for (name, tensor) in &self.tensors {
            put_u32(&mut out, name.len() as u32);
            out.extend_from_slice(name.as_bytes());
            match tensor {
                Tensor::Dense { dims, values } => {
                    out.push(DTYPE_DENSE);
                    out.push(dims.len() as u8);
                    for &d in dims {
                        put_u32(&mut out, d as u32);
                    }
                    put_f32s(&mut out, values);
                }
                Tensor::Sparse(m) => {
                    out.push(DTYPE_SPARSE);
                    out.push(2);
                    put_u32(&mut out, m.rows() as u32);
                    put_u32(&mut out, m.cols() as u32);
                    put_u32(&mut out, m.block_count() as u32);
                    for &(r, c) in m.block_index() {
                        put_u32(&mut out, r);
                        put_u32(&mut out, c);
                    }
                    put_f32s(&mut out, m.block_values());
                    put_f32s(&mut out, m.diagonal());
                }
            }
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        out
    }

    /// Records are parsed before the checksum is verified, so a short file
    /// reports which record ran out of bytes.
    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, WeightError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "header")?;
        if magic != MAGIC {
            return Err(WeightError::BadMagic {
                found: magic.try_into().expect("4 bytes"),
            });
        }
        let version = r.u32("header")?;
        if version != FORMAT_VERSION {
            return Err(WeightError::Version {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let flags = r.u32("header")?;
        let count = r.u32("header")? as usize;

        let mut tensors: Vec<(String, Tensor)> = Vec::new();
        for k in 0..count {
            let slot = format!("record {k}");
            let name_len = r.u32(&slot)? as usize;
            let name = String::from_utf8(r.take(name_len, &slot)?.to_vec()).map_err(|_| WeightError::Malformed {
                record: slot.clone(),
                detail: "name is not UTF-8".into(),
            })?;
            let record = format!("record {k} ({name})");
            let dtype = r.u8(&record)?;
            let rank = r.u8(&record)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32(&record)? as usize);
            }
            let tensor = match dtype {
                DTYPE_DENSE => {
                    let n = dims
                        .iter()
                        .try_fold(1usize, |a, &d| a.checked_mul(d))
                        .ok_or_else(|| WeightError::Malformed {
                            record: record.clone(),
                            detail: "element count overflows".into(),
                        })?;
                    let values = r.f32s(n, &record)?;
                    Tensor::Dense { dims, values }
                }
                DTYPE_SPARSE => {
                    if rank != 2 {
                        return Err(WeightError::Malformed {
                            record,
                            detail: format!("block-sparse tensor has rank {rank}"),
                        });
                    }
                    let (rows, cols) = (dims[0], dims[1]);
                    let blocks = r.u32(&record)? as usize;
                    r.need(blocks.saturating_mul(8), &record)?;
                    let mut index = Vec::with_capacity(blocks);
                    for _ in 0..blocks {
                        let row = r.u32(&record)?;
                        let col = r.u32(&record)?;
                        index.push((row, col));
                    }
                    let values = r.f32s(blocks * BLOCK_HEIGHT, &record)?;
                    let diagonal = r.f32s(rows.min(cols), &record)?;
                    let m = BlockSparseMatrix::new(rows, cols, index, values, diagonal).map_err(|e| {
                        WeightError::Malformed {
                            record: record.clone(),
                            detail: e.to_string(),
                        }
                    })?;
                    Tensor::Sparse(m)
                }
                other => {
                    return Err(WeightError::Malformed {
                        record,
                        detail: format!("unknown dtype {other}"),
                    })
                }
            };
            if tensors.iter().any(|(n, _)| *n == name) {
                return Err(WeightError::Duplicate(name));
            }
            tensors.push((name, tensor));
        }

        let body_end = r.pos;
        let stored = r.u32("checksum")?;
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(WeightError::Checksum { stored, computed });
        }
        if r.pos != bytes.len() {
            return Err(WeightError::Malformed {
                record: "trailer".into(),
                detail: format!("{} unexpected bytes after checksum", bytes.len() - r.pos),
            });
        }
        Ok(Self { flags, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::decode(&bytes)?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, v: &[f32]) {
    out.reserve(v.len() * 4);
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn need(&self, n: usize, record: &str) -> std::result::Result<(), WeightError> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.bytes.len() => Ok(()),
            _ => Err(WeightError::Truncated {
                record: record.to_string(),
                offset: self.pos,
                expected: n,
                actual: self.bytes.len(),
            }),
        }
    }

    fn take(&mut self, n: usize, record: &str) -> std::result::Result<&'a [u8], WeightError> {
        self.need(n, record)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, record: &str) -> std::result::Result<u8, WeightError> {
        Ok(self.take(1, record)?[0])
    }

    fn u32(&mut self, record: &str) -> std::result::Result<u32, WeightError> {
        Ok(u32::from_le_bytes(self.take(4, record)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize, record: &str) -> std::result::Result<Vec<f32>, WeightError> {
        let raw = self.take(n.saturating_mul(4), record)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_file() -> WeightFile {
        let mut f = WeightFile::new(FLAG_FOLDED);
        f.push("a", Tensor::vector(&[1.0, -2.5, 3.25]));
        f.push("b", Tensor::dense(vec![2, 2], vec![0.0, 1.0, f32::MIN_POSITIVE, -0.0]));
        let m = BlockSparseMatrix::new(16, 4, vec![(0, 2)], (0..16).map(|i| if i == 2 { 0.0 } else { i as f32 }).collect(), vec![9.0; 4]).unwrap();
        f.push("c", Tensor::Sparse(m));
        f
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let f = sample_file();
        let g = WeightFile::decode(&f.encode()).unwrap();
        assert_eq!(f, g);
        match (f.get("b").unwrap(), g.get("b").unwrap()) {
            (Tensor::Dense { values: a, .. }, Tensor::Dense { values: b, .. }) => {
                let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(a), bits(b));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn header_layout() {
        let bytes = sample_file().encode();
        assert_eq!(&bytes[..4], b"LPCW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), FLAG_FOLDED);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        // first record: name "a", dense, rank 1, dim 3
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert_eq!(bytes[20], b'a');
        assert_eq!(&bytes[21..23], &[0, 1]);
        assert_eq!(u32::from_le_bytes(bytes[23..27].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[27..31].try_into().unwrap()), 1.0);
    }

    #[test]
    fn every_truncation_is_reported() {
        let bytes = sample_file().encode();
        for len in 0..bytes.len() {
            match WeightFile::decode(&bytes[..len]) {
                Err(WeightError::Truncated { expected, actual, offset, .. }) => {
                    assert_eq!(actual, len);
                    assert!(offset + expected > len);
                }
                other => panic!("len {len}: {other:?}"),
            }
        }
    }

    #[test]
    fn truncation_names_record() {
        let bytes = sample_file().encode();
        let err = WeightFile::decode(&bytes[..bytes.len() - 20]).unwrap_err();
        match err {
            WeightError::Truncated { record, .. } => assert!(record.contains("(c)"), "{record}"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn any_flipped_byte_is_rejected() {
        let bytes = sample_file().encode();
        for i in 16..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x40;
            assert!(WeightFile::decode(&b).is_err(), "flip at {i} accepted");
        }
        let mut b = bytes.clone();
        let last = b.len() - 1;
        b[last] ^= 1;
        assert!(matches!(WeightFile::decode(&b), Err(WeightError::Checksum { .. })));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut b = sample_file().encode();
        b[0] = b'X';
        assert!(matches!(WeightFile::decode(&b), Err(WeightError::BadMagic { .. })));
        let mut b = sample_file().encode();
        b[4] = 7;
        assert_eq!(
            WeightFile::decode(&b),
            Err(WeightError::Version { found: 7, supported: 1 })
        );
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut f = WeightFile::new(0);
        f.push("x", Tensor::vector(&[1.0]));
        f.push("x", Tensor::vector(&[2.0]));
        assert_eq!(WeightFile::decode(&f.encode()), Err(WeightError::Duplicate("x".into())));
    }

    #[test]
    fn shape_lookup_errors() {
        let f = sample_file();
        assert!(matches!(f.dense("a", &[4]), Err(WeightError::Shape { .. })));
        assert!(matches!(f.dense("c", &[16, 4]), Err(WeightError::Malformed { .. })));
        assert_eq!(f.get("zz"), Err(WeightError::Missing("zz".into())));
    }
}
