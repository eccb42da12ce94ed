//! Block-diagonal symmetric matrices: dense iterates and sparse problem data.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qmat::MatrixJson;

/// Dense block-diagonal symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiag {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockDiag {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self { blocks: sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect() }
    }

    pub fn scaled_identities(sizes: &[usize], scales: &[f64]) -> Self {
        Self {
            blocks: sizes
                .iter()
                .zip(scales)
                .map(|(&n, &s)| DMatrix::identity(n, n) * s)
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// Total order `Σ n_k` of the cone.
    pub fn order(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// Frobenius inner product `tr(self * other)`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |x, y| *x += alpha * y);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let t = b.transpose();
            *b += t;
            *b *= 0.5;
        }
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Upper-triangular entry `(row <= col)` of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse block-diagonal symmetric matrix, stored as upper-triangular triplets.
///
/// Duplicate coordinates add up.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    sizes: Vec<usize>,
    entries: Vec<SymEntry>,
}

impl SparseSym {
    pub fn new(sizes: &[usize]) -> Self {
        Self { sizes: sizes.to_vec(), entries: Vec::new() }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn entries(&self) -> &[SymEntry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Adds `value` at `(row, col)` and, implicitly, at `(col, row)`.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        assert!(block < self.sizes.len(), "block {block} out of range");
        let n = self.sizes[block];
        assert!(row < n && col < n, "entry ({row}, {col}) outside block of size {n}");
        if value != 0.0 {
            let (row, col) = if row <= col { (row, col) } else { (col, row) };
            self.entries.push(SymEntry { block, row, col, value });
        }
    }

    /// Reads the upper triangle of each block; the caller guarantees symmetry.
    pub fn from_dense(dense: &BlockDiag) -> Self {
        let mut out = Self::new(&dense.sizes());
        for (k, b) in dense.blocks.iter().enumerate() {
            for j in 0..b.ncols() {
                for i in 0..=j {
                    out.push(k, i, j, b[(i, j)]);
                }
            }
        }
        out
    }

    /// Validating variant of [`SparseSym::from_dense`].
    pub fn try_from_dense(dense: &BlockDiag) -> Result<Self> {
        for b in &dense.blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::NotSquare { rows: b.nrows(), cols: b.ncols() });
            }
            let scale = b.amax().max(1.0);
            let dev = (b - b.transpose()).amax();
            if dev > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!("block is not symmetric (deviation {dev:e})")));
            }
        }
        Ok(Self::from_dense(dense))
    }

    pub fn to_dense(&self) -> BlockDiag {
        let mut out = BlockDiag::zeros(&self.sizes);
        self.add_scaled_to(1.0, &mut out);
        out
    }

    /// `out += alpha * self`.
    pub fn add_scaled_to(&self, alpha: f64, out: &mut BlockDiag) {
        for e in &self.entries {
            let b = &mut out.blocks[e.block];
            b[(e.row, e.col)] += alpha * e.value;
            if e.row != e.col {
                b[(e.col, e.row)] += alpha * e.value;
            }
        }
    }

    /// `tr(self * x)` for symmetric `x`.
    pub fn dot(&self, x: &BlockDiag) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v = x.blocks[e.block][(e.row, e.col)];
                if e.row == e.col {
                    e.value * v
                } else {
                    2.0 * e.value * v
                }
            })
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }

    /// Frobenius norm restricted to one block.
    pub fn block_norm(&self, block: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.block == block)
            .map(|e| if e.row == e.col { e.value * e.value } else { 2.0 * e.value * e.value })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.value *= s;
        }
        out
    }
}

impl Serialize for SparseSym {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks: Vec<MatrixJson> = self.to_dense().blocks.iter().map(MatrixJson::from_real).collect();
        blocks.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseSym {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<MatrixJson>::deserialize(deserializer)?;
        let dense = blocks
            .iter()
            .map(MatrixJson::to_real)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        SparseSym::try_from_dense(&BlockDiag { blocks: dense }).map_err(serde::de::Error::custom)
    }
}
