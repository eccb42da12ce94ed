//! Real symmetric embedding of complex Hermitian matrices.
//!
//! `H = A + iB` maps to `[[A, -B], [B, A]]`. The map is linear, preserves
//! positive semidefiniteness and doubles every eigenvalue multiplicity, and
//! `tr(emb(H) emb(K)) = 2 tr(HK)`.

use nalgebra::DMatrix;

use super::matrix::SparseSym;
use crate::qmat::{c, CMatrix};

pub fn real_embedding(h: &CMatrix) -> DMatrix<f64> {
    let d = h.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for j in 0..d {
        for i in 0..d {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + d, j + d)] = z.re;
            out[(i, j + d)] = -z.im;
            out[(i + d, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`real_embedding`], averaging the redundant copies so that
/// the result is exact for the projection of any symmetric input.
pub fn hermitian_from_embedding(x: &DMatrix<f64>) -> CMatrix {
    let d = x.nrows() / 2;
    CMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + d, j + d)]);
        let im = 0.5 * (x[(i + d, j)] - x[(i, j + d)]);
        c(re, im)
    })
}

/// Adds `scale * emb(h)` to one block of `out`, writing only the upper triangle.
/// `h` is assumed Hermitian; only its upper triangle and the imaginary parts
/// of the full matrix are read.
pub fn embed_hermitian_entries(h: &CMatrix, scale: f64, block: usize, out: &mut SparseSym) {
    let d = h.nrows();
    for q in 0..d {
        for p in 0..d {
            let z = h[(p, q)];
            if p <= q && z.re != 0.0 {
                out.push(block, p, q, scale * z.re);
                out.push(block, p + d, q + d, scale * z.re);
            }
            if z.im != 0.0 {
                out.push(block, p, q + d, -scale * z.im);
            }
        }
    }
}
