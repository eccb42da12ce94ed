//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use xmems::{CMatrix, HermitianMatrix, XState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet sample of length `len`.
pub fn dirichlet(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let g = Gamma::new(1.0, 1.0).unwrap();
    let raw: Vec<f64> = (0..len).map(|_| g.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn ginibre(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    })
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn haar_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let qr = ginibre(rng, d).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let g = ginibre(rng, d);
    HermitianMatrix::projected(&g + g.adjoint())
}

/// `U diag(spectrum) U†` with Haar `U`.
pub fn isospectral_state(rng: &mut impl Rng, spectrum: &[f64]) -> HermitianMatrix {
    let u = haar_unitary(rng, spectrum.len());
    HermitianMatrix::from_real_diagonal(spectrum).conjugate_by(&u)
}

pub fn random_density(rng: &mut impl Rng, d: usize) -> HermitianMatrix {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    HermitianMatrix::projected(m / Complex64::new(t, 0.0))
}

/// Valid X-state with coherences strictly inside the bound.
pub fn random_xstate(rng: &mut impl Rng, n_qubits: usize) -> XState {
    let n = 1 << (n_qubits - 1);
    let w = dirichlet(rng, 2 * n);
    let a = w[..n].to_vec();
    let b = w[n..].to_vec();
    let r = (0..n).map(|k| rng.random::<f64>() * (a[k] * b[k]).sqrt()).collect();
    let phi = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    XState::new(a, b, r, phi).unwrap()
}

pub fn real(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Eigenvalues of a Hermitian matrix through the real embedding `[[A,-B],[B,A]]`,
/// whose spectrum is the complex spectrum with every value doubled.
/// Used as an oracle independent of the complex eigensolver.
pub fn eigenvalues_via_embedding(h: &HermitianMatrix) -> Vec<f64> {
    let m = h.as_matrix();
    let d = m.nrows();
    let e = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = m[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Random X-state with the given spectrum: eigenvalues are paired into blocks
/// at random, and each block gets a random split `d_k` with
/// `r_k = sqrt(((λ+ - λ-)/2)² - d_k²)`.
pub fn random_isospectral_xstate(rng: &mut impl Rng, spectrum: &[f64]) -> XState {
    use rand::seq::SliceRandom;
    let n = spectrum.len() / 2;
    let mut vals = spectrum.to_vec();
    vals.shuffle(rng);
    let (mut a, mut b, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (hi, lo) = (vals[2 * k].max(vals[2 * k + 1]), vals[2 * k].min(vals[2 * k + 1]));
        let half = 0.5 * (hi - lo);
        let d = half * (2.0 * rng.random::<f64>() - 1.0);
        let mean = 0.5 * (hi + lo);
        a.push(mean - d);
        b.push(mean + d);
        // Shrink slightly so rounding never breaks the coherence bound.
        r.push((half * half - d * d).max(0.0).sqrt() * (1.0 - 1e-15));
    }
    let phi = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    XState::new(a, b, r, phi).unwrap()
}

/// Sorted flat Dirichlet spectrum of length `len`.
pub fn dirichlet_spectrum(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut v = dirichlet(rng, len);
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// `k` Kraus operators cut from a random isometry `ℂ^d → ℂ^{dk}`.
pub fn random_kraus(rng: &mut impl Rng, d: usize, k: usize) -> Vec<CMatrix> {
    let g = CMatrix::from_fn(d * k, d, |_, _| {
        Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let q = g.qr().q();
    (0..k).map(|m| q.rows(m * d, d).into_owned()).collect()
}
