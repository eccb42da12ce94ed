//! N-qubit X-states and their closed-form GM-concurrence.
//!
//! An X-state of `N` qubits splits into `n = 2^(N-1)` uncoupled two-level
//! blocks. Block `k` (1-based) lives on the computational basis indices
//! `{k-1, 2^N - k}`: populations `a_k` and `b_k` on the diagonal and the
//! coherence `r_k e^{iφ_k}` on the anti-diagonal.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, cr, qubits_for_dim, validate_density_matrix, CMatrix, HermitianMatrix};

/// Trace tolerance for X-state validation.
pub const TRACE_TOL: f64 = 1e-10;
/// Slack on `r_k <= sqrt(a_k b_k)`.
pub const PSD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "XStateJson", into = "XStateJson")]
pub struct XState {
    n_qubits: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
    phi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct XStateJson {
    #[serde(rename = "N")]
    n_qubits: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
    phi: Vec<f64>,
}

impl TryFrom<XStateJson> for XState {
    type Error = Error;
    fn try_from(v: XStateJson) -> Result<Self> {
        let x = XState::new(v.a, v.b, v.r, v.phi)?;
        if x.n_qubits != v.n_qubits {
            return Err(Error::DimensionMismatch { expected: v.n_qubits, got: x.n_qubits });
        }
        Ok(x)
    }
}

impl From<XState> for XStateJson {
    fn from(x: XState) -> Self {
        Self { n_qubits: x.n_qubits, a: x.a, b: x.b, r: x.r, phi: x.phi }
    }
}

/// Per-block eigenvalues `λ_k^±` and half-differences `d_k = (b_k - a_k)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEigenvalues {
    pub lam_plus: Vec<f64>,
    pub lam_minus: Vec<f64>,
    pub d: Vec<f64>,
}

impl BlockEigenvalues {
    /// All `2n` eigenvalues sorted descending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.lam_plus.iter().chain(&self.lam_minus).copied().collect();
        all.sort_by(|x, y| y.total_cmp(x));
        all
    }
}

impl XState {
    /// Validates the block parameters. Phases are wrapped into `[0, 2π)`.
    pub fn new(a: Vec<f64>, b: Vec<f64>, r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let n = a.len();
        for (len, _) in [(b.len(), "b"), (r.len(), "r"), (phi.len(), "phi")] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let n_qubits = qubits_for_dim(2 * n)?;
        for (field, v) in [("a", &a), ("b", &b), ("r", &r), ("phi", &phi)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            if field != "phi" {
                if let Some(&value) = v.iter().find(|&&x| x < 0.0) {
                    return Err(Error::NegativeEntry { field, value });
                }
            }
        }
        let total: f64 = a.iter().chain(&b).sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(total));
        }
        for k in 0..n {
            let bound = (a[k] * b[k]).sqrt();
            if r[k] > bound + PSD_SLACK {
                return Err(Error::CoherenceBound { block: k + 1, r: r[k], bound });
            }
        }
        let phi = phi.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self { n_qubits, a, b, r, phi })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of blocks, `2^(N-1)`.
    pub fn n_blocks(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Same populations and coherences with new phases.
    pub fn with_phases(&self, phi: Vec<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.r.clone(), phi)
    }

    pub fn to_density_matrix(&self) -> HermitianMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for k in 0..self.n_blocks() {
            let (i, j) = block_indices(k, dim);
            m[(i, i)] = cr(self.a[k]);
            m[(j, j)] = cr(self.b[k]);
            let coh = c(self.r[k] * self.phi[k].cos(), self.r[k] * self.phi[k].sin());
            m[(i, j)] = coh;
            m[(j, i)] = coh.conj();
        }
        HermitianMatrix::projected(m)
    }

    pub fn gm_concurrence(&self) -> f64 {
        concurrence_formula(&self.a, &self.b, &self.r)
    }

    pub fn block_eigenvalues(&self) -> BlockEigenvalues {
        let n = self.n_blocks();
        let mut out = BlockEigenvalues {
            lam_plus: Vec::with_capacity(n),
            lam_minus: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for k in 0..n {
            let d = (self.b[k] - self.a[k]) / 2.0;
            let mean = (self.a[k] + self.b[k]) / 2.0;
            let rad = self.r[k].hypot(d);
            out.lam_plus.push(mean + rad);
            out.lam_minus.push(mean - rad);
            out.d.push(d);
        }
        out
    }

    pub fn purity(&self) -> f64 {
        (0..self.n_blocks())
            .map(|k| self.a[k].powi(2) + self.b[k].powi(2) + 2.0 * self.r[k].powi(2))
            .sum()
    }
}

/// 0-based basis indices `(k, 2^N - 1 - k)` of 0-based block `k`.
#[inline]
pub fn block_indices(k: usize, dim: usize) -> (usize, usize) {
    (k, dim - 1 - k)
}

/// `2 max{0, max_k [r_k - Σ_{j≠k} sqrt(a_j b_j)]}`.
pub(crate) fn concurrence_formula(a: &[f64], b: &[f64], r: &[f64]) -> f64 {
    let roots: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x * y).max(0.0).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    let best = r
        .iter()
        .zip(&roots)
        .map(|(rk, sk)| rk - (total - sk))
        .fold(f64::NEG_INFINITY, f64::max);
    2.0 * best.max(0.0)
}

/// GM-concurrence of an X-state.
pub fn gm_concurrence_x(x: &XState) -> f64 {
    x.gm_concurrence()
}

/// Block eigenvalues `λ_k^± = (a_k+b_k)/2 ± sqrt(r_k² + d_k²)`.
pub fn block_eigenvalues(x: &XState) -> BlockEigenvalues {
    x.block_eigenvalues()
}

/// Lower bound on the GM-concurrence read from the main and anti-diagonal of
/// an arbitrary density matrix. Other entries are ignored. Equal to the
/// concurrence itself on X-states.
pub fn gm_lower_bound(rho: &HermitianMatrix) -> Result<f64> {
    let dim = rho.dim();
    qubits_for_dim(dim)?;
    validate_density_matrix(rho, 1e-9)?;
    let n = dim / 2;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for k in 0..n {
        let (i, j) = block_indices(k, dim);
        a.push(rho[(i, i)].re);
        b.push(rho[(j, j)].re);
        r.push(rho[(i, j)].norm());
    }
    Ok(concurrence_formula(&a, &b, &r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(n_qubits: usize) -> XState {
        let n = 1 << (n_qubits - 1);
        let mut a = vec![0.0; n];
        a[0] = 0.5;
        let r = a.clone();
        XState::new(a.clone(), a, r, vec![0.0; n]).unwrap()
    }

    #[test]
    fn ghz_and_maximally_mixed_are_valid() {
        let g = ghz(3);
        assert_eq!(g.n_qubits(), 3);
        assert_eq!(g.gm_concurrence(), 1.0);
        let n = 4;
        let u = vec![1.0 / 8.0; n];
        let mm = XState::new(u.clone(), u, vec![0.0; n], vec![0.0; n]).unwrap();
        assert_eq!(mm.gm_concurrence(), 0.0);
    }

    #[test]
    fn coherence_bound_rejected() {
        let err = XState::new(vec![0.25, 0.25], vec![0.25, 0.25], vec![0.3, 0.0], vec![0.0; 2]);
        assert!(matches!(err, Err(Error::CoherenceBound { block: 1, .. })));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(matches!(
            XState::new(vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            XState::new(vec![0.6, -0.1], vec![0.5, 0.0], vec![0.0; 2], vec![0.0; 2]),
            Err(Error::NegativeEntry { field: "a", .. })
        ));
        assert!(matches!(
            XState::new(vec![0.5, 0.5], vec![0.5, 0.0], vec![0.0; 2], vec![0.0; 2]),
            Err(Error::InvalidTrace(_))
        ));
        assert!(matches!(
            XState::new(vec![0.5; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]),
            Err(Error::NotQubitDimension(6))
        ));
    }

    #[test]
    fn ghz_density_matrix() {
        let rho = ghz(2).to_density_matrix();
        let mut expect = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expect[(i, j)] = cr(0.5);
        }
        assert_eq!(rho.as_matrix(), &expect);
    }

    #[test]
    fn diagonal_ordering() {
        let x = XState::new(vec![0.1, 0.2], vec![0.3, 0.4], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(x.to_density_matrix(), HermitianMatrix::from_real_diagonal(&[0.1, 0.2, 0.4, 0.3]));
    }

    #[test]
    fn hand_evaluated_concurrence() {
        let a = vec![0.3, 0.1, 0.05, 0.05];
        let x = XState::new(a.clone(), a, vec![0.3, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        assert!((x.gm_concurrence() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn block_eigenvalues_examples() {
        let be = ghz(3).block_eigenvalues();
        assert_eq!((be.lam_plus[0], be.lam_minus[0]), (1.0, 0.0));
        assert!(be.lam_plus[1..].iter().chain(&be.lam_minus[1..]).all(|&v| v == 0.0));
        let x = XState::new(vec![0.3, 0.3], vec![0.1, 0.3], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let be = x.block_eigenvalues();
        assert!((be.lam_plus[0] - 0.3).abs() < 1e-15 && (be.lam_minus[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn phases_wrap() {
        let x = XState::new(vec![0.5, 0.0], vec![0.5, 0.0], vec![0.5, 0.0], vec![-1.0, 7.0]).unwrap();
        assert!(x.phi().iter().all(|&p| (0.0..TAU).contains(&p)));
    }

    #[test]
    fn lower_bound_on_mixed_state() {
        let rho = HermitianMatrix::identity(8).scaled(1.0 / 8.0);
        assert_eq!(gm_lower_bound(&rho).unwrap(), 0.0);
        let bad = HermitianMatrix::identity(6).scaled(1.0 / 6.0);
        assert!(matches!(gm_lower_bound(&bad), Err(Error::NotQubitDimension(6))));
    }

    #[test]
    fn json_uses_capital_n() {
        let s = serde_json::to_string(&ghz(2)).unwrap();
        assert!(s.starts_with("{\"N\":2"));
        let back: XState = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ghz(2));
        let wrong_n = s.replacen("\"N\":2", "\"N\":3", 1);
        assert!(serde_json::from_str::<XState>(&wrong_n).is_err());
    }
}
