//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Hermitian data is
//! carried by [`HermitianMatrix`], which enforces Hermiticity on ingest: inputs
//! within `1e-12` (relative to their largest entry) of being Hermitian are
//! projected onto `(M + M†)/2`, anything further off is rejected.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative threshold used by [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates and symmetrizes `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::projected(m))
    }

    /// Projects an arbitrary square matrix onto its Hermitian part without
    /// validation. Used for products that are Hermitian up to rounding.
    pub fn projected(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian projection of a non-square matrix");
        let h = (&m + m.adjoint()) * cr(0.5);
        Self(h)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(cr))
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMatrix::zeros(d, d))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self(CMatrix::from_fn(d, d, |i, j| if i == j { cr(diag[i]) } else { cr(0.0) }))
    }

    /// Rank-one projector `|v><v|` (unnormalized if `v` is).
    pub fn outer(v: &CVector) -> Self {
        Self::projected(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// `tr(M^2)`, the purity when `M` is a density matrix.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * cr(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    /// Transpose in the computational basis (equal to the entrywise conjugate).
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Unitary conjugation `U M U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::projected(u * &self.0 * u.adjoint())
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real part of `tr(self * other)`, which is the full trace for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * other.0[(j, i)]).re;
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// JSON carrier `{"dim": d, "re": [[..]], "im": [[..]]}` for square matrices.
///
/// `im` may be omitted for real matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_cmatrix(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let re = (0..dim).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..dim).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
        Self { dim, re, im: Some(im) }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let re = (0..dim).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
        Self { dim, re, im: None }
    }

    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let check = |rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: rows.len() });
            }
            for row in rows {
                if row.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: row.len() });
                }
            }
            Ok(())
        };
        check(&self.re)?;
        if let Some(im) = &self.im {
            check(im)?;
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            c(self.re[i][j], im)
        }))
    }

    pub fn to_real(&self) -> Result<DMatrix<f64>> {
        if let Some(im) = &self.im {
            if im.iter().flatten().any(|v| *v != 0.0) {
                return Err(Error::InvalidArgument("expected a real matrix".into()));
            }
        }
        Ok(self.to_cmatrix()?.map(|z| z.re))
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;
    fn try_from(value: MatrixJson) -> Result<Self> {
        HermitianMatrix::new(value.to_cmatrix()?)
    }
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(value: HermitianMatrix) -> Self {
        MatrixJson::from_cmatrix(&value.0)
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Which tensor factor [`partial_trace`] removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of `m` on `H_A ⊗ H_B` over the requested factor.
pub fn partial_trace(
    m: &HermitianMatrix,
    dim_a: usize,
    dim_b: usize,
    which: Subsystem,
) -> Result<HermitianMatrix> {
    if m.dim() != dim_a * dim_b {
        return Err(Error::DimensionMismatch { expected: dim_a * dim_b, got: m.dim() });
    }
    let x = m.as_matrix();
    let out = match which {
        Subsystem::First => CMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| x[(k * dim_b + i, k * dim_b + j)]).sum()
        }),
        Subsystem::Second => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| x[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
    };
    Ok(HermitianMatrix::projected(out))
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| cr(v)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// Ties keep the order produced by the underlying factorization.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<HermitianEigen> {
    let eig = m
        .as_matrix()
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.dim(), m.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigenvalues_hermitian(m: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(m)?.values)
}

/// Number of eigenvalues with `|λ| > tau * max(max|λ|, 1)`.
pub fn numerical_rank(m: &HermitianMatrix, tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("rank threshold must be positive, got {tau}")));
    }
    let values = eigenvalues_hermitian(m)?;
    Ok(rank_of_spectrum(&values, tau))
}

pub(crate) fn rank_of_spectrum(values: &[f64], tau: f64) -> usize {
    let scale = values.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    values.iter().filter(|v| v.abs() > tau * scale).count()
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(m)?.last().copied().unwrap_or(0.0))
}

/// `true` when the smallest eigenvalue is at least `-tol`.
pub fn is_psd(m: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// Checks that `rho` is a density matrix: unit trace within `tol`, PSD within `tol`.
pub fn validate_density_matrix(rho: &HermitianMatrix, tol: f64) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > tol {
        return Err(Error::InvalidTrace(tr));
    }
    let min = min_eigenvalue(rho)?;
    if min < -tol {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Hermitian inverse through the eigendecomposition; all eigenvalues must be positive.
pub fn inverse_positive_definite(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(m)?;
    if let Some(&min) = eig.values.last() {
        if min <= 0.0 {
            return Err(Error::NotPsd(min));
        }
    }
    let inv = HermitianEigen {
        values: eig.values.iter().map(|v| 1.0 / v).collect(),
        vectors: eig.vectors,
    };
    Ok(HermitianMatrix::projected(inv.reconstruct()))
}

/// Number of qubits `N` for a dimension `2^N` with `N >= 2`.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 4 || !dim.is_power_of_two() {
        return Err(Error::NotQubitDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}
