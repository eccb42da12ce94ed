//! Maximally GM-entangled X-states at fixed spectrum and at fixed purity.
//!
//! Fixed spectrum: the optimum is reached by one coherent block built from
//! `λ_1` and `λ_{n+1}`, with the remaining eigenvalues paired largest with
//! smallest. Fixed purity: the optimal spectrum is known in closed form as a
//! function of `γ(P)`, and its optimality is certified by an explicit dual
//! point of a small semidefinite program.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{cr, eig_hermitian, validate_density_matrix, CMatrix, HermitianMatrix};
use crate::sdp::{
    self, BlockDiag, InequalityForm, SdpPoint, SdpProblem, SolveStatus, SolverOptions, SparseSym, ValueMap,
};
use crate::xstate::XState;

/// Tolerance on `Σλ = 1`.
pub const SPECTRUM_SUM_TOL: f64 = 1e-10;
/// Purities this close to 1 are treated as pure.
pub const PURITY_CLAMP: f64 = 1e-12;

/// Eigenvalues of a `2n`-dimensional density matrix, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumJson")]
pub struct Spectrum {
    n: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct SpectrumJson {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<SpectrumJson> for Spectrum {
    type Error = Error;
    fn try_from(v: SpectrumJson) -> Result<Self> {
        let s = Spectrum::new(v.values)?;
        if s.n != v.n {
            return Err(Error::DimensionMismatch { expected: v.n, got: s.n });
        }
        Ok(s)
    }
}

impl Spectrum {
    /// Sorts `values` descending and validates them as a probability vector
    /// of length `2^N`, `N >= 2`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        crate::qmat::qubits_for_dim(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&value) = values.iter().find(|&&v| v < 0.0) {
            return Err(Error::NegativeEntry { field: "values", value });
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SPECTRUM_SUM_TOL {
            return Err(Error::InvalidTrace(total));
        }
        values.sort_by(|x, y| y.total_cmp(x));
        Ok(Self { n: values.len() / 2, values })
    }

    /// Spectrum of a density matrix. Eigenvalues in `[-1e-9, 0)` are set to zero.
    pub fn of_density_matrix(rho: &HermitianMatrix) -> Result<Self> {
        validate_density_matrix(rho, 1e-9)?;
        let values = eig_hermitian(rho)?.values.into_iter().map(|v| v.max(0.0)).collect();
        Self::new(values)
    }

    /// Half the dimension, the number of X blocks.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1-based access `λ_i`.
    pub fn lambda(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `max[0, λ_1 - λ_{n+1} - 2 Σ_{ℓ=2}^n sqrt(λ_ℓ λ_{2n+2-ℓ})]`.
pub fn max_gm_for_spectrum(s: &Spectrum) -> f64 {
    let n = s.n;
    let pairs: f64 = (2..=n).map(|l| (s.lambda(l) * s.lambda(2 * n + 2 - l)).sqrt()).sum();
    (s.lambda(1) - s.lambda(n + 1) - 2.0 * pairs).max(0.0)
}

/// The X-state of spectrum `s` with the largest GM-concurrence.
pub fn xmems_from_spectrum(s: &Spectrum) -> Result<XState> {
    let n = s.n;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut r = vec![0.0; n];
    a[0] = 0.5 * (s.lambda(1) + s.lambda(n + 1));
    b[0] = a[0];
    r[0] = 0.5 * (s.lambda(1) - s.lambda(n + 1));
    for j in 2..=n {
        a[j - 1] = s.lambda(j);
        b[j - 1] = s.lambda(2 * n + 2 - j);
    }
    XState::new(a, b, r, vec![0.0; n])
}

/// Permutation-like unitary `V` taking the sorted eigenbasis to the X-MEMS basis.
pub fn v_matrix(n: usize) -> CMatrix {
    let dim = 2 * n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::zeros(dim, dim);
    v[(0, 0)] = cr(h);
    v[(dim - 1, 0)] = cr(h);
    v[(0, n)] = cr(h);
    v[(dim - 1, n)] = cr(-h);
    for j in 2..=n {
        v[(j - 1, j - 1)] = cr(1.0);
        v[(n + j - 2, n + j - 1)] = cr(1.0);
    }
    v
}

/// Global unitary `U = V Φ†` with `U ρ U†` the X-MEMS of the spectrum of `ρ`.
/// `Φ` holds the eigenvectors of `ρ` in descending eigenvalue order.
pub fn optimal_unitary(rho: &HermitianMatrix) -> Result<CMatrix> {
    let dim = rho.dim();
    crate::qmat::qubits_for_dim(dim)?;
    validate_density_matrix(rho, 1e-9)?;
    let phi = eig_hermitian(rho)?.vectors;
    Ok(v_matrix(dim / 2) * phi.adjoint())
}

fn check_purity(p: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("block count must be at least 2, got {n}")));
    }
    let p = if (p - 1.0).abs() <= PURITY_CLAMP { 1.0 } else { p };
    let lower = 1.0 / (n as f64 + 1.0);
    if !p.is_finite() || p <= lower || p > 1.0 {
        return Err(Error::PurityOutOfRange { purity: p, n });
    }
    Ok(p)
}

/// Purity `(n+3)/(n+1)²` separating the two branches of `γ(P)`.
pub fn junction_purity(n: usize) -> f64 {
    let n = n as f64;
    (n + 3.0) / ((n + 1.0) * (n + 1.0))
}

/// Value `1/(n+1)` of `γ` at the branch junction.
pub fn junction_gamma(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// Which closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `γ <= 1/(n+1)`.
    Low,
    /// `γ > 1/(n+1)`.
    High,
}

impl Branch {
    pub fn of_gamma(gamma: f64, n: usize) -> Self {
        if gamma <= junction_gamma(n) {
            Branch::Low
        } else {
            Branch::High
        }
    }
}

/// Half the maximal GM-concurrence of an X-state with purity `p`.
pub fn gamma_of_purity(p: f64, n: usize) -> Result<f64> {
    let p = check_purity(p, n)?;
    let nf = n as f64;
    Ok(if p <= junction_purity(n) {
        (0.5 * p - 0.5 / (nf + 1.0)).sqrt()
    } else {
        0.5 / nf + 0.5 * ((1.0 - 1.0 / nf) * (p - 1.0 / nf)).sqrt()
    })
}

/// Auxiliary function `f(γ)`.
pub fn aux_f(gamma: f64, n: usize) -> f64 {
    match Branch::of_gamma(gamma, n) {
        Branch::Low => junction_gamma(n),
        Branch::High => gamma,
    }
}

/// Auxiliary function `g(γ) = (1 - 2f)/(n - 1)`.
pub fn aux_g(gamma: f64, n: usize) -> f64 {
    (1.0 - 2.0 * aux_f(gamma, n)) / (n as f64 - 1.0)
}

/// Optimal spectrum and concurrence at fixed purity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurityOptimum {
    pub purity: f64,
    pub gamma: f64,
    pub concurrence: f64,
    pub spectrum: Spectrum,
    pub f: f64,
    pub g: f64,
}

/// `λ_1 = f+γ`, `λ_{2..n} = g`, `λ_{n+1} = f-γ`, the rest zero.
pub fn xmems_spectrum_from_purity(p: f64, n: usize) -> Result<PurityOptimum> {
    let purity = check_purity(p, n)?;
    let gamma = gamma_of_purity(purity, n)?;
    let f = aux_f(gamma, n);
    let g = aux_g(gamma, n);
    let mut values = vec![0.0; 2 * n];
    values[0] = f + gamma;
    for v in &mut values[1..n] {
        *v = g;
    }
    values[n] = (f - gamma).max(0.0);
    // The purity family makes sense for any n >= 2, not only qubit dimensions.
    let spectrum = if n.is_power_of_two() {
        Spectrum::new(values)?
    } else {
        Spectrum { n, values }
    };
    Ok(PurityOptimum { purity, gamma, concurrence: 2.0 * gamma, spectrum, f, g })
}

/// X-MEMS of `n_qubits` qubits at purity `p`.
pub fn xmems_from_purity(p: f64, n_qubits: usize) -> Result<XState> {
    if !(2..=usize::BITS as usize - 2).contains(&n_qubits) {
        return Err(Error::InvalidArgument(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let opt = xmems_spectrum_from_purity(p, 1 << (n_qubits - 1))?;
    xmems_from_spectrum(&opt.spectrum)
}

/// Inequality-form SDP over `λ ∈ ℝⁿ` maximizing `2λ_1 + Σ_{j≥2} λ_j` at purity
/// at most `p`, with `λ_{n+1} = 1 - Σλ`. The quadratic purity constraint is
/// written as an LMI through a Schur complement. The reported value is
/// `-1 - p*`, the optimal concurrence.
pub fn build_purity_sdp(p: f64, n: usize) -> Result<SdpProblem> {
    let p = check_purity(p, n)?;
    let sizes = [n + 1, 1];
    let mut f0 = SparseSym::new(&sizes);
    let q = 1.0 / (n as f64 + 1.0);
    for j in 0..n {
        for i in 0..=j {
            f0.push(0, i, j, if i == j { 1.0 - q } else { -q });
        }
    }
    f0.push(0, n, n, p - 1.0);
    f0.push(1, 0, 0, 1.0);
    let f = (0..n)
        .map(|i| {
            let mut fi = SparseSym::new(&sizes);
            fi.push(0, i, n, 1.0);
            fi.push(0, n, n, 2.0);
            fi.push(1, 0, 0, -1.0);
            fi
        })
        .collect();
    let mut c = vec![-1.0; n];
    c[0] = -2.0;
    Ok(SdpProblem::inequality(InequalityForm { c, f0, f }).with_value_map(ValueMap { offset: -1.0, scale: -1.0 }))
}

/// The analytic optimum `(λ_1, …, λ_n)` as a point of [`build_purity_sdp`].
pub fn purity_sdp_point(p: f64, n: usize) -> Result<Vec<f64>> {
    Ok(xmems_spectrum_from_purity(p, n)?.spectrum.values()[..n].to_vec())
}

/// Numerical solution of the purity SDP.
#[derive(Debug, Clone, PartialEq)]
pub struct PuritySdpResult {
    /// Reported optimum `-1 - p*`, to compare with `2γ(P)`.
    pub concurrence: f64,
    /// `λ_1, …, λ_n, λ_{n+1}`.
    pub lambda: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub gap: f64,
    /// Inequality-form dual point `Z`.
    pub dual: BlockDiag,
}

pub fn solve_purity_sdp(p: f64, n: usize, opts: &SolverOptions) -> Result<PuritySdpResult> {
    let problem = build_purity_sdp(p, n)?;
    let sol = sdp::solve(&problem, opts)?;
    let mut lambda = sol.primal.as_vector().map(<[f64]>::to_vec).unwrap_or_default();
    lambda.push(1.0 - lambda.iter().sum::<f64>());
    Ok(PuritySdpResult {
        concurrence: sol.reported_value(),
        lambda,
        status: sol.status,
        iterations: sol.iterations,
        gap: sol.gap,
        dual: sol.dual.as_matrix().cloned().unwrap_or_else(|| BlockDiag::zeros(&[n + 1, 1])),
    })
}

/// The four scalars defining the dual certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZValues {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z4: f64,
}

/// Closed-form `𝔷_1..𝔷_4` on the given branch.
pub fn z_values(gamma: f64, n: usize, branch: Branch) -> ZValues {
    let nf = n as f64;
    match branch {
        Branch::Low => ZValues {
            z1: 2.0 + 2.0 * gamma + 0.5 / gamma,
            z2: (1.0 + gamma).powi(2) / (2.0 * gamma),
            z3: 0.5 / gamma,
            z4: 0.0,
        },
        Branch::High => {
            let den = 1.0 - 2.0 * nf * gamma;
            ZValues {
                z1: (1.0 - nf) * (1.0 + 2.0 * gamma).powi(2) / (2.0 * den),
                z2: (nf - 2.0 * gamma).powi(2) / (2.0 * (1.0 - nf) * den),
                z3: (1.0 - nf) / (2.0 * den),
                z4: 1.0 + (1.0 - 2.0 * gamma) / den,
            }
        }
    }
}

/// Nonzero eigenvalue `Λ_n(γ)` of the leading `(n+1)`-block of the certificate.
pub fn lambda_n(gamma: f64, n: usize, branch: Branch) -> f64 {
    let nf = n as f64;
    match branch {
        Branch::Low => ((nf + 1.0) * (1.0 + 2.0 * gamma) + (nf + 3.0) * gamma * gamma) / (2.0 * gamma),
        Branch::High => {
            (nf * nf + 2.0 * (nf - 1.0) - 4.0 * gamma + 4.0 * nf * gamma * gamma) / (2.0 * (-1.0 + 2.0 * nf * gamma))
        }
    }
}

/// Explicit dual feasible point of the purity SDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub n: usize,
    pub gamma: f64,
    #[serde(flatten)]
    pub z_values: ZValues,
    /// The `(n+2)`-dimensional matrix `𝒵`.
    pub z: HermitianMatrix,
    pub branch: Branch,
}

impl DualCertificate {
    /// Assembles `𝒵` from arbitrary `𝔷` values.
    pub fn from_parts(n: usize, gamma: f64, zv: ZValues, branch: Branch) -> Self {
        let ZValues { z1, z2, z3, z4 } = zv;
        let dim = n + 2;
        let mut z = DMatrix::<f64>::zeros(dim, dim);
        z[(0, 0)] = z1;
        let cross = (z1 * z2).max(0.0).sqrt();
        for i in 1..n {
            z[(0, i)] = cross;
            z[(i, 0)] = cross;
            for j in 1..n {
                z[(i, j)] = z2;
            }
        }
        let corner0 = -1.0 - z3 + 0.5 * z4;
        let corner = -0.5 - z3 + 0.5 * z4;
        z[(0, n)] = corner0;
        z[(n, 0)] = corner0;
        for i in 1..n {
            z[(i, n)] = corner;
            z[(n, i)] = corner;
        }
        z[(n, n)] = z3;
        z[(n + 1, n + 1)] = z4;
        let z = HermitianMatrix::projected(z.map(cr));
        Self { n, gamma, z_values: zv, z, branch }
    }

    /// `𝒵` split into the blocks `[n+1, 1]` of the purity SDP.
    pub fn as_block_diag(&self) -> BlockDiag {
        let n = self.n;
        let full = self.z.as_matrix().map(|v| v.re);
        BlockDiag {
            blocks: vec![full.view((0, 0), (n + 1, n + 1)).into_owned(), DMatrix::from_element(1, 1, full[(n + 1, n + 1)])],
        }
    }
}

/// Certificate of optimality of the analytic purity optimum.
pub fn dual_certificate(p: f64, n: usize) -> Result<DualCertificate> {
    let gamma = gamma_of_purity(p, n)?;
    let branch = Branch::of_gamma(gamma, n);
    Ok(DualCertificate::from_parts(n, gamma, z_values(gamma, n, branch), branch))
}

/// Outcome of one certificate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Size of the violated quantity.
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), passed: residual <= tolerance, residual, tolerance }
    }
}

/// Results of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    pub purity: f64,
    pub gamma: f64,
    pub branch: Branch,
    pub dual_value: f64,
    pub primal_value: f64,
    pub lambda_n: f64,
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_TRACE: &str = "trace_constraints";
pub const CHECK_PSD: &str = "psd";
pub const CHECK_LAMBDA: &str = "leading_eigenvalue";
pub const CHECK_DUAL_VALUE: &str = "dual_value";
pub const CHECK_PRIMAL_FEASIBLE: &str = "primal_feasible";
pub const CHECK_TIGHT: &str = "primal_equals_dual";

/// Checks `cert` against the purity SDP at `(p, n)`.
///
/// Tolerances are absolute for quantities of order one and scale with
/// `max(1, max|𝒵|)` where cancellation between large entries is unavoidable.
pub fn verify_certificate(cert: &DualCertificate, p: f64, n: usize) -> Result<VerificationReport> {
    if cert.n != n || cert.z.dim() != n + 2 {
        return Err(Error::DimensionMismatch { expected: n + 2, got: cert.z.dim() });
    }
    let problem = build_purity_sdp(p, n)?;
    let purity = check_purity(p, n)?;
    let gamma = gamma_of_purity(purity, n)?;
    let branch = Branch::of_gamma(gamma, n);
    let scale = cert.z.max_abs_entry().max(1.0);
    let zb = cert.as_block_diag();
    let mut checks = Vec::new();

    // (i) tr(F_i Z) = c_i.
    let dual_report = sdp::check_feasibility(&problem, &SdpPoint::Matrix(zb.clone()))?;
    checks.push(CheckOutcome::new(CHECK_TRACE, dual_report.max_equality_residual, 1e-10 * scale));

    // (ii) Z ⪰ 0 and the leading block is rank one with eigenvalue Λ_n.
    let lam = lambda_n(gamma, n, branch);
    let z_off_block = (cert.z.as_matrix()[(n + 1, n + 1)].re).min(0.0);
    let lead = zb.blocks[0].clone().symmetric_eigenvalues();
    let lead_max = lead.max();
    let lead_min = lead.min();
    let psd_residual = (-lead_min).max(-z_off_block).max(0.0);
    checks.push(CheckOutcome::new(CHECK_PSD, psd_residual, 1e-9 * scale));
    let rest: f64 = lead.iter().map(|v| v.abs()).sum::<f64>() - lead_max.abs();
    let lam_scale = lam.abs().max(1.0);
    checks.push(CheckOutcome::new(CHECK_LAMBDA, (lead_max - lam).abs().max(rest), 1e-9 * lam_scale));

    // (iii) d = -tr(F0 Z) = -1 - 2γ.
    let dual_value = dual_report.objective;
    checks.push(CheckOutcome::new(CHECK_DUAL_VALUE, (dual_value - (-1.0 - 2.0 * gamma)).abs(), 1e-10 * scale));

    // (iv) The analytic spectrum is primal feasible with value p = d.
    let x = purity_sdp_point(purity, n)?;
    let primal_report = sdp::check_feasibility(&problem, &SdpPoint::Vector(x))?;
    checks.push(CheckOutcome::new(CHECK_PRIMAL_FEASIBLE, (-primal_report.min_eigenvalue).max(0.0), 1e-9));
    let primal_value = primal_report.objective;
    checks.push(CheckOutcome::new(CHECK_TIGHT, (primal_value - dual_value).abs(), 1e-10 * scale));

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        n,
        purity,
        gamma,
        branch,
        dual_value,
        primal_value,
        lambda_n: lam,
        checks,
        all_passed,
    })
}
