//! Quantum channels in Choi and Kraus form, and the log-det heuristic for
//! finding channels of small Kraus rank that map one state to another.
//!
//! Storage convention: the Choi matrix of `ρ ↦ Σ M ρ M†` lives on
//! `input ⊗ output` and equals `Σ_m (𝟙 ⊗ M_m)|Ψ⟩⟨Ψ|(𝟙 ⊗ M_m)†` with the
//! unnormalized `|Ψ⟩ = Σ_α |α⟩|α⟩`. Trace preservation reads `tr_2 C = 𝟙` and
//! the channel acts as `tr_1[(ρᵀ ⊗ 𝟙) C]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{
    cr, eig_hermitian, kron, partial_trace, rank_of_spectrum, validate_density_matrix, CMatrix, CVector,
    HermitianEigen, HermitianMatrix, Subsystem, DEFAULT_RANK_TOL,
};
use crate::sdp::{
    self, embed_hermitian_entries, hermitian_from_embedding, SdpProblem, SolveStatus, SolverOptions, SparseSym,
    StandardForm,
};

/// Completeness tolerance for Kraus sets and trace preservation of Choi matrices.
pub const CPTP_TOL: f64 = 1e-8;
/// Allowed negative eigenvalue of a Choi matrix.
pub const CHOI_PSD_TOL: f64 = 1e-9;

/// Choi matrix of a CPTP map on a `d`-dimensional system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiMatrix {
    d: usize,
    c: HermitianMatrix,
}

impl ChoiMatrix {
    /// Validates complete positivity (min eigenvalue `>= -1e-9`) and trace
    /// preservation (`‖tr_2 C - 𝟙‖_F <= 1e-8`).
    pub fn new(c: HermitianMatrix, d: usize) -> Result<Self> {
        let choi = Self::unchecked(c, d)?;
        let tp = choi.trace_preservation_residual();
        if tp > CPTP_TOL {
            return Err(Error::NotTracePreserving(tp));
        }
        let min = choi.min_eigenvalue()?;
        if min < -CHOI_PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(choi)
    }

    /// Only checks dimensions. For iterates whose residuals are reported rather than enforced.
    pub fn unchecked(c: HermitianMatrix, d: usize) -> Result<Self> {
        if c.dim() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: c.dim() });
        }
        Ok(Self { d, c })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.c
    }

    /// `‖tr_2 C - 𝟙‖_F`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let t = partial_trace(&self.c, self.d, self.d, Subsystem::Second).expect("dimensions checked");
        t.distance(&HermitianMatrix::identity(self.d))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        crate::qmat::min_eigenvalue(&self.c)
    }

    /// `(T^{-1/2} ⊗ 𝟙) C (T^{-1/2} ⊗ 𝟙)` with `T = tr_2 C`: exactly trace
    /// preserving, with positivity and rank unchanged. Fails when `T` is
    /// singular.
    pub fn renormalized(&self) -> Result<Self> {
        let d = self.d;
        let t = partial_trace(&self.c, d, d, Subsystem::Second)?;
        let eig = eig_hermitian(&t)?;
        if eig.values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotPsd(eig.values.iter().copied().fold(f64::INFINITY, f64::min)));
        }
        let inv_sqrt = HermitianEigen { values: eig.values.iter().map(|v| 1.0 / v.sqrt()).collect(), vectors: eig.vectors }
            .reconstruct();
        let b = kron(&inv_sqrt, &CMatrix::identity(d, d));
        Ok(Self { d, c: HermitianMatrix::projected(&b * self.c.as_matrix() * &b) })
    }

    /// Largest violation of the CPTP conditions: the trace-preservation
    /// residual or the magnitude of a negative eigenvalue.
    pub fn cptp_residual(&self) -> Result<f64> {
        Ok(self.trace_preservation_residual().max(-self.min_eigenvalue()?).max(0.0))
    }

    /// Complex numerical rank at relative threshold `tol`, which is also the
    /// minimal number of Kraus operators.
    pub fn complex_rank(&self, tol: f64) -> Result<usize> {
        crate::qmat::numerical_rank(&self.c, tol)
    }

    /// `tr_1[(ρᵀ ⊗ 𝟙) C]`.
    pub fn apply(&self, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        let d = self.d;
        if rho.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.dim() });
        }
        let c = self.c.as_matrix();
        let r = rho.as_matrix();
        let out = CMatrix::from_fn(d, d, |b, bp| {
            let mut acc = cr(0.0);
            for a in 0..d {
                for ap in 0..d {
                    acc += r[(ap, a)] * c[(ap * d + b, a * d + bp)];
                }
            }
            acc
        });
        Ok(HermitianMatrix::projected(out))
    }

    /// `log det(C + δ𝟙)`, the smooth rank surrogate.
    pub fn logdet_surrogate(&self, delta: f64) -> Result<f64> {
        let eig = eig_hermitian(&self.c)?;
        Ok(eig.values.iter().map(|v| (v + delta).ln()).sum())
    }
}

/// Operator-sum representation `ρ ↦ Σ M ρ M†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    /// Validates shapes and `‖Σ M†M - 𝟙‖_F <= 1e-8`.
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidArgument("empty Kraus set".into()));
        };
        let d = first.nrows();
        for m in &ops {
            if m.nrows() != m.ncols() {
                return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
            }
            if m.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.nrows() });
            }
        }
        let set = Self { ops };
        let res = set.completeness_residual();
        if !(res <= CPTP_TOL) {
            return Err(Error::NotTracePreserving(res));
        }
        Ok(set)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// `‖Σ M†M - 𝟙‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut s = -CMatrix::identity(d, d);
        for m in &self.ops {
            s += m.adjoint() * m;
        }
        s.norm()
    }

    /// `Σ M ρ M†`.
    pub fn apply(&self, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        let r = rho.as_matrix();
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for m in &self.ops {
            out += m * r * m.adjoint();
        }
        Ok(HermitianMatrix::projected(out))
    }
}

/// Choi matrix of a Kraus set.
pub fn choi_from_kraus(k: &KrausSet) -> Result<ChoiMatrix> {
    let d = k.dim();
    let mut c = CMatrix::zeros(d * d, d * d);
    for m in k.operators() {
        // Column-stacked vector with entry (α, β) = M[β, α].
        let v = CVector::from_fn(d * d, |i, _| m[(i % d, i / d)]);
        c += &v * v.adjoint();
    }
    ChoiMatrix::new(HermitianMatrix::projected(c), d)
}

/// Minimal Kraus set from the eigendecomposition of `c`, keeping eigenvalues
/// above `tol * max(λ_max, 1)`.
pub fn kraus_from_choi(c: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let d = c.d;
    let eig = eig_hermitian(&c.c)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let lmin = eig.values.last().copied().unwrap_or(0.0);
    if lmin < -CHOI_PSD_TOL * lmax.max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    let rank = rank_of_spectrum(&eig.values, tol);
    let ops = (0..rank)
        .map(|i| {
            let s = eig.values[i].sqrt();
            CMatrix::from_fn(d, d, |b, a| eig.vectors[(a * d + b, i)] * s)
        })
        .collect();
    KrausSet::new(ops)
}

/// Channel applying `Σ M ρ M†` through the Choi matrix of `k`.
pub fn apply_channel(c: &ChoiMatrix, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
    c.apply(rho)
}

/// Channel sending every state to `target`: operators `sqrt(a_μ)|μ⟩⟨ν|` over
/// the eigenpairs `(a_μ, |μ⟩)` of `target` above `1e-12 * a_max` and every
/// basis vector `|ν⟩`.
pub fn trivial_collapse_channel(target: &HermitianMatrix) -> Result<KrausSet> {
    validate_density_matrix(target, 1e-9)?;
    let d = target.dim();
    let eig = eig_hermitian(target)?;
    let amax = eig.values[0];
    let kept: Vec<usize> = (0..d).filter(|&i| eig.values[i] > 1e-12 * amax).collect();
    let total: f64 = kept.iter().map(|&i| eig.values[i]).sum();
    let mut ops = Vec::with_capacity(kept.len() * d);
    for &mu in &kept {
        let s = (eig.values[mu] / total).sqrt();
        let col = eig.vectors.column(mu) * cr(s);
        for nu in 0..d {
            let mut m = CMatrix::zeros(d, d);
            m.set_column(nu, &col);
            ops.push(m);
        }
    }
    KrausSet::new(ops)
}

/// `𝟙_d ⊗ target`, the Choi matrix of the collapse channel.
pub fn collapse_choi(target: &HermitianMatrix) -> Result<ChoiMatrix> {
    let d = target.dim();
    ChoiMatrix::new(HermitianMatrix::projected(kron(&CMatrix::identity(d, d), target.as_matrix())), d)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `N`-qubit Dicke state with `k` excitations.
pub fn dicke_state(n_qubits: usize, k: usize) -> Result<CVector> {
    if n_qubits == 0 || n_qubits >= usize::BITS as usize || k > n_qubits {
        return Err(Error::InvalidArgument(format!("no Dicke state with N = {n_qubits}, k = {k}")));
    }
    let amp = 1.0 / binomial(n_qubits, k).sqrt();
    Ok(CVector::from_fn(1 << n_qubits, |i, _| {
        if (i as u64).count_ones() as usize == k {
            cr(amp)
        } else {
            cr(0.0)
        }
    }))
}

/// Uniform mixture of the `N + 1` Dicke states, of purity `1/(N+1)`.
pub fn dicke_mixture(n_qubits: usize) -> Result<HermitianMatrix> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let dim = 1 << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..=n_qubits {
        let v = dicke_state(n_qubits, k)?;
        m += &v * v.adjoint();
    }
    Ok(HermitianMatrix::projected(m / cr((n_qubits + 1) as f64)))
}

/// Adds the real and imaginary parts of `tr(K C) = value` as constraints.
fn push_complex_constraint(
    k: &CMatrix,
    value: num_complex::Complex64,
    with_imag: bool,
    a: &mut Vec<SparseSym>,
    b: &mut Vec<f64>,
    size: usize,
) {
    let kd = k.adjoint();
    let re = (k + &kd) * cr(0.5);
    let mut ar = SparseSym::new(&[size]);
    embed_hermitian_entries(&re, 0.5, 0, &mut ar);
    a.push(ar);
    b.push(value.re);
    if with_imag {
        // (K - K†)/(2i)
        let im = (k - &kd) * num_complex::Complex64::new(0.0, -0.5);
        let mut ai = SparseSym::new(&[size]);
        embed_hermitian_entries(&im, 0.5, 0, &mut ai);
        a.push(ai);
        b.push(value.im);
    }
}

/// Standard-form SDP minimizing `tr(W C)` over Choi matrices `C` of CPTP maps
/// with `tr_1[(ρᵀ ⊗ 𝟙) C] = target`, posed over the real embedding of `C`.
///
/// The last diagonal output constraint is implied by the others together with
/// trace preservation and is left out, so the constraint count is `2d² - 1`.
pub fn build_conversion_sdp(rho: &HermitianMatrix, target: &HermitianMatrix, w: &HermitianMatrix) -> Result<SdpProblem> {
    let d = rho.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: target.dim() });
    }
    if w.dim() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: w.dim() });
    }
    let all: Vec<usize> = (0..d * d).collect();
    let outputs: Vec<usize> = (0..d).collect();
    Ok(assemble_conversion(d, &rho.as_matrix().transpose(), target.as_matrix(), w.as_matrix(), &all, &outputs))
}

/// Conversion SDP over the Choi coordinates in `keep`, with output
/// constraints only for rows and columns in `outputs`. `input` is the matrix
/// paired with the input factor, `ρᵀ` in the plain problem; `w` is given on
/// the kept coordinates.
fn assemble_conversion(
    d: usize,
    input: &CMatrix,
    target: &CMatrix,
    w: &CMatrix,
    keep: &[usize],
    outputs: &[usize],
) -> SdpProblem {
    let size = 2 * keep.len();
    let restrict = |m: &CMatrix| m.select_rows(keep).select_columns(keep);
    let mut cmat = SparseSym::new(&[size]);
    embed_hermitian_entries(w, 0.5, 0, &mut cmat);

    let mut a = Vec::new();
    let mut b = Vec::new();
    let id = CMatrix::identity(d, d);
    let unit = |i: usize, j: usize| {
        let mut e = CMatrix::zeros(d, d);
        e[(i, j)] = cr(1.0);
        e
    };
    // Trace preservation: tr((E_{α'α} ⊗ 𝟙) C) = δ_{αα'}.
    for al in 0..d {
        for alp in al..d {
            let k = restrict(&kron(&unit(alp, al), &id));
            let v = if al == alp { cr(1.0) } else { cr(0.0) };
            push_complex_constraint(&k, v, al != alp, &mut a, &mut b, size);
        }
    }
    // Output: tr((input ⊗ E_{β'β}) C) = target[β, β'].
    let last = outputs.last().copied();
    for (i, &be) in outputs.iter().enumerate() {
        for &bep in &outputs[i..] {
            if Some(be) == last && Some(bep) == last {
                continue;
            }
            let k = restrict(&kron(input, &unit(bep, be)));
            push_complex_constraint(&k, target[(be, bep)], be != bep, &mut a, &mut b, size);
        }
    }
    SdpProblem::standard(StandardForm { c: cmat, a, b })
}

/// Relative eigenvalue threshold below which a direction counts as outside
/// the support of `ρ` or of the target.
pub const SUPPORT_TOL: f64 = 1e-10;

/// The smallest face of the Choi cone holding every channel that maps `ρ`
/// to `target`.
///
/// Any Kraus operator of such a channel sends the support of `ρ` into the
/// support of the target. When the target is rank-deficient this forces a
/// kernel on every feasible Choi matrix, the plain conversion SDP has no
/// interior point, and interior-point iterates lose accuracy. Working in the
/// eigenbases of `ρ̄` and the target, the forced zeros are coordinates and
/// are dropped; the reduced problem is strictly feasible.
#[derive(Debug, Clone)]
pub struct ConversionFace {
    d: usize,
    /// Isometry from the kept coordinates into `ℂ^{d²}`.
    basis: CMatrix,
    keep: Vec<usize>,
    outputs: Vec<usize>,
    input: CMatrix,
    target: CMatrix,
}

impl ConversionFace {
    pub fn new(rho: &HermitianMatrix, target: &HermitianMatrix) -> Result<Self> {
        let d = rho.dim();
        if target.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: target.dim() });
        }
        let er = eig_hermitian(rho)?;
        let et = eig_hermitian(target)?;
        let support = |v: &[f64]| {
            let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            v.iter().map(|&x| x > SUPPORT_TOL * top).collect::<Vec<bool>>()
        };
        let (in_rho, in_t) = (support(&er.values), support(&et.values));
        let keep: Vec<usize> = (0..d * d).filter(|&i| !(in_rho[i / d] && !in_t[i % d])).collect();
        let outputs: Vec<usize> = (0..d).filter(|&j| in_t[j]).collect();
        let diag = |v: &[f64], s: &[bool]| {
            CMatrix::from_diagonal(&CVector::from_iterator(d, v.iter().zip(s).map(|(&x, &k)| cr(if k { x } else { 0.0 }))))
        };
        let basis = kron(&er.vectors.conjugate(), &et.vectors).select_columns(&keep);
        Ok(Self {
            d,
            basis,
            keep,
            outputs,
            input: diag(&er.values, &in_rho),
            target: diag(&et.values, &in_t),
        })
    }

    /// Number of kept Choi coordinates.
    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    /// Conversion SDP for weight `w` (given on the full Choi space), posed over
    /// the real embedding of the reduced Choi matrix.
    pub fn problem(&self, w: &HermitianMatrix) -> Result<SdpProblem> {
        let dd = self.d * self.d;
        if w.dim() != dd {
            return Err(Error::DimensionMismatch { expected: dd, got: w.dim() });
        }
        let rotated = self.basis.adjoint() * w.as_matrix() * &self.basis;
        Ok(assemble_conversion(self.d, &self.input, &self.target, &rotated, &self.keep, &self.outputs))
    }

    /// Choi matrix of a reduced solution given as its real embedding.
    pub fn lift(&self, embedded: &DMatrix<f64>) -> Result<ChoiMatrix> {
        let reduced = hermitian_from_embedding(embedded);
        let full = &self.basis * reduced * self.basis.adjoint();
        ChoiMatrix::unchecked(HermitianMatrix::projected(full), self.d)
    }
}

/// `‖apply(C, ρ) - target‖_F`.
pub fn map_residual(c: &ChoiMatrix, rho: &HermitianMatrix, target: &HermitianMatrix) -> Result<f64> {
    Ok(c.apply(rho)?.distance(target))
}

/// Starting point of the log-det iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPoint {
    /// `(1 - δ)𝟙`: the first weight is `𝟙` and the first step is the trace heuristic.
    IdentityScaled,
    /// `𝟙 ⊗ target`.
    Collapse,
    Custom(ChoiMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogDetConfig {
    pub delta: f64,
    pub max_iters: usize,
    pub rank_tol: f64,
    pub stall_window: usize,
    pub initial: InitialPoint,
    pub solver: SolverOptions,
}

impl Default for LogDetConfig {
    fn default() -> Self {
        Self {
            delta: 0.2,
            max_iters: 300,
            rank_tol: DEFAULT_RANK_TOL,
            stall_window: 20,
            initial: InitialPoint::Collapse,
            solver: SolverOptions::default(),
        }
    }
}

impl LogDetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.max_iters == 0 || self.stall_window == 0 {
            return Err(Error::InvalidArgument("iteration counts must be positive".into()));
        }
        if !(self.rank_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("rank_tol must be positive, got {}", self.rank_tol)));
        }
        Ok(())
    }
}

/// One row of the rank trace. Row 0 describes the initial point and has a NaN objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDetRecord {
    pub iteration: usize,
    pub complex_rank: usize,
    /// `tr(W_i C_{i+1})` of the SDP solved at this iteration.
    pub objective: f64,
    pub cptp_residual: f64,
    pub map_residual: f64,
    /// `log det(C + δ𝟙)`.
    pub surrogate: f64,
    pub solver_iterations: usize,
    /// Status of the SDP solve; `optimal` for the initial row.
    pub solver_status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    RankStalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LogDetOutcome {
    pub final_choi: ChoiMatrix,
    pub trace: Vec<LogDetRecord>,
    pub stop_reason: StopReason,
}

impl LogDetOutcome {
    pub fn final_rank(&self) -> usize {
        self.trace.last().map(|r| r.complex_rank).unwrap_or(0)
    }
}

/// Residual bounds every accepted iterate must meet.
pub const ITERATE_CPTP_TOL: f64 = 1e-7;
pub const ITERATE_MAP_TOL: f64 = 1e-6;

/// `(C + δ𝟙)⁻¹` through the eigendecomposition of `C`.
pub fn logdet_weight(c: &HermitianMatrix, delta: f64) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(c)?;
    let inv = HermitianEigen { values: eig.values.iter().map(|v| 1.0 / (v + delta)).collect(), vectors: eig.vectors };
    Ok(HermitianMatrix::projected(inv.reconstruct()))
}

/// Iterated SDP `C_{i+1} = argmin tr[(C_i + δ𝟙)⁻¹ C]` over channels mapping
/// `rho` to `target`. Each SDP is solved from scratch on the [`ConversionFace`].
pub fn logdet_minimize_rank(rho: &HermitianMatrix, target: &HermitianMatrix, cfg: &LogDetConfig) -> Result<LogDetOutcome> {
    logdet_minimize_rank_with(rho, target, cfg, |_| {})
}

/// As [`logdet_minimize_rank`], calling `observe` after every recorded row.
pub fn logdet_minimize_rank_with(
    rho: &HermitianMatrix,
    target: &HermitianMatrix,
    cfg: &LogDetConfig,
    mut observe: impl FnMut(&LogDetRecord),
) -> Result<LogDetOutcome> {
    cfg.validate()?;
    let d = rho.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: target.dim() });
    }
    let mut current = match &cfg.initial {
        InitialPoint::IdentityScaled => {
            ChoiMatrix::unchecked(HermitianMatrix::identity(d * d).scaled(1.0 - cfg.delta), d)?
        }
        InitialPoint::Collapse => collapse_choi(target)?,
        InitialPoint::Custom(c) => {
            if c.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.d });
            }
            c.clone()
        }
    };
    let row = |it: usize, c: &ChoiMatrix, objective: f64, solver_iterations: usize, solver_status: SolveStatus| -> Result<LogDetRecord> {
        Ok(LogDetRecord {
            iteration: it,
            complex_rank: c.complex_rank(cfg.rank_tol)?,
            objective,
            cptp_residual: c.cptp_residual()?,
            map_residual: map_residual(c, rho, target)?,
            surrogate: c.logdet_surrogate(cfg.delta)?,
            solver_iterations,
            solver_status,
        })
    };
    let face = ConversionFace::new(rho, target)?;
    let first = row(0, &current, f64::NAN, 0, SolveStatus::Optimal)?;
    observe(&first);
    let mut trace = vec![first];
    let mut last_change = 0;
    let mut stop_reason = StopReason::MaxIterations;

    for it in 1..=cfg.max_iters {
        let w = logdet_weight(current.matrix(), cfg.delta)?;
        let problem = face.problem(&w)?;
        let sol = sdp::solve(&problem, &cfg.solver)?;
        let fail = |status: String| Error::SolverFailure { iteration: it, status };
        // A solve that stalls short of its tolerances still returns its best
        // iterate; it is kept when it meets the iterate residual bounds below.
        if sol.status == SolveStatus::InfeasibleDetected {
            return Err(fail(sol.status.to_string()));
        }
        let x = sol.primal.as_matrix().ok_or_else(|| fail("missing primal point".into()))?;
        // Interior-point accuracy on degenerate faces is limited mostly in
        // the trace-preservation equations; restore them exactly.
        let c = face.lift(&x.blocks[0])?.renormalized()?;
        let rec = row(it, &c, sol.primal_value, sol.iterations, sol.status)?;
        if rec.cptp_residual > ITERATE_CPTP_TOL || rec.map_residual > ITERATE_MAP_TOL {
            return Err(fail(format!(
                "{} with CPTP residual {:e}, map residual {:e}",
                sol.status, rec.cptp_residual, rec.map_residual
            )));
        }
        observe(&rec);
        if rec.complex_rank != trace.last().map(|r| r.complex_rank).unwrap_or(0) {
            last_change = it;
        }
        trace.push(rec);
        current = c;
        if it - last_change >= cfg.stall_window {
            stop_reason = StopReason::RankStalled;
            break;
        }
    }
    Ok(LogDetOutcome { final_choi: current, trace, stop_reason })
}
