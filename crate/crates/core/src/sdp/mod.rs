//! Dense semidefinite programming.
//!
//! Two problem forms are supported:
//!
//! * inequality form: minimize `cᵀx` subject to `F0 + Σ x_i F_i ⪰ 0`, whose
//!   dual is maximize `-tr(F0 Z)` subject to `tr(F_i Z) = c_i`, `Z ⪰ 0`;
//! * standard primal form: minimize `tr(C X)` subject to `tr(A_i X) = b_i`,
//!   `X ⪰ 0`, whose dual is maximize `bᵀy` subject to `C - Σ y_i A_i ⪰ 0`.
//!
//! Inequality problems are solved through their dual, which is a standard
//! primal problem. All cones are real symmetric and block diagonal; complex
//! Hermitian variables enter through [`real_embedding`].

mod embed;
mod ipm;
mod matrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embed::{embed_hermitian_entries, hermitian_from_embedding, real_embedding};
pub use ipm::{IterationRecord, SolveStatus};
pub use matrix::{BlockDiag, SparseSym, SymEntry};

/// Affine map from the solved primal value to the value a caller reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueMap {
    pub offset: f64,
    pub scale: f64,
}

impl ValueMap {
    pub const IDENTITY: ValueMap = ValueMap { offset: 0.0, scale: 1.0 };

    pub fn apply(&self, value: f64) -> f64 {
        self.offset + self.scale * value
    }
}

impl Default for ValueMap {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityForm {
    pub c: Vec<f64>,
    pub f0: SparseSym,
    pub f: Vec<SparseSym>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardForm {
    pub c: SparseSym,
    pub a: Vec<SparseSym>,
    pub b: Vec<f64>,
}

impl StandardForm {
    pub fn sizes(&self) -> &[usize] {
        self.c.sizes()
    }

    /// The dual of this problem written as an inequality-form problem in `y`:
    /// minimize `-bᵀy` subject to `C + Σ y_i (-A_i) ⪰ 0`.
    pub fn dual_inequality(&self) -> InequalityForm {
        InequalityForm {
            c: self.b.iter().map(|v| -v).collect(),
            f0: self.c.clone(),
            f: self.a.iter().map(|a| a.scaled(-1.0)).collect(),
        }
    }
}

impl InequalityForm {
    pub fn sizes(&self) -> &[usize] {
        self.f0.sizes()
    }

    /// The dual problem in `Z`: minimize `tr(F0 Z)` subject to `tr(F_i Z) = c_i`.
    /// Its optimal value is the negated optimum of `self`.
    pub fn dual_standard(&self) -> StandardForm {
        StandardForm { c: self.f0.clone(), a: self.f.clone(), b: self.c.clone() }
    }

    /// `F0 + Σ x_i F_i`.
    pub fn lmi_at(&self, x: &[f64]) -> BlockDiag {
        let mut out = self.f0.to_dense();
        for (fi, xi) in self.f.iter().zip(x) {
            fi.add_scaled_to(*xi, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SdpForm {
    Inequality(InequalityForm),
    StandardPrimal(StandardForm),
}

/// A semidefinite program plus the convention mapping its optimum to a reported value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    #[serde(flatten)]
    pub form: SdpForm,
    #[serde(default)]
    pub value_map: ValueMap,
}

impl SdpProblem {
    pub fn inequality(form: InequalityForm) -> Self {
        Self { form: SdpForm::Inequality(form), value_map: ValueMap::IDENTITY }
    }

    pub fn standard(form: StandardForm) -> Self {
        Self { form: SdpForm::StandardPrimal(form), value_map: ValueMap::IDENTITY }
    }

    pub fn with_value_map(mut self, value_map: ValueMap) -> Self {
        self.value_map = value_map;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (sizes, mats, n_vars, n_rhs): (&[usize], Vec<&SparseSym>, usize, usize) = match &self.form {
            SdpForm::Inequality(p) => {
                (p.f0.sizes(), std::iter::once(&p.f0).chain(&p.f).collect(), p.f.len(), p.c.len())
            }
            SdpForm::StandardPrimal(p) => {
                (p.c.sizes(), std::iter::once(&p.c).chain(&p.a).collect(), p.a.len(), p.b.len())
            }
        };
        if n_vars != n_rhs {
            return Err(Error::DimensionMismatch { expected: n_vars, got: n_rhs });
        }
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidArgument("cone needs at least one non-empty block".into()));
        }
        for m in mats {
            if m.sizes() != sizes {
                return Err(Error::InvalidArgument("inconsistent block structure".into()));
            }
            if m.entries().iter().any(|e| !e.value.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let rhs = match &self.form {
            SdpForm::Inequality(p) => &p.c,
            SdpForm::StandardPrimal(p) => &p.b,
        };
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Equivalent standard-primal problem. For inequality input this is the
    /// dual in `Z`; the value map is negated so reported values agree.
    pub fn to_standard_primal(&self) -> SdpProblem {
        match &self.form {
            SdpForm::Inequality(p) => SdpProblem {
                form: SdpForm::StandardPrimal(p.dual_standard()),
                value_map: ValueMap { offset: self.value_map.offset, scale: -self.value_map.scale },
            },
            SdpForm::StandardPrimal(_) => self.clone(),
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Lower bound on the centering parameter. Keeping iterates near the
    /// central path makes the final point accurate to about the duality gap
    /// rather than its square root on curved optimal faces.
    pub min_centering: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-9, gap_tol: 1e-9, max_iters: 100, min_centering: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdpPoint {
    Vector(Vec<f64>),
    Matrix(BlockDiag),
}

impl SdpPoint {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            SdpPoint::Vector(v) => Some(v),
            SdpPoint::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&BlockDiag> {
        match self {
            SdpPoint::Matrix(m) => Some(m),
            SdpPoint::Vector(_) => None,
        }
    }
}

/// Primal-dual solution.
///
/// For inequality problems `primal` is the vector `x` and `dual` the matrix
/// `Z`; for standard problems `primal` is `X` and `dual` the vector `y`.
/// `slack` is `F0 + Σ x_i F_i` or `C - Σ y_i A_i` respectively.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal: SdpPoint,
    pub dual: SdpPoint,
    pub slack: BlockDiag,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub value_map: ValueMap,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Primal value mapped through the problem's value convention.
    pub fn reported_value(&self) -> f64 {
        self.value_map.apply(self.primal_value)
    }
}

/// Solves `problem` with a primal-dual interior-point method.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    match &problem.form {
        SdpForm::StandardPrimal(p) => {
            let r = ipm::solve_standard(p, opts);
            Ok(SdpSolution {
                gap: r.pobj - r.dobj,
                primal_value: r.pobj,
                dual_value: r.dobj,
                primal: SdpPoint::Matrix(r.x),
                dual: SdpPoint::Vector(r.y),
                slack: r.s,
                status: r.status,
                iterations: r.iterations,
                history: r.history,
                value_map: problem.value_map,
            })
        }
        SdpForm::Inequality(p) => {
            let r = ipm::solve_standard(&p.dual_standard(), opts);
            let x: Vec<f64> = r.y.iter().map(|v| -v).collect();
            let primal_value: f64 = p.c.iter().zip(&x).map(|(c, x)| c * x).sum();
            let dual_value = -r.pobj;
            Ok(SdpSolution {
                gap: primal_value - dual_value,
                primal_value,
                dual_value,
                primal: SdpPoint::Vector(x),
                dual: SdpPoint::Matrix(r.x),
                slack: r.s,
                status: r.status,
                iterations: r.iterations,
                history: r.history,
                value_map: problem.value_map,
            })
        }
    }
}

/// Residuals of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Largest `|tr(A_i X) - b_i|`; zero for points with no equality constraints.
    pub max_equality_residual: f64,
    /// Smallest eigenvalue of the matrix that must be PSD.
    pub min_eigenvalue: f64,
    pub objective: f64,
}

/// Evaluates a primal or dual candidate against `problem`.
///
/// Vectors are checked as inequality-form primal points (`x`) or
/// standard-form dual points (`y`); matrices as inequality-form dual points
/// (`Z`) or standard-form primal points (`X`).
pub fn check_feasibility(problem: &SdpProblem, point: &SdpPoint) -> Result<FeasibilityReport> {
    problem.validate()?;
    let dim_err = |expected: usize, got: usize| Error::DimensionMismatch { expected, got };
    match (&problem.form, point) {
        (SdpForm::Inequality(p), SdpPoint::Vector(x)) => {
            if x.len() != p.c.len() {
                return Err(dim_err(p.c.len(), x.len()));
            }
            Ok(FeasibilityReport {
                max_equality_residual: 0.0,
                min_eigenvalue: p.lmi_at(x).min_eigenvalue(),
                objective: p.c.iter().zip(x).map(|(c, x)| c * x).sum(),
            })
        }
        (SdpForm::Inequality(p), SdpPoint::Matrix(z)) => {
            check_sizes(p.sizes(), z)?;
            Ok(FeasibilityReport {
                max_equality_residual: max_residual(&p.f, &p.c, z),
                min_eigenvalue: z.min_eigenvalue(),
                objective: -p.f0.dot(z),
            })
        }
        (SdpForm::StandardPrimal(p), SdpPoint::Matrix(x)) => {
            check_sizes(p.sizes(), x)?;
            Ok(FeasibilityReport {
                max_equality_residual: max_residual(&p.a, &p.b, x),
                min_eigenvalue: x.min_eigenvalue(),
                objective: p.c.dot(x),
            })
        }
        (SdpForm::StandardPrimal(p), SdpPoint::Vector(y)) => {
            if y.len() != p.b.len() {
                return Err(dim_err(p.b.len(), y.len()));
            }
            let mut s = p.c.to_dense();
            for (ai, yi) in p.a.iter().zip(y) {
                ai.add_scaled_to(-yi, &mut s);
            }
            Ok(FeasibilityReport {
                max_equality_residual: 0.0,
                min_eigenvalue: s.min_eigenvalue(),
                objective: p.b.iter().zip(y).map(|(b, y)| b * y).sum(),
            })
        }
    }
}

fn check_sizes(sizes: &[usize], m: &BlockDiag) -> Result<()> {
    let got = m.sizes();
    if got != sizes {
        return Err(Error::InvalidArgument(format!("point has blocks {got:?}, problem has {sizes:?}")));
    }
    Ok(())
}

fn max_residual(a: &[SparseSym], b: &[f64], x: &BlockDiag) -> f64 {
    a.iter().zip(b).map(|(ai, bi)| (ai.dot(x) - bi).abs()).fold(0.0, f64::max)
}
