//! Purity sweeps and rank-decay runs behind the command-line tool.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{dicke_mixture, logdet_minimize_rank_with, LogDetConfig, LogDetOutcome, LogDetRecord};
use crate::error::{Error, Result};
use crate::mems::{
    gamma_of_purity, junction_purity, solve_purity_sdp, xmems_from_purity, xmems_from_spectrum,
    xmems_spectrum_from_purity, Spectrum,
};
use crate::qmat::HermitianMatrix;
use crate::sdp::{SolveStatus, SolverOptions};

/// Default number of grid points per sweep.
pub const DEFAULT_GRID: usize = 25;

/// `points` purities spaced uniformly over `]1/(n+1), 1]`, ending at 1.
pub fn purity_grid(n: usize, points: usize) -> Vec<f64> {
    let lo = 1.0 / (n as f64 + 1.0);
    let h = (1.0 - lo) / points as f64;
    (1..=points).map(|k| if k == points { 1.0 } else { lo + h * k as f64 }).collect()
}

/// One purity point: analytic optimum against the solved SDP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_qubits: usize,
    pub purity: f64,
    /// `P = (n+3)/(n+1)²`, where the closed form switches branch.
    pub junction: bool,
    pub concurrence_analytic: f64,
    pub concurrence_solved: f64,
    pub concurrence_abs_diff: f64,
    pub lambda1_analytic: f64,
    pub lambda1_solved: f64,
    pub lambda1_abs_diff: f64,
    pub g_analytic: f64,
    /// Mean of the solved `λ_2..λ_n`.
    pub g_solved_mean: f64,
    /// `max_j |λ_j - g|` over `j = 2..n`.
    pub g_abs_diff: f64,
    /// `max λ_j - min λ_j` over the solved `j = 2..n`.
    pub g_spread: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// Solves the purity SDP at `purity` and compares with the closed form.
pub fn sweep_point(n_qubits: usize, purity: f64, opts: &SolverOptions) -> Result<SweepRow> {
    let n = 1usize << (n_qubits - 1);
    let opt = xmems_spectrum_from_purity(purity, n)?;
    let sol = solve_purity_sdp(purity, n, opts)?;
    let rest = &sol.lambda[1..n];
    let g_solved_mean = rest.iter().sum::<f64>() / rest.len() as f64;
    let g_abs_diff = rest.iter().map(|v| (v - opt.g).abs()).fold(0.0, f64::max);
    let (lo, hi) = rest.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let lambda1_analytic = opt.spectrum.values()[0];
    Ok(SweepRow {
        n_qubits,
        purity: opt.purity,
        junction: (opt.purity - junction_purity(n)).abs() <= 1e-14,
        concurrence_analytic: opt.concurrence,
        concurrence_solved: sol.concurrence,
        concurrence_abs_diff: (sol.concurrence - opt.concurrence).abs(),
        lambda1_analytic,
        lambda1_solved: sol.lambda[0],
        lambda1_abs_diff: (sol.lambda[0] - lambda1_analytic).abs(),
        g_analytic: opt.g,
        g_solved_mean,
        g_abs_diff,
        g_spread: hi - lo,
        status: sol.status,
        iterations: sol.iterations,
    })
}

/// Sweeps `grid` in parallel. With `include_junction` the branch-junction
/// purity is added as an extra, flagged row in sorted position.
pub fn sweep_purity(
    n_qubits: usize,
    grid: &[f64],
    include_junction: bool,
    opts: &SolverOptions,
) -> Vec<(f64, Result<SweepRow>)> {
    let mut points = grid.to_vec();
    if include_junction {
        let pj = junction_purity(1 << (n_qubits - 1));
        if !points.iter().any(|p| (p - pj).abs() <= 1e-14) {
            points.push(pj);
        }
    }
    points.sort_by(f64::total_cmp);
    points.into_par_iter().map(|p| (p, sweep_point(n_qubits, p, opts))).collect()
}

/// Input and target states of the rank-decay experiment on `n_qubits` qubits.
///
/// The input is the Dicke mixture of purity `1/(N+1)`. The target is the
/// X-MEMS at the same purity, or at `purity` if given. For `N = 2` the default
/// purity `1/3` is the excluded endpoint of the purity range, and the target
/// is the limiting X-MEMS with spectrum `(1/3, 1/3, 1/3, 0)`.
pub fn rank_decay_states(n_qubits: usize, purity: Option<f64>) -> Result<(HermitianMatrix, HermitianMatrix)> {
    if !(2..=6).contains(&n_qubits) {
        return Err(Error::InvalidArgument(format!("rank decay supports 2 to 6 qubits, got {n_qubits}")));
    }
    let rho = dicke_mixture(n_qubits)?;
    let n = 1usize << (n_qubits - 1);
    let p = purity.unwrap_or(1.0 / (n_qubits as f64 + 1.0));
    let lo = 1.0 / (n as f64 + 1.0);
    let target = if purity.is_none() && (p - lo).abs() <= 1e-12 {
        let mut values = vec![lo; n + 1];
        values.resize(2 * n, 0.0);
        xmems_from_spectrum(&Spectrum::new(values)?)?
    } else {
        xmems_from_purity(p, n_qubits)?
    };
    Ok((rho, target.to_density_matrix()))
}

/// Runs the log-det heuristic from the Dicke mixture to the X-MEMS.
pub fn rank_decay(
    n_qubits: usize,
    purity: Option<f64>,
    cfg: &LogDetConfig,
    observe: impl FnMut(&LogDetRecord),
) -> Result<LogDetOutcome> {
    let (rho, target) = rank_decay_states(n_qubits, purity)?;
    logdet_minimize_rank_with(&rho, &target, cfg, observe)
}

/// `2γ(P)` for an `N`-qubit X-state.
pub fn analytic_concurrence(purity: f64, n_qubits: usize) -> Result<f64> {
    Ok(2.0 * gamma_of_purity(purity, 1 << (n_qubits - 1))?)
}
