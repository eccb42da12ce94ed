//! Primal-dual path-following solver with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps, for the standard primal form.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{BlockDiag, SparseSym};
use super::{SolverOptions, StandardForm};

const STEP_FRACTION: f64 = 0.98;
const DIVERGENCE_BOUND: f64 = 1e12;
/// Iterations without a new best iterate before the solve is declared stuck.
const STALL_LIMIT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    InfeasibleDetected,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::InfeasibleDetected => "infeasible-detected",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

/// Per-iteration diagnostics of the standard-form solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
    /// `pobj - dobj + |<Rd, X>| + |yᵀ Rp|`. Weak duality makes this equal to
    /// `<X, S>`, so it is never negative beyond rounding.
    pub weak_duality_margin: f64,
}

pub(crate) struct RawSolution {
    pub x: BlockDiag,
    pub y: Vec<f64>,
    pub s: BlockDiag,
    pub pobj: f64,
    pub dobj: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

/// One constraint's entries in one block, with the rows they touch.
struct BlockPattern {
    block: usize,
    rows: Vec<usize>,
    /// (row position, column index, value); symmetric entries appear twice.
    terms: Vec<(usize, usize, f64)>,
}

fn patterns(a: &SparseSym, n_blocks: usize) -> Vec<BlockPattern> {
    let mut out = Vec::new();
    for k in 0..n_blocks {
        let entries: Vec<_> = a.entries().iter().filter(|e| e.block == k).collect();
        if entries.is_empty() {
            continue;
        }
        let mut rows: Vec<usize> = entries.iter().flat_map(|e| [e.row, e.col]).collect();
        rows.sort_unstable();
        rows.dedup();
        let pos = |r: usize| rows.binary_search(&r).unwrap();
        let mut terms = Vec::new();
        for e in entries {
            terms.push((pos(e.row), e.col, e.value));
            if e.row != e.col {
                terms.push((pos(e.col), e.row, e.value));
            }
        }
        out.push(BlockPattern { block: k, rows, terms });
    }
    out
}

/// Nesterov-Todd scaling of one block.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
    l_inv: DMatrix<f64>,
    r_inv: DMatrix<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let n = x.nrows();
    let l = Cholesky::new(x.clone())?.l();
    let r = Cholesky::new(s.clone())?.l();
    let id = DMatrix::<f64>::identity(n, n);
    let l_inv = l.solve_lower_triangular(&id)?;
    let r_inv = r.solve_lower_triangular(&id)?;
    let svd = SVD::try_new(r.transpose() * &l, true, true, f64::EPSILON, 0)?;
    let v = svd.v_t?.transpose();
    let d = svd.singular_values;
    if d.iter().any(|&di| !(di > 0.0) || !di.is_finite()) {
        return None;
    }
    let mut g = &l * &v;
    let mut g_inv = v.transpose() * &l_inv;
    for i in 0..n {
        let sq = d[i].sqrt();
        g.column_mut(i).scale_mut(1.0 / sq);
        g_inv.row_mut(i).scale_mut(sq);
    }
    let w = &g * g.transpose();
    Some(Scaling { g, g_inv, w, d, l_inv, r_inv })
}

struct Problem<'a> {
    p: &'a StandardForm,
    sizes: Vec<usize>,
    pats: Vec<Vec<BlockPattern>>,
}

impl Problem<'_> {
    fn a_op(&self, x: &BlockDiag) -> DVector<f64> {
        DVector::from_iterator(self.p.a.len(), self.p.a.iter().map(|ai| ai.dot(x)))
    }

    fn a_adj(&self, y: &[f64]) -> BlockDiag {
        let mut out = BlockDiag::zeros(&self.sizes);
        for (ai, yi) in self.p.a.iter().zip(y) {
            ai.add_scaled_to(*yi, &mut out);
        }
        out
    }

    /// Schur complement `M_ij = tr(A_i W A_j W)` for blockwise weights `W`.
    fn schur(&self, ws: &[&DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.p.a.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                // W A_i W, blockwise, only for blocks touched by A_i.
                let mut bi: Vec<Option<DMatrix<f64>>> = vec![None; self.sizes.len()];
                for pat in &self.pats[i] {
                    let w = ws[pat.block];
                    let n = w.nrows();
                    let mut yt = DMatrix::<f64>::zeros(n, pat.rows.len());
                    for &(p, col, v) in &pat.terms {
                        yt.column_mut(p).axpy(v, &w.column(col), 1.0);
                    }
                    let wr = w.select_columns(&pat.rows);
                    bi[pat.block] = Some(wr * yt.transpose());
                }
                self.p
                    .a
                    .iter()
                    .map(|aj| {
                        aj.entries()
                            .iter()
                            .map(|e| match &bi[e.block] {
                                Some(b) if e.row == e.col => e.value * b[(e.row, e.col)],
                                Some(b) => e.value * (b[(e.row, e.col)] + b[(e.col, e.row)]),
                                None => 0.0,
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let mut out = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
        let t = out.transpose();
        out += t;
        out *= 0.5;
        out
    }
}

/// Cholesky factor of the Jacobi-scaled Schur complement `D M D`, with
/// iterative refinement against the unregularized `M`.
struct SchurFactor<'a> {
    m: &'a DMatrix<f64>,
    scale: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> SchurFactor<'a> {
    fn new(m: &'a DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let diag = m.diagonal();
        let dmax = diag.amax();
        if !(dmax > 0.0 && dmax.is_finite()) {
            return None;
        }
        // Rows without any weight keep unit scale and are carried by the regularization.
        let scale = diag.map(|v| if v > 1e-30 * dmax { 1.0 / v.sqrt() } else { 1.0 / dmax.sqrt() });
        let scaled = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * scale[i] * scale[j]);
        for reg in [1e-12, 1e-8] {
            let mut mr = scaled.clone();
            for i in 0..n {
                mr[(i, i)] += reg;
            }
            if let Some(chol) = Cholesky::new(mr) {
                return Some(Self { m, scale, chol });
            }
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let step = |r: &DVector<f64>| self.chol.solve(&r.component_mul(&self.scale)).component_mul(&self.scale);
        let mut x = step(rhs);
        for _ in 0..2 {
            let r = rhs - self.m * &x;
            x += step(&r);
        }
        x
    }
}

struct Direction {
    dx: BlockDiag,
    dy: DVector<f64>,
    ds: BlockDiag,
}

/// Largest step `α ≤ 1` keeping `X + α ΔX` inside the cone, damped.
fn step_length(l_invs: &[&DMatrix<f64>], dx: &BlockDiag) -> f64 {
    let mut lam = f64::INFINITY;
    for (li, d) in l_invs.iter().zip(&dx.blocks) {
        let mut t = *li * d * li.transpose();
        let tt = t.transpose();
        t += tt;
        t *= 0.5;
        let e = t.symmetric_eigenvalues().min();
        lam = lam.min(e);
    }
    if lam >= 0.0 {
        1.0
    } else {
        (STEP_FRACTION * -1.0 / lam).min(1.0)
    }
}

fn sym_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a * b;
    (&p + p.transpose()) * 0.5
}

/// Initial point `X = ξ I`, `S = η I` per block, in the style of SDPT3.
fn initial_point(p: &StandardForm, sizes: &[usize]) -> (BlockDiag, BlockDiag) {
    let mut xi = Vec::with_capacity(sizes.len());
    let mut eta = Vec::with_capacity(sizes.len());
    for (k, &n) in sizes.iter().enumerate() {
        let sn = (n as f64).sqrt();
        let mut xk = 10f64.max(sn);
        let mut ek = 10f64.max(sn).max(p.c.block_norm(k));
        for (ai, bi) in p.a.iter().zip(&p.b) {
            let an = ai.block_norm(k);
            xk = xk.max(n as f64 * (1.0 + bi.abs()) / (1.0 + an));
            ek = ek.max(an);
        }
        xi.push(xk);
        eta.push(ek);
    }
    (BlockDiag::scaled_identities(sizes, &xi), BlockDiag::scaled_identities(sizes, &eta))
}

pub(crate) fn solve_standard(p: &StandardForm, opts: &SolverOptions) -> RawSolution {
    let sizes = p.sizes().to_vec();
    let m = p.a.len();
    let prob = Problem { p, pats: p.a.iter().map(|a| patterns(a, sizes.len())).collect(), sizes: sizes.clone() };
    let c_dense = p.c.to_dense();
    let b = DVector::from_column_slice(&p.b);
    let b_norm = b.norm();
    let c_norm = c_dense.norm();
    let order = c_dense.order() as f64;

    let (mut x, mut s) = initial_point(p, &sizes);
    let mut y = DVector::<f64>::zeros(m);
    let mut history = Vec::new();
    let status;
    let mut iterations = 0;
    let (mut step_p, mut step_d) = (0.0, 0.0);
    // Best iterate by the largest tolerance ratio; near the boundary rounding
    // can make later iterates worse, so a stuck solve falls back to it.
    let mut best: Option<(f64, BlockDiag, DVector<f64>, BlockDiag)> = None;
    let mut since_best = 0;

    loop {
        let rp = &b - prob.a_op(&x);
        let mut rd = c_dense.sub(&prob.a_adj(y.as_slice()));
        rd.axpy(-1.0, &s);
        let pobj = c_dense.dot(&x);
        let dobj = b.dot(&y);
        let xs = x.dot(&s);
        let mu = xs / order;
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        let relgap = (pobj - dobj).abs().max(xs) / (1.0 + pobj.abs() + dobj.abs());
        history.push(IterationRecord {
            iteration: iterations,
            primal_objective: pobj,
            dual_objective: dobj,
            relative_gap: relgap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            mu,
            step_primal: step_p,
            step_dual: step_d,
            weak_duality_margin: pobj - dobj + rd.dot(&x).abs() + y.dot(&rp).abs(),
        });

        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            status = SolveStatus::NumericalFailure;
            break;
        }
        let merit = (pinf.max(dinf) / opts.feas_tol).max(relgap / opts.gap_tol);
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), s.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_LIMIT {
                status = SolveStatus::NumericalFailure;
                break;
            }
        }
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if x.norm() > DIVERGENCE_BOUND || s.norm() > DIVERGENCE_BOUND || y.norm() > DIVERGENCE_BOUND {
            status = SolveStatus::InfeasibleDetected;
            break;
        }
        if iterations >= opts.max_iters {
            status = SolveStatus::MaxIterations;
            break;
        }

        let Some(sc) = x.blocks.iter().zip(&s.blocks).map(|(xb, sb)| nt_scaling(xb, sb)).collect::<Option<Vec<_>>>()
        else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let schur = prob.schur(&sc.iter().map(|t| &t.w).collect::<Vec<_>>());
        let Some(chol) = SchurFactor::new(&schur) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let wrdw = BlockDiag { blocks: sc.iter().zip(&rd.blocks).map(|(t, r)| &t.w * r * &t.w).collect() };
        let a_wrdw = prob.a_op(&wrdw);

        let direction = |rc: &[DMatrix<f64>]| -> Direction {
            let hc = BlockDiag {
                blocks: sc
                    .iter()
                    .zip(rc)
                    .map(|(t, r)| {
                        let tm = DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| 2.0 * r[(i, j)] / (t.d[i] + t.d[j]));
                        &t.g * tm * t.g.transpose()
                    })
                    .collect(),
            };
            let rhs = &rp - prob.a_op(&hc) + &a_wrdw;
            let dy = chol.solve(&rhs);
            let mut ds = rd.sub(&prob.a_adj(dy.as_slice()));
            ds.symmetrize();
            let mut dx = BlockDiag {
                blocks: hc.blocks.iter().zip(&sc).zip(&ds.blocks).map(|((h, t), d)| h - &t.w * d * &t.w).collect(),
            };
            dx.symmetrize();
            Direction { dx, dy, ds }
        };
        let l_invs: Vec<&DMatrix<f64>> = sc.iter().map(|t| &t.l_inv).collect();
        let r_invs: Vec<&DMatrix<f64>> = sc.iter().map(|t| &t.r_inv).collect();

        // Predictor: affine-scaling direction toward μ = 0.
        let rc_aff: Vec<DMatrix<f64>> = sc.iter().map(|t| DMatrix::from_diagonal(&-t.d.component_mul(&t.d))).collect();
        let aff = direction(&rc_aff);
        let ap = step_length(&l_invs, &aff.dx);
        let ad = step_length(&r_invs, &aff.ds);
        let mut xa = x.clone();
        xa.axpy(ap, &aff.dx);
        let mut sa = s.clone();
        sa.axpy(ad, &aff.ds);
        let mu_aff = xa.dot(&sa) / order;
        let expo = 1f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = (mu_aff / mu).max(0.0).powf(expo).min(1.0).max(opts.min_centering);

        // Corrector with second-order term.
        let rc: Vec<DMatrix<f64>> = sc
            .iter()
            .zip(aff.dx.blocks.iter().zip(&aff.ds.blocks))
            .map(|(t, (dxb, dsb))| {
                let dxt = &t.g_inv * dxb * t.g_inv.transpose();
                let dst = t.g.transpose() * dsb * &t.g;
                let mut r = -sym_prod(&dxt, &dst);
                for i in 0..r.nrows() {
                    r[(i, i)] += sigma * mu - t.d[i] * t.d[i];
                }
                r
            })
            .collect();
        let dir = direction(&rc);
        step_p = step_length(&l_invs, &dir.dx);
        step_d = step_length(&r_invs, &dir.ds);
        if !(step_p.is_finite() && step_d.is_finite()) || (step_p < 1e-12 && step_d < 1e-12) {
            status = SolveStatus::NumericalFailure;
            break;
        }
        x.axpy(step_p, &dir.dx);
        s.axpy(step_d, &dir.ds);
        y.axpy(step_d, &dir.dy, 1.0);
        x.symmetrize();
        s.symmetrize();
        iterations += 1;
    }

    if matches!(status, SolveStatus::NumericalFailure | SolveStatus::MaxIterations) {
        if let Some((_, bx, by, bs)) = best {
            (x, y, s) = (bx, by, bs);
        }
    }
    let pobj = c_dense.dot(&x);
    let dobj = b.dot(&y);
    RawSolution { x, y: y.as_slice().to_vec(), s, pobj, dobj, status, iterations, history }
}
