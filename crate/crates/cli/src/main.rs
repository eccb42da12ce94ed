//! `xmems`: batch front end for the X-MEMS constructions, the purity sweep
//! and the channel rank-decay experiment.
//!
//! Exit status is 0 when every requested verification passes, 1 when a
//! verification fails and 2 on errors.

mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use xmems::channel::{InitialPoint, LogDetConfig, ITERATE_CPTP_TOL, ITERATE_MAP_TOL};
use xmems::experiment::{purity_grid, rank_decay, sweep_purity, SweepRow, DEFAULT_GRID};
use xmems::mems::{
    dual_certificate, optimal_unitary, verify_certificate, xmems_from_purity, xmems_from_spectrum, DualCertificate,
    Spectrum, VerificationReport,
};
use xmems::qmat::{eigenvalues_hermitian, MatrixJson};
use xmems::sdp::SolverOptions;
use xmems::xstate::gm_lower_bound;
use xmems::{HermitianMatrix, XState};

use output::{read_json, sig15, write_json, CsvTable};
use svg::{Panel, Series, Style};

/// Agreement required between solved and closed-form concurrence in a sweep.
const SWEEP_CONCURRENCE_TOL: f64 = 1e-8;
const ISOSPECTRAL_TOL: f64 = 1e-10;
const UNITARY_MAP_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "xmems", version, about = "Maximally GM-entangled X-states, certificates and channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the purity SDP over a purity grid and compare with the closed form.
    SweepPurity {
        /// Qubit counts, comma separated.
        #[arg(long = "N", value_delimiter = ',', default_values_t = [2usize, 3, 4, 5])]
        n_qubits: Vec<usize>,
        /// Number of uniform grid points in ]1/(n+1), 1].
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Explicit purities instead of the uniform grid.
        #[arg(long, value_delimiter = ',')]
        purity: Vec<f64>,
        /// Skip the extra branch-junction row.
        #[arg(long)]
        no_junction: bool,
        /// Solver feasibility and gap tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Output directory for `sweep_N<N>.csv`.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write `sweep_N<N>.svg`.
        #[arg(long)]
        svg: bool,
    },
    /// Run the log-det rank heuristic from the Dicke mixture to the X-MEMS.
    RankDecay {
        #[arg(long = "N", default_value_t = 3)]
        n_qubits: usize,
        /// Target purity; defaults to 1/(N+1).
        #[arg(long)]
        purity: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
        /// Stop once the rank is unchanged for this many iterations.
        #[arg(long, default_value_t = 20)]
        stall_window: usize,
        #[arg(long, value_enum, default_value_t = Initial::Collapse)]
        initial: Initial,
        /// Output CSV path; defaults to `rank_decay_N<N>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG of the rank trace next to the CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Build the X-MEMS for a purity or a spectrum file.
    Mems {
        #[arg(long = "N")]
        n_qubits: Option<usize>,
        #[arg(long, conflicts_with = "spectrum", required_unless_present = "spectrum")]
        purity: Option<f64>,
        /// Spectrum JSON `{"n": n, "values": [...]}`.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Write the X-state JSON here; the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Global unitary taking a density matrix to the X-MEMS of its spectrum.
    Unitary {
        /// Density matrix JSON.
        rho: PathBuf,
        /// Write the unitary JSON here; the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GM-concurrence of an X-state file, or the X-part lower bound of a matrix file.
    Gm {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the analytic dual certificate, or a supplied one, at a purity.
    VerifyCert {
        #[arg(long = "N")]
        n_qubits: usize,
        #[arg(long)]
        purity: f64,
        /// Certificate JSON to check instead of the analytic one.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    Collapse,
    IdentityScaled,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SweepPurity { n_qubits, grid, purity, no_junction, tol, out, svg } => {
            cmd_sweep(&n_qubits, grid, &purity, !no_junction, tol, &out, svg)
        }
        Command::RankDecay { n_qubits, purity, delta, max_iters, stall_window, initial, out, svg } => {
            let cfg = LogDetConfig {
                delta,
                max_iters,
                stall_window,
                initial: match initial {
                    Initial::Collapse => InitialPoint::Collapse,
                    Initial::IdentityScaled => InitialPoint::IdentityScaled,
                },
                ..Default::default()
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("rank_decay_N{n_qubits}.csv")));
            cmd_rank_decay(n_qubits, purity, &cfg, &out, svg)
        }
        Command::Mems { n_qubits, purity, spectrum, out } => cmd_mems(n_qubits, purity, spectrum.as_deref(), out.as_deref()),
        Command::Unitary { rho, out } => cmd_unitary(&rho, out.as_deref()),
        Command::Gm { input, out } => cmd_gm(&input, out.as_deref()),
        Command::VerifyCert { n_qubits, purity, cert, out } => {
            cmd_verify_cert(n_qubits, purity, cert.as_deref(), out.as_deref())
        }
    }
}

fn blocks_for(n_qubits: usize) -> Result<usize> {
    if !(2..=8).contains(&n_qubits) {
        bail!("--N must lie between 2 and 8, got {n_qubits}");
    }
    Ok(1 << (n_qubits - 1))
}

const SWEEP_HEADER: [&str; 15] = [
    "n_qubits",
    "purity",
    "junction",
    "concurrence_analytic",
    "concurrence_solved",
    "concurrence_abs_diff",
    "lambda1_analytic",
    "lambda1_solved",
    "lambda1_abs_diff",
    "g_analytic",
    "g_solved_mean",
    "g_abs_diff",
    "g_spread",
    "status",
    "iterations",
];

fn sweep_fields(r: &SweepRow) -> Vec<String> {
    let mut f = vec![r.n_qubits.to_string(), sig15(r.purity), r.junction.to_string()];
    f.extend(
        [
            r.concurrence_analytic,
            r.concurrence_solved,
            r.concurrence_abs_diff,
            r.lambda1_analytic,
            r.lambda1_solved,
            r.lambda1_abs_diff,
            r.g_analytic,
            r.g_solved_mean,
            r.g_abs_diff,
            r.g_spread,
        ]
        .map(sig15),
    );
    f.push(r.status.to_string());
    f.push(r.iterations.to_string());
    f
}

fn cmd_sweep(
    n_list: &[usize],
    grid: usize,
    explicit: &[f64],
    junction: bool,
    tol: f64,
    out: &Path,
    svg: bool,
) -> Result<bool> {
    if grid == 0 && explicit.is_empty() {
        bail!("--grid must be positive");
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let opts = SolverOptions { feas_tol: tol, gap_tol: tol, ..Default::default() };
    let mut all_ok = true;
    for &nq in n_list {
        let n = blocks_for(nq)?;
        let lo = 1.0 / (n as f64 + 1.0);
        let points = if explicit.is_empty() { purity_grid(n, grid) } else { explicit.to_vec() };
        if let Some(p) = points.iter().find(|&&p| !(p > lo && p <= 1.0)) {
            bail!("purity {p} outside ]{lo}, 1] for N = {nq}");
        }
        let start = Instant::now();
        let rows = sweep_purity(nq, &points, junction, &opts);
        let path = out.join(format!("sweep_N{nq}.csv"));
        let mut table = CsvTable::create(&path, &SWEEP_HEADER)?;
        let (mut worst, mut failures) = (0.0f64, 0usize);
        for (p, row) in &rows {
            match row {
                Ok(r) => {
                    worst = worst.max(r.concurrence_abs_diff);
                    if !(r.concurrence_abs_diff <= SWEEP_CONCURRENCE_TOL) {
                        failures += 1;
                    }
                    table.row(&sweep_fields(r))?;
                }
                Err(e) => {
                    failures += 1;
                    let mut f = vec![nq.to_string(), sig15(*p), String::new()];
                    f.resize(SWEEP_HEADER.len() - 2, String::new());
                    f.push(format!("error: {e}"));
                    f.push(String::new());
                    table.row(&f)?;
                }
            }
        }
        table.finish()?;
        if svg {
            let ok: Vec<&SweepRow> = rows.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
            let series = |name: &str, get: fn(&SweepRow) -> f64, style| {
                Series::new(name, ok.iter().map(|r| (r.purity, get(r))).collect(), style)
            };
            let panels = [
                Panel {
                    title: format!("N = {nq}: maximal GM-concurrence"),
                    x_label: "purity".into(),
                    y_label: "concurrence".into(),
                    series: vec![
                        series("2 gamma(P)", |r| r.concurrence_analytic, Style::Line),
                        series("SDP", |r| r.concurrence_solved, Style::Markers),
                    ],
                },
                Panel {
                    title: "largest eigenvalue".into(),
                    x_label: "purity".into(),
                    y_label: "lambda_1".into(),
                    series: vec![
                        series("f + gamma", |r| r.lambda1_analytic, Style::Line),
                        series("SDP", |r| r.lambda1_solved, Style::Markers),
                    ],
                },
                Panel {
                    title: "middle eigenvalues".into(),
                    x_label: "purity".into(),
                    y_label: "lambda_2..n".into(),
                    series: vec![
                        series("g", |r| r.g_analytic, Style::Line),
                        series("SDP mean", |r| r.g_solved_mean, Style::Markers),
                    ],
                },
            ];
            let svg_path = out.join(format!("sweep_N{nq}.svg"));
            std::fs::write(&svg_path, svg::render(&panels))
                .with_context(|| format!("cannot write {}", svg_path.display()))?;
        }
        eprintln!(
            "N={nq}: {} rows, max |concurrence diff| {:.2e}, {failures} failing, {:.2}s -> {}",
            rows.len(),
            worst,
            start.elapsed().as_secs_f64(),
            path.display()
        );
        all_ok &= failures == 0;
    }
    Ok(all_ok)
}

fn cmd_rank_decay(n_qubits: usize, purity: Option<f64>, cfg: &LogDetConfig, out: &Path, svg: bool) -> Result<bool> {
    if !(2..=4).contains(&n_qubits) {
        bail!("rank-decay supports --N 2, 3 or 4, got {n_qubits}");
    }
    if n_qubits == 4 {
        eprintln!("note: N = 4 takes tens of seconds per iteration");
    }
    let mut table = CsvTable::create(out, &["iteration", "complex_rank", "objective", "cptp_residual", "map_residual"])?;
    let mut write_err = None;
    let start = Instant::now();
    let outcome = rank_decay(n_qubits, purity, cfg, |r| {
        let f = vec![
            r.iteration.to_string(),
            r.complex_rank.to_string(),
            sig15(r.objective),
            sig15(r.cptp_residual),
            sig15(r.map_residual),
        ];
        if let Err(e) = table.row(&f) {
            write_err.get_or_insert(e);
        }
        eprintln!("iteration {:4}  rank {:4}  {:.1}s", r.iteration, r.complex_rank, start.elapsed().as_secs_f64());
    });
    table.finish()?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let outcome = outcome?;
    if svg {
        let pts = outcome.trace.iter().map(|r| (r.iteration as f64, r.complex_rank as f64)).collect();
        let panel = Panel {
            title: format!("N = {n_qubits}: Choi rank, delta = {}", cfg.delta),
            x_label: "iteration".into(),
            y_label: "complex rank".into(),
            series: vec![Series::new("rank", pts, Style::LineMarkers)],
        };
        let svg_path = out.with_extension("svg");
        std::fs::write(&svg_path, svg::render(&[panel]))
            .with_context(|| format!("cannot write {}", svg_path.display()))?;
    }
    let ok = outcome.trace.iter().all(|r| r.cptp_residual <= ITERATE_CPTP_TOL && r.map_residual <= ITERATE_MAP_TOL);
    eprintln!(
        "stopped ({:?}) after {} iterations at rank {} -> {}",
        outcome.stop_reason,
        outcome.trace.len() - 1,
        outcome.final_rank(),
        out.display()
    );
    Ok(ok)
}

#[derive(Serialize)]
struct MemsReport {
    xstate: XState,
    concurrence: f64,
    purity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    isospectral_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<VerificationReport>,
    passed: bool,
}

fn cmd_mems(n_qubits: Option<usize>, purity: Option<f64>, spectrum: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let report = if let Some(p) = purity {
        let nq = n_qubits.context("--N is required with --purity")?;
        let n = blocks_for(nq)?;
        let x = xmems_from_purity(p, nq)?;
        let verification = verify_certificate(&dual_certificate(p, n)?, p, n)?;
        MemsReport {
            concurrence: x.gm_concurrence(),
            purity: x.purity(),
            passed: verification.all_passed,
            xstate: x,
            isospectral_residual: None,
            verification: Some(verification),
        }
    } else {
        let path = spectrum.expect("clap requires --spectrum without --purity");
        let s: Spectrum = read_json(path)?;
        if let Some(nq) = n_qubits {
            if 2 * s.n() != 1 << nq {
                bail!("spectrum has {} entries, expected {} for --N {nq}", 2 * s.n(), 1usize << nq);
            }
        }
        let x = xmems_from_spectrum(&s)?;
        let ev = eigenvalues_hermitian(&x.to_density_matrix())?;
        let residual = ev.iter().zip(s.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        MemsReport {
            concurrence: x.gm_concurrence(),
            purity: x.purity(),
            passed: residual <= ISOSPECTRAL_TOL,
            xstate: x,
            isospectral_residual: Some(residual),
            verification: None,
        }
    };
    if let Some(path) = out {
        write_json(&report.xstate, Some(path))?;
    }
    write_json(&report, None)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct UnitaryReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    unitary: Option<MatrixJson>,
    unitarity_residual: f64,
    map_residual: f64,
    concurrence: f64,
    passed: bool,
}

fn cmd_unitary(rho_path: &Path, out: Option<&Path>) -> Result<bool> {
    let rho: HermitianMatrix = read_json(rho_path)?;
    let u = optimal_unitary(&rho)?;
    let x = xmems_from_spectrum(&Spectrum::of_density_matrix(&rho)?)?;
    let unitarity_residual = (u.adjoint() * &u - xmems::CMatrix::identity(u.nrows(), u.ncols())).norm();
    let map_residual = rho.conjugate_by(&u).distance(&x.to_density_matrix());
    let json = MatrixJson::from_cmatrix(&u);
    if let Some(path) = out {
        write_json(&json, Some(path))?;
    }
    let report = UnitaryReport {
        unitary: out.is_none().then_some(json),
        unitarity_residual,
        map_residual,
        concurrence: x.gm_concurrence(),
        passed: unitarity_residual <= UNITARY_MAP_TOL && map_residual <= UNITARY_MAP_TOL,
    };
    write_json(&report, None)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct GmReport {
    /// `x-state` for an exact value, `lower-bound` for a general matrix.
    kind: &'static str,
    concurrence: f64,
}

fn cmd_gm(input: &Path, out: Option<&Path>) -> Result<bool> {
    let value: Value = read_json(input)?;
    let report = if value.get("N").is_some() {
        let x: XState = serde_json::from_value(value).context("malformed X-state")?;
        GmReport { kind: "x-state", concurrence: x.gm_concurrence() }
    } else {
        let rho: HermitianMatrix = serde_json::from_value(value).context("malformed matrix")?;
        GmReport { kind: "lower-bound", concurrence: gm_lower_bound(&rho)? }
    };
    write_json(&report, out)?;
    Ok(true)
}

fn cmd_verify_cert(n_qubits: usize, purity: f64, cert: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let n = blocks_for(n_qubits)?;
    let cert: DualCertificate = match cert {
        Some(path) => read_json(path)?,
        None => dual_certificate(purity, n)?,
    };
    let report = verify_certificate(&cert, purity, n)?;
    write_json(&report, out)?;
    for c in &report.checks {
        eprintln!("{:<20} {}  residual {:.2e} (tol {:.0e})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.residual, c.tolerance);
    }
    Ok(report.all_passed)
}
