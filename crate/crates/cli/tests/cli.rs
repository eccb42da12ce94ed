use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use xmems::channel::dicke_mixture;
use xmems::mems::v_matrix;
use xmems::qmat::MatrixJson;
use xmems::HermitianMatrix;

fn xmems(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmems")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn sweep_writes_one_csv_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["sweep-purity", "--N", "2,3", "--grid", "5", "--svg", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for nq in [2, 3] {
        let (header, rows) = read_csv(&dir.path().join(format!("res/sweep_N{nq}.csv")));
        assert_eq!(header[0], "n_qubits");
        assert_eq!(rows.len(), 6, "grid plus junction row");
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        assert_eq!(rows.iter().filter(|r| r[col("junction")] == "true").count(), 1);
        let last = rows.last().unwrap();
        assert_eq!(last[col("purity")], "1");
        let c: f64 = last[col("concurrence_solved")].parse().unwrap();
        assert!((c - 1.0).abs() < 1e-8);
        for r in &rows {
            let d: f64 = r[col("concurrence_abs_diff")].parse().unwrap();
            assert!(d <= 1e-8);
            // 15 significant digits at most.
            let digits = r[col("concurrence_solved")].split('e').next().unwrap().chars().filter(char::is_ascii_digit);
            assert!(digits.count() <= 16);
        }
        assert!(dir.path().join(format!("res/sweep_N{nq}.svg")).exists());
    }
}

#[test]
fn sweep_rejects_purity_outside_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["sweep-purity", "--N", "3", "--purity", "0.2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mems_at_unit_purity_is_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["mems", "--purity", "1", "--N", "3", "--out", "x.json"], dir.path());
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!((report["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["verification"]["all_passed"], true);
    let x: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
    assert_eq!(x["N"], 3);
    assert!((x["a"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((x["r"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let gm = xmems(&["gm", "x.json"], dir.path());
    let g = stdout_json(&gm);
    assert_eq!(g["kind"], "x-state");
    assert!((g["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn mems_from_pure_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), r#"{"n": 4, "values": [1, 0, 0, 0, 0, 0, 0, 0]}"#).unwrap();
    let out = xmems(&["mems", "--spectrum", "s.json"], dir.path());
    assert!(out.status.success());
    assert!((stdout_json(&out)["concurrence"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn mems_quarter_purity_three_qubits() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["mems", "--purity", "0.25", "--N", "3"], dir.path());
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!((report["concurrence"].as_f64().unwrap() - 0.1f64.sqrt()).abs() < 1e-7);
    assert_eq!(report["passed"], true);
}

#[test]
fn mems_rejects_out_of_range_purity() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["mems", "--purity", "0.2", "--N", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

fn write_matrix(path: &Path, m: &HermitianMatrix) {
    std::fs::write(path, serde_json::to_string(&MatrixJson::from(m.clone())).unwrap()).unwrap();
}

#[test]
fn unitary_of_sorted_diagonal_state_is_v() {
    let dir = tempfile::tempdir().unwrap();
    let rho = HermitianMatrix::from_real_diagonal(&[0.4, 0.3, 0.2, 0.1]);
    write_matrix(&dir.path().join("rho.json"), &rho);
    let out = xmems(&["unitary", "rho.json", "--out", "u.json"], dir.path());
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["passed"], true);
    let u: MatrixJson = serde_json::from_str(&std::fs::read_to_string(dir.path().join("u.json")).unwrap()).unwrap();
    assert!((u.to_cmatrix().unwrap() - v_matrix(2)).norm() < 1e-12);
}

#[test]
fn unitary_of_dicke_mixture_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = HermitianMatrix::from_real_diagonal(&[0.3, 0.05, 0.1, 0.15, 0.05, 0.2, 0.1, 0.05]);
    let rho = dicke_mixture(3).unwrap().scaled(0.5).add(&mixed.scaled(0.5));
    write_matrix(&dir.path().join("rho.json"), &rho);
    let out = xmems(&["unitary", "rho.json"], dir.path());
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!(report["map_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["unitary"]["dim"], 8);
}

#[test]
fn gm_bound_of_general_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(&dir.path().join("rho.json"), &dicke_mixture(3).unwrap());
    let out = xmems(&["gm", "rho.json"], dir.path());
    assert!(out.status.success());
    let g = stdout_json(&out);
    assert_eq!(g["kind"], "lower-bound");
    assert!(g["concurrence"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_cert_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["verify-cert", "--N", "3", "--purity", "0.5", "--out", "cert.json"], dir.path());
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cert.json")).unwrap()).unwrap();
    assert_eq!(report["all_passed"], true);

    // A certificate built for another purity must fail at this one.
    let cert = xmems::mems::dual_certificate(0.9, 4).unwrap();
    std::fs::write(dir.path().join("bad.json"), serde_json::to_string(&cert).unwrap()).unwrap();
    let out = xmems(&["verify-cert", "--N", "3", "--purity", "0.5", "--cert", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rank_decay_first_row_is_forty_for_three_qubits() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["rank-decay", "--N", "3", "--max-iters", "2", "--svg"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("rank_decay_N3.csv"));
    assert_eq!(header, ["iteration", "complex_rank", "objective", "cptp_residual", "map_residual"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "40");
    assert!(rows[1][1].parse::<usize>().unwrap() <= 30);
    assert!(dir.path().join("rank_decay_N3.svg").exists());
}

#[test]
fn rank_decay_two_qubits_terminates() {
    let dir = tempfile::tempdir().unwrap();
    let out = xmems(&["rank-decay", "--N", "2", "--out", "rd.csv"], dir.path());
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("rd.csv"));
    let ranks: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ranks[0], 12);
    assert!(*ranks.last().unwrap() < 12);
}
