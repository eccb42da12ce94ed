mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use xmems::mems::*;
use xmems::qmat::{cr, numerical_rank};
use xmems::sdp::{check_feasibility, SdpPoint, SolverOptions};
use xmems::xstate::gm_concurrence_x;
use xmems::{CMatrix, Error, HermitianMatrix};

fn spectrum(values: &[f64]) -> Spectrum {
    Spectrum::new(values.to_vec()).unwrap()
}

#[test]
fn pure_and_maximally_mixed_spectra() {
    for n in [2usize, 4, 8] {
        let mut pure = vec![0.0; 2 * n];
        pure[0] = 1.0;
        assert_eq!(max_gm_for_spectrum(&spectrum(&pure)), 1.0);
        let x = xmems_from_spectrum(&spectrum(&pure)).unwrap();
        assert_eq!((x.a()[0], x.b()[0], x.r()[0]), (0.5, 0.5, 0.5));
        assert!(x.a()[1..].iter().chain(&x.b()[1..]).chain(&x.r()[1..]).all(|&v| v == 0.0));

        let uniform = vec![1.0 / (2 * n) as f64; 2 * n];
        assert_eq!(max_gm_for_spectrum(&spectrum(&uniform)), 0.0);
        let x = xmems_from_spectrum(&spectrum(&uniform)).unwrap();
        assert_eq!(x.r()[0], 0.0);
        let mixed = HermitianMatrix::identity(2 * n).scaled(1.0 / (2 * n) as f64);
        assert!(x.to_density_matrix().distance(&mixed) < 1e-16);
    }
}

#[test]
fn two_qubit_expression() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let l = common::dirichlet_spectrum(&mut rng, 4);
        let want = (l[0] - l[2] - 2.0 * (l[1] * l[3]).sqrt()).max(0.0);
        assert_abs_diff_eq!(max_gm_for_spectrum(&spectrum(&l)), want, epsilon = 1e-15);
    }
}

#[test]
fn spectrum_validation_and_json() {
    assert!(Spectrum::new(vec![0.5, 0.5, 0.1]).is_err());
    assert!(Spectrum::new(vec![0.5, 0.6, -0.1, 0.0]).is_err());
    assert!(Spectrum::new(vec![0.5, 0.4, 0.0, 0.0]).is_err());
    let s: Spectrum = serde_json::from_str(r#"{"n": 2, "values": [0.1, 0.4, 0.2, 0.3]}"#).unwrap();
    assert_eq!(s.values(), &[0.4, 0.3, 0.2, 0.1]);
    assert!(serde_json::from_str::<Spectrum>(r#"{"n": 4, "values": [0.1, 0.4, 0.2, 0.3]}"#).is_err());
}

#[test]
fn xmems_layout_on_rational_spectrum() {
    let l = [0.375, 0.25, 0.125, 0.125, 0.0625, 0.03125, 0.03125, 0.0];
    let x = xmems_from_spectrum(&spectrum(&l)).unwrap();
    let n = 4;
    assert_eq!(x.a()[0], (l[0] + l[n]) / 2.0);
    assert_eq!(x.b()[0], (l[0] + l[n]) / 2.0);
    assert_eq!(x.r()[0], (l[0] - l[n]) / 2.0);
    for j in 2..=n {
        assert_eq!(x.a()[j - 1], l[j - 1]);
        assert_eq!(x.b()[j - 1], l[2 * n + 1 - j]);
        assert_eq!(x.r()[j - 1], 0.0);
    }
    // V diag(λ) V† reproduces the X-MEMS.
    let v = v_matrix(n);
    let rebuilt = HermitianMatrix::from_real_diagonal(&l).conjugate_by(&v);
    assert!(rebuilt.distance(&x.to_density_matrix()) < 1e-16);
}

#[test]
fn v_matrix_entries() {
    let n = 4;
    let v = v_matrix(n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut want = CMatrix::zeros(2 * n, 2 * n);
    want[(0, 0)] = cr(s);
    want[(2 * n - 1, 0)] = cr(s);
    want[(0, n)] = cr(s);
    want[(2 * n - 1, n)] = cr(-s);
    for i in 1..n {
        want[(i, i)] = cr(1.0);
        want[(n + i - 1, n + i)] = cr(1.0);
    }
    assert_eq!(v, want);
}

#[test]
fn unitary_of_sorted_diagonal_is_v() {
    for n in [2usize, 4] {
        let mut l: Vec<f64> = (0..2 * n).map(|k| (2 * n - k) as f64).collect();
        let t: f64 = l.iter().sum();
        l.iter_mut().for_each(|v| *v /= t);
        let u = optimal_unitary(&HermitianMatrix::from_real_diagonal(&l)).unwrap();
        assert!((u - v_matrix(n)).norm() < 1e-14);
    }
}

#[test]
fn two_qubit_unitary_construction() {
    // For N = 2 and sorted diagonal input the unitary pairs |00>,|11> with
    // λ1, λ3 in a Bell-like rotation and maps λ2 to |01>, λ4 to |10>.
    let l = [0.4, 0.3, 0.2, 0.1];
    let u = optimal_unitary(&HermitianMatrix::from_real_diagonal(&l)).unwrap();
    let out = HermitianMatrix::from_real_diagonal(&l).conjugate_by(&u);
    let m = out.as_matrix();
    assert_abs_diff_eq!(m[(0, 0)].re, 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(m[(3, 3)].re, 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(m[(0, 3)].re, 0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(m[(1, 1)].re, 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(m[(2, 2)].re, 0.1, epsilon = 1e-15);
}

#[test]
fn unitary_handles_degenerate_spectrum() {
    let mut rng = common::rng(12);
    let l = [0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0];
    let rho = common::isospectral_state(&mut rng, &l);
    let u = optimal_unitary(&rho).unwrap();
    let x = xmems_from_spectrum(&spectrum(&l)).unwrap();
    assert!(rho.conjugate_by(&u).distance(&x.to_density_matrix()) < 1e-9);
}

#[test]
fn gamma_examples() {
    assert_eq!(gamma_of_purity(1.0, 4).unwrap(), 0.5);
    assert_abs_diff_eq!(gamma_of_purity(0.25, 4).unwrap(), (1.0f64 / 40.0).sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(gamma_of_purity(1.0 - 1e-13, 4).unwrap(), 0.5, epsilon = 1e-15);
    for n in [2usize, 3, 4, 8, 16] {
        let pj = (n as f64 + 3.0) / ((n as f64 + 1.0) * (n as f64 + 1.0));
        let nf = n as f64;
        let low = (pj / 2.0 - 1.0 / (2.0 * (nf + 1.0))).sqrt();
        let high = 1.0 / (2.0 * nf) + 0.5 * ((1.0 - 1.0 / nf) * (pj - 1.0 / nf)).sqrt();
        assert_abs_diff_eq!(low, 1.0 / (nf + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(high, 1.0 / (nf + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_of_purity(pj, n).unwrap(), 1.0 / (nf + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(junction_purity(n), pj, epsilon = 1e-16);
        assert!(matches!(gamma_of_purity(1.0 / (nf + 1.0), n), Err(Error::PurityOutOfRange { .. })));
        assert!(gamma_of_purity(1.0 + 1e-9, n).is_err());
    }
}

#[test]
fn purity_spectra() {
    let junction = xmems_spectrum_from_purity(0.28, 4).unwrap();
    assert_abs_diff_eq!(junction.gamma, 0.2, epsilon = 1e-15);
    for (got, want) in junction.spectrum.values().iter().zip([0.4, 0.2, 0.2, 0.2, 0.0, 0.0, 0.0, 0.0]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
    }
    let pure = xmems_spectrum_from_purity(1.0, 4).unwrap();
    assert_eq!(pure.spectrum.values()[0], 1.0);
    assert!(pure.spectrum.values()[1..].iter().all(|v| v.abs() < 1e-16));

    let quarter = xmems_spectrum_from_purity(0.25, 4).unwrap();
    let g = (1.0f64 / 40.0).sqrt();
    let v = quarter.spectrum.values();
    assert_abs_diff_eq!(v[0], 0.2 + g, epsilon = 1e-15);
    assert_abs_diff_eq!(v[4], 0.2 - g, epsilon = 1e-15);
    assert_abs_diff_eq!(v[0], 0.3581, epsilon = 1e-4);
    assert_abs_diff_eq!(v[4], 0.0419, epsilon = 1e-4);
    let diag = HermitianMatrix::from_real_diagonal(v);
    assert_eq!(numerical_rank(&diag, 1e-6).unwrap(), 5);
}

#[test]
fn purity_states() {
    let ghz = xmems_from_purity(1.0, 3).unwrap();
    assert_eq!(gm_concurrence_x(&ghz), 1.0);
    assert_abs_diff_eq!(gm_concurrence_x(&xmems_from_purity(0.28, 3).unwrap()), 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(gm_concurrence_x(&xmems_from_purity(0.25, 3).unwrap()), 0.3162278, epsilon = 1e-7);
}

#[test]
fn branch_continuity_at_junction() {
    for n in [2usize, 3, 4, 8, 16] {
        let gj = junction_gamma(n);
        let lo = z_values(gj, n, Branch::Low);
        let hi = z_values(gj, n, Branch::High);
        for (a, b) in [(lo.z1, hi.z1), (lo.z2, hi.z2), (lo.z3, hi.z3), (lo.z4, hi.z4)] {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "n={n}: {a} vs {b}");
        }
        let (la, lb) = (lambda_n(gj, n, Branch::Low), lambda_n(gj, n, Branch::High));
        assert!((la - lb).abs() <= 1e-12 * la.max(1.0));
        assert_abs_diff_eq!(aux_f(gj, n), 1.0 / (n as f64 + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(aux_f(gj * (1.0 + 1e-15), n), gj, epsilon = 1e-14);
        assert_abs_diff_eq!(aux_g(gj, n), 1.0 / (n as f64 + 1.0), epsilon = 1e-14);
        for b in [Branch::Low, Branch::High] {
            assert!(lambda_n(gj, n, b) > 0.0);
        }
        assert!(lambda_n(0.5, n, Branch::High) > 0.0);
    }
}

#[test]
fn low_branch_certificate_has_zero_z4() {
    let cert = dual_certificate(0.25, 4).unwrap();
    assert_eq!(cert.branch, Branch::Low);
    assert_eq!(cert.z_values.z4, 0.0);
    let high = dual_certificate(0.5, 4).unwrap();
    assert_eq!(high.branch, Branch::High);
    assert!(high.z_values.z4 > 0.0);
}

#[test]
fn quarter_purity_dual_value() {
    let report = verify_certificate(&dual_certificate(0.25, 4).unwrap(), 0.25, 4).unwrap();
    let g = (1.0f64 / 40.0).sqrt();
    assert_abs_diff_eq!(report.dual_value, -1.0 - 2.0 * g, epsilon = 1e-12);
    assert!(report.all_passed);
}

#[test]
fn perturbed_certificate_is_not_tight() {
    let p = 0.25;
    let cert = dual_certificate(p, 4).unwrap();
    let mut zv = cert.z_values;
    zv.z1 += 1e-3;
    let bad = DualCertificate::from_parts(4, cert.gamma, zv, cert.branch);
    let report = verify_certificate(&bad, p, 4).unwrap();
    assert!(report.check(CHECK_TRACE).unwrap().passed);
    assert!(!report.check(CHECK_TIGHT).unwrap().passed);
    assert!(!report.all_passed);
}

#[test]
fn certificate_json_round_trip() {
    let cert = dual_certificate(0.6, 8).unwrap();
    let back: DualCertificate = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
    assert_eq!(back, cert);
    let report = verify_certificate(&cert, 0.6, 8).unwrap();
    let v: serde_json::Value = serde_json::to_value(&report).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), report.checks.len());
}

#[test]
fn analytic_point_is_feasible() {
    let mut rng = common::rng(13);
    for n in [2usize, 4, 8, 16] {
        let lo = 1.0 / (n as f64 + 1.0);
        for _ in 0..20 {
            let p = lo + (1.0 - lo) * rand::Rng::random::<f64>(&mut rng).max(1e-9);
            let problem = build_purity_sdp(p, n).unwrap();
            let point = purity_sdp_point(p, n).unwrap();
            let rep = check_feasibility(&problem, &SdpPoint::Vector(point)).unwrap();
            assert!(rep.min_eigenvalue >= -1e-9, "n={n} p={p}: {}", rep.min_eigenvalue);
            let gamma = gamma_of_purity(p, n).unwrap();
            assert_abs_diff_eq!(problem.value_map.apply(rep.objective), 2.0 * gamma, epsilon = 1e-12);
        }
    }
}

#[test]
fn pure_purity_sdp_two_blocks() {
    let res = solve_purity_sdp(1.0, 2, &SolverOptions::default()).unwrap();
    assert_abs_diff_eq!(res.concurrence, 1.0, epsilon = 1e-8);
}

#[test]
fn purity_sdp_near_lower_endpoint() {
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let res = solve_purity_sdp(1.0 / 3.0 + eps, 2, &SolverOptions::default()).unwrap();
        let spread = res.lambda.iter().map(|l| (l - 1.0 / 3.0).abs()).fold(0.0, f64::max);
        assert!(spread < prev);
        prev = spread;
        // The raw objective is -1 - concurrence and tends to -1.
        assert!(res.concurrence < 2.0 * eps.sqrt());
    }
    assert!(prev < 0.02);
}

#[test]
fn purity_sdp_matches_closed_form() {
    let opts = SolverOptions::default();
    for n in [2usize, 4, 8, 16] {
        let lo = 1.0 / (n as f64 + 1.0);
        for k in 1..=6 {
            let p = lo + (1.0 - lo) * k as f64 / 6.0;
            let res = solve_purity_sdp(p, n, &opts).unwrap();
            let gamma = gamma_of_purity(p, n).unwrap();
            assert!((res.concurrence - 2.0 * gamma).abs() <= 1e-8, "n={n} p={p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn isospectral_and_optimal_value(seed in any::<u64>(), nq in 2usize..6) {
        let mut rng = common::rng(seed);
        let l = common::dirichlet_spectrum(&mut rng, 1 << nq);
        let s = spectrum(&l);
        let x = xmems_from_spectrum(&s).unwrap();
        let got = common::eigenvalues_via_embedding(&x.to_density_matrix());
        for (a, b) in got.iter().zip(&l) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert!((gm_concurrence_x(&x) - max_gm_for_spectrum(&s)).abs() <= 1e-12);
    }

    #[test]
    fn unitary_contract(seed in any::<u64>(), nq in 2usize..5) {
        let mut rng = common::rng(seed);
        let l = common::dirichlet_spectrum(&mut rng, 1 << nq);
        let rho = common::isospectral_state(&mut rng, &l);
        let u = optimal_unitary(&rho).unwrap();
        let d = 1 << nq;
        prop_assert!((u.adjoint() * &u - CMatrix::identity(d, d)).norm() <= 1e-10);
        let x = xmems_from_spectrum(&Spectrum::of_density_matrix(&rho).unwrap()).unwrap();
        prop_assert!(rho.conjugate_by(&u).distance(&x.to_density_matrix()) <= 1e-9);
    }

    #[test]
    fn purity_state_properties(p in 0.0f64..1.0, nq in 2usize..6) {
        let n = 1usize << (nq - 1);
        let lo = 1.0 / (n as f64 + 1.0);
        let p = lo + (1.0 - lo) * p.max(1e-9);
        let opt = xmems_spectrum_from_purity(p, n).unwrap();
        prop_assert!((opt.spectrum.purity() - p).abs() <= 1e-10);
        prop_assert!(opt.spectrum.values()[n + 1..].iter().all(|&v| v == 0.0));
        let x = xmems_from_purity(p, nq).unwrap();
        prop_assert!((x.purity() - p).abs() <= 1e-10);
        prop_assert!((gm_concurrence_x(&x) - 2.0 * opt.gamma).abs() <= 1e-12);
        let report = verify_certificate(&dual_certificate(p, n).unwrap(), p, n).unwrap();
        prop_assert!(report.all_passed, "{:?}", report.checks);
    }

    #[test]
    fn concurrence_increases_with_purity(p in 0.0f64..1.0, dp in 1e-6f64..0.1, nq in 2usize..6) {
        let n = 1usize << (nq - 1);
        let lo = 1.0 / (n as f64 + 1.0);
        let p1 = lo + (1.0 - lo) * p.max(1e-9);
        let p2 = (p1 + dp).min(1.0);
        prop_assume!(p2 > p1);
        prop_assert!(gamma_of_purity(p2, n).unwrap() > gamma_of_purity(p1, n).unwrap());
    }
}

#[test]
fn random_isospectral_xstates_never_beat_optimum() {
    let mut rng = common::rng(14);
    for n_qubits in [2usize, 3] {
        for _ in 0..20 {
            let l = common::dirichlet_spectrum(&mut rng, 1 << n_qubits);
            let best = max_gm_for_spectrum(&spectrum(&l));
            for _ in 0..500 {
                let x = common::random_isospectral_xstate(&mut rng, &l);
                assert!(gm_concurrence_x(&x) <= best + 1e-9);
            }
        }
    }
}
