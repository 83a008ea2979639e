use super::*;
use crate::assembly::assemble_dense;
use crate::krylov::SolverKind;
use crate::linalg::{rel_diff, DenseMatrix, DenseOperator, RealDenseOperator};
use crate::mesh::{build_rwg, fixtures};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn small_z() -> DenseMatrix {
    let mesh = fixtures::plate(1.0, 0.6, 10, 6, &[]).unwrap();
    let basis = build_rwg(&mesh).unwrap();
    assemble_dense(&mesh, &basis, crate::wavenumber(300e6), 2000).unwrap()
}

#[test]
fn lambda_examples() {
    assert_eq!(extract_lambda(c(1.0, 0.0), SpectralMode::Sep1), (0.0, 0.0));
    let (l, r) = extract_lambda(c(0.5, -0.5), SpectralMode::Sep1);
    assert!((l - 1.0).abs() < 1e-15 && r < 1e-15);
    let mu = c(1.0, 0.0) / c(1.0, -0.1974);
    assert!((extract_lambda(mu, SpectralMode::Sep1).0 + 0.1974).abs() < 1e-14);
    let (l, r) = extract_lambda(c(0.25, 0.0), SpectralMode::Sep);
    assert!((l - 4.0).abs() < 1e-15 && r == 0.0);
}

proptest! {
    #[test]
    fn lambda_round_trip(l in -50.0f64..50.0) {
        let mu = c(1.0, 0.0) / c(1.0, l);
        let (back, realness) = extract_lambda(mu, SpectralMode::Sep1);
        prop_assert!((back - l).abs() <= 1e-12 * (1.0 + l.abs()));
        prop_assert!(realness < 1e-12);
    }

    #[test]
    fn normalization_is_scale_and_phase_invariant(mag in 0.01f64..100.0, phase in -3.1f64..3.1, seed in 0u64..50) {
        let z = DenseMatrix::from_fn(6, 6, |i, j| c(1.0 / (1.0 + (i as f64 - j as f64).abs()), 0.0));
        let r = RealDenseOperator::real_part(&z);
        let j: Vec<C64> = (0..6).map(|i| c(((i as u64 * 7 + seed) % 11) as f64 - 5.0, 0.0)).collect();
        let (a, ok) = normalize_mode(&j, &r);
        prop_assume!(ok);
        let s = C64::from_polar(mag, phase);
        let (b, _) = normalize_mode(&j.iter().map(|x| x * s).collect::<Vec<_>>(), &r);
        prop_assert!(rel_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn normalization_examples() {
    let z = DenseMatrix::from_fn(4, 4, |i, j| c(if i == j { 2.0 } else { 0.3 }, 0.0));
    let r = RealDenseOperator::real_part(&z);
    let j = vec![c(1.0, 0.0), c(-3.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)];
    let (a, ok) = normalize_mode(&j, &r);
    assert!(ok);
    assert!((dotu(&a, &r.apply_vec(&a)) - c(1.0, 0.0)).norm() < 1e-14);
    let big = a.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
    assert!(big.re > 0.0 && big.im.abs() < 1e-14);
    let (b, _) = normalize_mode(&a, &r);
    assert!(rel_diff(&b, &a) < 1e-12);
    let (d, _) = normalize_mode(&j.iter().map(|x| x * c(0.0, 3.0)).collect::<Vec<_>>(), &r);
    assert!(rel_diff(&d, &a) < 1e-12);
    let zero = RealDenseOperator::real_part(&DenseMatrix::zeros(4, 4));
    let (e, ok) = normalize_mode(&j, &zero);
    assert!(!ok);
    assert_eq!(e, j);
}

#[test]
fn grouping() {
    let g = group_degenerate(&[0.31, -0.2, 0.309, -0.201, 0.5, 0.3095], 0.01);
    assert_eq!(g, vec![vec![1, 3], vec![0, 2, 5], vec![4]]);
}

#[test]
fn tracking_identity_and_swap() {
    let z = DenseMatrix::from_fn(5, 5, |i, j| c(if i == j { 1.0 } else { 0.0 }, 0.0));
    let r = RealDenseOperator::real_part(&z);
    let e = |k: usize| (0..5).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>();
    let modes = vec![e(0), e(1), e(2)];
    let t = track_modes(&modes, &modes, &r).unwrap();
    assert_eq!(t.permutation, vec![0, 1, 2]);
    assert!((t.confidence - 1.0).abs() < 1e-15);
    let swapped = vec![e(1), e(0), e(2), e(3)];
    let t = track_modes(&modes, &swapped, &r).unwrap();
    assert_eq!(t.permutation, vec![1, 0, 2]);
    assert!(track_modes(&swapped, &modes, &r).is_err());
}

#[test]
fn principal_angle_extremes() {
    let e = |k: usize| (0..4).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>();
    let a = principal_angles(&[e(0), e(1)], &[e(1), e(0)]);
    assert!(a.iter().all(|x| *x < 1e-7));
    let b = principal_angles(&[e(0)], &[e(2)]);
    assert!((b[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn operator_matches_dense_factorization() {
    let z = small_z();
    let r = RealDenseOperator::real_part(&z);
    let zop = DenseOperator { matrix: &z };
    let tol = 1e-6;
    let solver = SolverOptions { tol, ..Default::default() };
    let op = SpectralOperator::new(SpectralMode::Sep1, &r, &zop, solver, None).unwrap();
    let n = z.nrows();
    let u: Vec<C64> = (0..n).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
    let (y, rep) = op.apply(&u).unwrap();
    assert!(rep.converged);
    let ru = nalgebra::DVector::from_vec(r.apply_vec(&u));
    let want = z.clone().lu().solve(&ru).unwrap();
    assert!(rel_diff(&y, want.as_slice()) < 10.0 * tol);
    // linearity
    let a = c(0.3, -2.0);
    let (y2, _) = op.apply(&u.iter().map(|x| x * a).collect::<Vec<_>>()).unwrap();
    let ay: Vec<C64> = y.iter().map(|x| x * a).collect();
    assert!(rel_diff(&y2, &ay) < 10.0 * tol);
    assert_eq!(op.stats().applications, 2);
    assert!(op.apply(&vec![c(0.0, 0.0); n]).is_err());
}

#[test]
fn eigenvector_is_scaled_by_mu() {
    let z = small_z();
    let dense = dense_reference(&z, Some(3), 2000).unwrap();
    let r = RealDenseOperator::real_part(&z);
    let zop = DenseOperator { matrix: &z };
    let solver = SolverOptions { tol: 1e-8, ..Default::default() };
    let op = SpectralOperator::new(SpectralMode::Sep1, &r, &zop, solver, None).unwrap();
    for m in &dense.modes {
        let (y, _) = op.apply(&m.current).unwrap();
        let mu_u: Vec<C64> = m.current.iter().map(|x| x * m.mu).collect();
        assert!(rel_diff(&y, &mu_u) < 1e-6, "λ = {}", m.lambda);
    }
}

#[test]
fn ira_on_dense_operator_matches_reference() {
    let z = small_z();
    let dense = dense_reference(&z, Some(4), 2000).unwrap();
    let r = RealDenseOperator::real_part(&z);
    let zop = DenseOperator { matrix: &z };
    let inner = 1e-6;
    for kind in [SolverKind::Gmres, SolverKind::Bicgstab] {
        let solver = SolverOptions { tol: inner, kind, ..Default::default() };
        let op = SpectralOperator::new(SpectralMode::Sep1, &r, &zop, solver, None).unwrap();
        let sol = ira_eigs(&op, &IraOptions { nev: 4, ncv: 16, ..Default::default() }).unwrap();
        assert!(sol.converged);
        for (a, b) in sol.modes.iter().zip(&dense.modes) {
            assert!((a.lambda - b.lambda).abs() <= 10.0 * inner * (1.0 + b.lambda.abs()), "{} {}", a.lambda, b.lambda);
            assert!(a.realness <= 10.0 * inner);
            assert!(magnitude_discrepancy(&a.current, &b.current) < 1e-3);
        }
        for (i, a) in sol.modes.iter().enumerate() {
            for b in &sol.modes[i + 1..] {
                assert!(dotu(&a.current, &r.apply_vec(&b.current)).norm() <= 1e-2);
            }
        }
        assert_eq!(sol.applications, op.stats().applications);
    }
}

#[test]
fn sep_mode_matches_reference() {
    let z = small_z();
    let dense = dense_reference(&z, Some(2), 2000).unwrap();
    let r = RealDenseOperator::real_part(&z);
    let x = RealDenseOperator::imag_part(&z);
    let solver = SolverOptions { tol: 1e-9, maxit: 5000, ..Default::default() };
    let op = SpectralOperator::new(SpectralMode::Sep, &r, &x, solver, None).unwrap();
    let sol = ira_eigs(&op, &IraOptions { nev: 2, ncv: 12, ..Default::default() }).unwrap();
    for (a, b) in sol.modes.iter().zip(&dense.modes) {
        assert!((a.lambda - b.lambda).abs() < 1e-5 * (1.0 + b.lambda.abs()), "{} {}", a.lambda, b.lambda);
    }
}

#[test]
fn dense_reference_scale_invariance_and_orthogonality() {
    let z = small_z();
    let a = dense_reference(&z, Some(6), 2000).unwrap();
    let b = dense_reference(&(z.clone() * c(7.5, 0.0)), Some(6), 2000).unwrap();
    let r = RealDenseOperator::real_part(&z);
    for (ma, mb) in a.modes.iter().zip(&b.modes) {
        assert!((ma.lambda - mb.lambda).abs() < 1e-9 * (1.0 + ma.lambda.abs()));
        assert!(magnitude_discrepancy(&mb.current.iter().map(|x| x * 7.5f64.sqrt()).collect::<Vec<_>>(), &ma.current) < 1e-6);
    }
    for (i, ma) in a.modes.iter().enumerate() {
        assert!((dotu(&ma.current, &r.apply_vec(&ma.current)) - c(1.0, 0.0)).norm() < 1e-10);
        for mb in &a.modes[i + 1..] {
            assert!(dotu(&ma.current, &r.apply_vec(&mb.current)).norm() < 1e-6);
        }
    }
}

#[test]
fn refinement_beats_raw_ritz_pairs_at_loose_inner_tolerance() {
    let z = small_z();
    let dense = dense_reference(&z, Some(4), 2000).unwrap();
    let r = RealDenseOperator::real_part(&z);
    let zop = DenseOperator { matrix: &z };
    let solver = SolverOptions { tol: 1e-2, ..Default::default() };
    let run = |refine: bool| {
        let op = SpectralOperator::new(SpectralMode::Sep1, &r, &zop, solver.clone(), None).unwrap();
        ira_eigs(&op, &IraOptions { nev: 4, ncv: 16, refine, ..Default::default() }).unwrap()
    };
    let (raw, refined) = (run(false), run(true));
    let err = |s: &CmSolution| s.modes.iter().zip(&dense.modes).map(|(a, b)| (a.lambda - b.lambda).abs()).fold(0.0, f64::max);
    assert!(err(&refined) < 1e-4, "refined λ error {}", err(&refined));
    assert!(err(&refined) <= err(&raw));
    for (a, b) in refined.modes.iter().zip(&raw.modes) {
        assert_eq!(a.ritz_lambda, b.lambda);
        assert!(a.current.iter().all(|c| c.im == 0.0));
    }
    for (i, a) in refined.modes.iter().enumerate() {
        assert!((dotu(&a.current, &r.apply_vec(&a.current)) - c(1.0, 0.0)).norm() < 1e-10);
        for b in &refined.modes[i + 1..] {
            assert!(dotu(&a.current, &r.apply_vec(&b.current)).norm() < 1e-10);
        }
    }
}

#[test]
fn tracking_correlation_is_a_bounded_cosine() {
    let z = DenseMatrix::from_fn(3, 3, |i, j| c(if i == j { (i + 1) as f64 } else { 0.2 }, 0.0));
    let r = RealDenseOperator::real_part(&z);
    let a = vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)];
    // same direction at a different scale: cosine 1, not the scale
    let scaled: Vec<C64> = a.iter().map(|x| x * 3.0).collect();
    let t = track_modes(&[a.clone()], &[scaled], &r).unwrap();
    assert!((t.confidence - 1.0).abs() < 1e-14);
    let b = vec![c(0.3, 0.0), c(-1.0, 0.0), c(2.0, 0.0)];
    let t = track_modes(&[a], &[b], &r).unwrap();
    assert!(t.confidence >= 0.0 && t.confidence < 1.0);
}
