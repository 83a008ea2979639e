use charmode::assembly::assemble_dense;
use charmode::cm::{dense_reference, ira_eigs, track_modes, IraOptions, SpectralMode, SpectralOperator};
use charmode::fmm::{translator, Kernel, SphereQuadrature};
use charmode::krylov::SolverOptions;
use charmode::linalg::{dotu, DenseMatrix, DenseOperator, LinearOperator, RealDenseOperator};
use charmode::mesh::{build_rwg, fixtures};
use charmode::C64;
use nalgebra::Vector3;
use proptest::prelude::*;

proptest! {
    #[test]
    fn translator_splits_into_cos_and_sin(
        l in 2usize..30,
        kr in 0.5f64..20.0,
        dir in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let d = Vector3::new(dir.0, dir.1, dir.2);
        prop_assume!(d.norm() > 0.1);
        let k = 2.0 * std::f64::consts::PI;
        let r = d.normalize() * (kr / k);
        let q = SphereQuadrature::new(l);
        let h = translator(Kernel::Helmholtz, l, k, &r, &q.dirs).unwrap();
        let c = translator(Kernel::Cos, l, k, &r, &q.dirs).unwrap();
        let s = translator(Kernel::Sin, l, k, &r, &q.dirs).unwrap();
        let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
        for i in 0..h.len() {
            prop_assert!((h[i] - (c[i] + C64::i() * s[i])).norm() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Modes from the fast path are real-valued in λ and R-orthogonal for
    /// plates of varying size and frequency.
    #[test]
    fn modes_are_real_and_r_orthogonal(nx in 6usize..10, ny in 3usize..6, mhz in 150.0f64..450.0, tol_exp in 2i32..5) {
        let mesh = fixtures::plate(1.0, 0.6, nx, ny, &[]).unwrap();
        let basis = build_rwg(&mesh).unwrap();
        let z = assemble_dense(&mesh, &basis, charmode::wavenumber(mhz * 1e6), 2000).unwrap();
        let r = RealDenseOperator::real_part(&z);
        let zop = DenseOperator { matrix: &z };
        let solver = SolverOptions { tol: 10f64.powi(-tol_exp), ..Default::default() };
        let op = SpectralOperator::new(SpectralMode::Sep1, &r, &zop, solver, None).unwrap();
        let sol = ira_eigs(&op, &IraOptions { nev: 3, ncv: 14, ..Default::default() }).unwrap();
        prop_assert!(sol.converged);
        for (i, a) in sol.modes.iter().enumerate() {
            prop_assert!(a.realness <= 1e-2);
            prop_assert!((dotu(&a.current, &r.apply_vec(&a.current)) - C64::new(1.0, 0.0)).norm() <= 1e-2);
            for b in &sol.modes[i + 1..] {
                prop_assert!(dotu(&a.current, &r.apply_vec(&b.current)).norm() <= 1e-2);
            }
        }
    }

    /// λ is invariant under a positive rescaling of Z; tracking a solution
    /// against itself is the identity with unit correlations.
    #[test]
    fn scale_invariance_and_self_tracking(scale in 0.1f64..10.0, nx in 5usize..9) {
        let mesh = fixtures::plate(1.0, 0.6, nx, 4, &[]).unwrap();
        let basis = build_rwg(&mesh).unwrap();
        let z = assemble_dense(&mesh, &basis, charmode::wavenumber(300e6), 2000).unwrap();
        let a = dense_reference(&z, Some(4), 2000).unwrap();
        let zs: DenseMatrix = z.map(|v| v * scale);
        let b = dense_reference(&zs, Some(4), 2000).unwrap();
        for (x, y) in a.modes.iter().zip(&b.modes) {
            prop_assert!((x.lambda - y.lambda).abs() <= 1e-8 * (1.0 + x.lambda.abs()));
        }
        let r = RealDenseOperator::real_part(&z);
        let cur: Vec<Vec<C64>> = a.modes.iter().map(|m| m.current.clone()).collect();
        let t = track_modes(&cur, &cur, &r).unwrap();
        prop_assert_eq!(t.permutation, (0..cur.len()).collect::<Vec<_>>());
        prop_assert!((t.confidence - 1.0).abs() < 1e-6);
    }
}
