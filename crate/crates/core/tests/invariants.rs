use dhradius_core::eigopt::minimize_pq;
use dhradius_core::linalg::{frobenius, hermitian_eigenvalues, CMat, C64};
use dhradius_core::probgen::{gen_dense, gen_sparse};
use dhradius_core::projection::{reduce_dh, ReductionMode};
use dhradius_core::system::{validate_dh, NOT_ASYMPTOTICALLY_STABLE, Q_NOT_PD};
use dhradius_core::transfer::{eval_transfer, TransferKind};
use proptest::prelude::*;

fn basis(n: usize, k: usize, seed: u64) -> CMat {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    CMat::from_fn(n, k, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        C64::new(a, b)
    })
    .qr()
    .q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_dense_systems_are_valid(n in 2usize..30, seed in 0u64..10_000) {
        let (sys, pair) = gen_dense(n, seed, (n / 4).max(1), 2, 2);
        let rep = validate_dh(&sys, 1e-10);
        prop_assert!(rep.ok, "{rep}");
        prop_assert_eq!(pair.n(), n);
    }

    #[test]
    fn generated_sparse_systems_are_valid(n in 10usize..60, seed in 0u64..10_000, bw in 1usize..5) {
        // low-rank R can leave undamped modes, so only the structure is checked
        let (sys, _) = gen_sparse(n, seed, bw, 2, 1, 1);
        let rep = validate_dh(&sys, 1e-10);
        prop_assert!(rep.violations.iter().all(|v| v.property == NOT_ASYMPTOTICALLY_STABLE), "{rep}");
    }

    #[test]
    fn reduction_preserves_structure(seed in 0u64..10_000, k in 1usize..8, qside in any::<bool>()) {
        let (sys, pair) = gen_dense(20, seed, 3, 2, 2);
        let v = basis(20, k, seed ^ 0x5a5a);
        let mode = if qside { ReductionMode::QSide } else { ReductionMode::RSide };
        let red = reduce_dh(&sys, &pair.b, Some(&pair.c), &v, mode).unwrap();
        prop_assert_eq!(red.k(), k);
        let scale = frobenius(&red.j) + frobenius(&red.r) + frobenius(&red.q);
        prop_assert!(frobenius(&(&red.j + red.j.adjoint())) <= 1e-13 * scale);
        prop_assert!(frobenius(&(&red.r - red.r.adjoint())) <= 1e-13 * scale);
        let rmin = hermitian_eigenvalues(&red.r)[0];
        prop_assert!(rmin >= -1e-12 * frobenius(&red.r));
        prop_assert!(hermitian_eigenvalues(&red.q)[0] > 0.0);
        let rep = validate_dh(&red.to_system().unwrap(), 1e-10);
        prop_assert!(!rep.has(Q_NOT_PD), "{rep}");
    }

    #[test]
    fn transfer_is_conjugate_symmetric_for_real_data(seed in 0u64..10_000, omega in 0.01f64..20.0) {
        let (sys, pair) = gen_dense(15, seed, 2, 2, 2);
        let gp = eval_transfer(&sys, TransferKind::Rj, &pair, omega).unwrap();
        let gm = eval_transfer(&sys, TransferKind::Rj, &pair, -omega).unwrap();
        prop_assert!(frobenius(&(gp.map(|z| z.conj()) - gm)) <= 1e-10 * frobenius(&gp));
    }

    #[test]
    fn eigopt_model_never_exceeds_function(a in 0.5f64..3.0, b in -2.0f64..2.0, shift in -1.0f64..1.0) {
        // |f''| ≤ 9a + 0.2 on the whole interval
        let f = |x: f64| a * (3.0 * x).sin() + 0.1 * (x - shift).powi(2) + b;
        let df = |x: f64| 3.0 * a * (3.0 * x).cos() + 0.2 * (x - shift);
        let gamma = -(9.0 * a + 0.2) - 1e-6;
        let out = minimize_pq(|x| Ok((f(x), df(x))), (-4.0, 4.0), gamma, 1e-8, 500).unwrap();
        for i in 0..=400 {
            let x = -4.0 + 8.0 * i as f64 / 400.0;
            prop_assert!(out.model.eval(x) <= f(x) + 1e-9 * (1.0 + f(x).abs()), "x {x}");
        }
        let grid = (0..=20_000).map(|i| f(-4.0 + 8.0 * i as f64 / 20_000.0)).fold(f64::INFINITY, f64::min);
        prop_assert!(out.f <= grid + 1e-6);
    }
}
