use dhradius_core::linalg::{c, eigenvalues, frobenius, hermitian_eigenvalues, CMat, I};
use dhradius_core::probgen::gen_dense;
use dhradius_core::structured::{
    assemble_h0_h1, eta_structured, radius_structured_sf, radius_structured_small, reduce_structured, StructuredOptions,
};
use dhradius_core::system::DhSystem;

fn lmin(h0: &CMat, h1: &CMat, t: f64) -> f64 {
    hermitian_eigenvalues(&(h0 + h1 * c(t)))[0]
}

/// Golden-section maximization of the concave `t ↦ λ_min(H0 + tH1)`.
fn golden_sup(h0: &CMat, h1: &CMat, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (lmin(h0, h1, x1), lmin(h0, h1, x2));
    while b - a > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = lmin(h0, h1, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = lmin(h0, h1, x2);
        }
    }
    let t = 0.5 * (a + b);
    (lmin(h0, h1, t), t)
}

fn dense_h0_h1(sys: &DhSystem, b: &CMat, omega: f64) -> (CMat, CMat) {
    let n = sys.n();
    let w = sys.state().to_dense() - CMat::identity(n, n) * (I * omega);
    let t = b.adjoint() * sys.q().to_dense() * w.try_inverse().unwrap() * b;
    let l = (t.adjoint() * &t).cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let h1t = &li * t.adjoint() * li.adjoint();
    (&li * li.adjoint(), (&h1t - h1t.adjoint()) * I)
}

fn indefinite(h1: &CMat) -> bool {
    let ev = hermitian_eigenvalues(h1);
    let tol = 1e-12 * ev[0].abs().max(ev[ev.len() - 1].abs());
    ev[0] < -tol && ev[ev.len() - 1] > tol
}

#[test]
fn inner_supremum_matches_golden_section() {
    let opts = StructuredOptions::default();
    let mut checked = 0;
    for seed in 0..4u64 {
        let (sys, pair) = gen_dense(12, 40 + seed, 2, 2, 2);
        for k in 0..25 {
            let omega = 0.4 * k as f64;
            let (h0, h1) = dense_h0_h1(&sys, &pair.b, omega);
            let e = eta_structured(&sys, &pair.b, omega, &opts).unwrap();
            assert_eq!(e.attained, indefinite(&h1), "seed {seed} ω {omega}");
            if !e.attained {
                continue;
            }
            let s = 10.0 * (1.0 + e.t_star.abs());
            let (want, t) = golden_sup(&h0, &h1, -s, s);
            assert!(
                (e.value - want).abs() <= 1e-9 * want.abs(),
                "seed {seed} ω {omega}: {} vs {want}",
                e.value
            );
            assert!((e.t_star - t).abs() <= 1e-4 * (1.0 + t.abs()));
            checked += 1;
        }
    }
    assert!(checked > 20);
}

/// `min_ω η̃` on a 4000-point ω grid with golden-section t-suprema, refined
/// around the best grid points and at every attained/non-attained edge.
fn double_grid(sys: &DhSystem, b: &CMat, hi: f64) -> f64 {
    let n = 4000;
    let eta = |w: f64| -> f64 {
        let (h0, h1) = dense_h0_h1(sys, b, w);
        if !indefinite(&h1) {
            return f64::INFINITY;
        }
        golden_sup(&h0, &h1, -1e4, 1e4).0
    };
    let xs: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&w| eta(w)).collect();
    let mut best = fs.iter().copied().fold(f64::INFINITY, f64::min);
    for i in 0..n {
        let (mut a, mut bnd) = (xs[i], xs[i + 1]);
        if fs[i].is_finite() != fs[i + 1].is_finite() {
            // walk to the edge from the finite side
            if !fs[i].is_finite() {
                std::mem::swap(&mut a, &mut bnd);
            }
            for _ in 0..50 {
                let m = 0.5 * (a + bnd);
                if eta(m).is_finite() {
                    a = m;
                } else {
                    bnd = m;
                }
            }
            best = best.min(eta(a));
        }
    }
    // fine sampling around the five best grid points
    let mut idx: Vec<usize> = (0..=n).filter(|&i| fs[i].is_finite()).collect();
    idx.sort_by(|&x, &y| fs[x].total_cmp(&fs[y]));
    for &i in idx.iter().take(5) {
        let (a, bnd) = (xs[i.saturating_sub(1)], xs[(i + 1).min(n)]);
        for j in 0..=400 {
            best = best.min(eta(a + (bnd - a) * j as f64 / 400.0));
        }
    }
    best
}

#[test]
fn small_scale_radius_matches_double_grid() {
    let opts = StructuredOptions::default();
    for seed in 0..3u64 {
        let (sys, pair) = gen_dense(12, 70 + seed, 2, 2, 2);
        let hi = eigenvalues(&sys.state().to_dense())
            .unwrap()
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        let r = radius_structured_small(&sys, &pair.b, (0.0, hi), None, &opts).unwrap();
        let grid = double_grid(&sys, &pair.b, hi);
        // both are values of η̃ at concrete frequencies, so the optimizer may
        // only beat the grid, and only by the grid's resolution
        assert!(
            r.f_star <= grid * (1.0 + 1e-8),
            "seed {seed}: {} vs grid {grid}",
            r.f_star
        );
        assert!(
            (r.f_star - grid).abs() <= 1e-2 * grid,
            "seed {seed}: {} vs grid {grid}",
            r.f_star
        );
    }
}

#[test]
fn reduced_eta_independent_of_basis() {
    let (sys, pair) = gen_dense(30, 9, 3, 2, 2);
    let n = sys.n();
    let v = CMat::from_fn(n, 8, |i, j| c(((i * 7 + j * 13) % 11) as f64 - 5.0))
        .qr()
        .q();
    // a unitary mix of the same columns
    let u = CMat::from_fn(8, 8, mix_entry).qr().q();
    let v2 = &v * &u;
    let a = reduce_structured(&sys, &pair.b, &v).unwrap();
    let b = reduce_structured(&sys, &pair.b, &v2).unwrap();
    let opts = StructuredOptions::default();
    for omega in [0.5, 3.0, 11.0, 27.0] {
        let ea = a.eta(omega, &opts).unwrap();
        let eb = b.eta(omega, &opts).unwrap();
        assert_eq!(ea.attained, eb.attained);
        if ea.attained {
            assert!((ea.value - eb.value).abs() <= 1e-9 * ea.value, "ω {omega}");
        }
        let pa = a.pieces(omega).unwrap();
        let pb = b.pieces(omega).unwrap();
        assert!(frobenius(&(&pa.h0 - &pb.h0)) <= 1e-9 * frobenius(&pa.h0));
    }
}

fn mix_entry(i: usize, j: usize) -> dhradius_core::C64 {
    dhradius_core::C64::new(((i * 3 + j) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
}

#[test]
fn reduced_pieces_interpolate_at_chosen_frequency() {
    let (sys, pair) = gen_dense(25, 5, 3, 1, 1);
    let b = &pair.b;
    let omega = 4.0;
    let n = sys.n();
    let w = sys.state().to_dense() - CMat::identity(n, n) * (I * omega);
    let wi = w.try_inverse().unwrap();
    let x1 = &wi * b;
    let x2 = &wi * &x1;
    let mut cols = x1.clone();
    cols.extend(x2.column_iter());
    let v = cols.qr().q();
    let red = reduce_structured(&sys, b, &v).unwrap();
    let full = assemble_h0_h1(&sys, b, omega).unwrap();
    let small = red.pieces(omega).unwrap();
    assert!(frobenius(&(&full.h0 - &small.h0)) <= 1e-10 * frobenius(&full.h0));
    assert!(frobenius(&(&full.h1 - &small.h1)) <= 1e-10 * frobenius(&full.h0));
}

#[test]
fn structured_sf_small_subspace() {
    // ℓ = 2: the initial subspace has 16 of 60 columns
    let opts = StructuredOptions {
        ell: Some(2),
        ..Default::default()
    };
    let mut agree = 0;
    for seed in 0..5u64 {
        let (sys, pair) = gen_dense(60, 100 + seed, 6, 2, 2);
        let hi = eigenvalues(&sys.state().to_dense())
            .unwrap()
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        let sf = radius_structured_sf(&sys, &pair.b, &opts).unwrap();
        let small = radius_structured_small(&sys, &pair.b, (0.0, hi), None, &StructuredOptions::default()).unwrap();
        assert!(sf.subspace_dim < 60 && sf.iterations <= 30);
        // the subspace iteration converges locally: it can stop above the
        // global minimum; its reported value is η̃_k at a point that is not
        // yet interpolated, hence the slack
        assert!(sf.f_star >= small.f_star * (1.0 - 1e-5), "seed {seed}");
        if (sf.radius - small.radius).abs() <= 1e-5 * small.radius {
            agree += 1;
        }
    }
    assert!(agree >= 4, "{agree} of 5 agree");
}
