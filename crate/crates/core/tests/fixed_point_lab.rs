use proptest::prelude::*;
use spinfactor::fixed_point::{
    density_witness, escaping_weak_family_exact, orthogonal_construction, orthogonal_truncation_bound,
    sliver_coefficients, sliver_construction, weak_fixed_point, MaximalReduction, Schedule, SliverFunctions,
    WeakFixedPointCondition,
};
use spinfactor::sampling::{random_in_ball, random_orthogonal, stream_rng};
use spinfactor::spin::r_invariant;
use spinfactor::tripotent::classify;
use spinfactor::{Automorphism, SpinElement, SpinError, SpinSpace, TripleIsometry, TripotentClass};

fn fixed_residual(iso: &TripleIsometry, t: f64, e: &SpinElement, z: &SpinElement) -> f64 {
    let g = Automorphism::new(iso.clone(), e.scale_real(t)).unwrap();
    g.apply(z).unwrap().distance(z)
}

#[test]
fn orthogonal_construction_on_long_shift() {
    let t = 0.5;
    let mut residuals = Vec::new();
    for n in [24, 48] {
        let shift = TripleIsometry::cyclic_shift(n, n).unwrap();
        let e = SpinElement::basis(n, 0);
        let z0 = orthogonal_construction(&shift, t, &e, n - 1).unwrap();
        residuals.push(fixed_residual(&shift, t, &e, &z0));
        if n == 48 {
            assert!((z0.spin_norm() - 1.0).abs() <= 1e-8);
            assert!(residuals[1] <= 1e-8);
            assert!(residuals[1] <= 10.0 * orthogonal_truncation_bound(t, n - 1));
        }
    }
    assert!(residuals[0] >= 10.0 * residuals[1], "{residuals:?}");
}

#[test]
fn orthogonal_construction_lifts_through_phase_reduction() {
    let n = 48;
    let shift = TripleIsometry::cyclic_shift(n, n).unwrap();
    let a = SpinElement::basis(n, 0).scale(num_complex::Complex64::new(0.0, 0.5));
    let red = MaximalReduction::new(&a).unwrap();
    let z_red = orthogonal_construction(&shift, red.t, &red.e, n - 1).unwrap();
    let w = red.lift(&z_red);
    let g = Automorphism::new(shift, a).unwrap();
    assert!(g.apply(&w).unwrap().distance(&w) <= 1e-8);
    assert!((w.spin_norm() - 1.0).abs() <= 1e-8);
}

#[test]
fn sliver_identity_oracle() {
    let n = 3;
    let e = SpinElement::basis(n, 0);
    for t in [0.3, 0.5, 0.7] {
        let data = sliver_construction(&TripleIsometry::identity(n), t, &e, 1e-13).unwrap();
        let u0 = data.u0.unwrap();
        assert!((u0 - (1.0 - t) / (1.0 + t)).abs() <= 1e-12, "t = {t}");
        assert!(data.z0.unwrap().max_abs_diff(&e) <= 1e-12, "t = {t}");
    }
}

#[test]
fn sliver_order_two_shift_oracle() {
    let shift = TripleIsometry::cyclic_shift(2, 2).unwrap();
    let e = SpinElement::basis(2, 0);
    let data = sliver_construction(&shift, 0.5, &e, 1e-12).unwrap();
    let expect = (4.0 - 7f64.sqrt()) / 3.0;
    assert!((data.u0.unwrap() - expect).abs() <= 1e-10);
    assert!(data.norm_defect.unwrap() <= 1e-10);
    assert!(data.j_defect.unwrap() <= 1e-12);
    assert!(data.residual.unwrap() <= 1e-10);
    assert!(data.coefficients.iter().all(|a| (-1.0..=1.0).contains(a)));
}

#[test]
fn sliver_negation_has_no_root() {
    let e = SpinElement::basis(4, 1);
    let err = sliver_construction(&TripleIsometry::neg_identity(4), 0.5, &e, 1e-12).unwrap_err();
    assert!(matches!(err, SpinError::NoRoot { .. }));
}

#[test]
fn sliver_shift_series_matches_closed_form() {
    let n = 7;
    let e = SpinElement::basis(n, 0);
    for m in 1..=n {
        let shift = TripleIsometry::cyclic_shift(n, m).unwrap();
        let f = SliverFunctions::new(&shift, &e).unwrap();
        for u in [0.2f64, 0.6, 0.9] {
            let closed = u.powi(m as i32) / (1.0 - u.powi(m as i32));
            assert!((f.f_resolvent(u).unwrap() - closed).abs() <= 1e-12);
            assert!((f.h(u).unwrap() - f.h_from_f(u).unwrap()).abs() <= 1e-10);
            let tail = u.powi(801) / (1.0 - u);
            assert!((f.f_series(u, 800) - closed).abs() <= tail + 1e-12);
        }
    }
}

#[test]
fn sliver_recovers_orthogonal_construction() {
    let (n, t) = (48, 0.5);
    let shift = TripleIsometry::cyclic_shift(n, n).unwrap();
    let e = SpinElement::basis(n, 0);
    let orth = orthogonal_construction(&shift, t, &e, n - 1).unwrap();
    let sliver = sliver_construction(&shift, t, &e, 1e-12).unwrap();
    assert!(sliver.z0.unwrap().max_abs_diff(&orth) <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sliver_coefficients_are_bounded(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = stream_rng(seed, 0);
        let iso = TripleIsometry::new(0.0, random_orthogonal(&mut rng, n)).unwrap();
        let e = SpinElement::basis(n, 0);
        let a = sliver_coefficients(&iso, &e, 50).unwrap();
        prop_assert!(a.iter().all(|x| x.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn sliver_fixed_points_when_witnessed(seed in any::<u64>(), n in 2usize..8, t in 0.2f64..0.9) {
        let mut rng = stream_rng(seed, 0);
        let iso = TripleIsometry::new(0.0, random_orthogonal(&mut rng, n)).unwrap();
        let e = SpinElement::basis(n, 0);
        let data = spinfactor::fixed_point::sliver_scan(&iso, t, &e, 1e-12).unwrap();
        if data.witnessed() {
            prop_assert!(data.norm_defect.unwrap() <= 1e-8);
            prop_assert!(data.j_defect.unwrap() <= 1e-10);
            prop_assert!(data.residual.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn boundary_weak_fixed_points_are_fixed(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = stream_rng(seed, 0);
        let iso = TripleIsometry::new(0.0, random_orthogonal(&mut rng, n)).unwrap();
        let a = random_in_ball(&mut rng, n, 0.8);
        let g = Automorphism::new(iso, a).unwrap();
        let rep = weak_fixed_point(&g, &Schedule::geometric(30), 1e-10).unwrap();
        for (alpha, z) in rep.alphas.iter().zip(&rep.iterates) {
            let step = g.apply(z).unwrap().scale_real(*alpha).distance(z);
            prop_assert!(step <= 1e-9, "inner residual {step:e}");
        }
        if rep.xi_norm >= 1.0 - 1e-6 {
            prop_assert!(rep.residual <= 1e-5);
        }
    }

    #[test]
    fn rank_one_schedules_have_fixed_limits(t in 0.05f64..0.95, p in 0usize..5, q in 0usize..5) {
        prop_assume!(p != q);
        let n = 5;
        let c = SpinSpace::new(n).unwrap().minimal(p, q);
        let g = Automorphism::new(TripleIsometry::identity(n), c.scale_real(t)).unwrap();
        let rep = weak_fixed_point(&g, &Schedule::geometric(30), 1e-10).unwrap();
        prop_assert!(rep.conditions.contains(&WeakFixedPointCondition::RankOneIterates));
        prop_assert!(rep.residual <= 1e-8);
    }
}

#[test]
fn escaping_family_diagnostics() {
    // a = t e1 is a maximal multiple, and the norms of the fixed points tend to 1
    let (t, dim) = (0.5, 30);
    let a = SpinElement::basis(dim, 0).scale_real(t);
    assert!(matches!(classify(&a, 1e-9), TripotentClass::MaximalMultiple { .. }));
    let norms: Vec<f64> = (2..=dim).map(|n| escaping_weak_family_exact(t, n, dim).unwrap().1.spin_norm()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
    assert!((norms.last().unwrap() - 1.0).abs() < 0.02);
    let g = Automorphism::new(TripleIsometry::identity(dim), a).unwrap();
    assert!((g.apply(&SpinElement::zeros(dim)).unwrap().spin_norm() - t).abs() < 1e-15);
}

#[test]
fn density_witnesses_for_random_and_singular_pairs() {
    for i in 0..200u64 {
        let mut rng = stream_rng(21, i);
        let n = 2 + (i % 7) as usize;
        let (x, y) = if i % 4 == 0 {
            let e = SpinElement::basis(n, 0);
            (e.clone(), e)
        } else {
            (random_in_ball(&mut rng, n, 1.0), random_in_ball(&mut rng, n, 1.0))
        };
        let z = density_witness(&x, &y, 1e-3, i).unwrap();
        assert!(z.spin_norm() < 1e-3);
        assert!(r_invariant(&x, &(&y + &z)).norm() > 1e-12, "pair {i}");
    }
}

#[test]
fn density_witness_is_deterministic() {
    let e = SpinElement::basis(5, 2);
    assert_eq!(density_witness(&e, &e, 1e-4, 9).unwrap(), density_witness(&e, &e, 1e-4, 9).unwrap());
}
