mod common;

use common::{ball_element, element};
use num_complex::Complex64;
use proptest::prelude::*;
use spinfactor::automorphism::{bergman_sqrt, transvection_maximal, transvection_minimal};
use spinfactor::sampling::{random_isometry, random_on_sphere, stream_rng};
use spinfactor::spin::{bergman_operator, triple_product};
use spinfactor::tripotent::{classify, spectral_decompose};
use spinfactor::{Automorphism, LinearOperator, SpinElement, SpinSpace, Transvection, TripleIsometry};

fn dim_and(k: usize, radius: f64) -> impl Strategy<Value = (usize, Vec<SpinElement>, u64)> {
    (2usize..=8).prop_flat_map(move |n| {
        (Just(n), proptest::collection::vec(ball_element(n, radius), k), any::<u64>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn isometries_preserve_norm_rank_and_product((n, v, seed) in dim_and(3, 2.0)) {
        let t = random_isometry(&mut stream_rng(seed, 0), n);
        let im: Vec<_> = v.iter().map(|x| t.apply(x).unwrap()).collect();
        for (x, y) in v.iter().zip(&im) {
            prop_assert!((x.spin_norm() - y.spin_norm()).abs() <= 1e-12);
            prop_assert!(classify(x, 1e-9).same_kind(&classify(y, 1e-9)));
        }
        let lhs = t.apply(&triple_product(&v[0], &v[1], &v[2]).unwrap()).unwrap();
        let rhs = triple_product(&im[0], &im[1], &im[2]).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn phase_changes_commute_with_j_only_up_to_phase((n, v, seed) in dim_and(1, 1.0), theta in 0.1f64..3.0) {
        let t = random_isometry(&mut stream_rng(seed, 0), n).with_phase(theta);
        let x = &v[0];
        let lhs = t.apply(&x.conj_j()).unwrap();
        let rhs = t.apply(x).unwrap().conj_j().scale(Complex64::from_polar(1.0, 2.0 * theta));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn transvection_group_laws((_n, v, _seed) in dim_and(2, 0.95)) {
        let (a, z) = (&v[0], &v[1]);
        let g = Transvection::new(a.clone()).unwrap();
        let back = g.inverse().apply(&g.apply(z).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(z) <= 1e-10);
        prop_assert!(g.apply(&SpinElement::zeros(a.dim())).unwrap().max_abs_diff(a) <= 1e-12);
        prop_assert!(g.apply(z).unwrap().max_abs_diff(&g.apply_via_bergman(z).unwrap()) <= 1e-10);
        prop_assert!(g.apply(z).unwrap().spin_norm() < 1.0);
    }

    #[test]
    fn frame_factors_commute((_n, v, _seed) in dim_and(2, 0.95)) {
        let (a, z) = (&v[0], &v[1]);
        prop_assume!(a.hilbert_norm() > 1e-6);
        let f = spectral_decompose(a, 0.0).unwrap();
        let g1 = Transvection::new(f.s1 * &f.e1).unwrap();
        let g2 = Transvection::new(f.s2 * &f.e2).unwrap();
        let lhs = g1.apply(&g2.apply(z).unwrap()).unwrap();
        let rhs = g2.apply(&g1.apply(z).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }

    #[test]
    fn boundary_maps_to_boundary((n, v, seed) in dim_and(1, 0.9)) {
        let a = &v[0];
        let z = random_on_sphere(&mut stream_rng(seed, 1), n);
        let g = Transvection::new(a.clone()).unwrap();
        prop_assert!((g.apply(&z).unwrap().spin_norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bergman_sqrt_squares((_n, v, _seed) in dim_and(1, 0.95)) {
        let a = &v[0];
        let s = bergman_sqrt(a).unwrap();
        prop_assert!(s.compose(&s).max_abs_diff(&bergman_operator(a, a).unwrap()) <= 1e-10);
    }

    #[test]
    fn closed_forms_match(n in 2usize..=8, t in 0.0f64..0.95, z in element(8), phi in 0.0f64..6.0) {
        let z = SpinElement::new(z.coords()[..n].to_vec());
        let z = z.scale_real(0.9 / z.spin_norm().max(1e-9));
        let rot = Complex64::from_polar(1.0, phi);
        let e = SpinElement::basis(n, 0).scale(rot);
        let lhs = transvection_maximal(t, &e, &z).unwrap();
        let rhs = Transvection::new(e.scale_real(t)).unwrap().apply(&z).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
        let c = SpinSpace::new(n).unwrap().minimal(0, n - 1).scale(rot);
        let lhs = transvection_minimal(t, &c, &z).unwrap();
        let rhs = Transvection::new(c.scale_real(t)).unwrap().apply_via_bergman(&z).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }
}

#[test]
fn maximal_bergman_sqrt_is_scalar() {
    let n = 4;
    for t in [0.1, 0.5, 0.9] {
        let s = bergman_sqrt(&SpinElement::basis(n, 2).scale_real(t)).unwrap();
        let expect = LinearOperator::identity(n).scale(Complex64::new(1.0 - t * t, 0.0));
        assert!(s.max_abs_diff(&expect) <= 1e-12);
    }
}

#[test]
fn automorphism_composes_isometry_after_transvection() {
    let n = 3;
    let t = TripleIsometry::cyclic_shift(n, 1).unwrap();
    let a = SpinElement::from_real(&[0.3, -0.2, 0.1]);
    let g = Automorphism::new(t.clone(), a.clone()).unwrap();
    let z = SpinElement::from_real(&[0.0, 0.4, 0.2]);
    let expect = t.apply(&Transvection::new(a).unwrap().apply(&z).unwrap()).unwrap();
    assert!(g.apply(&z).unwrap().max_abs_diff(&expect) <= 1e-15);
}
