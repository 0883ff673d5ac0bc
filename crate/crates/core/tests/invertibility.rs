use spinfactor::sampling::{self, random_in_ball, stream_rng};
use spinfactor::spin::{bergman_operator, r_invariant};
use spinfactor::SpinElement;

fn singular_pair(seed: u64, index: u64) -> (SpinElement, SpinElement) {
    sampling::singular_pair(&mut stream_rng(seed, index), 3 + (index % 8) as usize)
}

#[test]
fn singular_pairs_have_singular_bergman_operators() {
    for i in 0..200 {
        let (x, y) = singular_pair(11, i);
        assert!(r_invariant(&x, &y).norm() <= 1e-14);
        let sigma = bergman_operator(&x, &y).unwrap().min_singular_value();
        assert!(sigma <= 1e-8, "pair {i}: {sigma:e}");
    }
}

#[test]
fn regular_pairs_have_invertible_bergman_operators() {
    let mut checked = 0;
    for i in 0..400 {
        let mut rng = stream_rng(12, i);
        let n = 2 + (i % 9) as usize;
        let x = random_in_ball(&mut rng, n, 1.0);
        let y = random_in_ball(&mut rng, n, 1.0);
        if r_invariant(&x, &y).norm() < 1e-3 {
            continue;
        }
        checked += 1;
        let sigma = bergman_operator(&x, &y).unwrap().min_singular_value();
        assert!(sigma >= 1e-6, "pair {i}: {sigma:e}");
    }
    assert!(checked > 300);
}
