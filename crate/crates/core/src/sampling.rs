//! Seeded sampling of spin-factor points and isometries.
//!
//! Every sample index gets its own ChaCha8 stream (`seed`, stream = index), so
//! draws do not depend on evaluation order and parallel runs match serial ones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::automorphism::TripleIsometry;
use crate::spin::SpinElement;

pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Element with i.i.d. standard complex Gaussian coordinates.
pub fn gaussian_element<R: Rng>(rng: &mut R, n: usize) -> SpinElement {
    SpinElement::new(
        (0..n)
            .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
            .collect(),
    )
}

/// Random point with spin norm uniform in `[0, radius)`.
pub fn random_in_ball<R: Rng>(rng: &mut R, n: usize, radius: f64) -> SpinElement {
    let x = gaussian_element(rng, n);
    let r: f64 = rng.gen::<f64>() * radius;
    x.scale_real(r / x.spin_norm())
}

/// Random point on the unit sphere of the spin norm.
pub fn random_on_sphere<R: Rng>(rng: &mut R, n: usize) -> SpinElement {
    let x = gaussian_element(rng, n);
    x.scale_real(1.0 / x.spin_norm())
}

/// Haar-ish random real orthogonal matrix from the QR factorisation of a
/// Gaussian matrix, with column signs fixed by `R`'s diagonal.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| standard_normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            let mut col = q.column_mut(k);
            col *= -1.0;
        }
    }
    q
}

pub fn random_isometry<R: Rng>(rng: &mut R, n: usize) -> TripleIsometry {
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    TripleIsometry::new(theta, random_orthogonal(rng, n))
        .expect("QR factor is orthogonal")
}

/// A pair with `r(x, y) = 0`: `x = U e1`, `y = U(e1 + s(p + iq)/sqrt 2)` with
/// `U` a random phase times a real orthogonal matrix, `p = e2`, `q = e3` and
/// `s` uniform in `[0.1, 0.9)`. For `n = 2` there is no room for `p, q` and
/// the pair is `x = y = U e1`.
pub fn singular_pair<R: Rng>(rng: &mut R, n: usize) -> (SpinElement, SpinElement) {
    let o = random_orthogonal(rng, n);
    let s = 0.1 + 0.8 * rng.gen::<f64>();
    let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
    let rotate = |v: &[Complex64]| {
        SpinElement::new(
            (0..n)
                .map(|r| (0..n).map(|c| v[c] * o[(r, c)]).sum::<Complex64>() * phase)
                .collect(),
        )
    };
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[0] = Complex64::new(1.0, 0.0);
    let mut y = x.clone();
    if n >= 3 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        y[1] = Complex64::new(s * h, 0.0);
        y[2] = Complex64::new(0.0, s * h);
    }
    (rotate(&x), rotate(&y))
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
