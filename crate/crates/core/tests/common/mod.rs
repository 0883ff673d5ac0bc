#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use spinfactor::SpinElement;

pub fn element(n: usize) -> impl Strategy<Value = SpinElement> {
    vec(-1.0f64..1.0, 2 * n).prop_map(|v| SpinElement::from_interleaved(&v).unwrap())
}

/// Element with spin norm in `[0, radius)`.
pub fn ball_element(n: usize, radius: f64) -> impl Strategy<Value = SpinElement> {
    (element(n), 0.0f64..1.0).prop_map(move |(x, frac)| {
        let nx = x.spin_norm();
        if nx == 0.0 {
            x
        } else {
            x.scale_real(radius * frac / nx)
        }
    })
}

/// `k` elements of a common random dimension in `2..=8`.
pub fn tuple(k: usize) -> impl Strategy<Value = Vec<SpinElement>> {
    (2usize..=8).prop_flat_map(move |n| vec(element(n), k))
}

pub fn ball_tuple(k: usize, radius: f64) -> impl Strategy<Value = Vec<SpinElement>> {
    (2usize..=8).prop_flat_map(move |n| vec(ball_element(n, radius), k))
}
