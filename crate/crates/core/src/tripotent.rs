//! Tripotents, triple orthogonality, rank-2 spectral frames and Peirce
//! projections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::spin::{
    bergman_operator, box_operator, quadratic_rep, tp, LinearOperator, SpinElement,
};

/// Default tolerance for classification and frame checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TripotentClass {
    Zero,
    /// `x = scale · c` with `c` a minimal tripotent.
    MinimalMultiple { scale: f64 },
    /// `x = scale · u` with `u` a maximal tripotent.
    MaximalMultiple { scale: f64 },
    GenericRank2 { s1: f64, s2: f64 },
}

impl TripotentClass {
    /// Triple rank: 0, 1 or 2.
    pub fn rank(&self) -> usize {
        match self {
            TripotentClass::Zero => 0,
            TripotentClass::MinimalMultiple { .. } => 1,
            TripotentClass::MaximalMultiple { .. } | TripotentClass::GenericRank2 { .. } => 2,
        }
    }

    pub fn same_kind(&self, other: &Self) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

pub fn classify(x: &SpinElement, tol: f64) -> TripotentClass {
    let h = x.hilbert_norm();
    if h <= tol {
        return TripotentClass::Zero;
    }
    let p = x.norm_sqr();
    let xjx = x.inner_j();
    if xjx.norm() <= tol * p {
        return TripotentClass::MinimalMultiple { scale: x.spin_norm() };
    }
    let jx = x.conj_j();
    let alpha = jx.inner(x) / p;
    if (&jx - &x.scale(alpha)).hilbert_norm() <= tol * h {
        return TripotentClass::MaximalMultiple { scale: x.spin_norm() };
    }
    let (s1, s2) = singular_values(x);
    TripotentClass::GenericRank2 { s1, s2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripotentRank {
    NotTripotent,
    Rank1,
    Rank2,
}

pub fn is_tripotent(e: &SpinElement, tol: f64) -> TripotentRank {
    let p = e.norm_sqr();
    let cubic_ok = (&tp(e, e, e) - e).hilbert_norm() <= tol;
    if !cubic_ok {
        return TripotentRank::NotTripotent;
    }
    if e.inner_j().norm() <= tol && (p - 0.5).abs() <= tol {
        return TripotentRank::Rank1;
    }
    if (p - 1.0).abs() <= tol {
        let je = e.conj_j();
        let lambda = je.inner(e) / p;
        if (lambda.norm() - 1.0).abs() <= tol && (&je - &e.scale(lambda)).hilbert_norm() <= tol {
            return TripotentRank::Rank2;
        }
    }
    TripotentRank::NotTripotent
}

/// Triple orthogonality `e □ f = 0` of two minimal tripotents.
pub fn are_triple_orthogonal(e: &SpinElement, f: &SpinElement, tol: f64) -> Result<bool> {
    for (name, v) in [("e", e), ("f", f)] {
        if is_tripotent(v, tol) != TripotentRank::Rank1 {
            return Err(SpinError::PreconditionViolation(format!(
                "{name} is not a minimal tripotent"
            )));
        }
    }
    if e.inner(f).norm() > tol {
        return Ok(false);
    }
    let jf = f.conj_j();
    let lambda = jf.inner(e) / e.norm_sqr();
    Ok((lambda.norm() - 1.0).abs() <= tol && (&jf - &e.scale(lambda)).hilbert_norm() <= tol)
}

/// `(s1, s2)` with `s1 = |a|` and `s2 = |<a,ja>| / s1`.
pub fn singular_values(a: &SpinElement) -> (f64, f64) {
    let s1 = a.spin_norm();
    if s1 == 0.0 {
        return (0.0, 0.0);
    }
    (s1, (a.inner_j().norm() / s1).min(s1))
}

/// `a = s1 e1 + s2 e2` with `e1, e2` orthogonal minimal tripotents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFrame {
    pub s1: f64,
    pub s2: f64,
    pub e1: SpinElement,
    pub e2: SpinElement,
}

impl SpectralFrame {
    pub fn reconstruct(&self) -> SpinElement {
        self.s1 * &self.e1 + self.s2 * &self.e2
    }

    /// Hilbert-orthogonal projection onto `span{e1, e2}`.
    pub fn plane_projection(&self, z: &SpinElement) -> SpinElement {
        2.0 * z.inner(&self.e1) * &self.e1 + 2.0 * z.inner(&self.e2) * &self.e2
    }
}

/// Rank-2 spectral decomposition.
///
/// The phase of `<a,ja>` is removed so that `b = u + iv` has real `u ⊥ v`
/// with `|u| >= |v|`; then `b = (|u|+|v|)(p+iq)/2 + (|u|-|v|)(p-iq)/2` for the
/// unit directions `p, q` of `u, v`. When `v` vanishes (`a` is a multiple of a
/// maximal tripotent) `q` is the first canonical direction orthogonal to `p`.
pub fn spectral_decompose(a: &SpinElement, tol: f64) -> Result<SpectralFrame> {
    let h = a.hilbert_norm();
    if h <= tol {
        return Err(SpinError::DegenerateInput(format!(
            "cannot decompose an element of norm {h:e}"
        )));
    }
    let w = a.inner_j();
    let phase = if w.norm() > 0.0 {
        Complex64::from_polar(1.0, -0.5 * w.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let b = a.scale(phase);
    let u: Vec<f64> = b.coords().iter().map(|c| c.re).collect();
    let v: Vec<f64> = b.coords().iter().map(|c| c.im).collect();
    let nu = norm(&u);
    let p: Vec<f64> = u.iter().map(|x| x / nu).collect();
    // Re-orthogonalise v against p; exact orthogonality holds only up to round-off.
    let vp = dot(&v, &p);
    let v_perp: Vec<f64> = v.iter().zip(&p).map(|(x, y)| x - vp * y).collect();
    let nv = norm(&v_perp);
    let q = if nv > tol * nu {
        v_perp.iter().map(|x| x / nv).collect()
    } else {
        complement_direction(&p)
    };
    let (s1, s2) = singular_values(a);
    let n = a.dim();
    let undo = phase.conj();
    let e1 = SpinElement::new(
        (0..n)
            .map(|k| Complex64::new(0.5 * p[k], 0.5 * q[k]) * undo)
            .collect(),
    );
    let e2 = SpinElement::new(
        (0..n)
            .map(|k| Complex64::new(0.5 * p[k], -0.5 * q[k]) * undo)
            .collect(),
    );
    Ok(SpectralFrame { s1, s2, e1, e2 })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram–Schmidt of the canonical basis against the unit vector `p`, taking the
/// first candidate with a well-conditioned residual.
fn complement_direction(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut r: Vec<f64> = p.iter().map(|x| -p[k] * x).collect();
        r[k] += 1.0;
        let nr = norm(&r);
        if nr > 0.5 {
            return r.iter().map(|x| x / nr).collect();
        }
        if best.as_ref().map_or(true, |(b, _)| nr > *b) {
            best = Some((nr, r));
        }
    }
    let (nr, r) = best.expect("dimension is at least 2");
    r.iter().map(|x| x / nr).collect()
}

/// `(P0, P½, P1)` for a tripotent `e`.
pub fn peirce_projections(
    e: &SpinElement,
) -> Result<(LinearOperator, LinearOperator, LinearOperator)> {
    if is_tripotent(e, DEFAULT_TOL) == TripotentRank::NotTripotent {
        return Err(SpinError::PreconditionViolation(
            "Peirce projections need a tripotent".into(),
        ));
    }
    let qe = quadratic_rep(e);
    let p1 = qe.compose(&qe);
    let p0 = bergman_operator(e, e)?;
    let d = box_operator(e, e)?;
    let phalf = d.sub(&p1).scale(Complex64::new(2.0, 0.0));
    Ok((p0, phalf, p1))
}
