//! Iteration of fixed-point-free holomorphic self-maps of the ball.
//!
//! The observable content of "the target set lies in the boundary of a
//! bidisc" at desk scale is pointwise: orbit tails approach the plane
//! `span{e, je}` and, inside it, the boundary of `Δe × Δje`. The frame `e`
//! comes from the Wolff point, estimated by the same schedule that produces
//! weak fixed points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::automorphism::{Automorphism, TripleIsometry, Transvection};
use crate::error::{check_dim, Result, SpinError};
use crate::fixed_point::{extrapolate_limit, schedule_fixed_points, Schedule, DEFAULT_MAX_ITER};
use crate::spin::{LinearOperator, SpinElement};
use crate::tripotent::spectral_decompose;

/// Orbit points may exceed the unit sphere by round-off up to this much.
pub const ESCAPE_TOL: f64 = 1e-9;

/// Threshold below which the imaginary part of a boundary point is treated
/// as absent when choosing its frame.
pub const FRAME_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
enum MapNode {
    Isometry(TripleIsometry),
    Transvection(Transvection),
    Scale(f64),
    /// Applied right to left.
    Compose(Vec<HolomorphicMap>),
}

/// A composition tree of isometries, transvections and scalings `z ↦ ρz`.
#[derive(Debug, Clone)]
pub struct HolomorphicMap {
    dim: usize,
    node: MapNode,
}

impl HolomorphicMap {
    pub fn identity(dim: usize) -> Self {
        Self { dim, node: MapNode::Compose(Vec::new()) }
    }

    pub fn isometry(t: TripleIsometry) -> Self {
        Self { dim: t.dim(), node: MapNode::Isometry(t) }
    }

    pub fn transvection(g: Transvection) -> Self {
        Self { dim: g.dim(), node: MapNode::Transvection(g) }
    }

    /// `T ∘ g_a`.
    pub fn automorphism(g: &Automorphism) -> Self {
        Self {
            dim: g.dim(),
            node: MapNode::Compose(vec![
                Self::isometry(g.isometry.clone()),
                Self::transvection(g.transvection.clone()),
            ]),
        }
    }

    /// `z ↦ ρz` for `ρ ∈ (0, 1]`.
    pub fn scale(dim: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(SpinError::DomainError(format!("scale {rho} outside (0, 1]")));
        }
        Ok(Self { dim, node: MapNode::Scale(rho) })
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: Self, inner: Self) -> Result<Self> {
        check_dim(outer.dim, inner.dim)?;
        Ok(Self { dim: outer.dim, node: MapNode::Compose(vec![outer, inner]) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, z: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim, z.dim())?;
        match &self.node {
            MapNode::Isometry(t) => t.apply(z),
            MapNode::Transvection(g) => g.apply(z),
            MapNode::Scale(rho) => Ok(z.scale_real(*rho)),
            MapNode::Compose(parts) => parts.iter().rev().try_fold(z.clone(), |w, f| f.apply(&w)),
        }
    }
}

/// `[f(z0), f²(z0), ..., f^N(z0)]`.
///
/// Points that leave the closed ball by less than [`ESCAPE_TOL`] are pulled
/// back onto the sphere; anything further out is reported as an error.
pub fn iterate_orbit(f: &HolomorphicMap, z0: &SpinElement, n: usize) -> Result<Vec<SpinElement>> {
    check_dim(f.dim(), z0.dim())?;
    let n0 = z0.spin_norm();
    if !(n0 < 1.0) {
        return Err(SpinError::DomainError(format!("start point has norm {n0} >= 1")));
    }
    let mut orbit = Vec::with_capacity(n);
    let mut z = z0.clone();
    for k in 0..n {
        z = f.apply(&z)?;
        let nz = z.spin_norm();
        if nz > 1.0 + ESCAPE_TOL {
            return Err(SpinError::Internal(format!(
                "orbit left the ball at step {}: norm {nz}",
                k + 1
            )));
        }
        if nz > 1.0 {
            z = z.scale_real(1.0 / nz);
        }
        orbit.push(z.clone());
    }
    Ok(orbit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WolffEstimate {
    pub xi: SpinElement,
    pub xi_norm: f64,
    /// True when `ξ` is inside the ball, so `f` has an interior fixed point.
    pub interior_flag: bool,
    pub alphas: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Wolff point estimate from the fixed points of `α_k f`.
pub fn wolff_point(f: &HolomorphicMap, schedule: &Schedule, tol: f64) -> Result<WolffEstimate> {
    let iterates = schedule_fixed_points(|z| f.apply(z), f.dim(), schedule, tol, DEFAULT_MAX_ITER)?;
    let alphas = schedule.alphas().to_vec();
    let xi = extrapolate_limit(&alphas, &iterates);
    let xi_norm = xi.spin_norm();
    Ok(WolffEstimate {
        interior_flag: xi_norm <= 1.0 - 10.0 * tol,
        norms: iterates.iter().map(SpinElement::spin_norm).collect(),
        xi,
        xi_norm,
        alphas,
    })
}

/// `ξ = e + λ je` with `e` a minimal tripotent and `|λ| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidiscFrame {
    pub e: SpinElement,
    pub je: SpinElement,
    pub xi: SpinElement,
    pub lambda: Complex64,
}

impl BidiscFrame {
    /// Hilbert-orthogonal projector onto `span{e, je}`.
    pub fn projector(&self) -> LinearOperator {
        let n = self.e.dim();
        let (e, je) = (self.e.coords(), self.je.coords());
        LinearOperator::from_matrix(nalgebra::DMatrix::from_fn(n, n, |r, c| {
            (e[r] * e[c].conj() + je[r] * je[c].conj()) * 2.0
        }))
    }

    /// `|ξ - (e + λ je)|` in the Hilbert norm.
    pub fn reconstruction_error(&self) -> f64 {
        (&self.xi - &(&self.e + &self.je.scale(self.lambda))).hilbert_norm()
    }

    /// Coordinates `(2<w,e>, 2<w,je>)` of the in-plane part of `w`.
    pub fn coordinates(&self, w: &SpinElement) -> (Complex64, Complex64) {
        (2.0 * w.inner(&self.e), 2.0 * w.inner(&self.je))
    }
}

/// Frame of a boundary point.
pub fn target_bidisc(xi: &SpinElement, tol: f64) -> Result<BidiscFrame> {
    let nx = xi.spin_norm();
    if nx < 1.0 - tol {
        return Err(SpinError::DegenerateInput(format!(
            "Wolff point has norm {nx}, not on the sphere"
        )));
    }
    let frame = spectral_decompose(xi, FRAME_TOL)?;
    let e = frame.e1;
    let je = e.conj_j();
    let lambda = 2.0 * xi.inner(&je);
    Ok(BidiscFrame { e, je, xi: xi.clone(), lambda })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidiscResidual {
    /// Hilbert distance to `span{e, je}`.
    pub d_sub: f64,
    /// `|1 - max(|2<w,e>|, |2<w,je>|)|`.
    pub d_bdry: f64,
    pub norm: f64,
}

pub fn bidisc_residual(w: &SpinElement, frame: &BidiscFrame) -> BidiscResidual {
    let (x, y) = frame.coordinates(w);
    let in_plane = &frame.e.scale(x) + &frame.je.scale(y);
    BidiscResidual {
        d_sub: (w - &in_plane).hilbert_norm(),
        d_bdry: (1.0 - x.norm().max(y.norm())).abs(),
        norm: w.spin_norm(),
    }
}

pub fn bidisc_residuals(orbit: &[SpinElement], frame: &BidiscFrame) -> Vec<BidiscResidual> {
    orbit.iter().map(|w| bidisc_residual(w, frame)).collect()
}

/// Largest entrywise difference of the plane projectors of two frames. Zero
/// exactly when the frames agree up to phase and swapping `e` with `je`.
pub fn frame_distance(a: &BidiscFrame, b: &BidiscFrame) -> f64 {
    a.projector().max_abs_diff(&b.projector())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub start: SpinElement,
    pub residuals: Vec<BidiscResidual>,
    /// Maxima over the second half of the orbit.
    pub tail_d_sub: f64,
    pub tail_d_bdry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DynamicsOutcome {
    /// The Wolff estimate is interior; no bidisc claim is made.
    NotFixedPointFree { wolff: WolffEstimate },
    Bidisc { wolff: WolffEstimate, frame: BidiscFrame, orbits: Vec<OrbitReport> },
}

impl DynamicsOutcome {
    pub fn is_fixed_point_free(&self) -> bool {
        matches!(self, Self::Bidisc { .. })
    }
}

/// Wolff point, frame and orbit residuals for each start point.
pub fn analyze_dynamics(
    f: &HolomorphicMap,
    starts: &[SpinElement],
    n_iter: usize,
    schedule: &Schedule,
    tol: f64,
) -> Result<DynamicsOutcome> {
    let wolff = wolff_point(f, schedule, tol)?;
    if wolff.interior_flag {
        return Ok(DynamicsOutcome::NotFixedPointFree { wolff });
    }
    let frame = target_bidisc(&wolff.xi, 10.0 * tol)?;
    let orbits = starts
        .iter()
        .map(|z0| {
            let orbit = iterate_orbit(f, z0, n_iter)?;
            let residuals = bidisc_residuals(&orbit, &frame);
            let tail = &residuals[residuals.len() / 2..];
            Ok(OrbitReport {
                start: z0.clone(),
                tail_d_sub: tail.iter().map(|r| r.d_sub).fold(0.0, f64::max),
                tail_d_bdry: tail.iter().map(|r| r.d_bdry).fold(0.0, f64::max),
                residuals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DynamicsOutcome::Bidisc { wolff, frame, orbits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinSpace;

    fn disc_map(n: usize, t: f64) -> HolomorphicMap {
        HolomorphicMap::transvection(Transvection::new(t * &SpinElement::basis(n, 0)).unwrap())
    }

    #[test]
    fn identity_orbit_is_constant() {
        let z0 = SpinElement::from_real(&[0.2, -0.1, 0.3]);
        let orbit = iterate_orbit(&HolomorphicMap::identity(3), &z0, 5).unwrap();
        assert!(orbit.iter().all(|z| *z == z0));
    }

    #[test]
    fn disc_orbit_follows_mobius_recurrence() {
        let (n, t) = (4, 0.5);
        let orbit = iterate_orbit(&disc_map(n, t), &SpinElement::zeros(n), 40).unwrap();
        let mut s: f64 = 0.0;
        for (k, z) in orbit.iter().enumerate() {
            let next = (s + t) / (1.0 + t * s);
            assert!(next > s || next == 1.0, "step {k}");
            s = next;
            assert!(z.max_abs_diff(&(s * &SpinElement::basis(n, 0))) < 1e-14, "step {k}");
        }
    }

    #[test]
    fn scale_is_validated() {
        assert!(HolomorphicMap::scale(3, 0.0).is_err());
        assert!(HolomorphicMap::scale(3, 1.5).is_err());
        assert!(HolomorphicMap::scale(3, 1.0).is_ok());
    }

    #[test]
    fn compose_applies_right_to_left() {
        let n = 3;
        let t = TripleIsometry::cyclic_shift(n, 1).unwrap();
        let g = Transvection::new(0.3 * &SpinElement::basis(n, 0)).unwrap();
        let f = HolomorphicMap::compose(HolomorphicMap::isometry(t.clone()), HolomorphicMap::transvection(g.clone()))
            .unwrap();
        let z = SpinElement::from_real(&[0.1, 0.2, 0.0]);
        let expect = t.apply(&g.apply(&z).unwrap()).unwrap();
        assert!(f.apply(&z).unwrap().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn wolff_point_examples() {
        let n = 4;
        let est = wolff_point(&disc_map(n, 0.5), &Schedule::geometric(30), 1e-10).unwrap();
        assert!(!est.interior_flag);
        assert!(est.xi.max_abs_diff(&SpinElement::basis(n, 0)) < 1e-8);

        let contraction = HolomorphicMap::scale(n, 0.9).unwrap();
        let est = wolff_point(&contraction, &Schedule::geometric(30), 1e-10).unwrap();
        assert!(est.interior_flag);
        assert_eq!(est.xi, SpinElement::zeros(n));

        let rot = TripleIsometry::plane_rotation(n, 2, 3, 0.7).unwrap();
        let f = HolomorphicMap::compose(HolomorphicMap::isometry(rot), disc_map(n, 0.5)).unwrap();
        let est = wolff_point(&f, &Schedule::geometric(30), 1e-10).unwrap();
        assert!(!est.interior_flag);
        assert!(est.xi.max_abs_diff(&SpinElement::basis(n, 0)) < 1e-8);
    }

    #[test]
    fn target_bidisc_examples() {
        let space = SpinSpace::new(3).unwrap();
        let c = space.minimal(0, 1);
        let jc = c.conj_j();

        let frame = target_bidisc(&SpinElement::basis(3, 0), 1e-9).unwrap();
        assert!(frame.e.inner(&frame.je).norm() < 1e-15);
        assert!((frame.lambda.norm() - 1.0).abs() < 1e-14);
        assert!(frame.reconstruction_error() < 1e-14);

        let frame = target_bidisc(&c, 1e-9).unwrap();
        assert!(frame.e.max_abs_diff(&c) < 1e-15);
        assert!(frame.lambda.norm() < 1e-15);

        let xi = &c + &(0.5 * &jc);
        let frame = target_bidisc(&xi, 1e-9).unwrap();
        assert!(frame.e.max_abs_diff(&c) < 1e-15);
        assert!((frame.lambda - 0.5).norm() < 1e-15);

        assert!(matches!(
            target_bidisc(&(0.5 * &c), 1e-9),
            Err(SpinError::DegenerateInput(_))
        ));
    }

    #[test]
    fn residual_examples() {
        let c = SpinSpace::new(3).unwrap().minimal(0, 1);
        let frame = target_bidisc(&c, 1e-9).unwrap();
        let r = bidisc_residual(&c, &frame);
        assert!(r.d_sub < 1e-15 && r.d_bdry < 1e-15);
        let out = SpinElement::basis(3, 2);
        assert!((bidisc_residual(&out, &frame).d_sub - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_distance_ignores_phase_and_swap() {
        let c = SpinSpace::new(4).unwrap().minimal(0, 2);
        let a = target_bidisc(&c, 1e-9).unwrap();
        let b = BidiscFrame {
            e: a.je.scale(Complex64::from_polar(1.0, 0.4)),
            je: a.e.scale(Complex64::from_polar(1.0, -0.4)),
            xi: a.xi.clone(),
            lambda: a.lambda,
        };
        assert!(frame_distance(&a, &b) < 1e-15);
    }

    #[test]
    fn contraction_is_not_fixed_point_free() {
        let f = HolomorphicMap::scale(3, 0.9).unwrap();
        let out = analyze_dynamics(&f, &[SpinElement::zeros(3)], 10, &Schedule::geometric(30), 1e-10).unwrap();
        assert!(!out.is_fixed_point_free());
    }
}
