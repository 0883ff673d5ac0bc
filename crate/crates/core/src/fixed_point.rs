//! Fixed points of ball automorphisms.
//!
//! Weak fixed points are limits of the interior fixed points `z_k` of the
//! strict contractions `α_k g` with `α_k ↑ 1`. Each `z_k` comes from Picard
//! iteration, which converges because `α_k g` maps the ball into the smaller
//! ball `α_k B`. Boundary fixed points of `T ∘ g_{te}` are built in closed
//! form from the orbit `{T^k e}`: directly when it is orthonormal, and
//! through the resolvent `(I - uT)^{-1}` in general.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::automorphism::{Automorphism, TripleIsometry};
use crate::error::{check_dim, Result, SpinError};
use crate::sampling::{gaussian_element, stream_rng};
use crate::spin::{quasi_inverse_tolerance, r_invariant, SpinElement};
use crate::tripotent::{classify, is_tripotent, TripotentClass, TripotentRank, DEFAULT_TOL};

pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Absolute floor for Picard step tolerances; below this the iteration only
/// sees round-off.
pub const STEP_FLOOR: f64 = 1e-15;

/// `|ξ|` within this of 1 counts as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-6;
/// `|ξ|` below this counts as the origin.
pub const ORIGIN_TOL: f64 = 1e-6;
/// `|z_k|` must stay this far below 1 to count as bounded away from the sphere.
pub const AWAY_MARGIN: f64 = 1e-3;
/// Residual under which a weak fixed point is reported as fixed.
pub const FIXED_TOL: f64 = 1e-5;

/// A strictly increasing sequence in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(SpinError::PreconditionViolation("empty schedule".into()));
        }
        if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(SpinError::PreconditionViolation(
                "schedule entries must lie in (0, 1)".into(),
            ));
        }
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpinError::PreconditionViolation(
                "schedule must be strictly increasing".into(),
            ));
        }
        Ok(Self(alphas))
    }

    /// `α_k = 1 - 2^{-k}` for `k = 1..=k_max`.
    pub fn geometric(k_max: u32) -> Self {
        Self((1..=k_max).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect())
    }

    /// `α_k = 1 - 1/(k+1)^2` for `k = 1..=k_max`.
    pub fn quadratic(k_max: u32) -> Self {
        Self((1..=k_max).map(|k| 1.0 - 1.0 / ((k + 1) as f64).powi(2)).collect())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.0
    }
}

/// Picard iteration `z ← h(z)` until a step is at most `tol`.
pub fn earle_hamilton_fixed_point<F>(
    h: F,
    z_init: &SpinElement,
    tol: f64,
    max_iter: usize,
) -> Result<SpinElement>
where
    F: FnMut(&SpinElement) -> Result<SpinElement>,
{
    match picard(h, z_init.clone(), tol, max_iter)? {
        (z, _, true) => Ok(z),
        (_, last_step, false) => Err(SpinError::NoConvergence { iterations: max_iter, last_step }),
    }
}

/// Returns the last iterate, the last step and whether the step reached `tol`.
fn picard<F>(mut h: F, mut z: SpinElement, tol: f64, max_iter: usize) -> Result<(SpinElement, f64, bool)>
where
    F: FnMut(&SpinElement) -> Result<SpinElement>,
{
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        let next = h(&z)?;
        step = next.distance(&z);
        z = next;
        if step <= tol {
            return Ok((z, step, true));
        }
    }
    Ok((z, step, false))
}

/// Picard steps spent on one schedule point before switching to Newton.
/// Near an interior fixed point with a unitary derivative the contraction
/// rate of `α f` is about `α`, so late schedule points stall under Picard.
const PICARD_BUDGET: usize = 2_000;
const NEWTON_STEPS: usize = 60;

/// Fixed point of `α f` to residual `tol`: Picard first, then damped Newton
/// with a central-difference Jacobian (`f` is holomorphic, so real steps
/// give the complex derivative), then Picard again with the rest of the budget.
fn scaled_fixed_point<F>(f: &F, alpha: f64, z_init: &SpinElement, tol: f64, max_iter: usize) -> Result<SpinElement>
where
    F: Fn(&SpinElement) -> Result<SpinElement>,
{
    let h = |w: &SpinElement| Ok(f(w)?.scale_real(alpha));
    let budget = PICARD_BUDGET.min(max_iter);
    let (z, _, done) = picard(h, z_init.clone(), tol, budget)?;
    if done {
        return Ok(z);
    }
    let z = newton_polish(f, alpha, z, tol).unwrap_or_else(|z| z);
    if h(&z)?.distance(&z) <= tol {
        return Ok(z);
    }
    let rest = max_iter - budget;
    match picard(h, z, tol, rest)? {
        (z, _, true) => Ok(z),
        (_, last_step, false) => Err(SpinError::NoConvergence { iterations: max_iter, last_step }),
    }
}

/// `Ok` on success, `Err` with the best point reached otherwise.
fn newton_polish<F>(
    f: &F,
    alpha: f64,
    mut z: SpinElement,
    tol: f64,
) -> std::result::Result<SpinElement, SpinElement>
where
    F: Fn(&SpinElement) -> Result<SpinElement>,
{
    let n = z.dim();
    let residual = |w: &SpinElement| -> Option<SpinElement> { Some(w - &f(w).ok()?.scale_real(alpha)) };
    let Some(mut r) = residual(&z) else { return Err(z) };
    for _ in 0..NEWTON_STEPS {
        let rn = r.spin_norm();
        if rn <= tol {
            return Ok(z);
        }
        let d = 1.0 - z.spin_norm();
        if d <= 0.0 {
            return Err(z);
        }
        let step = 1e-4 * d.min(1.0);
        let mut m = nalgebra::DMatrix::<Complex64>::identity(n, n);
        for k in 0..n {
            let dk = SpinElement::basis(n, k).scale_real(step);
            let (Ok(fp), Ok(fm)) = (f(&(&z + &dk)), f(&(&z - &dk))) else { return Err(z) };
            let col = (&fp - &fm).scale_real(alpha / (2.0 * step));
            for (row, c) in col.coords().iter().enumerate() {
                m[(row, k)] -= c;
            }
        }
        let Some(delta) = m.lu().solve(&r.to_dvector()) else { return Err(z) };
        let delta = SpinElement::from_dvector(&delta);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = z.axpy(Complex64::new(-lambda, 0.0), &delta);
            if cand.spin_norm() < 1.0 {
                if let Some(rc) = residual(&cand) {
                    if rc.spin_norm() < rn {
                        accepted = Some((cand, rc));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((zc, rc)) => {
                z = zc;
                r = rc;
            }
            None => return Err(z),
        }
    }
    if r.spin_norm() <= tol {
        Ok(z)
    } else {
        Err(z)
    }
}

/// Which sufficient condition for a weak fixed point to be fixed applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakFixedPointCondition {
    /// `|ξ| = 1`.
    BoundaryLimit,
    /// `ξ = 0` and `a` is not a nonzero multiple of a maximal tripotent.
    OriginNonMaximal,
    /// `ξ = 0` and `|z_k|` stays away from 1.
    OriginBoundedAway,
    /// Every `z_k` has rank at most one.
    RankOneIterates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFixedPointReport {
    pub alphas: Vec<f64>,
    pub iterates: Vec<SpinElement>,
    pub norms: Vec<f64>,
    pub xi: SpinElement,
    pub xi_norm: f64,
    pub residual: f64,
    pub is_fixed: bool,
    pub conditions: Vec<WeakFixedPointCondition>,
    pub classification: Option<WeakFixedPointCondition>,
    /// `<z_k, j z_k>` at the last schedule point; diagnostic only.
    pub last_pairing: Complex64,
}

/// Limit of the fixed points of `α_k g` along the schedule.
pub fn weak_fixed_point(g: &Automorphism, schedule: &Schedule, tol: f64) -> Result<WeakFixedPointReport> {
    weak_fixed_point_with_budget(g, schedule, tol, DEFAULT_MAX_ITER)
}

pub fn weak_fixed_point_with_budget(
    g: &Automorphism,
    schedule: &Schedule,
    tol: f64,
    max_iter: usize,
) -> Result<WeakFixedPointReport> {
    let iterates = schedule_fixed_points(|z| g.apply(z), g.dim(), schedule, tol, max_iter)?;
    let alphas = schedule.alphas().to_vec();
    let xi = extrapolate_limit(&alphas, &iterates);
    let xi_norm = xi.spin_norm();
    let residual = g.apply(&xi)?.distance(&xi);
    let norms: Vec<f64> = iterates.iter().map(SpinElement::spin_norm).collect();

    let mut conditions = Vec::new();
    if (xi_norm - 1.0).abs() <= BOUNDARY_TOL {
        conditions.push(WeakFixedPointCondition::BoundaryLimit);
    }
    if xi_norm <= ORIGIN_TOL {
        let a_maximal = matches!(
            classify(g.parameter(), DEFAULT_TOL),
            TripotentClass::MaximalMultiple { .. }
        );
        if !a_maximal {
            conditions.push(WeakFixedPointCondition::OriginNonMaximal);
        }
        if norms.last().is_some_and(|n| *n <= 1.0 - AWAY_MARGIN) {
            conditions.push(WeakFixedPointCondition::OriginBoundedAway);
        }
    }
    if iterates.iter().all(|z| classify(z, DEFAULT_TOL).rank() <= 1) {
        conditions.push(WeakFixedPointCondition::RankOneIterates);
    }
    let last_pairing = iterates.last().map(|z| z.inner_j()).unwrap_or_default();

    Ok(WeakFixedPointReport {
        alphas,
        norms,
        xi_norm,
        residual,
        is_fixed: residual <= FIXED_TOL,
        classification: conditions.first().copied(),
        conditions,
        xi,
        iterates,
        last_pairing,
    })
}

/// Fixed points of `α_k f` for each schedule entry, warm-started from the
/// previous one. The residual `|α_k f(z) - z|` is driven below `tol (1 - α_k)`,
/// floored at [`STEP_FLOOR`].
pub(crate) fn schedule_fixed_points<F>(
    f: F,
    n: usize,
    schedule: &Schedule,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<SpinElement>>
where
    F: Fn(&SpinElement) -> Result<SpinElement>,
{
    let mut z = SpinElement::zeros(n);
    let mut out = Vec::with_capacity(schedule.alphas().len());
    for &alpha in schedule.alphas() {
        let step_tol = (tol * (1.0 - alpha)).max(STEP_FLOOR);
        z = scaled_fixed_point(&f, alpha, &z, step_tol, max_iter)?;
        out.push(z.clone());
    }
    Ok(out)
}

/// Linear extrapolation in `1 - α` from the last two schedule points, clamped
/// to the closed unit ball.
pub(crate) fn extrapolate_limit(alphas: &[f64], iterates: &[SpinElement]) -> SpinElement {
    let k = iterates.len();
    let mut xi = match k {
        0 => unreachable!("schedules are non-empty"),
        1 => iterates[0].clone(),
        _ => {
            let (a0, a1) = (alphas[k - 2], alphas[k - 1]);
            let w = (1.0 - a1) / (a1 - a0);
            let delta = &iterates[k - 1] - &iterates[k - 2];
            iterates[k - 1].axpy(Complex64::new(w, 0.0), &delta)
        }
    };
    let nx = xi.spin_norm();
    if nx > 1.0 {
        xi = xi.scale_real(1.0 / nx);
    }
    xi
}

/// The family `z_n = a_n e_1 + i b_n e_n` with `a_n = 1/n`,
/// `b_n = sqrt(1 - 2t a_n + a_n^2)` and `α_n = 1/(1 + 2t a_n)`, proposed as
/// fixed points of `α_n g_{t e_1}` drifting weakly to 0. The identity does
/// not hold for it; see [`escaping_weak_family_exact`].
/// Coordinates are 0-based: `e_1` is index 0 and `e_n` is index `n - 1`.
pub fn escaping_weak_family(t: f64, n: usize, dim: usize) -> Result<(f64, SpinElement)> {
    let (a, b) = escaping_coefficients(t, n, dim)?;
    Ok((1.0 / (1.0 + 2.0 * t * a), family_point(a, b, n, dim)))
}

/// Exact solutions of `α_n g_{t e_1}(z_n) = z_n` of the same shape:
/// `z_n = -a_n e_1 + i b_n e_n` with `α_n = 1 - 2t a_n`. Their spin norm is
/// `a_n + b_n > 1`, so they solve the equation for the extension of
/// `g_{t e_1}` to the ball of radius `1/t`, not inside the unit ball.
pub fn escaping_weak_family_exact(t: f64, n: usize, dim: usize) -> Result<(f64, SpinElement)> {
    let (a, b) = escaping_coefficients(t, n, dim)?;
    Ok((1.0 - 2.0 * t * a, family_point(-a, b, n, dim)))
}

/// `|α g_{t e_1}(z) - z|` using the extension of `g_{t e_1}` beyond the unit ball.
pub fn escaping_residual(t: f64, alpha: f64, z: &SpinElement) -> Result<f64> {
    let g = crate::automorphism::Transvection::new(SpinElement::basis(z.dim(), 0).scale_real(t))?;
    Ok(g.apply_extended(z)?.scale_real(alpha).distance(z))
}

fn escaping_coefficients(t: f64, n: usize, dim: usize) -> Result<(f64, f64)> {
    if n < 2 || n > dim {
        return Err(SpinError::PreconditionViolation(format!(
            "family index {n} must lie in 2..={dim}"
        )));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(SpinError::DomainError(format!("t = {t} outside (0, 1)")));
    }
    let a = 1.0 / n as f64;
    Ok((a, (1.0 - 2.0 * t * a + a * a).sqrt()))
}

fn family_point(a: f64, b: f64, n: usize, dim: usize) -> SpinElement {
    let mut coords = vec![Complex64::new(0.0, 0.0); dim];
    coords[0] = Complex64::new(a, 0.0);
    coords[n - 1] += Complex64::new(0.0, b);
    SpinElement::new(coords)
}

/// Normal form of a transvection parameter `a = λu`, `u` maximal: `g = T g_a`
/// has a fixed point `w` iff `T g_{t e}` has the fixed point `rotation · w`,
/// where `t = |λ| > 0` and `je = e`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalReduction {
    pub t: f64,
    pub e: SpinElement,
    pub rotation: Complex64,
}

impl MaximalReduction {
    pub fn new(a: &SpinElement) -> Result<Self> {
        if !matches!(classify(a, DEFAULT_TOL), TripotentClass::MaximalMultiple { .. }) {
            return Err(SpinError::PreconditionViolation(
                "parameter is not a nonzero multiple of a maximal tripotent".into(),
            ));
        }
        let t = a.hilbert_norm();
        let u = a.scale_real(1.0 / t);
        let sigma = u.conj_j().inner(&u);
        let half = Complex64::from_polar(1.0, 0.5 * sigma.arg());
        // j(half · u) = conj(half) σ u = half · u
        let e = u.scale(half);
        Ok(Self { t, e, rotation: half })
    }

    /// Fixed point of the original map from one of the reduced map.
    pub fn lift(&self, w_reduced: &SpinElement) -> SpinElement {
        w_reduced.scale(self.rotation.conj())
    }
}

fn check_real_axis(t: f64, iso: &TripleIsometry, e: &SpinElement) -> Result<()> {
    check_dim(iso.dim(), e.dim())?;
    if !(t > 0.0 && t < 1.0) {
        return Err(SpinError::DomainError(format!("t = {t} outside (0, 1)")));
    }
    if !iso.commutes_with_j() {
        return Err(SpinError::PreconditionViolation("T does not commute with j".into()));
    }
    if is_tripotent(e, DEFAULT_TOL) != TripotentRank::Rank2 || e.conj_j().max_abs_diff(e) > DEFAULT_TOL {
        return Err(SpinError::PreconditionViolation(
            "e must be a maximal tripotent with je = e".into(),
        ));
    }
    Ok(())
}

/// `(λ0, μ0) = (2t/(1+t²), (1-t²)/(1+t²))`.
pub fn orthogonal_constants(t: f64) -> (f64, f64) {
    let d = 1.0 + t * t;
    (2.0 * t / d, (1.0 - t * t) / d)
}

/// Tolerance for pairwise orthogonality of the iterate family.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// `z0 = λ0 Σ_{k<K} μ0^k T^{k+1} e`, the boundary fixed point of `T g_{te}`
/// when `{T^k e}` is orthonormal. The truncation leaves a residual of order
/// `λ0 μ0^K`.
pub fn orthogonal_construction(
    iso: &TripleIsometry,
    t: f64,
    e: &SpinElement,
    k_terms: usize,
) -> Result<SpinElement> {
    check_real_axis(t, iso, e)?;
    let mut orbit = Vec::with_capacity(k_terms + 1);
    let mut v = e.clone();
    for _ in 0..=k_terms {
        v = iso.apply_unchecked(&v);
        orbit.push(v.clone());
    }
    for i in 0..orbit.len() {
        for j in (i + 1)..orbit.len() {
            let overlap = orbit[i].inner(&orbit[j]).norm();
            if overlap > ORTHOGONALITY_TOL {
                return Err(SpinError::OrthogonalityViolated { i: i + 1, j: j + 1, overlap });
            }
        }
    }
    let (lambda0, mu0) = orthogonal_constants(t);
    let mut z = SpinElement::zeros(e.dim());
    let mut w = lambda0;
    for term in orbit.iter().take(k_terms) {
        z = z.axpy(Complex64::new(w, 0.0), term);
        w *= mu0;
    }
    Ok(z)
}

/// `λ0 μ0^K`: size of the first omitted term.
pub fn orthogonal_truncation_bound(t: f64, k_terms: usize) -> f64 {
    let (lambda0, mu0) = orthogonal_constants(t);
    lambda0 * mu0.powi(k_terms as i32)
}

/// Evaluators for `f(u) = Σ_{k≥1} <T^k e, e> u^k`, `h(u) = (1+u)(1+2f(u))/(1-u)`
/// and `z(u) = t(1+u)(I - uT)^{-1} T e` for `je = e` and `Tj = jT`.
#[derive(Debug, Clone)]
pub struct SliverFunctions {
    iso: TripleIsometry,
    e: SpinElement,
}

impl SliverFunctions {
    pub fn new(iso: &TripleIsometry, e: &SpinElement) -> Result<Self> {
        check_dim(iso.dim(), e.dim())?;
        if !iso.commutes_with_j() {
            return Err(SpinError::PreconditionViolation("T does not commute with j".into()));
        }
        if e.conj_j().max_abs_diff(e) > DEFAULT_TOL || (e.norm_sqr() - 1.0).abs() > DEFAULT_TOL {
            return Err(SpinError::PreconditionViolation(
                "e must be a unit vector with je = e".into(),
            ));
        }
        Ok(Self { iso: iso.clone(), e: e.clone() })
    }

    /// `a_k = <T^k e, e>` for `k = 1..=k_max`.
    pub fn coefficients(&self, k_max: usize) -> Vec<f64> {
        let mut v = self.e.clone();
        (0..k_max)
            .map(|_| {
                v = self.iso.apply_unchecked(&v);
                v.inner(&self.e).re
            })
            .collect()
    }

    /// Truncated power series `Σ_{k=1}^{K} a_k u^k`.
    pub fn f_series(&self, u: f64, k_max: usize) -> f64 {
        self.coefficients(k_max)
            .iter()
            .enumerate()
            .map(|(k, a)| a * u.powi(k as i32 + 1))
            .sum()
    }

    fn resolve(&self, u: f64, rhs: &SpinElement) -> Result<SpinElement> {
        let n = self.e.dim();
        let m = nalgebra::DMatrix::<Complex64>::identity(n, n)
            - self.iso.matrix() * Complex64::new(u, 0.0);
        let sol = m
            .lu()
            .solve(&DVector::from_column_slice(rhs.coords()))
            .ok_or_else(|| SpinError::Internal(format!("I - uT is singular at u = {u}")))?;
        Ok(SpinElement::from_dvector(&sol))
    }

    /// `f(u) = <uT (I - uT)^{-1} e, e> = <(I - uT)^{-1} e, e> - 1`.
    pub fn f_resolvent(&self, u: f64) -> Result<f64> {
        let y = self.resolve(u, &self.e)?;
        Ok(y.inner(&self.e).re - 1.0)
    }

    /// `h(u) = (1+u)(1+2f(u))/(1-u)`, evaluated as `(1+u)^2 |(I - uT)^{-1} e|^2`.
    /// The two agree because `<T^k e, T^l e> = a_{|k-l|}` for a unitary `T`
    /// commuting with `j`; the second form avoids dividing the vanishing
    /// `1 + 2f(u)` by `1 - u` near `u = 1`.
    pub fn h(&self, u: f64) -> Result<f64> {
        let y = self.resolve(u, &self.e)?;
        Ok((1.0 + u) * (1.0 + u) * y.norm_sqr())
    }

    /// `h` through `f` directly; loses accuracy as `u → 1`.
    pub fn h_from_f(&self, u: f64) -> Result<f64> {
        Ok((1.0 + u) * (1.0 + 2.0 * self.f_resolvent(u)?) / (1.0 - u))
    }

    pub fn z(&self, u: f64, t: f64) -> Result<SpinElement> {
        let te = self.iso.apply_unchecked(&self.e);
        Ok(self.resolve(u, &te)?.scale_real(t * (1.0 + u)))
    }
}

pub fn sliver_coefficients(iso: &TripleIsometry, e: &SpinElement, k_max: usize) -> Result<Vec<f64>> {
    Ok(SliverFunctions::new(iso, e)?.coefficients(k_max))
}

/// Number of coefficients `a_k` recorded in [`SliverData`].
pub const SLIVER_COEFFICIENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliverData {
    pub t: f64,
    /// `1/t²`, the level `h(u0)` must reach.
    pub target: f64,
    pub coefficients: Vec<f64>,
    pub u0: Option<f64>,
    pub z0: Option<SpinElement>,
    /// Sampled `(u, h(u))` on the scan grid.
    pub h_profile: Vec<(f64, f64)>,
    pub root_residual: Option<f64>,
    /// `|<z0,z0> - 1|`.
    pub norm_defect: Option<f64>,
    /// `|j z0 - z0|` (largest coordinate).
    pub j_defect: Option<f64>,
    /// `|g(z0) - z0|` in the spin norm.
    pub residual: Option<f64>,
}

impl SliverData {
    pub fn witnessed(&self) -> bool {
        self.u0.is_some()
    }
}

/// Scan grid: 63 uniform points in (0, 1), then `1 - 2^{-6-k/4}` down to
/// machine resolution.
pub fn sliver_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..64).map(|i| i as f64 / 64.0).collect();
    let mut k = 1;
    loop {
        let u = 1.0 - 2f64.powf(-6.0 - k as f64 / 4.0);
        if u >= 1.0 || 1.0 - u < 4.0 * f64::EPSILON {
            break;
        }
        grid.push(u);
        k += 1;
    }
    grid
}

/// Scans `h` for the level `1/t²` and, when a bracket exists, bisects it to
/// width `root_tol` and builds `z0 = z(u0)`.
pub fn sliver_scan(iso: &TripleIsometry, t: f64, e: &SpinElement, root_tol: f64) -> Result<SliverData> {
    check_real_axis(t, iso, e)?;
    let funcs = SliverFunctions::new(iso, e)?;
    let target = 1.0 / (t * t);
    let coefficients = funcs.coefficients(SLIVER_COEFFICIENTS);

    let mut h_profile = Vec::new();
    let mut bracket = None;
    let mut prev = 0.0;
    for u in sliver_grid() {
        let hu = funcs.h(u)?;
        h_profile.push((u, hu));
        if bracket.is_none() && hu >= target {
            bracket = Some((prev, u));
        }
        prev = u;
    }

    let mut data = SliverData {
        t,
        target,
        coefficients,
        u0: None,
        z0: None,
        h_profile,
        root_residual: None,
        norm_defect: None,
        j_defect: None,
        residual: None,
    };
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(data);
    };
    // Stop when both the bracket and the level residual are within tolerance.
    let level_tol = root_tol * target.max(1.0);
    let mut u0 = 0.5 * (lo + hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        u0 = mid;
        if mid <= lo || mid >= hi {
            break;
        }
        let hm = funcs.h(mid)?;
        if hi - lo <= root_tol && (hm - target).abs() <= level_tol {
            break;
        }
        if hm >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let z0 = funcs.z(u0, t)?;
    let g = Automorphism::new(iso.clone(), e.scale_real(t))?;
    data.root_residual = Some((funcs.h(u0)? - target).abs());
    data.norm_defect = Some((z0.norm_sqr() - 1.0).abs());
    data.j_defect = Some(z0.conj_j().max_abs_diff(&z0));
    data.residual = Some(g.apply(&z0)?.distance(&z0));
    data.u0 = Some(u0);
    data.z0 = Some(z0);
    Ok(data)
}

/// Like [`sliver_scan`] but reports an unwitnessed condition as [`SpinError::NoRoot`].
pub fn sliver_construction(iso: &TripleIsometry, t: f64, e: &SpinElement, root_tol: f64) -> Result<SliverData> {
    let data = sliver_scan(iso, t, e, root_tol)?;
    if data.witnessed() {
        Ok(data)
    } else {
        let max_h = data.h_profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Err(SpinError::NoRoot { max_h, target: data.target })
    }
}

/// Seeded random directions tried after the analytic candidates.
const WITNESS_RANDOM_DIRECTIONS: usize = 32;

/// Whether `r` is nonzero beyond the round-off of its own evaluation.
pub fn r_certified_nonzero(x: &SpinElement, y: &SpinElement) -> bool {
    let r = r_invariant(x, y);
    let scale = 1.0 + 2.0 * x.inner(y).norm() + x.inner_j().norm() * y.inner_j().norm();
    r.norm() > 64.0 * f64::EPSILON * scale
}

/// A perturbation `z` with `|z| < eps` making `(x, y + z)` quasi-invertible.
///
/// Candidates at spin norm `eps/2`: the gradient direction of `r(x, ·)` at
/// `y`, its `i`-multiple, each canonical basis vector and its `i`-multiple
/// (these carry the quadratic term when the gradient vanishes), then seeded
/// random directions. The candidate with the largest `|r|` wins.
pub fn density_witness(x: &SpinElement, y: &SpinElement, eps: f64, seed: u64) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    if !(eps > 0.0) {
        return Err(SpinError::PreconditionViolation("eps must be positive".into()));
    }
    let n = x.dim();
    if r_invariant(x, y).norm() > quasi_inverse_tolerance(x, y) {
        return Ok(SpinElement::zeros(n));
    }
    let i = Complex64::new(0.0, 1.0);
    let grad = (&y.conj_j().scale(x.inner_j()) - x).scale_real(2.0);
    let mut directions = Vec::new();
    if grad.hilbert_norm() > 0.0 {
        directions.push(grad.clone());
        directions.push(grad.scale(i));
    }
    for k in 0..n {
        let ek = SpinElement::basis(n, k);
        directions.push(ek.scale(i));
        directions.push(ek);
    }
    let mut rng = stream_rng(seed, 0);
    directions.extend((0..WITNESS_RANDOM_DIRECTIONS).map(|_| gaussian_element(&mut rng, n)));

    let radius = 0.5 * eps;
    let best = directions
        .iter()
        .filter(|d| d.spin_norm() > 0.0)
        .map(|d| {
            let z = d.scale_real(radius / d.spin_norm());
            let r = r_invariant(x, &(y + &z)).norm();
            (r, z)
        })
        .fold(None::<(f64, SpinElement)>, |acc, cand| match acc {
            Some(best) if best.0 >= cand.0 => Some(best),
            _ => Some(cand),
        });
    match best {
        Some((_, z)) if r_certified_nonzero(x, &(y + &z)) => Ok(z),
        _ => Err(SpinError::WitnessNotFound { attempts: directions.len() }),
    }
}
