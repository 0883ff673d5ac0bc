//! Linear triple isometries, Möbius transvections and automorphisms
//! `g = T ∘ g_a` of the open unit ball.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SpinError};
use crate::spin::{quasi_inverse, LinearOperator, SpinElement};
use crate::tripotent::{is_tripotent, spectral_decompose, SpectralFrame, TripotentRank, DEFAULT_TOL};

/// Entry tolerance for `O^T O = I` and for the phase/real split of a unitary.
pub const ORTHO_TOL: f64 = 1e-12;

/// Slack allowed beyond the unit sphere before a point counts as outside the
/// closed ball.
pub const BALL_SLACK: f64 = 1e-9;

/// `x ↦ e^{iθ} O x` with `O` real orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleIsometry {
    theta: f64,
    ortho: DMatrix<f64>,
}

impl TripleIsometry {
    pub fn new(theta: f64, ortho: DMatrix<f64>) -> Result<Self> {
        if ortho.nrows() != ortho.ncols() {
            return Err(SpinError::InvalidIsometry(format!(
                "matrix is {}x{}, not square",
                ortho.nrows(),
                ortho.ncols()
            )));
        }
        if !theta.is_finite() || ortho.iter().any(|v| !v.is_finite()) {
            return Err(SpinError::InvalidIsometry("non-finite entries".into()));
        }
        let n = ortho.nrows();
        let defect = (ortho.transpose() * &ortho - DMatrix::<f64>::identity(n, n)).amax();
        if defect > ORTHO_TOL {
            return Err(SpinError::InvalidIsometry(format!(
                "matrix is not real-orthogonal: max |O^T O - I| = {defect:e}"
            )));
        }
        Ok(Self {
            theta: theta.rem_euclid(std::f64::consts::TAU),
            ortho,
        })
    }

    /// Accepts a unitary only when it is a unimodular multiple of a real
    /// orthogonal matrix; every surjective linear isometry of the spin factor
    /// has that form.
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Result<Self> {
        let (_, pivot) = u
            .iter()
            .enumerate()
            .map(|(i, c)| (c.norm(), i))
            .fold((0.0, None), |acc, (m, i)| if m > acc.0 { (m, Some(i)) } else { acc });
        let pivot = pivot.ok_or_else(|| SpinError::InvalidIsometry("zero matrix".into()))?;
        let theta = u.as_slice()[pivot].arg();
        let unphase = Complex64::from_polar(1.0, -theta);
        let rotated = u.map(|c| c * unphase);
        let imag = rotated.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if imag > ORTHO_TOL {
            return Err(SpinError::InvalidIsometry(format!(
                "not a unimodular multiple of a real matrix (residual imaginary part {imag:e}); it does not commute with j up to phase"
            )));
        }
        Self::new(theta, rotated.map(|c| c.re))
    }

    pub fn identity(n: usize) -> Self {
        Self { theta: 0.0, ortho: DMatrix::identity(n, n) }
    }

    pub fn neg_identity(n: usize) -> Self {
        Self { theta: 0.0, ortho: -DMatrix::<f64>::identity(n, n) }
    }

    /// `e_0 → e_1 → ... → e_{m-1} → e_0`, fixing the remaining basis vectors.
    pub fn cyclic_shift(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(SpinError::InvalidIsometry(format!(
                "shift order {m} must lie in 1..={n}"
            )));
        }
        let perm: Vec<usize> = (0..n).map(|k| if k < m { (k + 1) % m } else { k }).collect();
        Self::permutation(&perm)
    }

    /// Sends `e_k` to `e_{perm[k]}`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut m = DMatrix::zeros(n, n);
        for (k, &p) in perm.iter().enumerate() {
            if p >= n || seen[p] {
                return Err(SpinError::InvalidIsometry(format!(
                    "{perm:?} is not a permutation of 0..{n}"
                )));
            }
            seen[p] = true;
            m[(p, k)] = 1.0;
        }
        Ok(Self { theta: 0.0, ortho: m })
    }

    /// Rotation by `phi` in the `(e_i, e_j)` plane.
    pub fn plane_rotation(n: usize, i: usize, j: usize, phi: f64) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(SpinError::InvalidIsometry(format!(
                "rotation plane ({i}, {j}) invalid for dimension {n}"
            )));
        }
        let mut m = DMatrix::identity(n, n);
        let (s, c) = phi.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        Ok(Self { theta: 0.0, ortho: m })
    }

    pub fn with_phase(mut self, theta: f64) -> Self {
        self.theta = theta.rem_euclid(std::f64::consts::TAU);
        self
    }

    pub fn dim(&self) -> usize {
        self.ortho.nrows()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn ortho(&self) -> &DMatrix<f64> {
        &self.ortho
    }

    pub fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// `Tj = jT` holds exactly when the phase is real.
    pub fn commutes_with_j(&self) -> bool {
        self.phase().im.abs() <= ORTHO_TOL
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let ph = self.phase();
        self.ortho.map(|v| ph * v)
    }

    pub fn as_operator(&self) -> LinearOperator {
        LinearOperator::from_matrix(self.matrix())
    }

    pub fn apply(&self, x: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &SpinElement) -> SpinElement {
        let n = self.dim();
        let ph = self.phase();
        let c = x.coords();
        let out = (0..n)
            .map(|i| {
                let s: Complex64 = (0..n).map(|k| c[k] * self.ortho[(i, k)]).sum();
                s * ph
            })
            .collect();
        SpinElement::new(out)
    }
}

/// `isometry_apply`.
pub fn isometry_apply(t: &TripleIsometry, x: &SpinElement) -> Result<SpinElement> {
    t.apply(x)
}

fn check_ball(z: &SpinElement, radius: f64, what: &str) -> Result<f64> {
    let nz = z.spin_norm();
    if !(nz <= radius + BALL_SLACK) {
        return Err(SpinError::DomainError(format!(
            "{what} has spin norm {nz} outside the closed ball of radius {radius}"
        )));
    }
    Ok(nz)
}

/// Closed form of `g_{te}` for a maximal tripotent `e` with `je = σe`.
pub fn transvection_maximal(t: f64, e: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    check_dim(e.dim(), z.dim())?;
    if !(0.0..1.0).contains(&t) {
        return Err(SpinError::DomainError(format!("t = {t} outside [0, 1)")));
    }
    if is_tripotent(e, DEFAULT_TOL) != TripotentRank::Rank2 {
        return Err(SpinError::PreconditionViolation("e is not a maximal tripotent".into()));
    }
    check_ball(z, 1.0, "z")?;
    let sigma = e.conj_j().inner(e) / e.norm_sqr();
    let zjz = z.inner_j();
    let ze = z.inner(e);
    let denom = 1.0 + 2.0 * t * ze + sigma * t * t * zjz;
    if denom.norm() <= f64::EPSILON {
        return Err(SpinError::Internal(format!(
            "maximal transvection denominator vanished at |z| = {}",
            z.spin_norm()
        )));
    }
    let ce = t + sigma * t * (1.0 - t * t) * zjz / denom;
    let cz = (1.0 - t * t) / denom;
    Ok(ce * e + cz * z)
}

/// Closed form of `g_{te}` for a minimal tripotent `e`:
/// `((t+ζ)/(1+tζ)) e + ((ζ'+t<z,jz>)/(1+tζ)) je + (sqrt(1-t²)/(1+tζ)) z̃`
/// with `ζ = 2<z,e>`, `ζ' = 2<z,je>` and `z̃` orthogonal to `e, je`.
pub fn transvection_minimal(t: f64, e: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    check_dim(e.dim(), z.dim())?;
    if !(0.0..1.0).contains(&t) {
        return Err(SpinError::DomainError(format!("t = {t} outside [0, 1)")));
    }
    if is_tripotent(e, DEFAULT_TOL) != TripotentRank::Rank1 {
        return Err(SpinError::PreconditionViolation("e is not a minimal tripotent".into()));
    }
    check_ball(z, 1.0, "z")?;
    minimal_unchecked(t, e, z)
}

fn minimal_unchecked(t: f64, e: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    let je = e.conj_j();
    let zeta = 2.0 * z.inner(e);
    let zeta_j = 2.0 * z.inner(&je);
    let rest = &(z - &(zeta * e)) - &(zeta_j * &je);
    let denom = 1.0 + t * zeta;
    if denom.norm() <= f64::EPSILON {
        return Err(SpinError::Internal("minimal transvection denominator vanished".into()));
    }
    let ce = (t + zeta) / denom;
    let cje = (zeta_j + t * z.inner_j()) / denom;
    let crest = (1.0 - t * t).sqrt() / denom;
    Ok(ce * e + cje * &je + crest * &rest)
}

/// `B_a = B(a, a)^{1/2}`, diagonal on the joint Peirce pieces of a's frame.
pub fn bergman_sqrt(a: &SpinElement) -> Result<LinearOperator> {
    let na = a.spin_norm();
    if !(na < 1.0) {
        return Err(SpinError::DomainError(format!("|a| = {na} is not inside the ball")));
    }
    let n = a.dim();
    if a.hilbert_norm() <= DEFAULT_TOL * 1e-3 {
        return Ok(LinearOperator::identity(n));
    }
    let frame = spectral_decompose(a, DEFAULT_TOL)?;
    Ok(bergman_sqrt_from_frame(&frame))
}

fn bergman_sqrt_from_frame(frame: &SpectralFrame) -> LinearOperator {
    let n = frame.e1.dim();
    let d1 = 1.0 - frame.s1 * frame.s1;
    let d2 = 1.0 - frame.s2 * frame.s2;
    let mid = (d1 * d2).sqrt();
    LinearOperator::from_fn(n, |z| {
        let c1 = 2.0 * z.inner(&frame.e1);
        let c2 = 2.0 * z.inner(&frame.e2);
        let rest = &(z - &(c1 * &frame.e1)) - &(c2 * &frame.e2);
        (d1 * c1) * &frame.e1 + (d2 * c2) * &frame.e2 + mid * &rest
    })
}

/// The Möbius map `g_a(z) = a + B_a z^{-a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transvection {
    a: SpinElement,
    frame: Option<SpectralFrame>,
}

impl Transvection {
    pub fn new(a: SpinElement) -> Result<Self> {
        let na = a.spin_norm();
        if !(na < 1.0) {
            return Err(SpinError::DomainError(format!(
                "transvection parameter has |a| = {na}, must be < 1"
            )));
        }
        let frame = if a.is_zero() {
            None
        } else {
            Some(spectral_decompose(&a, 0.0)?)
        };
        Ok(Self { a, frame })
    }

    pub fn identity(n: usize) -> Self {
        Self { a: SpinElement::zeros(n), frame: None }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn parameter(&self) -> &SpinElement {
        &self.a
    }

    pub fn frame(&self) -> Option<&SpectralFrame> {
        self.frame.as_ref()
    }

    pub fn inverse(&self) -> Self {
        let a = -&self.a;
        let frame = self.frame.as_ref().map(|f| SpectralFrame {
            s1: f.s1,
            s2: f.s2,
            e1: -&f.e1,
            e2: -&f.e2,
        });
        Self { a, frame }
    }

    /// `g_a(z)` on the closed unit ball.
    pub fn apply(&self, z: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), z.dim())?;
        check_ball(z, 1.0, "z")?;
        self.apply_factorized(z)
    }

    /// `g_a(z)` on the ball of radius `1/|a|`, where the map is still defined.
    pub fn apply_extended(&self, z: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), z.dim())?;
        let na = self.a.spin_norm();
        let nz = z.spin_norm();
        if na > 0.0 && !(nz * na < 1.0) {
            return Err(SpinError::DomainError(format!(
                "|z| = {nz} is beyond the extended radius 1/|a| = {}",
                1.0 / na
            )));
        }
        self.apply_factorized(z)
    }

    /// `g_{s1 e1} ∘ g_{s2 e2}` from the spectral frame of `a`.
    fn apply_factorized(&self, z: &SpinElement) -> Result<SpinElement> {
        match &self.frame {
            None => Ok(z.clone()),
            Some(f) => {
                let inner = minimal_unchecked(f.s2, &f.e2, z)?;
                minimal_unchecked(f.s1, &f.e1, &inner)
            }
        }
    }

    /// `a + B_a z^{-a}` through the quasi-inverse; independent of the frame
    /// factorisation except for the construction of `B_a`.
    pub fn apply_via_bergman(&self, z: &SpinElement) -> Result<SpinElement> {
        check_dim(self.dim(), z.dim())?;
        let ba = bergman_sqrt(&self.a)?;
        let zq = quasi_inverse(z, &-&self.a)?;
        Ok(&self.a + &ba.apply(&zq))
    }
}

/// `transvection_apply(a, z)`.
pub fn transvection_apply(a: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    Transvection::new(a.clone())?.apply(z)
}

/// `g = T ∘ g_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Automorphism {
    pub isometry: TripleIsometry,
    pub transvection: Transvection,
}

impl Automorphism {
    pub fn new(isometry: TripleIsometry, a: SpinElement) -> Result<Self> {
        check_dim(isometry.dim(), a.dim())?;
        Ok(Self { isometry, transvection: Transvection::new(a)? })
    }

    pub fn linear(isometry: TripleIsometry) -> Self {
        let n = isometry.dim();
        Self { isometry, transvection: Transvection::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.isometry.dim()
    }

    pub fn parameter(&self) -> &SpinElement {
        self.transvection.parameter()
    }

    pub fn apply(&self, z: &SpinElement) -> Result<SpinElement> {
        let w = self.transvection.apply(z)?;
        Ok(self.isometry.apply_unchecked(&w))
    }

    pub fn to_record(&self) -> AutomorphismRecord {
        AutomorphismRecord {
            theta: self.isometry.theta(),
            ortho: self.isometry.ortho().transpose().as_slice().to_vec(),
            a: self.parameter().to_interleaved(),
        }
    }

    pub fn from_record(rec: &AutomorphismRecord) -> Result<Self> {
        let a = SpinElement::from_interleaved(&rec.a)?;
        let n = a.dim();
        if rec.ortho.len() != n * n {
            return Err(SpinError::DimensionMismatch { expected: n * n, found: rec.ortho.len() });
        }
        let ortho = DMatrix::from_row_slice(n, n, &rec.ortho);
        Self::new(TripleIsometry::new(rec.theta, ortho)?, a)
    }
}

/// Serialised automorphism: `ortho` row-major, `a` interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismRecord {
    pub theta: f64,
    pub ortho: Vec<f64>,
    pub a: Vec<f64>,
}

pub fn automorphism_apply(g: &Automorphism, z: &SpinElement) -> Result<SpinElement> {
    g.apply(z)
}

/// `|g(z) - z|` in the spin norm.
pub fn fixed_point_residual(g: &Automorphism, z: &SpinElement) -> Result<f64> {
    Ok(g.apply(z)?.distance(z))
}
