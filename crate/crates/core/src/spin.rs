//! The spin factor over `C^n` with coordinatewise conjugation.
//!
//! Inner products are linear in the first slot and conjugate-linear in the
//! second, so `{x, y, z}` is conjugate-linear in `y`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Result, SpinError};

/// Relative tolerance for quasi-invertibility: `|r| <= QI_TOL * max(1, |x||y|)^2`.
pub const QI_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinSpace {
    dim: usize,
}

impl SpinSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(SpinError::DimensionTooSmall(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn zero(&self) -> SpinElement {
        SpinElement::zeros(self.dim)
    }

    /// Canonical basis vector `e_k` (0-based); every one is fixed by `j`.
    pub fn basis(&self, k: usize) -> SpinElement {
        SpinElement::basis(self.dim, k)
    }

    /// The minimal tripotent `(e_p + i e_q) / 2`.
    pub fn minimal(&self, p: usize, q: usize) -> SpinElement {
        let mut c = vec![ZERO; self.dim];
        c[p] = Complex64::new(0.5, 0.0);
        c[q] = Complex64::new(0.0, 0.5);
        SpinElement::new(c)
    }
}

/// A point of the spin factor in canonical coordinates.
#[derive(Clone, PartialEq)]
pub struct SpinElement {
    coords: Vec<Complex64>,
}

impl SpinElement {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Self { coords: vec![ZERO; n] }
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut coords = vec![ZERO; n];
        coords[k] = ONE;
        Self { coords }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Decodes the flat `[re0, im0, re1, im1, ...]` layout.
    pub fn from_interleaved(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 {
            return Err(SpinError::PreconditionViolation(format!(
                "interleaved element needs an even number of floats, got {}",
                values.len()
            )));
        }
        Ok(Self::new(
            values
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        ))
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn from_dvector(v: &DVector<Complex64>) -> Self {
        Self::new(v.iter().copied().collect())
    }

    /// The conjugation `j`.
    pub fn conj_j(&self) -> Self {
        Self::new(self.coords.iter().map(|c| c.conj()).collect())
    }

    /// `<self, other>`, conjugate-linear in `other`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// `<self, j self>` computed without forming `j self`.
    pub fn inner_j(&self) -> Complex64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn hilbert_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `|x| |y⊥|` for `z = x + iy`, where `y⊥` is the part of `y` orthogonal to
    /// `x`. Equals `sqrt(<z,z>^2 - |<z,jz>|^2) / 2` without the cancellation
    /// of that difference.
    pub fn real_imag_area(&self) -> f64 {
        let re: Vec<f64> = self.coords.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.coords.iter().map(|c| c.im).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (a, b) = if dot(&re, &re) >= dot(&im, &im) { (re, im) } else { (im, re) };
        let aa = dot(&a, &a);
        if aa == 0.0 {
            return 0.0;
        }
        let c = dot(&a, &b) / aa;
        let perp: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - c * x).collect();
        (aa * dot(&perp, &perp)).sqrt()
    }

    pub fn spin_norm(&self) -> f64 {
        (self.norm_sqr() + 2.0 * self.real_imag_area()).sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coords.iter().map(|c| c * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.coords.iter().map(|c| c * s).collect())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "axpy dimension mismatch");
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    /// Largest coordinate modulus.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == ZERO)
    }

    /// Largest coordinate modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).spin_norm()
    }
}

impl Serialize for SpinElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_interleaved().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpinElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let flat = Vec::<f64>::deserialize(deserializer)?;
        SpinElement::from_interleaved(&flat).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for SpinElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.coords.iter().map(|c| (c.re, c.im)))
            .finish()
    }
}

impl Add for &SpinElement {
    type Output = SpinElement;
    fn add(self, rhs: &SpinElement) -> SpinElement {
        self.axpy(ONE, rhs)
    }
}

impl Add for SpinElement {
    type Output = SpinElement;
    fn add(self, rhs: SpinElement) -> SpinElement {
        &self + &rhs
    }
}

impl AddAssign<&SpinElement> for SpinElement {
    fn add_assign(&mut self, rhs: &SpinElement) {
        assert_eq!(self.dim(), rhs.dim(), "add dimension mismatch");
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a += b;
        }
    }
}

impl Sub for &SpinElement {
    type Output = SpinElement;
    fn sub(self, rhs: &SpinElement) -> SpinElement {
        self.axpy(-ONE, rhs)
    }
}

impl Sub for SpinElement {
    type Output = SpinElement;
    fn sub(self, rhs: SpinElement) -> SpinElement {
        &self - &rhs
    }
}

impl Neg for &SpinElement {
    type Output = SpinElement;
    fn neg(self) -> SpinElement {
        self.scale_real(-1.0)
    }
}

impl Neg for SpinElement {
    type Output = SpinElement;
    fn neg(self) -> SpinElement {
        -&self
    }
}

impl Mul<&SpinElement> for Complex64 {
    type Output = SpinElement;
    fn mul(self, rhs: &SpinElement) -> SpinElement {
        rhs.scale(self)
    }
}

impl Mul<SpinElement> for Complex64 {
    type Output = SpinElement;
    fn mul(self, rhs: SpinElement) -> SpinElement {
        rhs.scale(self)
    }
}

impl Mul<&SpinElement> for f64 {
    type Output = SpinElement;
    fn mul(self, rhs: &SpinElement) -> SpinElement {
        rhs.scale_real(self)
    }
}

impl Mul<SpinElement> for f64 {
    type Output = SpinElement;
    fn mul(self, rhs: SpinElement) -> SpinElement {
        rhs.scale_real(self)
    }
}

/// A complex-linear map on coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<Complex64>,
}

impl LinearOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(n, n))
    }

    /// Builds the matrix column by column from the images of the basis.
    pub fn from_fn(n: usize, image: impl Fn(&SpinElement) -> SpinElement) -> Self {
        let mut matrix = DMatrix::zeros(n, n);
        for k in 0..n {
            let col = image(&SpinElement::basis(n, k));
            for (i, c) in col.coords().iter().enumerate() {
                matrix[(i, k)] = *c;
            }
        }
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, x: &SpinElement) -> SpinElement {
        assert_eq!(self.dim(), x.dim(), "operator dimension mismatch");
        SpinElement::from_dvector(&(&self.matrix * x.to_dvector()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_matrix(&self.matrix * &other.matrix)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_matrix(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_matrix(&self.matrix - &other.matrix)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_matrix(&self.matrix * s)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let svd = self.matrix.clone().svd(false, false);
        let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    pub fn min_singular_value(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Operator norm with respect to the Hilbert norm.
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.matrix.clone().try_inverse().map(Self::from_matrix)
    }
}

/// A conjugate-linear map `z ↦ A·conj(z)`, the shape of `Q(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRep {
    matrix: DMatrix<Complex64>,
}

impl QuadraticRep {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, z: &SpinElement) -> SpinElement {
        SpinElement::from_dvector(&(&self.matrix * z.conj_j().to_dvector()))
    }

    /// `self ∘ other`; two conjugate-linear maps compose to a linear one.
    pub fn compose(&self, other: &Self) -> LinearOperator {
        LinearOperator::from_matrix(&self.matrix * other.matrix.map(|c| c.conj()))
    }
}

pub(crate) fn tp(x: &SpinElement, y: &SpinElement, z: &SpinElement) -> SpinElement {
    let xy = x.inner(y);
    let zy = z.inner(y);
    let x_jz: Complex64 = x.coords.iter().zip(&z.coords).map(|(a, b)| a * b).sum();
    let jy = y.conj_j();
    let n = x.dim();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(xy * z.coords[k] + zy * x.coords[k] - x_jz * jy.coords[k]);
    }
    SpinElement::new(out)
}

/// `{x, y, z} = <x,y>z + <z,y>x - <x,jz>jy`.
pub fn triple_product(x: &SpinElement, y: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    check_dim(x.dim(), z.dim())?;
    Ok(tp(x, y, z))
}

/// Matrix of `D(x, y) = x □ y : z ↦ {x, y, z}`.
pub fn box_operator(x: &SpinElement, y: &SpinElement) -> Result<LinearOperator> {
    check_dim(x.dim(), y.dim())?;
    Ok(LinearOperator::from_fn(x.dim(), |ek| tp(x, y, ek)))
}

/// `Q(x) z = {x, z, x} = 2<x,z>x - <x,jx>jz`.
pub fn quadratic_rep(x: &SpinElement) -> QuadraticRep {
    let n = x.dim();
    let xjx = x.inner_j();
    let v = x.to_dvector();
    let mut a = (&v * v.transpose()) * Complex64::new(2.0, 0.0);
    for k in 0..n {
        a[(k, k)] -= xjx;
    }
    QuadraticRep::from_matrix(a)
}

/// `B(x, y) = I - 2 D(x, y) + Q(x) Q(y)`.
pub fn bergman_operator(x: &SpinElement, y: &SpinElement) -> Result<LinearOperator> {
    check_dim(x.dim(), y.dim())?;
    let n = x.dim();
    let d = box_operator(x, y)?;
    let qq = quadratic_rep(x).compose(&quadratic_rep(y));
    Ok(LinearOperator::identity(n)
        .sub(&d.scale(Complex64::new(2.0, 0.0)))
        .add(&qq))
}

/// `B(x, y) z` in the span of `{x, jy, z}` without forming a matrix.
pub fn bergman_apply(x: &SpinElement, y: &SpinElement, z: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    check_dim(x.dim(), z.dim())?;
    let xy = x.inner(y);
    let zy = z.inner(y);
    let x_jz: Complex64 = x.coords.iter().zip(&z.coords).map(|(a, b)| a * b).sum();
    let xjx = x.inner_j();
    let jyy = y.inner_j().conj();
    let two = Complex64::new(2.0, 0.0);
    let cx = -two * zy * (ONE - two * xy) - two * x_jz * jyy;
    let cjy = two * x_jz - two * xjx * zy;
    let cz = ONE - two * xy + xjx * jyy;
    let jy = y.conj_j();
    Ok(cz * z + cx * x + cjy * &jy)
}

/// `B(x, y) x` in the basis `{x, jy}`.
pub fn bergman_on_x(x: &SpinElement, y: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    let xy = x.inner(y);
    let ii = x.inner_j() * y.inner_j().conj();
    let cx = (ONE - 2.0 * xy).powi(2) - ii;
    let cjy = 2.0 * x.inner_j() * (ONE - xy);
    Ok(cx * x + cjy * &y.conj_j())
}

/// `B(x, y) jy` in the basis `{x, jy}`.
pub fn bergman_on_jy(x: &SpinElement, y: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    let xy = x.inner(y);
    let jyy = y.inner_j().conj();
    let ii = x.inner_j() * jyy;
    let cx = -2.0 * jyy * (ONE - xy);
    Ok(cx * x + (ONE - ii) * &y.conj_j())
}

/// `r(x, y) = 1 - 2<x,y> + <x,jx><jy,y>`; `B(x, y)` is invertible iff this is nonzero.
pub fn r_invariant(x: &SpinElement, y: &SpinElement) -> Complex64 {
    ONE - 2.0 * x.inner(y) + x.inner_j() * y.inner_j().conj()
}

pub fn quasi_inverse_tolerance(x: &SpinElement, y: &SpinElement) -> f64 {
    let scale = (x.spin_norm() * y.spin_norm()).max(1.0);
    QI_TOL * scale * scale
}

/// `x^y = (x - <x,jx> jy) / r(x, y)`.
pub fn quasi_inverse(x: &SpinElement, y: &SpinElement) -> Result<SpinElement> {
    check_dim(x.dim(), y.dim())?;
    let r = r_invariant(x, y);
    let tol = quasi_inverse_tolerance(x, y);
    if r.norm() <= tol {
        return Err(SpinError::QuasiInverseUndefined { r_abs: r.norm(), tol });
    }
    let num = x.axpy(-x.inner_j(), &y.conj_j());
    Ok(num.scale(ONE / r))
}
