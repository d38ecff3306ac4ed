//! Finite-dimensional C*-algebra and Hilbert-module calculus.
//!
//! The coefficient algebra is `B = M_k(C)`, the standard module `E = B^n` is
//! stored as `(n*k) x k` matrices and adjointable operators on `E` are
//! `(n*k) x (n*k)` matrices acting on the left.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

/// Default relative tolerance for positivity and hermiticity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not self-adjoint: |A - A*| = {asym:e} exceeds tol * |A| = {bound:e}")]
    NotSelfAdjoint { asym: f64, bound: f64 },
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("function undefined at eigenvalue {0}")]
    FunctionUndefined(f64),
    #[error("malformed matrix data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// Sign of a graded commutator `[a,b]_tau = ab + tau ba`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Product of two signs.
    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = AlgebraError;
    fn from_str(s: &str) -> Result<Sign> {
        match s {
            "+" | "plus" | "anticommuting" => Ok(Sign::Plus),
            "-" | "minus" | "commuting" => Ok(Sign::Minus),
            other => Err(AlgebraError::Malformed(format!("unknown sign '{other}'"))),
        }
    }
}

// ---------------------------------------------------------------------------
// dense helpers

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> Mat {
    Mat::identity(dim, dim)
}

/// Spectral norm (largest singular value).
pub fn norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().cloned().fold(0.0, f64::max)
}

pub fn adjoint(m: &Mat) -> Mat {
    m.adjoint()
}

/// `(m + m*)/2`.
pub fn hermitian_part(m: &Mat) -> Mat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues and eigenvectors of a hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &Mat) -> (DVector<f64>, Mat) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn lambda_min(m: &Mat) -> f64 {
    hermitian_eigen(m)
        .0
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn lambda_max(m: &Mat) -> f64 {
    hermitian_eigen(m)
        .0
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Dense inverse with a conditioning guard.
pub fn inverse(m: &Mat) -> Result<Mat> {
    if !m.is_square() {
        return Err(AlgebraError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| AlgebraError::Singular("zero pivot in LU".into()))?;
    let cond = inv.norm() * m.norm();
    if !cond.is_finite() || cond > 1e15 {
        return Err(AlgebraError::Singular(format!(
            "condition estimate {cond:e}"
        )));
    }
    Ok(inv)
}

/// `U diag(f(d)) U*`.
pub fn spectral_apply(vals: &DVector<f64>, vecs: &Mat, f: impl Fn(f64) -> C64) -> Mat {
    let fv: Vec<C64> = vals.iter().map(|&d| f(d)).collect();
    spectral_apply_values(&fv, vecs)
}

/// `U diag(v) U*` for precomputed diagonal values.
pub fn spectral_apply_values(fv: &[C64], vecs: &Mat) -> Mat {
    let mut scaled = vecs.clone();
    for (j, &v) in fv.iter().enumerate() {
        for e in scaled.column_mut(j).iter_mut() {
            *e *= v;
        }
    }
    scaled * vecs.adjoint()
}

/// `[a,b]_tau = ab + tau ba` on raw matrices.
pub fn commutator(a: &Mat, b: &Mat, tau: Sign) -> Mat {
    a * b + (b * a) * c(tau.value(), 0.0)
}

/// Hermitian positivity test with relative tolerance.
pub fn is_positive_matrix(a: &Mat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = norm(a);
    if scale == 0.0 {
        return true;
    }
    if norm(&(a - a.adjoint())) > tol * scale {
        return false;
    }
    lambda_min(a) >= -tol * scale
}

/// Extreme eigenvalues `(min, max)` of the pencil `m v = g p v` for hermitian
/// `m` and positive definite `p`.
pub fn pencil_extremes(m: &Mat, p: &Mat) -> Result<(f64, f64)> {
    let chol = nalgebra::Cholesky::new(hermitian_part(p)).ok_or_else(|| {
        AlgebraError::Singular("pencil denominator is not positive definite".into())
    })?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&identity(p.nrows()))
        .ok_or_else(|| AlgebraError::Singular("triangular solve failed".into()))?;
    let reduced = &linv * hermitian_part(m) * linv.adjoint();
    let (vals, _) = hermitian_eigen(&reduced);
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Hex SHA-256 of the matrices' dimensions and entries (little-endian f64).
pub fn instance_hash(mats: &[&Mat], tag: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    for m in mats {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for z in m.iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Kronecker product.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// typed wrappers

/// Element of the coefficient algebra `M_k(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CStarElement {
    entries: Mat,
}

impl CStarElement {
    pub fn new(entries: Mat) -> Result<Self> {
        if !entries.is_square() {
            return Err(AlgebraError::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            entries: identity(k),
        }
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }
}

/// Element of the standard module `B^n`, stored as an `(n*k) x k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleVector {
    entries: Mat,
    n: usize,
    k: usize,
}

impl ModuleVector {
    pub fn new(entries: Mat, n: usize, k: usize) -> Result<Self> {
        if entries.nrows() != n * k || entries.ncols() != k {
            return Err(AlgebraError::ShapeMismatch(format!(
                "module vector over B^{n}, B = M_{k}, needs {}x{k}, got {}x{}",
                n * k,
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries, n, k })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    /// Right action of `b` in `B`.
    pub fn act_right(&self, b: &CStarElement) -> Result<Self> {
        if b.k() != self.k {
            return Err(AlgebraError::ShapeMismatch(
                "right action by wrong algebra".into(),
            ));
        }
        Ok(Self {
            entries: &self.entries * b.matrix(),
            n: self.n,
            k: self.k,
        })
    }
}

/// Adjointable operator on `B^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleOperator {
    entries: Mat,
    n: usize,
    k: usize,
}

impl ModuleOperator {
    pub fn new(entries: Mat, n: usize, k: usize) -> Result<Self> {
        if entries.nrows() != n * k || entries.ncols() != n * k {
            return Err(AlgebraError::ShapeMismatch(format!(
                "operator on B^{n}, B = M_{k}, needs {0}x{0}, got {1}x{2}",
                n * k,
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries, n, k })
    }

    /// Operator over `B = C` (k = 1).
    pub fn scalar_module(entries: Mat) -> Result<Self> {
        let n = entries.nrows();
        Self::new(entries, n, 1)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    pub fn dim(&self) -> usize {
        self.n * self.k
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            n: self.n,
            k: self.k,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if x.shape() != self.shape() {
            return Err(AlgebraError::ShapeMismatch(
                "operator/vector shapes differ".into(),
            ));
        }
        ModuleVector::new(&self.entries * x.matrix(), self.n, self.k)
    }

    pub fn compose(&self, other: &ModuleOperator) -> Result<Self> {
        check_same(self, other)?;
        Ok(Self {
            entries: &self.entries * &other.entries,
            n: self.n,
            k: self.k,
        })
    }

    fn with(&self, entries: Mat) -> Self {
        Self {
            entries,
            n: self.n,
            k: self.k,
        }
    }
}

fn check_same(a: &ModuleOperator, b: &ModuleOperator) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(AlgebraError::ShapeMismatch(format!(
            "operators on B^{} (k={}) and B^{} (k={})",
            a.n, a.k, b.n, b.k
        )));
    }
    Ok(())
}

/// Self-adjoint operator with a cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct SelfAdjointOperator {
    base: ModuleOperator,
    eigenvalues: DVector<f64>,
    eigenvectors: Mat,
}

impl SelfAdjointOperator {
    /// Symmetrizes `op` when its asymmetry is within `tol * |op|`, errors otherwise.
    pub fn new(op: ModuleOperator, tol: f64) -> Result<Self> {
        let scale = op.norm();
        let asym = norm(&(op.matrix() - op.matrix().adjoint()));
        if asym > tol * scale {
            return Err(AlgebraError::NotSelfAdjoint {
                asym,
                bound: tol * scale,
            });
        }
        let herm = hermitian_part(op.matrix());
        let (eigenvalues, eigenvectors) = hermitian_eigen(&herm);
        Ok(Self {
            base: op.with(herm),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn from_matrix(m: Mat, n: usize, k: usize) -> Result<Self> {
        Self::new(ModuleOperator::new(m, n, k)?, DEFAULT_TOL)
    }

    pub fn scalar_module(m: Mat) -> Result<Self> {
        Self::new(ModuleOperator::scalar_module(m)?, DEFAULT_TOL)
    }

    pub fn operator(&self) -> &ModuleOperator {
        &self.base
    }

    pub fn matrix(&self) -> &Mat {
        self.base.matrix()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Mat {
        &self.eigenvectors
    }

    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Same shape, new matrix; shares nothing with `self`.
    pub fn sibling(&self, m: Mat) -> Result<Self> {
        Self::new(self.base.with(m), DEFAULT_TOL)
    }

    /// `f(A)` as a raw matrix; infallible for total functions.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> Mat {
        spectral_apply(&self.eigenvalues, &self.eigenvectors, f)
    }

    /// `A^2`.
    pub fn square(&self) -> Mat {
        self.apply_fn(|d| c(d * d, 0.0))
    }

    /// `|A|`.
    pub fn abs(&self) -> Mat {
        self.apply_fn(|d| c(d.abs(), 0.0))
    }
}

// ---------------------------------------------------------------------------
// operations

/// B-valued inner product `<x,y> = x* y`.
pub fn inner_product(x: &ModuleVector, y: &ModuleVector) -> Result<CStarElement> {
    if x.shape() != y.shape() {
        return Err(AlgebraError::ShapeMismatch(format!(
            "inner product of {:?} and {:?} vectors",
            x.shape(),
            y.shape()
        )));
    }
    CStarElement::new(x.matrix().adjoint() * y.matrix())
}

pub fn is_positive(a: &CStarElement, tol: f64) -> bool {
    is_positive_matrix(a.matrix(), tol)
}

/// Continuous functional calculus `f(A)`.
pub fn func_calc(a: &SelfAdjointOperator, f: impl Fn(f64) -> C64) -> Result<ModuleOperator> {
    let mut vals = Vec::with_capacity(a.dim());
    for &d in a.eigenvalues.iter() {
        let v = f(d);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(AlgebraError::FunctionUndefined(d));
        }
        vals.push(v);
    }
    let m = spectral_apply_values(&vals, &a.eigenvectors);
    Ok(a.base.with(m))
}

/// `(A + lambda)^{-1}` through the cached eigendecomposition.
pub fn resolvent(a: &SelfAdjointOperator, lambda: C64) -> Result<ModuleOperator> {
    let scale = a.norm().max(lambda.norm()).max(1.0);
    for &d in a.eigenvalues.iter() {
        if (C64::from(d) + lambda).norm() <= 1e-14 * scale {
            return Err(AlgebraError::Singular(format!(
                "-{lambda} is an eigenvalue"
            )));
        }
    }
    Ok(a.base.with(a.apply_fn(|d| (C64::from(d) + lambda).inv())))
}

pub fn graded_commutator(
    a: &ModuleOperator,
    b: &ModuleOperator,
    sign: Sign,
) -> Result<ModuleOperator> {
    check_same(a, b)?;
    Ok(a.with(commutator(a.matrix(), b.matrix(), sign)))
}

/// Residuals of the two graded Leibniz rules for `(sigma, tau)`:
/// `[a,bc]_t = [a,b]_s c - s b [a,c]_{-st}` and `[ab,c]_t = a[b,c]_s - s [a,c]_{-st} b`.
/// Each entry is `(residual, |a||b||c|)`.
pub fn leibniz_residuals(a: &Mat, b: &Mat, cc: &Mat, sigma: Sign, tau: Sign) -> [(f64, f64); 2] {
    let s = c(sigma.value(), 0.0);
    let mst = sigma.times(tau).flip();
    let scale = norm(a) * norm(b) * norm(cc);
    let lhs1 = commutator(a, &(b * cc), tau);
    let rhs1 = commutator(a, b, sigma) * cc - (b * commutator(a, cc, mst)) * s;
    let lhs2 = commutator(&(a * b), cc, tau);
    let rhs2 = a * commutator(b, cc, sigma) - (commutator(a, cc, mst) * b) * s;
    [(norm(&(lhs1 - rhs1)), scale), (norm(&(lhs2 - rhs2)), scale)]
}

/// Residuals of the resolvent commutator identities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    /// `(l+b)^{-1} a = a(l-tb)^{-1} - (l+b)^{-1}[b,a]_t (l-tb)^{-1}`.
    pub shifted: f64,
    /// `[(l+b^2)^{-1},a]_- ` expanded through `[a,b]_-`.
    pub square_commutator: f64,
    /// `[(l+b^2)^{-1},a]_- ` expanded through `[a,b]_+`.
    pub square_anticommutator: f64,
    /// Natural scale of each side: `|a| * |inverses| * (1 + |b|)^2`.
    pub scale: f64,
}

impl IdentityResiduals {
    pub fn max_relative(&self) -> f64 {
        self.shifted
            .max(self.square_commutator)
            .max(self.square_anticommutator)
            / self.scale
    }
}

pub fn resolvent_commutator_identities(
    a: &ModuleOperator,
    b: &ModuleOperator,
    lambda: C64,
    tau: Sign,
) -> Result<IdentityResiduals> {
    check_same(a, b)?;
    let (am, bm) = (a.matrix(), b.matrix());
    let dim = a.dim();
    let id = identity(dim);
    let l = id.clone() * lambda;
    let t = c(tau.value(), 0.0);

    let r_plus = inverse(&(&l + bm))?;
    let r_tau = inverse(&(&l - bm * t))?;
    let b2 = bm * bm;
    let r_sq = inverse(&(&l + &b2))?;

    let lhs4 = &r_plus * am;
    let rhs4 = am * &r_tau - &r_plus * commutator(bm, am, tau) * &r_tau;

    let lhs56 = commutator(&r_sq, am, Sign::Minus);
    let cm = commutator(am, bm, Sign::Minus);
    let cp = commutator(am, bm, Sign::Plus);
    let rhs5 = &r_sq * bm * &cm * &r_sq + &r_sq * &cm * bm * &r_sq;
    let rhs6 = -(&r_sq * bm * &cp * &r_sq) + &r_sq * &cp * bm * &r_sq;

    let inv_scale = norm(&r_plus).max(norm(&r_tau)).max(norm(&r_sq));
    let nb = norm(bm);
    let scale = norm(am) * inv_scale.max(inv_scale * inv_scale) * (1.0 + nb).powi(2);
    Ok(IdentityResiduals {
        shifted: norm(&(lhs4 - rhs4)),
        square_commutator: norm(&(&lhs56 - rhs5)),
        square_anticommutator: norm(&(&lhs56 - rhs6)),
        scale: scale.max(f64::MIN_POSITIVE),
    })
}

// ---------------------------------------------------------------------------
// serialization

/// `{"rows","cols","re","im"}` with row-major entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Mat) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<Mat> {
        let len = self.rows * self.cols;
        if self.re.len() != len || self.im.len() != len {
            return Err(AlgebraError::Malformed(format!(
                "{}x{} matrix with {} real and {} imaginary entries",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(Mat::from_fn(self.rows, self.cols, |i, j| {
            c(self.re[i * self.cols + j], self.im[i * self.cols + j])
        }))
    }
}

// ---------------------------------------------------------------------------
// Pauli matrices (sigma_2 follows the convention sigma_3 = i sigma_1 sigma_2)

pub fn sigma1() -> Mat {
    Mat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma2() -> Mat {
    Mat::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)])
}

pub fn sigma3() -> Mat {
    Mat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix, rng};
    use approx::assert_relative_eq;

    #[test]
    fn pauli_relations() {
        let (s1, s2, s3) = (sigma1(), sigma2(), sigma3());
        assert!(norm(&commutator(&s1, &s2, Sign::Plus)) < 1e-15);
        let diff = commutator(&s1, &s2, Sign::Minus) - &s3 * c(0.0, -2.0);
        // with this sigma_2, [s1,s2]_- = -2i s3
        assert!(norm(&diff) < 1e-15);
        assert!(norm(&(&s1 * &s2 * c(0.0, 1.0) - &s3)) < 1e-15);
    }

    #[test]
    fn basis_inner_products() {
        let e1 =
            ModuleVector::new(Mat::from_column_slice(2, 1, &[c(1., 0.), c(0., 0.)]), 2, 1).unwrap();
        let e2 =
            ModuleVector::new(Mat::from_column_slice(2, 1, &[c(0., 0.), c(1., 0.)]), 2, 1).unwrap();
        assert_eq!(inner_product(&e1, &e1).unwrap().matrix()[(0, 0)], c(1., 0.));
        assert_eq!(inner_product(&e1, &e2).unwrap().matrix()[(0, 0)], c(0., 0.));
    }

    #[test]
    fn inner_product_shape_mismatch() {
        let x = ModuleVector::new(Mat::zeros(4, 2), 2, 2).unwrap();
        let y = ModuleVector::new(Mat::zeros(4, 1), 4, 1).unwrap();
        assert!(matches!(
            inner_product(&x, &y),
            Err(AlgebraError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn polarization_bound_with_r_two() {
        let mut g = rng(7);
        let (n, k) = (3, 2);
        for _ in 0..20 {
            let x = ModuleVector::new(random_matrix(&mut g, n * k, k), n, k).unwrap();
            let y = ModuleVector::new(random_matrix(&mut g, n * k, k), n, k).unwrap();
            let xx = inner_product(&x, &x).unwrap().into_matrix();
            let yy = inner_product(&y, &y).unwrap().into_matrix();
            let xy = inner_product(&x, &y).unwrap().into_matrix();
            let sym = &xy + xy.adjoint();
            let r = 2.0;
            for s in [1.0, -1.0] {
                let m = &xx * c(r, 0.) + &yy * c(1.0 / r, 0.) - &sym * c(s, 0.);
                let scale = norm(&xx) + norm(&yy);
                assert!(lambda_min(&m) >= -1e-12 * scale);
            }
        }
    }

    #[test]
    fn positivity_basic() {
        assert!(is_positive(&CStarElement::identity(3), DEFAULT_TOL));
        assert!(!is_positive(
            &CStarElement::new(sigma3()).unwrap(),
            DEFAULT_TOL
        ));
        assert!(is_positive(
            &CStarElement::new(Mat::zeros(2, 2)).unwrap(),
            DEFAULT_TOL
        ));
        // non-hermitian but with positive hermitian part
        let m = Mat::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.)]);
        assert!(!is_positive_matrix(&m, DEFAULT_TOL));
    }

    #[test]
    fn module_positivity_and_cauchy_schwarz() {
        let mut g = rng(11);
        for _ in 0..100 {
            let x = ModuleVector::new(random_matrix(&mut g, 6, 2), 3, 2).unwrap();
            let y = ModuleVector::new(random_matrix(&mut g, 6, 2), 3, 2).unwrap();
            let xx = inner_product(&x, &x).unwrap();
            assert!(is_positive(&xx, 1e-12));
            let yx = inner_product(&y, &x).unwrap().into_matrix();
            let yy = inner_product(&y, &y).unwrap().into_matrix();
            let lhs = &yx * yx.adjoint();
            let rhs = &yy * c(xx.norm(), 0.);
            let scale = norm(&rhs).max(1.0);
            assert!(lambda_min(&(rhs - lhs)) >= -1e-12 * scale);
        }
    }

    #[test]
    fn right_action_commutes_with_operators() {
        let mut g = rng(3);
        let (n, k) = (2, 3);
        let a = ModuleOperator::new(random_matrix(&mut g, 6, 6), n, k).unwrap();
        let x = ModuleVector::new(random_matrix(&mut g, 6, 3), n, k).unwrap();
        let b = CStarElement::new(random_matrix(&mut g, 3, 3)).unwrap();
        let lhs = a.apply(&x).unwrap().act_right(&b).unwrap();
        let rhs = a.apply(&x.act_right(&b).unwrap()).unwrap();
        assert!(
            norm(&(lhs.matrix() - rhs.matrix())) < 1e-12 * a.norm() * norm(x.matrix()) * b.norm()
        );
    }

    #[test]
    fn double_adjoint_is_exact() {
        let mut g = rng(5);
        let a = CStarElement::new(random_matrix(&mut g, 4, 4)).unwrap();
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn rejects_asymmetric_operator() {
        let m = Mat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let err = SelfAdjointOperator::scalar_module(m).unwrap_err();
        assert!(matches!(err, AlgebraError::NotSelfAdjoint { .. }));
    }

    #[test]
    fn func_calc_identity_and_arctan() {
        let mut g = rng(1);
        let a = SelfAdjointOperator::scalar_module(random_hermitian(&mut g, 5, 2.0)).unwrap();
        let fa = func_calc(&a, C64::from).unwrap();
        assert!(norm(&(fa.matrix() - a.matrix())) < 1e-12 * a.norm());

        let d = SelfAdjointOperator::scalar_module(sigma1()).unwrap();
        let chi = func_calc(&d, |x| C64::from(2.0 / std::f64::consts::PI * x.atan())).unwrap();
        let (vals, _) = hermitian_eigen(chi.matrix());
        assert_relative_eq!(vals[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn func_calc_undefined_point() {
        let a = SelfAdjointOperator::scalar_module(sigma3()).unwrap();
        let err = func_calc(&a, |x| C64::from(1.0 / (x - 1.0))).unwrap_err();
        assert!(matches!(err, AlgebraError::FunctionUndefined(_)));
    }

    /// Denman-Beavers square root, independent of any eigensolver.
    fn sqrtm_db(m: &Mat) -> Mat {
        let mut y = m.clone();
        let mut z = identity(m.nrows());
        for _ in 0..60 {
            let yi = y.clone().try_inverse().unwrap();
            let zi = z.clone().try_inverse().unwrap();
            let y1 = (&y + zi) * c(0.5, 0.);
            let z1 = (&z + yi) * c(0.5, 0.);
            y = y1;
            z = z1;
        }
        y
    }

    #[test]
    fn func_calc_fractional_power_matches_iterative_root() {
        let mut g = rng(21);
        for _ in 0..5 {
            let h = random_hermitian(&mut g, 6, 1.5);
            let a = SelfAdjointOperator::scalar_module(h.clone()).unwrap();
            let got = func_calc(&a, |x| C64::from((1.0 + x.abs()).powf(-0.5))).unwrap();
            let abs = sqrtm_db(&(&h * &h));
            let oracle = sqrtm_db(&(identity(6) + abs)).try_inverse().unwrap();
            assert!(norm(&(got.matrix() - oracle)) < 1e-10);
        }
    }

    #[test]
    fn resolvent_examples() {
        let z = SelfAdjointOperator::scalar_module(Mat::zeros(3, 3)).unwrap();
        let r = resolvent(&z, c(0., 1.)).unwrap();
        assert!(norm(&(r.matrix() - identity(3) * c(0., -1.))) < 1e-15);

        let s3 = SelfAdjointOperator::scalar_module(sigma3()).unwrap();
        let r = resolvent(&s3, c(0., 2.)).unwrap();
        let oracle = (sigma3() + identity(2) * c(0., 2.)).try_inverse().unwrap();
        assert!(norm(&(r.matrix() - &oracle)) < 1e-15);
        assert_relative_eq!(r.norm(), 1.0 / 5f64.sqrt(), epsilon = 1e-14);

        assert!(matches!(
            resolvent(&s3, c(-1., 0.)),
            Err(AlgebraError::Singular(_))
        ));
    }

    #[test]
    fn resolvent_norm_bound_on_grid() {
        let mut g = rng(2);
        for _ in 0..50 {
            let a = SelfAdjointOperator::scalar_module(random_hermitian(&mut g, 4, 3.0)).unwrap();
            for e in -2..=3 {
                let l = 10f64.powi(e);
                let r = resolvent(&a, c(0., l)).unwrap();
                let direct = inverse(&(a.matrix() + identity(4) * c(0., l))).unwrap();
                assert!(norm(&(r.matrix() - direct)) <= 1e-10 / l);
                assert!(r.norm() * l <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn leibniz_rules_all_signs() {
        let mut g = rng(9);
        for _ in 0..20 {
            let a = random_matrix(&mut g, 5, 5);
            let b = random_matrix(&mut g, 5, 5);
            let cc = random_matrix(&mut g, 5, 5);
            for s in Sign::ALL {
                for t in Sign::ALL {
                    for (res, scale) in leibniz_residuals(&a, &b, &cc, s, t) {
                        assert!(res <= 1e-13 * scale, "{s}{t}: {res} vs {scale}");
                    }
                }
            }
        }
    }

    #[test]
    fn resolvent_identities_random() {
        let mut g = rng(4);
        for lambda in [c(0., 3.), c(1., 1.)] {
            for tau in Sign::ALL {
                let a = ModuleOperator::scalar_module(random_hermitian(&mut g, 6, 1.0)).unwrap();
                let b = ModuleOperator::scalar_module(random_hermitian(&mut g, 6, 1.0)).unwrap();
                let r = resolvent_commutator_identities(&a, &b, lambda, tau).unwrap();
                assert!(r.max_relative() <= 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn shifted_identity_for_scalar_b() {
        let mut g = rng(8);
        let a = ModuleOperator::scalar_module(random_matrix(&mut g, 3, 3)).unwrap();
        let b = ModuleOperator::scalar_module(identity(3) * c(0.7, 0.)).unwrap();
        let r = resolvent_commutator_identities(&a, &b, c(0., 2.), Sign::Minus).unwrap();
        assert!(r.shifted < 1e-14);
    }

    #[test]
    fn matrix_json_round_trip() {
        let mut g = rng(6);
        let m = random_matrix(&mut g, 3, 2);
        let js = serde_json::to_string(&MatrixJson::from_matrix(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&js).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
        let bad = MatrixJson {
            rows: 2,
            cols: 2,
            re: vec![0.0; 3],
            im: vec![0.0; 4],
        };
        assert!(bad.to_matrix().is_err());
    }
}
