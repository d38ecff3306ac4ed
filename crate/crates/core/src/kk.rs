//! Graded Kasparov data, interior tensor products of finite Hilbert modules,
//! the normalizing function `chi = (2/pi) arctan` and the operator identities
//! and estimates behind the positivity condition for products.
//!
//! Throughout, `[S,T]` is the anticommutator `ST + TS` and `D_+- = S +- T`.
//! On the doubled module `omega = sigma_3 x 1` commutes with `S^ = 1 x S`,
//! `T^ = 1 x T` and `D^_+- = S^ +- omega T^`.

use crate::algebra::{
    self, c, commutator, hermitian_eigen, identity, inverse, kron, lambda_min, norm, sigma3,
    spectral_apply, AlgebraError, Mat, ModuleOperator, ModuleVector, SelfAdjointOperator, Sign,
    C64,
};
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KkError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("grading is not a self-adjoint involution (residual {0:e})")]
    BadGrading(f64),
    #[error("D is not odd: |gamma D + D gamma| = {0:e}")]
    NotOdd(f64),
    #[error("coefficient mismatch: {0}")]
    CoefficientMismatch(String),
    #[error("left action is not a *-homomorphism (residual {0:e})")]
    BadAction(f64),
    #[error("left action does not commute with the grading of Y (residual {0:e})")]
    OddAction(f64),
    #[error("tensor module has complex dimension {dim}, not a multiple of {l}; it is not free")]
    NotFree { dim: usize, l: usize },
    #[error("lifted operator does not preserve the tensor module (residual {0:e})")]
    LiftNotInvariant(f64),
    #[error("quadrature order {0} is below 8")]
    QuadratureOrder(usize),
    #[error("kappa must be positive, got {0}")]
    BadKappa(f64),
    #[error("vector is not homogeneous for the grading (residual {0:e})")]
    NotHomogeneous(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, KkError>;

fn herm_fn(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = hermitian_eigen(m);
    spectral_apply(&vals, &vecs, |x| c(f(x), 0.0))
}

fn resolvent_sq(d: &Mat, mu: f64) -> Mat {
    herm_fn(d, |x| 1.0 / (1.0 + mu * mu * x * x))
}

fn gauss01(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(n.max(2))
        .expect("degree >= 2")
        .into_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

#[derive(Debug, Clone)]
pub struct GradedModule {
    pub n: usize,
    pub k: usize,
    pub gamma: Mat,
}

impl GradedModule {
    pub fn new(n: usize, k: usize, gamma: Mat) -> Result<Self> {
        let op = ModuleOperator::new(gamma, n, k)?;
        let g = op.matrix();
        let res = norm(&(g - g.adjoint())).max(norm(&(g * g - identity(n * k))));
        if res > 1e-13 {
            return Err(KkError::BadGrading(res));
        }
        Ok(Self {
            n,
            k,
            gamma: op.into_matrix(),
        })
    }

    /// Trivially graded: `gamma = 1`.
    pub fn trivial(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            gamma: identity(n * k),
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.k
    }
}

#[derive(Debug, Clone)]
pub struct KasparovTriple {
    pub module: GradedModule,
    pub representation: Vec<(String, ModuleOperator)>,
    pub d: SelfAdjointOperator,
    pub oddness_residual: f64,
    /// `|[D, a]|` per representative.
    pub commutator_norms: Vec<(String, f64)>,
}

impl KasparovTriple {
    pub fn new(
        module: GradedModule,
        representation: Vec<(String, ModuleOperator)>,
        d: SelfAdjointOperator,
    ) -> Result<Self> {
        if d.shape() != (module.n, module.k) {
            return Err(KkError::Shape("D does not act on the graded module".into()));
        }
        let g = &module.gamma;
        let oddness_residual = norm(&(g * d.matrix() + d.matrix() * g));
        if oddness_residual > 1e-12 * d.norm().max(1.0) {
            return Err(KkError::NotOdd(oddness_residual));
        }
        let mut commutator_norms = Vec::with_capacity(representation.len());
        for (name, a) in &representation {
            if a.shape() != d.shape() {
                return Err(KkError::Shape(format!(
                    "representative {name} has the wrong shape"
                )));
            }
            commutator_norms.push((
                name.clone(),
                norm(&commutator(d.matrix(), a.matrix(), Sign::Minus)),
            ));
        }
        Ok(Self {
            module,
            representation,
            d,
            oddness_residual,
            commutator_norms,
        })
    }
}

/// A `*`-homomorphism `phi: M_k -> L(Y)`, stored as the images of the matrix units.
#[derive(Debug, Clone)]
pub struct LeftAction {
    pub k: usize,
    pub dim: usize,
    /// `units[i * k + j] = phi(e_ij)`.
    pub units: Vec<Mat>,
}

fn unit(k: usize, i: usize, j: usize) -> Mat {
    let mut m = Mat::zeros(k, k);
    m[(i, j)] = c(1.0, 0.0);
    m
}

impl LeftAction {
    pub fn from_units(k: usize, units: Vec<Mat>) -> Result<Self> {
        if units.len() != k * k || k == 0 {
            return Err(KkError::CoefficientMismatch(format!(
                "expected {} matrix-unit images",
                k * k
            )));
        }
        let dim = units[0].nrows();
        if units.iter().any(|u| u.nrows() != dim || u.ncols() != dim) {
            return Err(KkError::CoefficientMismatch(
                "matrix-unit images differ in size".into(),
            ));
        }
        let mut res: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let u = &units[i * k + j];
                res = res.max(norm(&(u.adjoint() - &units[j * k + i])));
                for a in 0..k {
                    for b in 0..k {
                        let prod = u * &units[a * k + b];
                        let want = if j == a {
                            units[i * k + b].clone()
                        } else {
                            Mat::zeros(dim, dim)
                        };
                        res = res.max(norm(&(prod - want)));
                    }
                }
            }
        }
        if res > 1e-12 {
            return Err(KkError::BadAction(res));
        }
        Ok(Self { k, dim, units })
    }

    /// `M_k` acting on `C^k` by matrix multiplication.
    pub fn standard(k: usize) -> Self {
        Self::diagonal(k, 1)
    }

    /// `M_k` acting on `M_k^m` diagonally: `phi(b) = 1_m x b`.
    pub fn diagonal(k: usize, m: usize) -> Self {
        let units = (0..k * k)
            .map(|ij| kron(&identity(m), &unit(k, ij / k, ij % k)))
            .collect();
        Self {
            k,
            dim: m * k,
            units,
        }
    }

    /// The unital action of `C` on a space of dimension `dim`.
    pub fn scalar(dim: usize) -> Self {
        Self {
            k: 1,
            dim,
            units: vec![identity(dim)],
        }
    }

    pub fn apply(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(self.dim, self.dim);
        for i in 0..self.k {
            for j in 0..self.k {
                let bij = b[(i, j)];
                if bij != C64::new(0.0, 0.0) {
                    out += &self.units[i * self.k + j] * bij;
                }
            }
        }
        out
    }
}

/// A graded module over `C` with a left action of `B`.
#[derive(Debug, Clone)]
pub struct LeftModule {
    pub module: GradedModule,
    pub action: LeftAction,
}

impl LeftModule {
    pub fn new(module: GradedModule, action: LeftAction) -> Result<Self> {
        if action.dim != module.dim() {
            return Err(KkError::CoefficientMismatch(format!(
                "left action acts on dimension {}, module has {}",
                action.dim,
                module.dim()
            )));
        }
        let g = &module.gamma;
        let res = action
            .units
            .iter()
            .map(|u| norm(&(u * g - g * u)))
            .fold(0.0, f64::max);
        if res > 1e-12 {
            return Err(KkError::OddAction(res));
        }
        Ok(Self { module, action })
    }
}

/// `E = X (x)_B Y`, realized inside `Y^n` through `x (x) y -> (phi(x_p) y)_p`.
#[derive(Debug, Clone)]
pub struct TensorModule {
    pub module: GradedModule,
    pub x_shape: (usize, usize),
    pub y_shape: (usize, usize),
    pub action: LeftAction,
    /// Isometry from `E` into `Y^n`, `(n m l) x (N l)`.
    pub embedding: Mat,
    /// Complex dimension of the algebraic tensor product `X (x)_C Y`.
    pub algebraic_dim: usize,
    /// Rank of its Gram form, the complex dimension of `E`.
    pub gram_rank: usize,
}

impl TensorModule {
    /// `T (x) 1` on `Y^n` for an operator `T` on `X`.
    pub fn amplify(&self, op_x: &Mat) -> Mat {
        let (n, k) = self.x_shape;
        let d = self.action.dim;
        let mut out = Mat::zeros(n * d, n * d);
        for p in 0..n {
            for q in 0..n {
                let block = op_x.view((p * k, q * k), (k, k)).into_owned();
                out.view_mut((p * d, q * d), (d, d))
                    .copy_from(&self.action.apply(&block));
            }
        }
        out
    }

    /// `1 (x) T` on `Y^n` for an operator `T` on `Y`.
    pub fn diagonal(&self, op_y: &Mat) -> Mat {
        kron(&identity(self.x_shape.0), op_y)
    }

    pub fn compress(&self, big: &Mat) -> Mat {
        self.embedding.adjoint() * big * &self.embedding
    }

    /// `|(1 - QQ*) big Q|`: how far `big` is from preserving `E`.
    pub fn leakage(&self, big: &Mat) -> f64 {
        let q = &self.embedding;
        let img = big * q;
        norm(&(&img - q * (q.adjoint() * &img)))
    }

    /// The creation operator `y -> x (x) y` as a matrix `Y -> E`.
    pub fn creation(&self, x: &ModuleVector) -> Result<Mat> {
        let (n, k) = self.x_shape;
        if x.shape() != (n, k) {
            return Err(KkError::Shape("vector does not lie in X".into()));
        }
        let d = self.action.dim;
        let mut stack = Mat::zeros(n * d, d);
        for p in 0..n {
            let block = x.matrix().view((p * k, 0), (k, k)).into_owned();
            stack
                .view_mut((p * d, 0), (d, d))
                .copy_from(&self.action.apply(&block));
        }
        Ok(self.embedding.adjoint() * stack)
    }

    pub fn tensor(&self, x: &ModuleVector, y: &ModuleVector) -> Result<ModuleVector> {
        if y.shape() != self.y_shape {
            return Err(KkError::Shape("vector does not lie in Y".into()));
        }
        let v = self.creation(x)? * y.matrix();
        Ok(ModuleVector::new(v, self.module.n, self.module.k)?)
    }
}

fn orthonormal_range(projection: &Mat, tol: f64) -> Mat {
    // Gram-Schmidt on the columns of the projection, in order; gives the
    // identity when nothing is quotiented.
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for j in 0..projection.ncols() {
        let mut v = projection.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let coef = q.dotc(&v);
                v -= q * coef;
            }
        }
        let nv = v.norm();
        if nv > tol {
            cols.push(v / c(nv, 0.0));
        }
    }
    if cols.is_empty() {
        return Mat::zeros(projection.nrows(), 0);
    }
    Mat::from_columns(&cols)
}

pub fn interior_tensor(x: &GradedModule, y: &LeftModule) -> Result<TensorModule> {
    let (n, k) = (x.n, x.k);
    let (m, l) = (y.module.n, y.module.k);
    if y.action.k != k {
        return Err(KkError::CoefficientMismatch(format!(
            "X is over M_{k}, Y carries an action of M_{}",
            y.action.k
        )));
    }
    let d = y.action.dim;
    let big = n * d;
    // Images of the complex basis e_(row, col) (x) f_(sigma, tau): a single
    // nonzero column phi(e_ic)[:, sigma] in block p, column tau.
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for row in 0..n * k {
        let (p, i) = (row / k, row % k);
        for col in 0..k {
            let u = &y.action.units[i * k + col];
            for sigma in 0..d {
                for tau in 0..l {
                    let mut v = nalgebra::DVector::<C64>::zeros(big * l);
                    for r in 0..d {
                        v[tau * big + p * d + r] = u[(r, sigma)];
                    }
                    cols.push(v);
                }
            }
        }
    }
    let algebraic_dim = cols.len();
    let vmat = Mat::from_columns(&cols);
    let gram = vmat.adjoint() * &vmat;
    let (gvals, _) = hermitian_eigen(&gram);
    let gmax = gvals.iter().cloned().fold(0.0, f64::max);
    let gram_rank = gvals.iter().filter(|&&v| v > 1e-10 * gmax).count();

    // Range of the images inside Y^n as a space of columns.
    let mut w = Mat::zeros(big, big);
    for row in 0..n * k {
        let (p, i) = (row / k, row % k);
        for col in 0..k {
            let u = &y.action.units[i * k + col];
            let mut block = Mat::zeros(big, d);
            block.view_mut((p * d, 0), (d, d)).copy_from(u);
            w += &block * block.adjoint();
        }
    }
    let (wvals, wvecs) = hermitian_eigen(&w);
    let wmax = wvals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..big).filter(|&i| wvals[i] > 1e-10 * wmax).collect();
    let r = keep.len();
    if r * l != gram_rank {
        return Err(KkError::CoefficientMismatch(format!(
            "Gram rank {gram_rank} disagrees with range dimension {r} x {l}"
        )));
    }
    if !r.is_multiple_of(l) {
        return Err(KkError::NotFree { dim: r, l });
    }
    let u = Mat::from_columns(
        &keep
            .iter()
            .map(|&i| wvecs.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let projection = &u * u.adjoint();
    let embedding = orthonormal_range(&projection, 1e-8);
    if embedding.ncols() != r {
        return Err(KkError::CoefficientMismatch("range basis lost rank".into()));
    }

    let mut e = TensorModule {
        module: GradedModule::trivial(r / l, l),
        x_shape: (n, k),
        y_shape: (m, l),
        action: y.action.clone(),
        embedding,
        algebraic_dim,
        gram_rank,
    };
    let gamma_big = e.amplify(&x.gamma) * e.diagonal(&y.module.gamma);
    let gamma = e.compress(&gamma_big);
    e.module = GradedModule::new(r / l, l, algebra::hermitian_part(&gamma))?;
    Ok(e)
}

/// `S = S_X (x) 1` on `E`, with the leakage out of `E` returned alongside.
pub fn lift_s(e: &TensorModule, s_x: &SelfAdjointOperator) -> Result<(SelfAdjointOperator, f64)> {
    if s_x.shape() != e.x_shape {
        return Err(KkError::Shape("S_X does not act on X".into()));
    }
    let big = e.amplify(s_x.matrix());
    let leak = e.leakage(&big);
    if leak > 1e-10 * s_x.norm().max(1.0) {
        return Err(KkError::LiftNotInvariant(leak));
    }
    let s = SelfAdjointOperator::from_matrix(e.compress(&big), e.module.n, e.module.k)?;
    Ok((s, leak))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMethod {
    Eig,
    Quadrature(usize),
}

fn chi_matrix(d: &Mat, method: ChiMethod) -> Result<Mat> {
    match method {
        ChiMethod::Eig => Ok(herm_fn(d, |x| 2.0 / PI * x.atan())),
        ChiMethod::Quadrature(n) => {
            if n < 8 {
                return Err(KkError::QuadratureOrder(n));
            }
            let id = identity(d.nrows());
            let d2 = d * d;
            let mut acc = Mat::zeros(d.nrows(), d.ncols());
            for (mu, w) in gauss01(n) {
                acc += d * inverse(&(&id + &d2 * c(mu * mu, 0.0)))? * c(w, 0.0);
            }
            Ok(acc * c(2.0 / PI, 0.0))
        }
    }
}

/// `chi(D) = (2/pi) arctan(D)`.
pub fn chi(d: &SelfAdjointOperator, method: ChiMethod) -> Result<ModuleOperator> {
    let (n, k) = d.shape();
    Ok(ModuleOperator::new(chi_matrix(d.matrix(), method)?, n, k)?)
}

/// `int_0^1 |D| (1 + mu^2 D^2)^-1 dmu` by Gauss-Legendre, which is `arctan |D|`.
pub fn arctan_abs_quadrature(d: &SelfAdjointOperator, n: usize) -> Result<Mat> {
    if n < 8 {
        return Err(KkError::QuadratureOrder(n));
    }
    let abs = d.abs();
    let mut acc = Mat::zeros(d.dim(), d.dim());
    for (mu, w) in gauss01(n) {
        acc += &abs * resolvent_sq(d.matrix(), mu) * c(w, 0.0);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct KMuResiduals {
    pub mu: f64,
    /// Definition vs the first factorization.
    pub def_vs_first: f64,
    /// Definition vs the second factorization.
    pub def_vs_second: f64,
    pub first_vs_second: f64,
    pub k_norm: f64,
    pub d_plus_k_norm: f64,
    pub d_minus_k_norm: f64,
    pub scale: f64,
}

impl KMuResiduals {
    pub fn max_relative(&self) -> f64 {
        self.def_vs_first
            .max(self.def_vs_second)
            .max(self.first_vs_second)
            / self.scale
    }
}

/// `K_mu = (1+mu^2 D_-^2)^-1 - (1+mu^2 D_+^2)^-1` three ways.
pub fn k_mu_identities(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    mu: f64,
) -> Result<KMuResiduals> {
    if s.shape() != t.shape() {
        return Err(KkError::Shape("S and T act on different modules".into()));
    }
    let id = identity(s.dim());
    let dp = s.matrix() + t.matrix();
    let dm = s.matrix() - t.matrix();
    let k = commutator(s.matrix(), t.matrix(), Sign::Plus);
    let m2 = c(mu * mu, 0.0);
    let rp = inverse(&(&id + &dp * &dp * m2))?;
    let rm = inverse(&(&id + &dm * &dm * m2))?;
    let def = &rm - &rp;
    let first = &rp * &k * &rm * (m2 * 2.0);
    let second = &rm * &k * &rp * (m2 * 2.0);
    Ok(KMuResiduals {
        mu,
        def_vs_first: norm(&(&def - &first)),
        def_vs_second: norm(&(&def - &second)),
        first_vs_second: norm(&(&first - &second)),
        k_norm: norm(&def),
        d_plus_k_norm: norm(&(&dp * &def)),
        d_minus_k_norm: norm(&(&dm * &def)),
        scale: 1.0 + 2.0 * mu * mu * norm(&k),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KMuSweep {
    pub rows: Vec<KMuResiduals>,
    pub sup_k: f64,
    pub sup_d_plus_k: f64,
    pub sup_d_minus_k: f64,
    pub max_relative_residual: f64,
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn k_mu_sweep(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    grid: &[f64],
) -> Result<KMuSweep> {
    let rows = grid
        .iter()
        .map(|&mu| k_mu_identities(s, t, mu))
        .collect::<Result<Vec<_>>>()?;
    let sup = |f: fn(&KMuResiduals) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(KMuSweep {
        sup_k: sup(|r| r.k_norm),
        sup_d_plus_k: sup(|r| r.d_plus_k_norm),
        sup_d_minus_k: sup(|r| r.d_minus_k_norm),
        max_relative_residual: sup(|r| r.max_relative()),
        rows,
    })
}

/// Operators on the doubled module.
struct Doubled {
    s: Mat,
    t: Mat,
    omega: Mat,
}

impl Doubled {
    fn new(s: &Mat, t: &Mat) -> Self {
        let dim = s.nrows();
        Self {
            s: kron(&identity(2), s),
            t: kron(&identity(2), t),
            omega: kron(&sigma3(), &identity(dim)),
        }
    }

    fn d_plus(&self) -> Mat {
        &self.s + &self.omega * &self.t
    }

    fn d_minus(&self) -> Mat {
        &self.s - &self.omega * &self.t
    }
}

/// `R_mu = omega T (1+mu^2 D^2)^-1 S + S (1+mu^2 D^2)^-1 omega T` on the doubled module.
pub fn r_mu(s: &Mat, t: &Mat, mu: f64) -> Mat {
    let h = Doubled::new(s, t);
    let res = resolvent_sq(&h.d_plus(), mu);
    let wt = &h.omega * &h.t;
    &wt * &res * &h.s + &h.s * &res * &wt
}

#[derive(Debug, Clone, Serialize)]
pub struct RMuReport {
    pub mu: f64,
    /// `|omega R_mu - rhs|`.
    pub residual: f64,
    pub scale: f64,
    pub lhs_norm: f64,
    /// Norm of the second summand of the right-hand side.
    pub second_term_norm: f64,
}

/// Checks `omega R_mu = (1+mu^2 D_+^2)^-1 [S,T] (1+mu^2 D_-^2)^-1
/// + mu D_- (1+mu^2 D_+^2)^-1 [S,T] (1+mu^2 D_-^2)^-1 mu D_-` on the doubled module.
pub fn r_mu_identity(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    mu: f64,
) -> Result<RMuReport> {
    if s.shape() != t.shape() {
        return Err(KkError::Shape("S and T act on different modules".into()));
    }
    let h = Doubled::new(s.matrix(), t.matrix());
    let lhs = &h.omega * r_mu(s.matrix(), t.matrix(), mu);
    let k = commutator(&h.s, &h.t, Sign::Plus);
    let dm = h.d_minus();
    let rp = resolvent_sq(&h.d_plus(), mu);
    let rm = resolvent_sq(&dm, mu);
    let first = &rp * &k * &rm;
    let second = &dm * &rp * &k * &rm * &dm * c(mu * mu, 0.0);
    let rhs = &first + &second;
    Ok(RMuReport {
        mu,
        residual: norm(&(&lhs - &rhs)),
        scale: norm(&lhs) + norm(&first) + norm(&second) + f64::MIN_POSITIVE,
        lhs_norm: norm(&lhs),
        second_term_norm: norm(&second),
    })
}

/// `|K (1 + |S+T|)^-1|`.
pub fn p0_norm(s: &Mat, t: &Mat) -> f64 {
    let d = s + t;
    let k = commutator(s, t, Sign::Plus);
    norm(&(k * herm_fn(&d, |x| 1.0 / (1.0 + x.abs()))))
}

/// `|P_0|` for the doubled pair `(S^, omega T^)`: the larger of the values for `(S, T)` and `(S, -T)`.
pub fn p0_norm_doubled(s: &Mat, t: &Mat) -> f64 {
    p0_norm(s, t).max(p0_norm(s, &(-t)))
}

#[derive(Debug, Clone, Serialize)]
pub struct FormBoundRow {
    pub mu: f64,
    /// `lambda_min(rhs - lhs)`.
    pub slack_plus: f64,
    /// `lambda_min(rhs + lhs)`.
    pub slack_minus: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FormBoundReport {
    /// `C = |P_0|`.
    pub constant: f64,
    /// `min over signs of lambda_min(C (1 + |D|) -+ K)`.
    pub form_slack: f64,
    pub form_scale: f64,
    pub rows: Vec<FormBoundRow>,
    /// All slacks are at least `-1e-9 scale`.
    pub holds: bool,
}

/// `+-(1+mu^2 D^2)^-1 K (1+mu^2 D^2)^-1 <= C (1+|D|) (1+mu^2 D^2)^-2` per `mu`.
pub fn form_bound(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    grid: &[f64],
) -> Result<FormBoundReport> {
    if s.shape() != t.shape() {
        return Err(KkError::Shape("S and T act on different modules".into()));
    }
    let d = s.matrix() + t.matrix();
    let k = commutator(s.matrix(), t.matrix(), Sign::Plus);
    let constant = p0_norm(s.matrix(), t.matrix());
    let one_abs = herm_fn(&d, |x| 1.0 + x.abs());
    let form = &one_abs * c(constant, 0.0);
    let form_slack = lambda_min(&(&form - &k)).min(lambda_min(&(&form + &k)));
    let form_scale = norm(&form) + norm(&k);
    let mut holds = form_slack >= -1e-9 * form_scale;
    let mut rows = Vec::with_capacity(grid.len());
    for &mu in grid {
        let r = resolvent_sq(&d, mu);
        let lhs = &r * &k * &r;
        let rhs = herm_fn(&d, |x| {
            constant * (1.0 + x.abs()) / (1.0 + mu * mu * x * x).powi(2)
        });
        let scale = norm(&lhs) + norm(&rhs) + f64::MIN_POSITIVE;
        let row = FormBoundRow {
            mu,
            slack_plus: lambda_min(&(&rhs - &lhs)),
            slack_minus: lambda_min(&(&rhs + &lhs)),
            scale,
        };
        holds &= row.slack_plus.min(row.slack_minus) >= -1e-9 * scale;
        rows.push(row);
    }
    Ok(FormBoundReport {
        constant,
        form_slack,
        form_scale,
        rows,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleStatus {
    Success,
    BelowTarget,
    BisectionExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaleReport {
    pub kappa: f64,
    /// `2 kappa / pi^3`.
    pub epsilon_used: f64,
    pub t_star: f64,
    /// `|P_0|` of the doubled pair at `t_star`.
    pub p0_at_t_star: f64,
    /// `lambda_min` of `chi(t D^) chi(t S^) + chi(t S^) chi(t D^)` on the doubled module.
    pub lambda_min: f64,
    /// The same for the undoubled `D = S + T`.
    pub lambda_min_corner: f64,
    /// `lambda_min` after subtracting the terms produced by replacing
    /// `(1+mu^2 D_+^2)^-1` with `(1+mu^2 D_-^2)^-1`; not claimed to be a bound.
    pub lambda_min_adjusted: f64,
    pub status: RescaleStatus,
}

fn anticommutator_chi(d: &Mat, s: &Mat) -> Mat {
    let cd = herm_fn(d, |x| 2.0 / PI * x.atan());
    let cs = herm_fn(s, |x| 2.0 / PI * x.atan());
    algebra::hermitian_part(&(&cd * &cs + &cs * &cd))
}

/// `(4/pi^2) int int (P_l E_mu P_l + Q_l E_mu Q_l)` with `E_mu = R_mu - omega (rhs with D_-)`.
fn replacement_terms(s: &Mat, t: &Mat, nodes: usize) -> Mat {
    let h = Doubled::new(s, t);
    let k = commutator(&h.s, &h.t, Sign::Plus);
    let dm = h.d_minus();
    let dim = h.s.nrows();
    let quad = gauss01(nodes);
    let mut e_bar = Mat::zeros(dim, dim);
    for &(mu, w) in &quad {
        let rm = resolvent_sq(&dm, mu);
        let approx = &rm * &k * &rm + &dm * &rm * &k * &rm * &dm * c(mu * mu, 0.0);
        let e = r_mu(s, t, mu) - &h.omega * approx;
        e_bar += e * c(w, 0.0);
    }
    let mut acc = Mat::zeros(dim, dim);
    for &(l, w) in &quad {
        let p = herm_fn(&h.s, |x| 1.0 / (1.0 + l * l * x * x));
        let q = herm_fn(&h.s, |x| l * x / (1.0 + l * l * x * x));
        acc += (&p * &e_bar * &p + &q * &e_bar * &q) * c(w, 0.0);
    }
    acc * c(4.0 / (PI * PI), 0.0)
}

pub fn rescale_for_kappa(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    kappa: f64,
) -> Result<RescaleReport> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(KkError::BadKappa(kappa));
    }
    if s.shape() != t.shape() {
        return Err(KkError::Shape("S and T act on different modules".into()));
    }
    let epsilon_used = 2.0 * kappa / PI.powi(3);
    let p = |x: f64| p0_norm_doubled(&(s.matrix() * c(x, 0.0)), &(t.matrix() * c(x, 0.0)));
    let mut status = RescaleStatus::Success;
    let t_star = if p(1.0) <= epsilon_used {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) <= epsilon_used {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        if lo == 0.0 {
            status = RescaleStatus::BisectionExhausted;
            hi * 1e-12
        } else {
            lo
        }
    };
    let ss = s.matrix() * c(t_star, 0.0);
    let ts = t.matrix() * c(t_star, 0.0);
    let h = Doubled::new(&ss, &ts);
    let anti = anticommutator_chi(&h.d_plus(), &h.s);
    let lambda_min_full = lambda_min(&anti);
    let lambda_min_corner = lambda_min(&anticommutator_chi(&(&ss + &ts), &ss));
    let lambda_min_adjusted = lambda_min(&algebra::hermitian_part(
        &(&anti - replacement_terms(&ss, &ts, 48)),
    ));
    if status == RescaleStatus::Success && lambda_min_full < -kappa {
        status = RescaleStatus::BelowTarget;
    }
    Ok(RescaleReport {
        kappa,
        epsilon_used,
        t_star,
        p0_at_t_star: p(t_star),
        lambda_min: lambda_min_full,
        lambda_min_corner,
        lambda_min_adjusted,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    Even,
    Odd,
}

/// Product data for the connection and positivity conditions.
pub struct ProductData<'a> {
    pub tensor: &'a TensorModule,
    pub x_grading: &'a Mat,
    pub s_x: &'a SelfAdjointOperator,
    pub t_y: &'a SelfAdjointOperator,
    /// User-supplied connection operator on `E`.
    pub connection: &'a SelfAdjointOperator,
    pub vectors: &'a [(ModuleVector, Degree)],
    pub algebra: &'a [ModuleOperator],
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionReport {
    /// Per supplied `x`: `|y -> gamma(x) (x) T_Y y - T (x (x) y)|`.
    pub connection_values: Vec<f64>,
    pub connection_max: f64,
    /// Per supplied `a`: `lambda_min(a* [chi(S), chi(D)] a + kappa a* a)` with `D = S + T`.
    pub positivity_values: Vec<f64>,
    pub positivity_min: f64,
    pub kappa: f64,
    /// `0 <= kappa < 2`.
    pub kappa_admissible: bool,
    pub note: String,
}

pub fn connes_skandalis_check(data: &ProductData<'_>, kappa: f64) -> Result<ConnectionReport> {
    let e = data.tensor;
    let edim = e.module.dim();
    if data.t_y.shape() != e.y_shape {
        return Err(KkError::Shape("T_Y does not act on Y".into()));
    }
    if data.connection.dim() != edim {
        return Err(KkError::Shape("connection does not act on E".into()));
    }
    if data.x_grading.nrows() != e.x_shape.0 * e.x_shape.1 {
        return Err(KkError::Shape("grading of X has the wrong size".into()));
    }
    let (s, _) = lift_s(e, data.s_x)?;
    let mut connection_values = Vec::with_capacity(data.vectors.len());
    for (x, deg) in data.vectors {
        let gx = data.x_grading * x.matrix();
        let sign = match deg {
            Degree::Even => 1.0,
            Degree::Odd => -1.0,
        };
        let hom = norm(&(&gx - x.matrix() * c(sign, 0.0)));
        if hom > 1e-10 * norm(x.matrix()).max(1.0) {
            return Err(KkError::NotHomogeneous(hom));
        }
        let theta = e.creation(x)?;
        let op = &theta * data.t_y.matrix() * c(sign, 0.0) - data.connection.matrix() * &theta;
        connection_values.push(norm(&op));
    }
    let d = s.matrix() + data.connection.matrix();
    let anti = anticommutator_chi(&d, s.matrix());
    let mut positivity_values = Vec::with_capacity(data.algebra.len());
    for a in data.algebra {
        if a.dim() != edim {
            return Err(KkError::Shape("algebra element does not act on E".into()));
        }
        let am = a.matrix();
        let form = am.adjoint() * &anti * am + am.adjoint() * am * c(kappa, 0.0);
        positivity_values.push(lambda_min(&algebra::hermitian_part(&form)));
    }
    Ok(ConnectionReport {
        connection_max: connection_values.iter().cloned().fold(0.0, f64::max),
        positivity_min: positivity_values.iter().cloned().fold(f64::INFINITY, f64::min),
        connection_values,
        positivity_values,
        kappa,
        kappa_admissible: (0.0..2.0).contains(&kappa),
        note: "finite dimension: every 'modulo locally compact' qualifier is vacuous; values are literal".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{inner_product, sigma1, sigma2};
    use crate::random::{random_hermitian, random_matrix, rng};
    use approx::assert_relative_eq;

    fn sa(m: Mat) -> SelfAdjointOperator {
        SelfAdjointOperator::scalar_module(m).unwrap()
    }

    fn random_pair(seed: u64, dim: usize) -> (SelfAdjointOperator, SelfAdjointOperator) {
        let mut g = rng(seed);
        (
            sa(random_hermitian(&mut g, dim, 1.5)),
            sa(random_hermitian(&mut g, dim, 2.0)),
        )
    }

    /// Pauli pair plus a small random perturbation.
    fn pauli_perturbed(seed: u64) -> (SelfAdjointOperator, SelfAdjointOperator) {
        let mut g = rng(seed);
        let a = random_hermitian(&mut g, 2, 3.0);
        let s = kron(&sigma1(), &a) + random_hermitian(&mut g, 4, 0.2);
        let t = kron(&sigma2(), &identity(2)) * c(2.0, 0.) + random_hermitian(&mut g, 4, 0.2);
        (sa(s), sa(t))
    }

    #[test]
    fn graded_module_validation() {
        assert!(GradedModule::new(2, 1, sigma3()).is_ok());
        assert!(matches!(
            GradedModule::new(2, 1, sigma3() * c(2., 0.)),
            Err(KkError::BadGrading(_))
        ));
        let m = GradedModule::new(2, 1, sigma3()).unwrap();
        assert!(KasparovTriple::new(m.clone(), vec![], sa(sigma1())).is_ok());
        assert!(matches!(
            KasparovTriple::new(m, vec![], sa(sigma3())),
            Err(KkError::NotOdd(_))
        ));
    }

    #[test]
    fn triple_reports_commutator_norms() {
        let m = GradedModule::new(2, 1, sigma3()).unwrap();
        let a = ModuleOperator::scalar_module(identity(2) * c(3., 0.)).unwrap();
        let b = ModuleOperator::scalar_module(sigma3()).unwrap();
        let tr = KasparovTriple::new(
            m,
            vec![("one".into(), a), ("grading".into(), b)],
            sa(sigma1()),
        )
        .unwrap();
        assert_eq!(tr.commutator_norms[0].1, 0.0);
        assert_relative_eq!(tr.commutator_norms[1].1, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn action_validation() {
        assert!(LeftAction::from_units(2, LeftAction::standard(2).units).is_ok());
        let mut bad = LeftAction::standard(2).units;
        bad[1] = bad[1].clone() * c(2., 0.);
        assert!(matches!(
            LeftAction::from_units(2, bad),
            Err(KkError::BadAction(_))
        ));
    }

    #[test]
    fn unit_module_tensor_is_isometric() {
        let mut g = rng(20);
        let x = GradedModule::trivial(1, 2);
        let y = LeftModule::new(GradedModule::trivial(3, 2), LeftAction::diagonal(2, 3)).unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        assert_eq!((e.module.n, e.module.k), (3, 2));
        for _ in 0..5 {
            let x1 = ModuleVector::new(random_matrix(&mut g, 2, 2), 1, 2).unwrap();
            let x2 = ModuleVector::new(random_matrix(&mut g, 2, 2), 1, 2).unwrap();
            let y1 = ModuleVector::new(random_matrix(&mut g, 6, 2), 3, 2).unwrap();
            let y2 = ModuleVector::new(random_matrix(&mut g, 6, 2), 3, 2).unwrap();
            let lhs =
                inner_product(&e.tensor(&x1, &y1).unwrap(), &e.tensor(&x2, &y2).unwrap()).unwrap();
            let bx = inner_product(&x1, &x2).unwrap();
            let oracle = y1.matrix().adjoint() * kron(&identity(3), bx.matrix()) * y2.matrix();
            assert!(norm(&(lhs.matrix() - &oracle)) <= 1e-12 * norm(&oracle));
        }
    }

    #[test]
    fn scalar_coefficients_give_kronecker_product() {
        let mut g = rng(21);
        let x = GradedModule::trivial(3, 1);
        let y = LeftModule::new(GradedModule::trivial(2, 1), LeftAction::scalar(2)).unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        assert_eq!(e.module.dim(), 6);
        assert_eq!(e.gram_rank, 6);
        let s_x = sa(random_hermitian(&mut g, 3, 1.0));
        let (s, leak) = lift_s(&e, &s_x).unwrap();
        assert_eq!(leak, 0.0);
        assert_eq!(s.matrix(), &kron(s_x.matrix(), &identity(2)));
        let one = lift_s(&e, &sa(identity(3))).unwrap().0;
        assert_eq!(one.matrix(), &identity(6));
    }

    #[test]
    fn balanced_tensor_quotients_null_space() {
        // M_2 (x)_{M_2} C^2 = C^2.
        let x = GradedModule::trivial(1, 2);
        let y = LeftModule::new(GradedModule::trivial(2, 1), LeftAction::standard(2)).unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        assert_eq!(e.algebraic_dim, 8);
        // Gram-rank oracle: the 8 image vectors phi(e_ic) f_sigma span C^2.
        let mut rank_oracle = Mat::zeros(2, 8);
        let mut col = 0;
        for i in 0..2 {
            for cc in 0..2 {
                for sigma in 0..2 {
                    if cc == sigma {
                        rank_oracle[(i, col)] = c(1., 0.);
                    }
                    col += 1;
                }
            }
        }
        assert_eq!(rank_oracle.rank(1e-12), 2);
        assert_eq!(e.gram_rank, 2);
        assert_eq!(e.module.dim(), 2);
    }

    #[test]
    fn lift_spectrum_is_contained_in_spectrum_of_s_x() {
        let mut g = rng(22);
        let x = GradedModule::trivial(2, 2);
        let y = LeftModule::new(GradedModule::trivial(2, 1), LeftAction::standard(2)).unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        let s_x = SelfAdjointOperator::from_matrix(random_hermitian(&mut g, 4, 2.0), 2, 2).unwrap();
        let (s, _) = lift_s(&e, &s_x).unwrap();
        for v in s.eigenvalues().iter() {
            assert!(s_x.eigenvalues().iter().any(|w| (v - w).abs() <= 1e-10));
        }
    }

    #[test]
    fn tensor_grading_is_product() {
        let x = GradedModule::new(2, 1, sigma3()).unwrap();
        let y = LeftModule::new(
            GradedModule::new(2, 1, sigma3()).unwrap(),
            LeftAction::scalar(2),
        )
        .unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        assert_eq!(e.module.gamma, kron(&sigma3(), &sigma3()));
    }

    #[test]
    fn coefficient_mismatch_is_reported() {
        let x = GradedModule::trivial(1, 3);
        let y = LeftModule::new(GradedModule::trivial(2, 1), LeftAction::standard(2)).unwrap();
        assert!(matches!(
            interior_tensor(&x, &y),
            Err(KkError::CoefficientMismatch(_))
        ));
    }

    #[test]
    fn chi_examples() {
        let zero = sa(Mat::zeros(3, 3));
        assert_eq!(
            chi(&zero, ChiMethod::Eig).unwrap().matrix(),
            &Mat::zeros(3, 3)
        );
        let half = chi(&sa(sigma1()), ChiMethod::Eig).unwrap();
        assert!(norm(&(half.matrix() - sigma1() * c(0.5, 0.))) <= 1e-15);
        assert!(matches!(
            chi(&zero, ChiMethod::Quadrature(7)),
            Err(KkError::QuadratureOrder(7))
        ));
    }

    #[test]
    fn chi_methods_agree_and_chi_is_odd() {
        let mut g = rng(23);
        for _ in 0..4 {
            let d = sa(random_hermitian(&mut g, 6, 10.0));
            let a = chi(&d, ChiMethod::Eig).unwrap();
            let b = chi(&d, ChiMethod::Quadrature(200)).unwrap();
            assert!(norm(&(a.matrix() - b.matrix())) <= 1e-8);
            let neg = chi(&d.sibling(-d.matrix()).unwrap(), ChiMethod::Eig).unwrap();
            assert!(norm(&(neg.matrix() + a.matrix())) <= 1e-14);
        }
    }

    #[test]
    fn arctan_integral_is_bounded_by_half_pi() {
        let mut g = rng(24);
        let d = sa(random_hermitian(&mut g, 6, 50.0));
        let q = arctan_abs_quadrature(&d, 400).unwrap();
        assert!(algebra::lambda_max(&q) <= PI / 2.0 + 1e-8);
        let oracle = herm_fn(d.matrix(), |x| x.abs().atan());
        assert!(norm(&(q - oracle)) <= 1e-8);
    }

    #[test]
    fn k_mu_vanishes_for_anticommuting_pair() {
        let s = sa(sigma1());
        let t = sa(sigma2());
        let r = k_mu_identities(&s, &t, 1.0).unwrap();
        assert!(r.k_norm <= 1e-15);
    }

    #[test]
    fn k_mu_three_ways_agree() {
        for seed in 0..3 {
            let (s, t) = random_pair(30 + seed, 5);
            for mu in [0.1, 1.0, 10.0] {
                let r = k_mu_identities(&s, &t, mu).unwrap();
                assert!(r.max_relative() <= 1e-12, "{r:?}");
            }
            let sweep = k_mu_sweep(&s, &t, &log_grid(1e-3, 1e3, 50)).unwrap();
            assert_eq!(sweep.rows.len(), 50);
            assert!(sweep.sup_d_plus_k.is_finite() && sweep.sup_k.is_finite());
        }
    }

    #[test]
    fn r_mu_identity_holds() {
        for seed in 0..3 {
            let (s, t) = random_pair(40 + seed, 4);
            for mu in [0.1, 1.0, 10.0] {
                let r = r_mu_identity(&s, &t, mu).unwrap();
                assert!(r.residual <= 1e-12 * r.scale, "{r:?}");
            }
        }
    }

    #[test]
    fn r_mu_for_anticommuting_pair() {
        let a = random_hermitian(&mut rng(50), 2, 1.0);
        let s = sa(kron(&sigma1(), &a));
        let t = sa(kron(&sigma3(), &identity(2)));
        let r = r_mu_identity(&s, &t, 1.0).unwrap();
        assert!(r.residual <= 1e-13 * (1.0 + r.scale));
        assert!(r.second_term_norm <= 1e-13);
    }

    #[test]
    fn r_mu_scaling_covariance() {
        let (s, t) = random_pair(51, 4);
        for mu in [0.3, 2.0] {
            let m = c(mu, 0.);
            let scaled = r_mu(&(s.matrix() * m), &(t.matrix() * m), 1.0);
            let direct = r_mu(s.matrix(), t.matrix(), mu) * c(mu * mu, 0.);
            assert!(norm(&(&scaled - &direct)) <= 1e-12 * norm(&direct).max(1.0));
        }
    }

    #[test]
    fn form_bound_trivial_for_anticommuting() {
        let rep = form_bound(&sa(sigma1()), &sa(sigma2()), &[0.1, 1.0, 10.0]).unwrap();
        assert_eq!(rep.constant, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn form_bound_holds_for_perturbed_pauli() {
        for seed in 0..3 {
            let (s, t) = pauli_perturbed(60 + seed);
            let rep = form_bound(&s, &t, &[0.1, 1.0, 10.0]).unwrap();
            assert!(rep.holds, "{rep:?}");
            assert!(rep.form_slack >= -1e-9 * rep.form_scale);
        }
    }

    #[test]
    fn p0_shrinks_under_rescaling() {
        let (s, t) = pauli_perturbed(61);
        let c1 = p0_norm(s.matrix(), t.matrix());
        let small = p0_norm(&(s.matrix() * c(0.1, 0.)), &(t.matrix() * c(0.1, 0.)));
        assert!(small <= 0.1 * c1 * (1.0 + 1e-12));
        let mut prev = c1;
        for k in 1..10 {
            let f = 0.5f64.powi(k);
            let v = p0_norm(&(s.matrix() * c(f, 0.)), &(t.matrix() * c(f, 0.)));
            assert!(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn rescale_anticommuting_pair() {
        let rep = rescale_for_kappa(&sa(sigma1()), &sa(sigma2()), 0.1).unwrap();
        assert_eq!(rep.t_star, 1.0);
        assert!(rep.lambda_min >= -1e-10);
        assert_eq!(rep.status, RescaleStatus::Success);
    }

    #[test]
    fn rescale_perturbed_pauli() {
        let (s, t) = pauli_perturbed(62);
        let rep = rescale_for_kappa(&s, &t, 0.1).unwrap();
        assert_eq!(rep.status, RescaleStatus::Success, "{rep:?}");
        assert!(rep.lambda_min >= -0.1);
        assert!(rep.p0_at_t_star <= rep.epsilon_used * (1.0 + 1e-9));
        assert!(rep.t_star > 0.0 && rep.t_star < 1.0);
        assert!(rep.lambda_min_adjusted.is_finite());
        assert!(matches!(
            rescale_for_kappa(&s, &t, 0.0),
            Err(KkError::BadKappa(_))
        ));
    }

    fn scalar_product(t_y: &SelfAdjointOperator) -> (TensorModule, GradedModule) {
        let x = GradedModule::trivial(2, 1);
        let y = LeftModule::new(
            GradedModule::trivial(t_y.dim(), 1),
            LeftAction::scalar(t_y.dim()),
        )
        .unwrap();
        (interior_tensor(&x, &y).unwrap(), x)
    }

    #[test]
    fn exact_connection_has_zero_defect() {
        let mut g = rng(70);
        let t_y = sa(random_hermitian(&mut g, 3, 1.0));
        let s_x = sa(random_hermitian(&mut g, 2, 1.0));
        let (e, x) = scalar_product(&t_y);
        let conn = sa(kron(&identity(2), t_y.matrix()));
        let vectors: Vec<(ModuleVector, Degree)> = (0..3)
            .map(|_| {
                (
                    ModuleVector::new(random_matrix(&mut g, 2, 1), 2, 1).unwrap(),
                    Degree::Even,
                )
            })
            .collect();
        let a = [ModuleOperator::scalar_module(identity(6)).unwrap()];
        let data = ProductData {
            tensor: &e,
            x_grading: &x.gamma,
            s_x: &s_x,
            t_y: &t_y,
            connection: &conn,
            vectors: &vectors,
            algebra: &a,
        };
        let rep = connes_skandalis_check(&data, 0.5).unwrap();
        assert!(rep.connection_max <= 1e-14);
        assert!(rep.kappa_admissible);
        assert!(!connes_skandalis_check(&data, 2.0).unwrap().kappa_admissible);
    }

    #[test]
    fn positivity_at_identity_matches_rescale() {
        let (s, t) = pauli_perturbed(71);
        let kappa = 0.1;
        let rep = rescale_for_kappa(&s, &t, kappa).unwrap();
        let ts = c(rep.t_star, 0.);
        let h = Doubled::new(&(s.matrix() * ts), &(t.matrix() * ts));
        let dim = h.s.nrows();
        // Trivial product C (x)_C E: S_X is the doubled S, the connection is omega T.
        let x = GradedModule::trivial(dim, 1);
        let y = LeftModule::new(GradedModule::trivial(1, 1), LeftAction::scalar(1)).unwrap();
        let e = interior_tensor(&x, &y).unwrap();
        let s_x = sa(h.s.clone());
        let t_y = sa(Mat::zeros(1, 1));
        let conn = sa(&h.omega * &h.t);
        let a = [ModuleOperator::scalar_module(identity(dim)).unwrap()];
        let data = ProductData {
            tensor: &e,
            x_grading: &x.gamma,
            s_x: &s_x,
            t_y: &t_y,
            connection: &conn,
            vectors: &[],
            algebra: &a,
        };
        let cs = connes_skandalis_check(&data, kappa).unwrap();
        assert!((cs.positivity_min - (rep.lambda_min + kappa)).abs() <= 1e-12);
    }
}
