//! Weak (anti)commutation certificates, graph-norm constants and the
//! perturbation quantities built on them.
//!
//! A certificate `(C0, C1, C2)` for a sign `tau` asserts the operator inequality
//! `K*K <= C0 + C1 S^2 + C2 T^2` with `K = ST + tau TS`.

use crate::algebra::{
    self, c, commutator, hermitian_eigen, identity, instance_hash, inverse, lambda_max, lambda_min,
    norm, pencil_extremes, AlgebraError, Mat, SelfAdjointOperator, Sign, C64,
};
use serde::{Deserialize, Serialize};

/// Default sweep for threshold parameters: `10^0 .. 10^6`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=6).map(|e| 10f64.powi(e)).collect()
}

/// What the certificate search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `w0 C0 + w1 C1 + w2 C2` over all three constants.
    Weighted { w: [f64; 3] },
    /// `w0 C0 + w12 C1` with `C1 = C2` enforced.
    Tied { w0: f64, w12: f64 },
    /// `w0 C0 + w1 C1` with `C2 = 0` enforced.
    NoC2 { w0: f64, w1: f64 },
}

impl Default for Objective {
    fn default() -> Self {
        Objective::Weighted { w: [1.0, 1.0, 1.0] }
    }
}

impl Objective {
    pub fn describe(&self) -> String {
        match self {
            Objective::Weighted { w } => format!("min {}*c0 + {}*c1 + {}*c2", w[0], w[1], w[2]),
            Objective::Tied { w0, w12 } => format!("min {w0}*c0 + {w12}*c1 subject to c1 = c2"),
            Objective::NoC2 { w0, w1 } => format!("min {w0}*c0 + {w1}*c1 subject to c2 = 0"),
        }
    }

    /// Maps free variables to `(c1, c2)`.
    fn embed(&self, u: [f64; 2]) -> (f64, f64) {
        match self {
            Objective::Weighted { .. } => (u[0], u[1]),
            Objective::Tied { .. } => (u[0], u[0]),
            Objective::NoC2 { .. } => (u[0], 0.0),
        }
    }

    fn value(&self, c0: f64, c1: f64, c2: f64) -> f64 {
        match *self {
            Objective::Weighted { w } => w[0] * c0 + w[1] * c1 + w[2] * c2,
            Objective::Tied { w0, w12 } => w0 * c0 + w12 * c1,
            Objective::NoC2 { w0, w1 } => w0 * c0 + w1 * c1,
        }
    }

    fn weights(&self) -> [f64; 3] {
        match *self {
            Objective::Weighted { w } => w,
            Objective::Tied { w0, w12 } => [w0, w12, 0.0],
            Objective::NoC2 { w0, w1 } => [w0, w1, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WacCertificate {
    pub sign: Sign,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `lambda_min(C0 + C1 S^2 + C2 T^2 - K*K)`.
    pub slack: f64,
    /// Smallest grid `|lambda|` from which the derived norm bounds are small;
    /// `None` when no grid value qualifies.
    pub lambda0: Option<f64>,
    pub objective: String,
    pub instance_hash: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertifierError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("pair is not certified: {0}")]
    NotCertified(String),
}

pub type Result<T> = std::result::Result<T, CertifierError>;

/// Precomputed `S^2`, `T^2` and `K*K` for one pair and sign.
#[derive(Debug, Clone)]
pub struct FormData {
    pub s2: Mat,
    pub t2: Mat,
    pub k: Mat,
    pub kk: Mat,
}

impl FormData {
    pub fn new(s: &SelfAdjointOperator, t: &SelfAdjointOperator, sign: Sign) -> Result<Self> {
        if s.shape() != t.shape() {
            return Err(
                AlgebraError::ShapeMismatch("S and T act on different modules".into()).into(),
            );
        }
        let k = commutator(s.matrix(), t.matrix(), sign);
        let kk = k.adjoint() * &k;
        Ok(Self {
            s2: s.square(),
            t2: t.square(),
            k,
            kk,
        })
    }

    pub fn certificate_matrix(&self, c0: f64, c1: f64, c2: f64) -> Mat {
        identity(self.kk.nrows()) * c(c0, 0.) + &self.s2 * c(c1, 0.) + &self.t2 * c(c2, 0.)
            - &self.kk
    }

    /// Smallest `C0 >= 0` feasible for given `(C1, C2)`.
    pub fn minimal_c0(&self, c1: f64, c2: f64) -> f64 {
        let m = &self.kk - &self.s2 * c(c1, 0.) - &self.t2 * c(c2, 0.);
        lambda_max(&m).max(0.0)
    }

    /// Natural magnitude of the certificate matrix entries.
    pub fn scale(&self, c0: f64, c1: f64, c2: f64) -> f64 {
        let s2 = norm(&self.s2);
        let t2 = norm(&self.t2);
        (norm(&self.kk) + c0 + c1 * s2 + c2 * t2).max(f64::MIN_POSITIVE)
    }
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if b - a <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Feasible `(C0, C1, C2)` minimizing the objective.
pub fn certify_wac(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    sign: Sign,
    objective: Objective,
) -> Result<WacCertificate> {
    let data = FormData::new(s, t, sign)?;
    let (c0, c1, c2) = optimize(&data, objective);
    let slack = lambda_min(&data.certificate_matrix(c0, c1, c2));
    let lambda0 = threshold(c0, c1, c2, &default_lambda_grid());
    Ok(WacCertificate {
        sign,
        c0,
        c1,
        c2,
        slack,
        lambda0,
        objective: objective.describe(),
        instance_hash: instance_hash(&[s.matrix(), t.matrix()], &sign.to_string()),
    })
}

/// Variables `x = (C0, u_1, .., u_m)` of the barrier problem, with
/// `M(x) = C0 + sum u_j A_j - K*K`.
struct Barrier<'a> {
    data: &'a FormData,
    mats: Vec<Mat>,
    weights: Vec<f64>,
}

impl Barrier<'_> {
    fn m(&self, x: &[f64]) -> Mat {
        let mut m = -self.data.kk.clone();
        for (a, &xi) in self.mats.iter().zip(x) {
            m += a * c(xi, 0.0);
        }
        m
    }

    /// `w.x / mu - log det M - sum log x_i`; `None` outside the domain.
    fn value(&self, x: &[f64], mu: f64) -> Option<f64> {
        if x.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return None;
        }
        let chol = self.m(x).cholesky()?;
        let logdet: f64 = chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| 2.0 * d.re.ln())
            .sum::<f64>();
        let lin: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        Some(lin / mu - logdet - x.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn newton_step(&self, x: &[f64], mu: f64) -> Option<(Vec<f64>, f64)> {
        let p = x.len();
        let minv = self.m(x).cholesky()?.inverse();
        let b: Vec<Mat> = self.mats.iter().map(|a| &minv * a).collect();
        let mut g = nalgebra::DVector::<f64>::zeros(p);
        let mut h = nalgebra::DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            g[i] = self.weights[i] / mu - b[i].trace().re - 1.0 / x[i];
            for j in 0..=i {
                let tr: f64 = b[i]
                    .iter()
                    .zip(b[j].transpose().iter())
                    .map(|(u, v)| (u * v).re)
                    .sum();
                h[(i, j)] = tr;
                h[(j, i)] = tr;
            }
            h[(i, i)] += 1.0 / (x[i] * x[i]);
        }
        let step = h.cholesky()?.solve(&(-&g));
        let decrement = -g.dot(&step);
        Some((step.iter().copied().collect(), decrement))
    }
}

fn optimize(data: &FormData, objective: Objective) -> (f64, f64, f64) {
    let kk = norm(&data.kk);
    if kk == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = objective.weights();
    let dim = data.kk.nrows();
    let id = identity(dim);
    // free variables: C0 always, then the objective's own (C1, C2) parametrization
    let (mats, weights) = match objective {
        Objective::Weighted { .. } => (
            vec![id, data.s2.clone(), data.t2.clone()],
            vec![w[0], w[1], w[2]],
        ),
        Objective::Tied { w0, w12 } => (vec![id, &data.s2 + &data.t2], vec![w0, w12]),
        Objective::NoC2 { w0, w1 } => (vec![id, data.s2.clone()], vec![w0, w1]),
    };
    // zero weights make the barrier problem unbounded; a tiny positive weight
    // keeps it bounded without moving the optimum of the stated objective
    let floor = 1e-12 * weights.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let weights: Vec<f64> = weights.iter().map(|&v| v.max(floor)).collect();
    let barrier = Barrier {
        data,
        mats,
        weights,
    };
    let p = barrier.mats.len();
    let mut x = vec![1.0; p];
    x[0] = kk + 1.0;
    let orders = (dim + p) as f64;
    let lin = |x: &[f64]| {
        barrier
            .weights
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let mut mu = lin(&x) / orders;
    let mut best = x.clone();
    'outer: for _stage in 0..80 {
        for _ in 0..100 {
            let Some((step, dec)) = barrier.newton_step(&x, mu) else {
                break 'outer;
            };
            if dec / 2.0 <= 1e-12 {
                break;
            }
            let f0 = barrier.value(&x, mu).expect("iterate stays in the domain");
            let mut t = if dec.sqrt() > 0.25 {
                1.0 / (1.0 + dec.sqrt())
            } else {
                1.0
            };
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + t * d).collect();
                if let Some(f1) = barrier.value(&trial, mu) {
                    if f1 <= f0 - 0.25 * t * dec {
                        x = trial;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-12 {
                    break;
                }
            }
            if t < 1e-12 {
                break;
            }
        }
        best = x.clone();
        if mu * orders <= 1e-13 * lin(&x) {
            break;
        }
        mu *= 0.2;
    }
    let (mut c1, mut c2) = objective.embed([best[1], *best.get(2).unwrap_or(&0.0)]);
    let value = |c1: f64, c2: f64| {
        let c0 = data.minimal_c0(c1, c2);
        (objective.value(c0, c1, c2), c0)
    };
    // constants that the barrier only drives to O(mu) are set to zero when that costs nothing
    let (mut v, _) = value(c1, c2);
    match objective {
        Objective::Weighted { .. } => {
            for (t1, t2) in [(0.0, 0.0), (0.0, c2), (c1, 0.0)] {
                let (tv, _) = value(t1, t2);
                if tv <= v {
                    (c1, c2, v) = (t1, t2, tv);
                }
            }
        }
        Objective::Tied { .. } | Objective::NoC2 { .. } => {
            let (tv, _) = value(0.0, 0.0);
            if tv <= v {
                (c1, c2) = (0.0, 0.0);
            }
        }
    }
    let (_, c0) = value(c1, c2);
    (c0, c1, c2)
}

/// Norm-estimate constants implied by a certificate at `|lambda|, |mu|`:
/// `|Kx| <= a |(S+lambda)x| + b |(T+mu)x|` with `a = sqrt(max(C1, C0/|lambda|^2))`
/// and `b = sqrt(C2)`.
pub fn norm_estimate_constants(c0: f64, c1: f64, c2: f64, lambda_abs: f64) -> (f64, f64) {
    ((c1.max(c0 / (lambda_abs * lambda_abs))).sqrt(), c2.sqrt())
}

/// Effective constant `C` of `|K x| <= C (1/|lambda| + 1/|mu|) |(S+lambda)(T+mu) x|`,
/// infinite when `min(|lambda|,|mu|)` does not exceed the norm-estimate constants.
pub fn smallness_constant(c0: f64, c1: f64, c2: f64, lambda_abs: f64, mu_abs: f64) -> f64 {
    let (a, b) = norm_estimate_constants(c0, c1, c2, lambda_abs.min(mu_abs));
    let m = a.max(b);
    let lo = lambda_abs.min(mu_abs);
    if m >= lo {
        f64::INFINITY
    } else {
        m / (1.0 - m / lo)
    }
}

/// Smallest grid value `L` such that for every grid value `l >= L` the
/// smallness factor `C (2/l)` is below `1/3`.
fn threshold(c0: f64, c1: f64, c2: f64, grid: &[f64]) -> Option<f64> {
    let ok: Vec<bool> = grid
        .iter()
        .map(|&l| smallness_constant(c0, c1, c2, l, l) * 2.0 / l < 1.0 / 3.0)
        .collect();
    let mut answer = None;
    for i in (0..grid.len()).rev() {
        if ok[i] {
            answer = Some(grid[i]);
        } else {
            break;
        }
    }
    answer
}

#[derive(Debug, Clone, Serialize)]
pub struct NormCheck {
    pub lambda_abs: f64,
    /// `|K (S+lambda)^{-1}|`.
    pub k_s_resolvent: f64,
    /// `|K (T+lambda)^{-1}|`.
    pub k_t_resolvent: f64,
    /// Square root of the top eigenvalue of the pencil
    /// `(K*K, |S+lambda|^2 + |T+lambda|^2)`.
    pub observed: f64,
    /// `max(a, b)` from [`norm_estimate_constants`].
    pub predicted: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlackReport {
    pub slack: f64,
    pub scale: f64,
    pub feasible: bool,
    /// Constant of `|Kx| <= C (|x| + |Sx| + |Tx|)`.
    pub norm_constant: f64,
    pub checks: Vec<NormCheck>,
}

pub fn verify_certificate(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
    tol: f64,
) -> Result<SlackReport> {
    for (name, v) in [("c0", cert.c0), ("c1", cert.c1), ("c2", cert.c2)] {
        if !v.is_finite() || v < 0.0 {
            return Err(CertifierError::InvalidCertificate(format!("{name} = {v}")));
        }
    }
    let data = FormData::new(s, t, cert.sign)?;
    let slack = lambda_min(&data.certificate_matrix(cert.c0, cert.c1, cert.c2));
    let scale = data.scale(cert.c0, cert.c1, cert.c2);
    let dim = s.dim();
    let id = identity(dim);
    let mut checks = Vec::new();
    for l in default_lambda_grid() {
        let li = C64::new(0.0, l);
        let sl = s.matrix() + &id * li;
        let tl = t.matrix() + &id * li;
        let rs = algebra::resolvent(s, li)?;
        let rt = algebra::resolvent(t, li)?;
        let den = sl.adjoint() * &sl + tl.adjoint() * &tl;
        let (_, g) = pencil_extremes(&data.kk, &den)?;
        let observed = g.max(0.0).sqrt();
        let (a, b) = norm_estimate_constants(cert.c0, cert.c1, cert.c2, l);
        let predicted = a.max(b);
        checks.push(NormCheck {
            lambda_abs: l,
            k_s_resolvent: norm(&(&data.k * rs.matrix())),
            k_t_resolvent: norm(&(&data.k * rt.matrix())),
            observed,
            predicted,
            holds: observed <= predicted * (1.0 + 1e-8) + 1e-12,
        });
    }
    Ok(SlackReport {
        slack,
        scale,
        feasible: slack >= -tol * scale,
        norm_constant: cert.c0.max(cert.c1).max(cert.c2).sqrt(),
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphNormReport {
    /// Smallest `C >= 1` with `C^-1 (1+(S+T)^2) <= 1+S^2+T^2 <= C (1+(S+T)^2)`.
    pub constant: f64,
    pub pencil_min: f64,
    pub pencil_max: f64,
    /// `lambda_min(C (1+(S+T)^2) - (1+S^2+T^2))`.
    pub upper_slack: f64,
    /// `lambda_min((1+S^2+T^2) - C^-1 (1+(S+T)^2))`.
    pub lower_slack: f64,
    /// `lambda_min(2 (S^2+T^2) - (S+T)^2)`.
    pub easy_slack: f64,
    pub scale: f64,
}

pub fn graph_norm_constant(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
) -> Result<GraphNormReport> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    let id = identity(s.dim());
    let s2 = s.square();
    let t2 = t.square();
    let sum = s.matrix() + t.matrix();
    let sum2 = &sum * &sum;
    let a = &id + &s2 + &t2;
    let b = &id + &sum2;
    let (gmin, gmax) = pencil_extremes(&a, &b)?;
    let constant = gmax.max(1.0 / gmin).max(1.0);
    let upper_slack = lambda_min(&(&b * c(constant, 0.) - &a));
    let lower_slack = lambda_min(&(&a - &b * c(1.0 / constant, 0.)));
    let easy_slack = lambda_min(&((&s2 + &t2) * c(2.0, 0.) - &sum2));
    let scale = norm(&a).max(norm(&b)) * constant;
    Ok(GraphNormReport {
        constant,
        pencil_min: gmin,
        pencil_max: gmax,
        upper_slack,
        lower_slack,
        easy_slack,
        scale,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// `sup |(A-B)x| / (|Ax| + |Bx|)`.
    pub epsilon: f64,
    /// `|(A-B) B^{-1}|`.
    pub rho: f64,
    /// `2 eps / (1 - eps)` when `eps < 1/3`.
    pub bound: Option<f64>,
    pub implication_holds: bool,
}

/// Relative gap of two invertible operators.
///
/// Uses `(a+b)^2 = min_th a^2/th + b^2/(1-th)`, so `eps^2` is the maximum over
/// `th` of the top eigenvalue of the pencil `((A-B)*(A-B), A*A/th + B*B/(1-th))`.
pub fn relative_gap(a: &Mat, b: &Mat) -> Result<GapReport> {
    let binv = inverse(b)?;
    inverse(a)?;
    let d = a - b;
    let dd = d.adjoint() * &d;
    let aa = a.adjoint() * a;
    let bb = b.adjoint() * b;
    let rho = norm(&(&d * &binv));
    let eps = if norm(&d) == 0.0 {
        0.0
    } else {
        let g = |th: f64| -> f64 {
            let p = &aa * c(1.0 / th, 0.) + &bb * c(1.0 / (1.0 - th), 0.);
            pencil_extremes(&dd, &p).map(|x| x.1).unwrap_or(f64::NAN)
        };
        let grid: Vec<f64> = (1..64).map(|i| i as f64 / 64.0).collect();
        let mut best = 0;
        let vals: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
        for i in 0..vals.len() {
            if vals[i] > vals[best] {
                best = i;
            }
        }
        let lo = if best == 0 { 1e-9 } else { grid[best - 1] };
        let hi = if best + 1 == grid.len() {
            1.0 - 1e-9
        } else {
            grid[best + 1]
        };
        let (_, neg) = golden_section(&|x| -g(x), lo, hi, 80);
        (-neg).max(vals[best]).max(0.0).sqrt()
    };
    let bound = (eps < 1.0 / 3.0).then(|| 2.0 * eps / (1.0 - eps));
    let implication_holds = match bound {
        Some(bd) => rho <= bd * (1.0 + 1e-9) + 1e-14,
        None => true,
    };
    Ok(GapReport {
        epsilon: eps,
        rho,
        bound,
        implication_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallnessReport {
    /// `|[S,T]_- (T+mu)^{-1} (S+lambda)^{-1}|`.
    pub ts_order: f64,
    /// `|[S,T]_- (S+lambda)^{-1} (T+mu)^{-1}|`.
    pub st_order: f64,
    /// `C (1/|lambda| + 1/|mu|)`; infinite below the threshold.
    pub predicted: f64,
    pub above_threshold: bool,
    pub holds: bool,
}

/// Commutator smallness for a weakly commuting pair.
pub fn commuting_smallness(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
    lambda: C64,
    mu: C64,
) -> Result<SmallnessReport> {
    if cert.sign != Sign::Minus {
        return Err(CertifierError::NotCertified(
            "certificate is for the anticommutator".into(),
        ));
    }
    let report = verify_certificate(s, t, cert, algebra::DEFAULT_TOL)?;
    if !report.feasible {
        return Err(CertifierError::NotCertified(format!(
            "slack {:e}",
            report.slack
        )));
    }
    let k = commutator(s.matrix(), t.matrix(), Sign::Minus);
    let rs = algebra::resolvent(s, lambda)?;
    let rt = algebra::resolvent(t, mu)?;
    let ts_order = norm(&(&k * rt.matrix() * rs.matrix()));
    let st_order = norm(&(&k * rs.matrix() * rt.matrix()));
    let (la, ma) = (lambda.norm(), mu.norm());
    let cst = smallness_constant(cert.c0, cert.c1, cert.c2, la, ma);
    let predicted = cst * (1.0 / la + 1.0 / ma);
    let above_threshold = cert.lambda0.is_some_and(|l0| la >= l0 && ma >= l0);
    let tol = 1e-10 * norm(&k) / (la * ma) + 1e-300;
    let holds = ts_order <= predicted + tol && st_order <= predicted + tol;
    Ok(SmallnessReport {
        ts_order,
        st_order,
        predicted,
        above_threshold,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LegacyVerdict {
    LegacyHolds,
    LegacyFails,
}

#[derive(Debug, Clone, Serialize)]
pub struct LegacyReport {
    /// `(|lambda|, |[S,T]_tau (S+lambda)^{-1}|)` per grid point.
    pub values: Vec<(f64, f64)>,
    pub sup: f64,
    /// Objective of the best certificate with `C2 = 0`.
    pub restricted_objective: f64,
    /// Objective of the best unrestricted certificate, same weights.
    pub free_objective: f64,
    pub verdict: LegacyVerdict,
}

/// A `C2 = 0` certificate costing more than this multiple of the best
/// unrestricted one is taken as evidence that `K` is not `S`-bounded.
pub const LEGACY_RATIO: f64 = 10.0;

pub fn legacy_wac_check(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    sign: Sign,
    grid: &[f64],
) -> Result<LegacyReport> {
    let data = FormData::new(s, t, sign)?;
    let mut values = Vec::with_capacity(grid.len());
    for &l in grid {
        let r = algebra::resolvent(s, C64::new(0.0, l))?;
        values.push((l, norm(&(&data.k * r.matrix()))));
    }
    let sup = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let restricted = Objective::NoC2 { w0: 1.0, w1: 1.0 };
    let free = Objective::Weighted { w: [1.0, 1.0, 1.0] };
    let (r0, r1, r2) = optimize(&data, restricted);
    let (f0, f1, f2) = optimize(&data, free);
    let restricted_objective = restricted.value(r0, r1, r2);
    let free_objective = free.value(f0, f1, f2);
    let verdict = if restricted_objective <= LEGACY_RATIO * free_objective + 1e-300 {
        LegacyVerdict::LegacyHolds
    } else {
        LegacyVerdict::LegacyFails
    };
    Ok(LegacyReport {
        values,
        sup,
        restricted_objective,
        free_objective,
        verdict,
    })
}

/// `lambda_max(K*K)`: the minimal `C0` when `C1 = C2 = 0`.
pub fn pure_c0(s: &SelfAdjointOperator, t: &SelfAdjointOperator, sign: Sign) -> Result<f64> {
    let data = FormData::new(s, t, sign)?;
    Ok(hermitian_eigen(&data.kk)
        .0
        .iter()
        .cloned()
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{kron, sigma1, sigma2, sigma3};
    use crate::random::{random_hermitian, random_matrix, rng};
    use approx::assert_relative_eq;

    fn sa(m: Mat) -> SelfAdjointOperator {
        SelfAdjointOperator::scalar_module(m).unwrap()
    }

    #[test]
    fn pauli_pair_is_exact() {
        let cert = certify_wac(
            &sa(sigma1()),
            &sa(sigma2()),
            Sign::Plus,
            Objective::default(),
        )
        .unwrap();
        assert_eq!((cert.c0, cert.c1, cert.c2), (0.0, 0.0, 0.0));
        assert!(cert.slack.abs() <= 1e-12);
        let rep = verify_certificate(&sa(sigma1()), &sa(sigma2()), &cert, 1e-10).unwrap();
        assert!(rep.feasible);
    }

    #[test]
    fn shifted_pauli_minimal_c0() {
        let t = sigma2() + sigma1() * c(0.5, 0.);
        let c0 = pure_c0(&sa(sigma1()), &sa(t.clone()), Sign::Plus).unwrap();
        // K = s1 t + t s1 = I, so K*K = I
        let k = commutator(&sigma1(), &t, Sign::Plus);
        let oracle = hermitian_eigen(&(k.adjoint() * &k)).0[1];
        assert_relative_eq!(c0, oracle, epsilon = 1e-14);
        assert_relative_eq!(c0, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tensor_pair_pure_c0_is_commutator_norm_squared() {
        let mut g = rng(12);
        for _ in 0..5 {
            let a = random_hermitian(&mut g, 3, 1.0);
            let b = random_hermitian(&mut g, 3, 2.0);
            let s = sa(kron(&sigma1(), &a));
            let t = sa(kron(&sigma2(), &b));
            let got = pure_c0(&s, &t, Sign::Plus).unwrap();
            let ab = commutator(&a, &b, Sign::Minus);
            let oracle = norm(&ab).powi(2);
            assert_relative_eq!(got, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn certificates_are_feasible_and_deficient_ones_are_not() {
        let mut g = rng(13);
        for sign in Sign::ALL {
            for _ in 0..4 {
                let s = sa(random_hermitian(&mut g, 6, 2.0));
                let t = sa(random_hermitian(&mut g, 6, 3.0));
                let cert = certify_wac(&s, &t, sign, Objective::default()).unwrap();
                let rep = verify_certificate(&s, &t, &cert, 1e-10).unwrap();
                assert!(rep.feasible, "{cert:?}");
                assert!(rep.checks.iter().all(|c| c.holds));
                if cert.c0 > 1e-6 * rep.scale {
                    let mut bad = cert.clone();
                    bad.c0 /= 2.0;
                    let r = verify_certificate(&s, &t, &bad, 1e-10).unwrap();
                    assert!(r.slack < 0.0);
                }
            }
        }
    }

    #[test]
    fn optimum_beats_grid_samples() {
        let mut g = rng(14);
        let s = sa(random_hermitian(&mut g, 5, 1.0));
        let t = sa(random_hermitian(&mut g, 5, 1.0));
        let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        let data = FormData::new(&s, &t, Sign::Plus).unwrap();
        let best = cert.c0 + cert.c1 + cert.c2;
        for i in 0..15 {
            for j in 0..15 {
                let (c1, c2) = (i as f64 * 0.1, j as f64 * 0.1);
                let v = data.minimal_c0(c1, c2) + c1 + c2;
                assert!(best <= v * (1.0 + 1e-9), "{best} > {v} at ({c1},{c2})");
            }
        }
    }

    #[test]
    fn feasible_region_is_convex() {
        let mut g = rng(15);
        let s = sa(random_hermitian(&mut g, 4, 1.0));
        let t = sa(random_hermitian(&mut g, 4, 1.5));
        let data = FormData::new(&s, &t, Sign::Minus).unwrap();
        let p = (data.minimal_c0(0.3, 0.0), 0.3, 0.0);
        let q = (data.minimal_c0(0.0, 0.7), 0.0, 0.7);
        let m = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0, (p.2 + q.2) / 2.0);
        let slack = lambda_min(&data.certificate_matrix(m.0, m.1, m.2));
        assert!(slack >= -1e-12 * data.scale(m.0, m.1, m.2));
    }

    #[test]
    fn scale_covariance() {
        let mut g = rng(16);
        let s = sa(random_hermitian(&mut g, 4, 1.0));
        let t = sa(random_hermitian(&mut g, 4, 1.0));
        let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        let f = 3.0;
        let s2 = sa(s.matrix() * c(f, 0.));
        let t2 = sa(t.matrix() * c(f, 0.));
        let scaled = WacCertificate {
            c0: f.powi(4) * cert.c0,
            c1: f * f * cert.c1,
            c2: f * f * cert.c2,
            ..cert.clone()
        };
        assert!(
            verify_certificate(&s2, &t2, &scaled, 1e-10)
                .unwrap()
                .feasible
        );
    }

    #[test]
    fn degenerate_zero_operator() {
        let mut g = rng(17);
        let s = sa(random_hermitian(&mut g, 4, 1.0));
        let z = sa(Mat::zeros(4, 4));
        let cert = certify_wac(&s, &z, Sign::Plus, Objective::default()).unwrap();
        assert_eq!((cert.c0, cert.c1, cert.c2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn restricted_objectives_respect_constraints() {
        let mut g = rng(18);
        let s = sa(random_hermitian(&mut g, 4, 1.0));
        let t = sa(random_hermitian(&mut g, 4, 1.0));
        let tied = certify_wac(&s, &t, Sign::Plus, Objective::Tied { w0: 1.0, w12: 1.0 }).unwrap();
        assert_eq!(tied.c1, tied.c2);
        let noc2 = certify_wac(&s, &t, Sign::Plus, Objective::NoC2 { w0: 1.0, w1: 1.0 }).unwrap();
        assert_eq!(noc2.c2, 0.0);
        assert!(tied.slack >= -1e-10 * 10.0 && noc2.slack >= -1e-10 * 10.0);
    }

    #[test]
    fn graph_norm_examples() {
        let mut g = rng(19);
        let s = sa(random_hermitian(&mut g, 4, 2.0));
        let z = sa(Mat::zeros(4, 4));
        assert_relative_eq!(
            graph_norm_constant(&s, &z).unwrap().constant,
            1.0,
            epsilon = 1e-12
        );

        // (s1 + s2)^2 = 2 = s1^2 + s2^2, so the pencil is the identity
        let r = graph_norm_constant(&sa(sigma1()), &sa(sigma2())).unwrap();
        let a = identity(2) * c(3., 0.);
        let oracle = a.clone().try_inverse().unwrap() * &a;
        let oracle_max = hermitian_eigen(&oracle).0[1];
        assert_relative_eq!(r.constant, oracle_max.max(1.0), epsilon = 1e-12);
        assert_relative_eq!(r.constant, 1.0, epsilon = 1e-12);

        for _ in 0..50 {
            let s = sa(random_hermitian(&mut g, 4, 3.0));
            let t = sa(random_hermitian(&mut g, 4, 3.0));
            let r = graph_norm_constant(&s, &t).unwrap();
            assert!(r.easy_slack >= -1e-10 * r.scale);
            assert!(r.upper_slack >= -1e-8 * r.scale && r.lower_slack >= -1e-8 * r.scale);
        }
    }

    #[test]
    fn graph_norm_constant_blows_up_for_cancelling_pair() {
        let s = sa(sigma3() * c(10.0, 0.));
        let t = sa(sigma3() * c(-10.0, 0.));
        // S + T = 0, so C = 1 + 200
        assert_relative_eq!(
            graph_norm_constant(&s, &t).unwrap().constant,
            201.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn relative_gap_examples() {
        let mut g = rng(20);
        let a = random_matrix(&mut g, 4, 4) + identity(4) * c(3.0, 0.);
        let r = relative_gap(&a, &a).unwrap();
        assert_eq!((r.epsilon, r.rho), (0.0, 0.0));

        let n = random_matrix(&mut g, 4, 4);
        let n = &n * c(1.0 / norm(&n), 0.);
        let a = identity(4) + &n * c(0.1, 0.);
        let r = relative_gap(&a, &identity(4)).unwrap();
        assert_relative_eq!(r.rho, 0.1 * norm(&n), max_relative = 1e-12);
        assert!(r.implication_holds);
    }

    #[test]
    fn relative_gap_epsilon_matches_sampling() {
        let mut g = rng(22);
        let a = random_matrix(&mut g, 3, 3) + identity(3) * c(2.0, 0.);
        let b = random_matrix(&mut g, 3, 3) + identity(3) * c(2.0, 0.);
        let r = relative_gap(&a, &b).unwrap();
        let d = &a - &b;
        let mut sampled: f64 = 0.0;
        for _ in 0..20000 {
            let x = random_matrix(&mut g, 3, 1);
            let v = (&d * &x).norm() / ((&a * &x).norm() + (&b * &x).norm());
            sampled = sampled.max(v);
        }
        assert!(sampled <= r.epsilon * (1.0 + 1e-9));
        assert!(sampled >= 0.9 * r.epsilon);
    }

    #[test]
    fn product_order_gap_for_weakly_commuting_pair() {
        let mut g = rng(23);
        let s = sa(random_hermitian(&mut g, 6, 1.0));
        let t = sa(random_hermitian(&mut g, 6, 1.0));
        let id = identity(6);
        let (l, m) = (C64::new(0., 50.), C64::new(0., 40.));
        let sl = s.matrix() + &id * l;
        let tm = t.matrix() + &id * m;
        let r = relative_gap(&(&tm * &sl), &(&sl * &tm)).unwrap();
        assert!(r.epsilon < 1.0 / 3.0);
        assert!(r.implication_holds);
    }

    #[test]
    fn commuting_smallness_examples() {
        let mut g = rng(24);
        // commuting: functions of one hermitian matrix
        let h = random_hermitian(&mut g, 5, 1.0);
        let s = sa(h.clone());
        let t = sa(&h * &h);
        let cert = certify_wac(&s, &t, Sign::Minus, Objective::default()).unwrap();
        let r = commuting_smallness(&s, &t, &cert, C64::new(0., 10.), C64::new(0., 10.)).unwrap();
        assert!(r.ts_order < 1e-12 && r.st_order < 1e-12);

        let s = sa(random_hermitian(&mut g, 4, 1.0));
        let t = sa(random_hermitian(&mut g, 4, 1.0));
        let cert = certify_wac(&s, &t, Sign::Minus, Objective::default()).unwrap();
        let r2 =
            commuting_smallness(&s, &t, &cert, C64::new(0., 100.), C64::new(0., 100.)).unwrap();
        let r3 =
            commuting_smallness(&s, &t, &cert, C64::new(0., 1000.), C64::new(0., 1000.)).unwrap();
        assert!(r2.above_threshold && r2.holds && r3.holds);
        assert!(r3.ts_order <= r2.ts_order);

        let plus = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        assert!(commuting_smallness(&s, &t, &plus, C64::new(0., 10.), C64::new(0., 10.)).is_err());
    }

    #[test]
    fn legacy_check_examples() {
        let grid = default_lambda_grid();
        let r = legacy_wac_check(&sa(sigma1()), &sa(sigma2()), Sign::Plus, &grid).unwrap();
        assert_eq!(r.sup, 0.0);

        // K bounded: small perturbation of an anticommuting pair of large scale
        let big = 50.0;
        let s = sa(kron(&sigma1(), &identity(2)) * c(big, 0.));
        let mut g = rng(25);
        let p = random_hermitian(&mut g, 2, 0.1);
        let t = sa(kron(&sigma2(), &identity(2)) * c(big, 0.) + kron(&sigma1(), &p));
        let r = legacy_wac_check(&s, &t, Sign::Plus, &grid).unwrap();
        assert_eq!(r.verdict, LegacyVerdict::LegacyHolds);
        let data = FormData::new(&s, &t, Sign::Plus).unwrap();
        assert!(r.sup <= norm(&data.k) / grid[0] + 1e-12);

        // S = 1 makes K = 2T, which is not relatively bounded by S
        let s = sa(identity(4));
        let mut last = 0.0;
        for scale in [10.0, 100.0] {
            let t = sa(random_hermitian(&mut g, 4, scale));
            let r = legacy_wac_check(&s, &t, Sign::Plus, &grid).unwrap();
            assert!(r.sup > last);
            last = r.sup;
            assert_eq!(r.verdict, LegacyVerdict::LegacyFails, "{r:?}");
        }
    }
}
