//! The approximants `A_l = S + T + TS/l` of the sum `S + T`, their resolvent
//! bounds and the rate at which their resolvents converge.

use crate::algebra::{
    commutator, identity, inverse, norm, AlgebraError, Mat, ModuleOperator, ModuleVector,
    SelfAdjointOperator, Sign, C64,
};
use crate::certifier::WacCertificate;
use serde::Serialize;
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SumError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
}

pub type Result<T> = std::result::Result<T, SumError>;

fn check_pair(s: &SelfAdjointOperator, t: &SelfAdjointOperator) -> Result<()> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    Ok(())
}

fn a_lambda_matrix(s: &Mat, t: &Mat, lambda: C64) -> Mat {
    s + t + (t * s) / lambda
}

/// `A_l = S + T + TS/l`.
pub fn a_lambda(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: C64,
) -> Result<ModuleOperator> {
    check_pair(s, t)?;
    if lambda == C64::new(0.0, 0.0) {
        return Err(SumError::ZeroLambda);
    }
    let (n, k) = s.shape();
    Ok(ModuleOperator::new(
        a_lambda_matrix(s.matrix(), t.matrix(), lambda),
        n,
        k,
    )?)
}

/// `(|A_l + l - l^-1 (T+l)(S+l)|, scale)`.
pub fn factorization_residual(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: C64,
) -> Result<(f64, f64)> {
    let a = a_lambda(s, t, lambda)?;
    let id = identity(s.dim());
    let lhs = a.matrix() + &id * lambda;
    let rhs = (t.matrix() + &id * lambda) * (s.matrix() + &id * lambda) / lambda;
    let scale = (s.norm() + lambda.norm()) * (t.norm() + lambda.norm()) / lambda.norm();
    Ok((norm(&(lhs - rhs)), scale))
}

/// `(|(S+T+mu) R - 1 + (TS/l) R|, scale)` with `R = (A_l + mu)^{-1}`.
pub fn resolvent_split_residual(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: C64,
    mu: C64,
) -> Result<(f64, f64)> {
    let a = a_lambda(s, t, lambda)?;
    let id = identity(s.dim());
    let r = inverse(&(a.matrix() + &id * mu))?;
    let ts = t.matrix() * s.matrix() / lambda;
    let lhs = (s.matrix() + t.matrix() + &id * mu) * &r;
    let rhs = &id - &ts * &r;
    let scale = (s.norm() + t.norm() + mu.norm() + norm(&ts)) * norm(&r) + 1.0;
    Ok((norm(&(lhs - rhs)), scale))
}

/// The five norms bounded by the fundamental resolvent estimates.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub lambda_abs: f64,
    pub mu_abs: f64,
    /// `|(A_l+mu)^{-1}|`, bound `sqrt2/|mu|`.
    pub inv_norm: f64,
    /// `|S (A_l+mu)^{-1}|`, bound `sqrt2`.
    pub s_norm: f64,
    /// `|T (A_l+mu)^{-1}|`, bound `sqrt2`.
    pub t_norm: f64,
    /// `|(TS/l) (A_l+mu)^{-1}|`, bound `1`.
    pub ts_norm: f64,
    /// `|[S,T]_+ (A_l+mu)^{-1}|`, bound `comm_bound`.
    pub comm_norm: f64,
    /// `sqrt(2 C0/|mu|^2 + 2 C1 + 2 C2)` from the certificate.
    pub comm_bound: f64,
    /// Pass flags in the order above.
    pub pass: [bool; 5],
    /// Largest relative excess over the five bounds (`<= 0` when all hold).
    pub worst_excess: f64,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

/// Admissible parameters: both on the same imaginary half-line, `|l| > |mu| > 0`.
pub fn admissible(lambda: C64, mu: C64) -> bool {
    let imaginary = lambda.re == 0.0 && mu.re == 0.0;
    imaginary && mu.im != 0.0 && lambda.im * mu.im > 0.0 && lambda.norm() > mu.norm()
}

pub fn fundamental_bounds(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
    lambda: C64,
    mu: C64,
    tol: f64,
) -> Result<BoundReport> {
    check_pair(s, t)?;
    if !admissible(lambda, mu) {
        return Err(SumError::Inadmissible(format!(
            "lambda = {lambda}, mu = {mu}"
        )));
    }
    let a = a_lambda_matrix(s.matrix(), t.matrix(), lambda);
    let id = identity(s.dim());
    let r = inverse(&(a + &id * mu))?;
    let k = commutator(s.matrix(), t.matrix(), Sign::Plus);
    let ts = t.matrix() * s.matrix() / lambda;
    let mu_abs = mu.norm();
    let inv_norm = norm(&r);
    let s_norm = norm(&(s.matrix() * &r));
    let t_norm = norm(&(t.matrix() * &r));
    let ts_norm = norm(&(&ts * &r));
    let comm_norm = norm(&(&k * &r));
    let comm_bound = (2.0 * cert.c0 / (mu_abs * mu_abs) + 2.0 * cert.c1 + 2.0 * cert.c2).sqrt();
    let pairs = [
        (inv_norm, SQRT_2 / mu_abs),
        (s_norm, SQRT_2),
        (t_norm, SQRT_2),
        (ts_norm, 1.0),
        (comm_norm, comm_bound),
    ];
    let mut pass = [false; 5];
    let mut worst_excess = f64::NEG_INFINITY;
    for (i, &(v, b)) in pairs.iter().enumerate() {
        pass[i] = v <= b + tol * b.max(f64::MIN_POSITIVE) || v <= tol * 1e-3;
        let excess = if b > 0.0 {
            v / b - 1.0
        } else if v > 0.0 {
            f64::INFINITY
        } else {
            -1.0
        };
        worst_excess = worst_excess.max(excess);
    }
    Ok(BoundReport {
        lambda_abs: lambda.norm(),
        mu_abs,
        inv_norm,
        s_norm,
        t_norm,
        ts_norm,
        comm_norm,
        comm_bound,
        pass,
        worst_excess,
    })
}

/// Grid of `|l|` values as multiples of `|mu|`: `10^(j/per_decade)`, `j = 1..=decades*per_decade`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRule {
    pub decades: usize,
    pub per_decade: usize,
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule {
            decades: 2,
            per_decade: 4,
        }
    }
}

impl LambdaRule {
    /// Admissible `l` values for a given `mu`.
    pub fn lambdas(&self, mu: C64) -> Vec<C64> {
        let sgn = mu.im.signum();
        (1..=self.decades * self.per_decade)
            .map(|j| {
                C64::new(
                    0.0,
                    sgn * mu.norm() * 10f64.powf(j as f64 / self.per_decade as f64),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Mu0Report {
    pub mu0: Option<f64>,
    /// Largest relative excess found below (or, when not found, anywhere on) the grid.
    pub worst_excess: f64,
    pub worst_at: Option<(f64, f64)>,
}

/// Smallest grid `|mu|` from which all five bounds hold for every rule `l` and
/// every larger grid `|mu|`.
pub fn mu0_threshold(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
    mu_grid: &[f64],
    rule: LambdaRule,
    tol: f64,
) -> Result<Mu0Report> {
    let mut grid = mu_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut ok = Vec::with_capacity(grid.len());
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_at = None;
    for &m in &grid {
        let mu = C64::new(0.0, m);
        let mut all = true;
        for lambda in rule.lambdas(mu) {
            let r = fundamental_bounds(s, t, cert, lambda, mu, tol)?;
            if !r.all_pass() {
                all = false;
            }
            if r.worst_excess > worst_excess {
                worst_excess = r.worst_excess;
                worst_at = Some((m, lambda.norm()));
            }
        }
        ok.push(all);
    }
    let mut mu0 = None;
    for i in (0..grid.len()).rev() {
        if ok[i] {
            mu0 = Some(grid[i]);
        } else {
            break;
        }
    }
    Ok(Mu0Report {
        mu0,
        worst_excess,
        worst_at,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NetEntry {
    pub lambda_abs: f64,
    pub inv_norm: f64,
    pub s_norm: f64,
    pub t_norm: f64,
    pub ts_norm: f64,
    pub comm_norm: f64,
    /// `|(A_l+mu)^{-1} - (S+T+mu)^{-1}|`.
    pub residual: f64,
    /// `(C/|l|) |S (S+T+mu)^{-1}|` with `C = max_l |(A_l+mu)^{-1} T|`.
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventNetReport {
    pub mu: [f64; 2],
    pub entries: Vec<NetEntry>,
    /// Least-squares slope of `log residual` against `log |l|`; `None` when
    /// the residuals vanish identically.
    pub fitted_rate: Option<f64>,
    pub exact: bool,
}

impl ResolventNetReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "lambda_abs",
        "inv_norm",
        "s_norm",
        "t_norm",
        "ts_norm",
        "comm_norm",
        "residual",
    ];

    pub fn csv_rows(&self) -> Vec<[f64; 7]> {
        self.entries
            .iter()
            .map(|e| {
                [
                    e.lambda_abs,
                    e.inv_norm,
                    e.s_norm,
                    e.t_norm,
                    e.ts_norm,
                    e.comm_norm,
                    e.residual,
                ]
            })
            .collect()
    }
}

/// Default `|l|` grid `|mu| * 10^1 .. |mu| * 10^6` on the half-line of `mu`.
pub fn default_lambda_grid(mu: C64) -> Vec<C64> {
    (1..=6)
        .map(|e| C64::new(0.0, mu.im.signum() * mu.norm() * 10f64.powi(e)))
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn convergence_sweep(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    mu: C64,
    grid: &[C64],
) -> Result<ResolventNetReport> {
    check_pair(s, t)?;
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    for &l in &lambdas {
        if !admissible(l, mu) {
            return Err(SumError::Inadmissible(format!("lambda = {l}, mu = {mu}")));
        }
    }
    let id = identity(s.dim());
    let sum_r = inverse(&(s.matrix() + t.matrix() + &id * mu))?;
    let s_sum = norm(&(s.matrix() * &sum_r));
    let k = commutator(s.matrix(), t.matrix(), Sign::Plus);
    let ts = t.matrix() * s.matrix();
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut c_unif: f64 = 0.0;
    for &l in &lambdas {
        let r = inverse(&(a_lambda_matrix(s.matrix(), t.matrix(), l) + &id * mu))?;
        c_unif = c_unif.max(norm(&(&r * t.matrix())));
        rows.push((l, r));
    }
    let entries: Vec<NetEntry> = rows
        .iter()
        .map(|(l, r)| NetEntry {
            lambda_abs: l.norm(),
            inv_norm: norm(r),
            s_norm: norm(&(s.matrix() * r)),
            t_norm: norm(&(t.matrix() * r)),
            ts_norm: norm(&(&ts * r)) / l.norm(),
            comm_norm: norm(&(&k * r)),
            residual: norm(&(r - &sum_r)),
            predicted: c_unif / l.norm() * s_sum,
        })
        .collect();
    let exact = entries.iter().all(|e| e.residual == 0.0) || norm(&ts) == 0.0;
    let fitted_rate = if exact {
        None
    } else {
        let xs: Vec<f64> = entries.iter().map(|e| e.lambda_abs.ln()).collect();
        let ys: Vec<f64> = entries
            .iter()
            .map(|e| e.residual.max(f64::MIN_POSITIVE).ln())
            .collect();
        fit_slope(&xs, &ys)
    };
    Ok(ResolventNetReport {
        mu: [mu.re, mu.im],
        entries,
        fitted_rate,
        exact,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingEntry {
    pub lambda_abs: f64,
    pub x_err: f64,
    pub s_err: f64,
    pub t_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingReport {
    pub entries: Vec<SmoothingEntry>,
    /// Log-log slope of `|S x_l - S x|`.
    pub s_rate: Option<f64>,
}

/// `x_l = l^2 (T+l)^{-1} (S+l)^{-1} x` and its distance to `x` in the graph norms.
pub fn smoothing_approx(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    x: &ModuleVector,
    grid: &[C64],
) -> Result<SmoothingReport> {
    check_pair(s, t)?;
    if x.shape() != s.shape() {
        return Err(
            AlgebraError::ShapeMismatch("vector and operators differ in shape".into()).into(),
        );
    }
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let xm = x.matrix();
    let sx = s.matrix() * xm;
    let tx = t.matrix() * xm;
    let mut entries = Vec::new();
    for &l in &lambdas {
        if l == C64::new(0.0, 0.0) {
            return Err(SumError::ZeroLambda);
        }
        let rs = crate::algebra::resolvent(s, l)?;
        let rt = crate::algebra::resolvent(t, l)?;
        let xl = rt.matrix() * (rs.matrix() * xm) * (l * l);
        entries.push(SmoothingEntry {
            lambda_abs: l.norm(),
            x_err: norm(&(&xl - xm)),
            s_err: norm(&(s.matrix() * &xl - &sx)),
            t_err: norm(&(t.matrix() * &xl - &tx)),
        });
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.lambda_abs.ln()).collect();
    let ys: Vec<f64> = entries
        .iter()
        .map(|e| e.s_err.max(f64::MIN_POSITIVE).ln())
        .collect();
    let s_rate = if entries.iter().all(|e| e.s_err == 0.0) {
        None
    } else {
        fit_slope(&xs, &ys)
    };
    Ok(SmoothingReport { entries, s_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c, kron, sigma1, sigma2, sigma3};
    use crate::certifier::{certify_wac, Objective};
    use crate::random::{random_hermitian, random_matrix, rng};
    use approx::assert_relative_eq;

    fn sa(m: Mat) -> SelfAdjointOperator {
        SelfAdjointOperator::scalar_module(m).unwrap()
    }

    fn im(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    /// Anticommuting pair plus a small perturbation of T.
    fn perturbed_pauli(seed: u64, eps: f64) -> (SelfAdjointOperator, SelfAdjointOperator) {
        let mut g = rng(seed);
        let a = random_hermitian(&mut g, 3, 1.0);
        let b = random_hermitian(&mut g, 3, 1.0);
        let p = random_hermitian(&mut g, 6, eps);
        let s = kron(&sigma1(), &(identity(3) + a * c(0.3, 0.)));
        let t = kron(&sigma2(), &(identity(3) + b * c(0.3, 0.))) + p;
        (sa(s), sa(t))
    }

    #[test]
    fn a_lambda_examples() {
        // TS = 0 when the ranges are orthogonal
        let s = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1., 0.),
            c(0., 0.),
        ])));
        let t = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0., 0.),
            c(2., 0.),
        ])));
        let a = a_lambda(&s, &t, im(3.0)).unwrap();
        assert_eq!(a.matrix(), &(s.matrix() + t.matrix()));

        let a = a_lambda(&sa(sigma1()), &sa(sigma2()), im(10.0)).unwrap();
        // s2 s1 = i s3 with this sigma_2, so TS/l = s3/10
        let oracle = sigma1() + sigma2() + sigma2() * sigma1() / im(10.0);
        assert!(norm(&(a.matrix() - &oracle)) < 1e-15);
        assert!(norm(&(&oracle - (sigma1() + sigma2() + sigma3() * c(0.1, 0.)))) < 1e-15);

        assert!(matches!(
            a_lambda(&s, &t, C64::new(0., 0.)),
            Err(SumError::ZeroLambda)
        ));
    }

    #[test]
    fn factorization_identity_random() {
        let mut g = rng(30);
        for _ in 0..50 {
            let s = sa(random_hermitian(&mut g, 4, 2.0));
            let t = sa(random_hermitian(&mut g, 4, 2.0));
            let (r, scale) = factorization_residual(&s, &t, im(7.0)).unwrap();
            assert!(r <= 1e-13 * scale);
            let (r, scale) = resolvent_split_residual(&s, &t, im(70.0), im(7.0)).unwrap();
            assert!(r <= 1e-12 * scale);
        }
    }

    #[test]
    fn pauli_bounds_hold() {
        let (s, t) = (sa(sigma1()), sa(sigma2()));
        let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        let r = fundamental_bounds(&s, &t, &cert, im(100.0), im(10.0), 1e-8).unwrap();
        assert!(r.inv_norm * 10.0 <= SQRT_2);
        assert!(r.ts_norm <= 1.0);
        assert!(r.all_pass());
        let m = mu0_threshold(
            &s,
            &t,
            &cert,
            &[1.0, 10.0, 100.0],
            LambdaRule::default(),
            1e-8,
        )
        .unwrap();
        assert_eq!(m.mu0, Some(1.0));
    }

    #[test]
    fn orthogonal_ranges_give_plain_resolvent() {
        let s = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1., 0.),
            c(0., 0.),
        ])));
        let t = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0., 0.),
            c(2., 0.),
        ])));
        let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        let r = fundamental_bounds(&s, &t, &cert, im(50.0), im(5.0), 1e-8).unwrap();
        assert!(r.inv_norm <= 1.0 / 5.0 + 1e-15);
        let net = convergence_sweep(&s, &t, im(5.0), &default_lambda_grid(im(5.0))).unwrap();
        assert!(net.exact && net.fitted_rate.is_none());
    }

    #[test]
    fn inadmissible_parameters_rejected() {
        let (s, t) = (sa(sigma1()), sa(sigma2()));
        let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
        assert!(fundamental_bounds(&s, &t, &cert, im(-100.0), im(10.0), 1e-8).is_err());
        assert!(fundamental_bounds(&s, &t, &cert, im(5.0), im(10.0), 1e-8).is_err());
    }

    #[test]
    fn mu0_grows_with_anticommutator() {
        let mut g = rng(31);
        let a = random_hermitian(&mut g, 3, 1.0);
        let b = random_hermitian(&mut g, 3, 1.0);
        let grid: Vec<f64> = (0..=8).map(|e| 10f64.powf(e as f64 / 2.0)).collect();
        let mut last = 0.0;
        for scale in [1.0, 10.0, 100.0] {
            // K = -i s3 (x) [A, B]: scaling A scales K
            let s = sa(kron(&sigma1(), &(&a * c(scale, 0.))));
            let t = sa(kron(&sigma2(), &b) + kron(&sigma3(), &identity(3)) * c(0.5, 0.));
            let cert = certify_wac(&s, &t, Sign::Plus, Objective::default()).unwrap();
            let m = mu0_threshold(&s, &t, &cert, &grid, LambdaRule::default(), 1e-8).unwrap();
            let mu0 = m.mu0.expect("threshold on grid");
            assert!(mu0 >= last, "{mu0} < {last}");
            last = mu0;
        }
    }

    #[test]
    fn convergence_rate_is_one_over_lambda() {
        let (s, t) = perturbed_pauli(32, 0.2);
        let mu = im(10.0);
        let grid: Vec<C64> = (2..=5).map(|e| im(10f64.powi(e) * 10.0)).collect();
        let net = convergence_sweep(&s, &t, mu, &grid).unwrap();
        let rate = net.fitted_rate.unwrap();
        assert!((-1.1..=-0.9).contains(&rate), "{rate}");
        for e in &net.entries {
            assert!(e.residual <= e.predicted * (1.0 + 1e-9));
        }
        for w in net.entries.windows(2) {
            let ratio = w[0].lambda_abs / w[1].lambda_abs;
            assert!(w[1].residual <= w[0].residual * ratio * 1.2);
        }
    }

    #[test]
    fn smoothing_on_joint_eigenvector() {
        let s = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(2., 0.),
            c(-1., 0.),
        ])));
        let t = sa(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3., 0.),
            c(5., 0.),
        ])));
        let x =
            ModuleVector::new(Mat::from_column_slice(2, 1, &[c(1., 0.), c(0., 0.)]), 2, 1).unwrap();
        let l = im(4.0);
        let r = smoothing_approx(&s, &t, &x, &[l]).unwrap();
        let oracle = (l * l / ((c(2., 0.) + l) * (c(3., 0.) + l)) - c(1., 0.)).norm();
        assert_relative_eq!(r.entries[0].x_err, oracle, max_relative = 1e-13);
    }

    #[test]
    fn smoothing_decays() {
        let (s, t) = perturbed_pauli(33, 0.2);
        let mut g = rng(34);
        let x = ModuleVector::new(random_matrix(&mut g, 6, 1), 6, 1).unwrap();
        let grid: Vec<C64> = (2..=5).map(|e| im(10f64.powi(e))).collect();
        let r = smoothing_approx(&s, &t, &x, &grid).unwrap();
        let e4 = &r.entries[2];
        let e5 = &r.entries[3];
        assert!(e4.x_err <= 10.0 * e5.x_err);
        assert!(e5.x_err < e4.x_err && e5.s_err < e4.s_err && e5.t_err < e4.t_err);
        let rate = r.s_rate.unwrap();
        assert!((-1.1..=-0.9).contains(&rate), "{rate}");
    }

    #[test]
    fn csv_rows_follow_header() {
        let (s, t) = perturbed_pauli(35, 0.1);
        let net = convergence_sweep(&s, &t, im(10.0), &default_lambda_grid(im(10.0))).unwrap();
        let rows = net.csv_rows();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0][0], net.entries[0].lambda_abs);
        assert_eq!(rows[0][6], net.entries[0].residual);
    }
}
