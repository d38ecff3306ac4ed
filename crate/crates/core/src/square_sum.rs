//! Sums of squares of weakly anticommuting pairs: the identity
//! `(S+T)^2 = S^2 + T^2 + K`, the interpolation family `P_z`, relative bounds
//! of `K` against `(S+T)^2`, and propagation of certificates to triples.

use crate::algebra::{
    self, c, hermitian_eigen, identity, lambda_max, lambda_min, norm, pencil_extremes,
    AlgebraError, Mat, SelfAdjointOperator, Sign, C64,
};
use crate::certifier::{
    certify_wac, graph_norm_constant, verify_certificate, CertifierError, FormData, Objective,
    SlackReport, WacCertificate,
};
use crate::random::{random_matrix, rng};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SquareSumError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Certifier(#[from] CertifierError),
    #[error("Re z = {0} lies outside the strip [0, 1]")]
    OutsideStrip(f64),
    #[error("missing or unusable certificate: {0}")]
    MissingCertificate(String),
}

pub type Result<T> = std::result::Result<T, SquareSumError>;

fn anticommutator(s: &SelfAdjointOperator, t: &SelfAdjointOperator) -> Mat {
    algebra::commutator(s.matrix(), t.matrix(), Sign::Plus)
}

fn sum_operator(s: &SelfAdjointOperator, t: &SelfAdjointOperator) -> Result<SelfAdjointOperator> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("operands act on different modules".into()).into());
    }
    Ok(s.sibling(s.matrix() + t.matrix())?)
}

/// Checks that `cert` is an anticommutator certificate that is feasible for `(s, t)`.
fn require_certificate(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
    what: &str,
) -> Result<SlackReport> {
    if cert.sign != Sign::Plus {
        return Err(SquareSumError::MissingCertificate(format!(
            "{what}: sign must be +"
        )));
    }
    let rep = verify_certificate(s, t, cert, algebra::DEFAULT_TOL)?;
    if !rep.feasible {
        return Err(SquareSumError::MissingCertificate(format!(
            "{what}: slack {} is negative",
            rep.slack
        )));
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareSumReport {
    /// `|(S+T)^2 - S^2 - T^2 - K|`.
    pub identity_residual: f64,
    pub scale: f64,
    /// Ascending eigenvalues of `S^2 + T^2`.
    pub sum_spectrum: Vec<f64>,
    /// Every eigenvalue lies in `[0, |S|^2 + |T|^2]` up to rounding.
    pub spectrum_in_range: bool,
    /// Graph-norm constant of `(S, T)`.
    pub graph_constant: f64,
    /// `C` of `+-K <= C (1 + (S+T)^2)` obtained from the certificate.
    pub form_constant: f64,
    /// `min over signs of lambda_min(C (1+(S+T)^2) -+ K)`.
    pub form_slack: f64,
    /// Pencil constant of `(1 + (S^2+T^2)^2, 1 + ((S+T)^2)^2)`.
    pub domain_constant: f64,
}

pub fn square_sum_check(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    cert: &WacCertificate,
) -> Result<SquareSumReport> {
    let d = sum_operator(s, t)?;
    require_certificate(s, t, cert, "pair (S, T)")?;
    let k = anticommutator(s, t);
    let s2 = s.square();
    let t2 = t.square();
    let d2 = d.square();
    let q = &s2 + &t2;
    let identity_residual = norm(&(&d2 - &q - &k));
    let scale = norm(&d2) + norm(&q) + norm(&k);

    let sum_spectrum: Vec<f64> = hermitian_eigen(&q).0.iter().cloned().collect();
    let top = s.norm().powi(2) + t.norm().powi(2);
    let slop = 1e-12 * top.max(1.0);
    let spectrum_in_range = sum_spectrum.iter().all(|&v| v >= -slop && v <= top + slop);

    // |<Kx,x>| <= (|Kx|^2 + |x|^2)/2 <= ((1+C0) + C1 S^2 + C2 T^2)/2, then the
    // graph-norm comparison of 1+S^2+T^2 with 1+(S+T)^2.
    let g = graph_norm_constant(s, t)?;
    let form_constant = 0.5 * (1.0 + cert.c0).max(cert.c1).max(cert.c2) * g.constant;
    let id = identity(s.dim());
    let rhs = (&id + &d2) * c(form_constant, 0.);
    let form_slack = lambda_min(&(&rhs - &k)).min(lambda_min(&(&rhs + &k)));

    let (lo, hi) = pencil_extremes(&(&id + &q * &q), &(&id + &d2 * &d2))?;
    let domain_constant = hi.max(1.0 / lo);

    Ok(SquareSumReport {
        identity_residual,
        scale,
        sum_spectrum,
        spectrum_in_range,
        graph_constant: g.constant,
        form_constant,
        form_slack,
        domain_constant,
    })
}

/// `P_z = (1+|D|)^{-z} K (1+|D|)^{z-1}` with `D = S + T`.
pub fn p_z(s: &SelfAdjointOperator, t: &SelfAdjointOperator, z: C64) -> Result<Mat> {
    if !(0.0..=1.0).contains(&z.re) {
        return Err(SquareSumError::OutsideStrip(z.re));
    }
    let d = sum_operator(s, t)?;
    let k = anticommutator(s, t);
    let left = d.apply_fn(|x| (-z * (1.0 + x.abs()).ln()).exp());
    let right = d.apply_fn(|x| ((z - 1.0) * (1.0 + x.abs()).ln()).exp());
    Ok(left * k * right)
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolationPoint {
    pub re: f64,
    pub im: f64,
    pub norm: f64,
    pub p0_norm: f64,
    /// `|P_z| <= |P_0| (1 + 1e-10)`.
    pub holds: bool,
}

pub fn interpolation_family(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    z: C64,
) -> Result<InterpolationPoint> {
    let p0_norm = norm(&p_z(s, t, C64::new(0.0, 0.0))?);
    let pz = norm(&p_z(s, t, z)?);
    Ok(InterpolationPoint {
        re: z.re,
        im: z.im,
        norm: pz,
        p0_norm,
        holds: pz <= p0_norm * (1.0 + 1e-10) + 1e-300,
    })
}

pub const DEFAULT_RE_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_IM_GRID: [f64; 5] = [-5.0, -1.0, 0.0, 1.0, 5.0];

pub fn interpolation_grid(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    re_grid: &[f64],
    im_grid: &[f64],
) -> Result<Vec<InterpolationPoint>> {
    let mut out = Vec::with_capacity(re_grid.len() * im_grid.len());
    for &re in re_grid {
        for &im in im_grid {
            out.push(interpolation_family(s, t, C64::new(re, im))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeBoundSample {
    pub epsilon: f64,
    /// Smallest `C` (to bisection accuracy) with `(C + eps D^2)^2 - K^2 >= 0`.
    pub c_certified: f64,
    /// `max over sampled unit x of (|Kx| - eps |D^2 x|)^+`, a lower bound for any valid `C`.
    pub c_montecarlo: f64,
    /// `lambda_max(K^2 - (c_certified + eps D^2)^2)`.
    pub certificate_excess: f64,
    /// `max over sampled unit x of |Kx| - c_certified - eps |D^2 x|`.
    pub mc_violation: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeBoundCurve {
    pub samples: Vec<RelativeBoundSample>,
}

impl RelativeBoundCurve {
    pub const CSV_HEADER: [&'static str; 3] = ["epsilon", "c_certified", "c_montecarlo"];

    pub fn csv_rows(&self) -> Vec<[f64; 3]> {
        self.samples
            .iter()
            .map(|s| [s.epsilon, s.c_certified, s.c_montecarlo])
            .collect()
    }
}

pub fn default_epsilon_grid() -> Vec<f64> {
    (-3..=2).map(|e| 10f64.powi(e)).collect()
}

pub fn kato_rellich_margin(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    eps_grid: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<RelativeBoundCurve> {
    let d = sum_operator(s, t)?;
    let k = anticommutator(s, t);
    let k2 = &k * &k;
    let d2 = d.square();
    let id = identity(s.dim());
    let knorm = norm(&k);

    let mut g = rng(seed);
    let xs: Vec<Mat> = (0..mc_samples)
        .map(|_| {
            let x = random_matrix(&mut g, s.dim(), 1);
            let n = x.norm();
            x / c(n, 0.)
        })
        .collect();

    let mut samples = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let scale = (knorm * knorm + (knorm + eps * norm(&d2)).powi(2)).max(f64::MIN_POSITIVE);
        let excess = |cc: f64| {
            let b = &id * c(cc, 0.) + &d2 * c(eps, 0.);
            lambda_max(&(&k2 - &b * &b))
        };
        let feasible = |cc: f64| excess(cc) <= 1e-12 * scale;
        let c_certified = if feasible(0.0) {
            0.0
        } else {
            // C = |K| is always feasible: (|K| + eps D^2)^2 >= |K|^2 >= K^2.
            let (mut lo, mut hi) = (0.0, knorm);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * knorm {
                    break;
                }
            }
            hi
        };
        let mut c_mc: f64 = 0.0;
        let mut violation = f64::NEG_INFINITY;
        for x in &xs {
            let kx = (&k * x).norm();
            let dx = (&d2 * x).norm();
            c_mc = c_mc.max(kx - eps * dx);
            violation = violation.max(kx - c_certified - eps * dx);
        }
        samples.push(RelativeBoundSample {
            epsilon: eps,
            c_certified,
            c_montecarlo: c_mc,
            certificate_excess: excess(c_certified),
            mc_violation: violation,
            scale,
        });
    }
    Ok(RelativeBoundCurve { samples })
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleReport {
    /// Propagated certificate for `(S1+S2, S3)`.
    pub certificate: WacCertificate,
    /// Graph-norm constant of `(S1, S2)` used in the propagation.
    pub graph_constant: f64,
    pub verification: SlackReport,
    /// Directly optimized certificate for `(S1+S2, S3)`.
    pub direct: WacCertificate,
    /// Minimal `C0` at the propagated `(C1, C2)`.
    pub direct_c0_at_propagated: f64,
    /// Pencil constant of `(1 + S1^2 + S2^2 + S3^2, 1 + (S1+S2+S3)^2)`.
    pub sum_graph_constant: f64,
}

/// Propagates the `(S1, S3)` and `(S2, S3)` certificates to `(S1+S2, S3)`.
///
/// With `K = K13 + K23`, `|Kx|^2 <= 2|K13 x|^2 + 2|K23 x|^2`; the `S1`, `S2`
/// terms are folded into `S1+S2` through
/// `|S1x|^2 + |S2x|^2 <= G (|x|^2 + |(S1+S2)x|^2) - |x|^2`.
pub fn triple_certify(
    s1: &SelfAdjointOperator,
    s2: &SelfAdjointOperator,
    s3: &SelfAdjointOperator,
    c12: &WacCertificate,
    c13: &WacCertificate,
    c23: &WacCertificate,
) -> Result<TripleReport> {
    require_certificate(s1, s2, c12, "pair (S1, S2)")?;
    require_certificate(s1, s3, c13, "pair (S1, S3)")?;
    require_certificate(s2, s3, c23, "pair (S2, S3)")?;
    let s12 = sum_operator(s1, s2)?;
    let g = graph_norm_constant(s1, s2)?.constant;
    let m = c13.c1.max(c23.c1);
    let c0 = 2.0 * (c13.c0 + c23.c0) + 2.0 * m * (g - 1.0);
    let c1 = 2.0 * m * g;
    let c2 = 2.0 * (c13.c2 + c23.c2);

    let data = FormData::new(&s12, s3, Sign::Plus)?;
    let mut certificate = certify_wac(&s12, s3, Sign::Plus, Objective::default())?;
    let direct = certificate.clone();
    certificate.c0 = c0;
    certificate.c1 = c1;
    certificate.c2 = c2;
    certificate.slack = lambda_min(&data.certificate_matrix(c0, c1, c2));
    certificate.lambda0 = None;
    certificate.objective = "propagated from pairwise certificates".into();
    let verification = verify_certificate(&s12, s3, &certificate, algebra::DEFAULT_TOL)?;

    let id = identity(s1.dim());
    let a = &id + s1.square() + s2.square() + s3.square();
    let sum = s1.matrix() + s2.matrix() + s3.matrix();
    let b = &id + &sum * &sum;
    let (lo, hi) = pencil_extremes(&a, &b)?;

    Ok(TripleReport {
        direct_c0_at_propagated: data.minimal_c0(c1, c2),
        certificate,
        graph_constant: g,
        verification,
        direct,
        sum_graph_constant: hi.max(1.0 / lo),
    })
}
