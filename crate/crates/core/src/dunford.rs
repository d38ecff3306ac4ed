//! Sectorial estimates and the contour-integral approximant
//! `P_l = (2 pi i)^-1 oint (z + l^2 + S^2)^-1 (S + T - i l) (z - T^2)^-1 dz`
//! of the resolvent `(S + T + i l)^-1`, with `l` real and positive.
//!
//! The contour is closed: a small arc of radius `r` around the origin from
//! angle `theta` to `2 pi - theta`, the rays `arg z = -theta` and `arg z = theta`
//! out to `r_max`, joined by the outer arc `|z| = r_max`. It encloses
//! `[0, |T|^2]` and leaves `(-inf, -l^2]` outside, so the only quadrature
//! error is the Gauss rule's.

use crate::algebra::{
    self, c, identity, inverse, norm, AlgebraError, Mat, ModuleOperator, SelfAdjointOperator, C64,
};
use gauss_quad::GaussLegendre;
use nalgebra::Schur;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DunfordError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("node budget {0} is below the minimum of 16")]
    NodeBudget(usize),
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("contour node at distance {distance} from the spectrum, below r/2 = {bound}")]
    ContourAudit { distance: f64, bound: f64 },
    #[error("eigenvalue computation did not converge")]
    Eigen,
}

pub type Result<T> = std::result::Result<T, DunfordError>;

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    InnerArc,
    LowerRay,
    OuterArc,
    UpperRay,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourNode {
    pub z: C64,
    /// Includes the `(2 pi i)^-1` factor.
    pub weight: C64,
    pub piece: Piece,
}

#[derive(Debug, Clone, Serialize)]
pub struct Contour {
    pub lambda: f64,
    /// Shift of the `S^2` factor, `lambda^2`.
    pub shift: f64,
    pub r: f64,
    pub theta: f64,
    pub r_max: f64,
    pub nodes: Vec<ContourNode>,
    /// Smallest distance from a node to an eigenvalue of `T^2`.
    pub min_distance: f64,
}

impl Contour {
    /// Quadrature of `(2 pi i)^-1 oint (z - a)^-1 dz`.
    pub fn winding(&self, a: C64) -> C64 {
        let terms: Vec<C64> = self.nodes.iter().map(|n| n.weight / (n.z - a)).collect();
        pairwise_sum(&terms)
    }
}

fn pairwise_sum(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        return xs.iter().fold(C64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn gauss(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(n.max(2))
        .expect("degree >= 2")
        .into_node_weight_pairs()
}

/// Nodes of `int_a^b f(g(u)) g'(u) du` mapped from `[-1, 1]`.
fn piece_nodes(
    n: usize,
    a: f64,
    b: f64,
    piece: Piece,
    point: impl Fn(f64) -> (C64, C64),
    out: &mut Vec<ContourNode>,
) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let scale = C64::new(0.0, -1.0 / (2.0 * PI));
    for (x, w) in gauss(n) {
        let (z, dz) = point(mid + half * x);
        out.push(ContourNode {
            z,
            weight: dz * (w * half) * scale,
            piece,
        });
    }
}

pub fn build_contour(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: f64,
    node_count: usize,
) -> Result<Contour> {
    if node_count < MIN_NODES {
        return Err(DunfordError::NodeBudget(node_count));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DunfordError::BadLambda(lambda));
    }
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    let shift = lambda * lambda;
    let theta = FRAC_PI_4;
    let r = (lambda / 2.0).min(1.0).min(shift / 2.0);
    let t2 = t.norm().powi(2);
    let r_max = 2.0 * (t2 + r);

    let n_arc = (node_count / 5).max(4);
    let n_ray = (node_count - 2 * n_arc) / 2;
    let n_inner = node_count - n_arc - 2 * n_ray;
    let i = C64::new(0.0, 1.0);
    let mut nodes = Vec::with_capacity(node_count);
    piece_nodes(
        n_inner,
        theta,
        2.0 * PI - theta,
        Piece::InnerArc,
        |p| {
            let z = C64::from_polar(r, p);
            (z, i * z)
        },
        &mut nodes,
    );
    let (lr, lr_max) = (r.ln(), r_max.ln());
    piece_nodes(
        n_ray,
        lr,
        lr_max,
        Piece::LowerRay,
        |u| {
            let z = C64::from_polar(u.exp(), -theta);
            (z, z)
        },
        &mut nodes,
    );
    piece_nodes(
        n_arc,
        -theta,
        theta,
        Piece::OuterArc,
        |p| {
            let z = C64::from_polar(r_max, p);
            (z, i * z)
        },
        &mut nodes,
    );
    // Inward along the upper ray.
    piece_nodes(
        n_ray,
        lr,
        lr_max,
        Piece::UpperRay,
        |u| {
            let z = C64::from_polar(u.exp(), theta);
            (z, -z)
        },
        &mut nodes,
    );

    let min_distance = nodes
        .iter()
        .flat_map(|n| t.eigenvalues().iter().map(move |&e| (n.z - e * e).norm()))
        .fold(f64::INFINITY, f64::min);
    if min_distance < r / 2.0 {
        return Err(DunfordError::ContourAudit {
            distance: min_distance,
            bound: r / 2.0,
        });
    }
    Ok(Contour {
        lambda,
        shift,
        r,
        theta,
        r_max,
        nodes,
        min_distance,
    })
}

/// `P_lambda` by quadrature over `contour`.
///
/// Both resolvents are diagonal in the eigenbases of `S` and `T`, so the sum
/// over nodes reduces to one scalar quadrature per pair of eigenvalues.
pub fn dunford_p_lambda(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    contour: &Contour,
) -> Result<Mat> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    let dim = s.dim();
    let l = contour.lambda;
    let m = s.matrix() + t.matrix() - identity(dim) * c(0.0, l);
    let us = s.eigenvectors();
    let ut = t.eigenvectors();
    let mut inner = us.adjoint() * m * ut;
    let floor = 1e-14 * (contour.shift + contour.r_max);
    let mut terms = Vec::with_capacity(contour.nodes.len());
    for (i, &si) in s.eigenvalues().iter().enumerate() {
        for (j, &tj) in t.eigenvalues().iter().enumerate() {
            terms.clear();
            for n in &contour.nodes {
                let a = n.z + contour.shift + si * si;
                let b = n.z - tj * tj;
                if a.norm() <= floor || b.norm() <= floor {
                    return Err(
                        AlgebraError::Singular(format!("node resolvent at z = {}", n.z)).into(),
                    );
                }
                terms.push(n.weight / (a * b));
            }
            inner[(i, j)] *= pairwise_sum(&terms);
        }
    }
    Ok(us * inner * ut.adjoint())
}

/// `R_lambda = (S + T + i lambda) P_lambda - I`.
pub fn residual_operator(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: f64,
    p: &Mat,
) -> Mat {
    let id = identity(s.dim());
    (s.matrix() + t.matrix() + &id * c(0.0, lambda)) * p - id
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub lambda: f64,
    pub nodes: usize,
    pub r_norm: f64,
    /// `|P (I+R)^-1 - (S+T+i lambda)^-1|`; `None` when `I + R` is singular.
    pub corrected_resolvent_error: Option<f64>,
    /// `|P_lambda(nodes) - P_lambda(2 nodes)|`.
    pub refinement_change: f64,
    pub p_norm: f64,
}

pub fn dunford_residual(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: f64,
    node_count: usize,
) -> Result<(Mat, ResidualReport)> {
    let contour = build_contour(s, t, lambda, node_count)?;
    let p = dunford_p_lambda(s, t, &contour)?;
    let fine = dunford_p_lambda(s, t, &build_contour(s, t, lambda, 2 * node_count)?)?;
    let r = residual_operator(s, t, lambda, &p);
    let id = identity(s.dim());
    let direct = algebra::resolvent(&s.sibling(s.matrix() + t.matrix())?, c(0.0, lambda))?;
    let corrected_resolvent_error = inverse(&(&id + &r))
        .ok()
        .map(|inv| norm(&(&p * inv - direct.matrix())));
    let report = ResidualReport {
        lambda,
        nodes: node_count,
        r_norm: norm(&r),
        corrected_resolvent_error,
        refinement_change: norm(&(&p - fine)),
        p_norm: norm(&p),
    };
    Ok((r, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSweep {
    pub rows: Vec<ResidualReport>,
    /// Smallest swept `lambda` from which `|R_lambda| < 1` for every larger swept value.
    pub threshold: Option<f64>,
}

impl ResidualSweep {
    pub const CSV_HEADER: [&'static str; 4] =
        ["lambda", "r_norm", "corrected_resolvent_error", "nodes"];

    pub fn csv_rows(&self) -> Vec<[f64; 4]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.lambda,
                    r.r_norm,
                    r.corrected_resolvent_error.unwrap_or(f64::NAN),
                    r.nodes as f64,
                ]
            })
            .collect()
    }
}

pub fn residual_sweep(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambdas: &[f64],
    node_count: usize,
) -> Result<ResidualSweep> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        rows.push(dunford_residual(s, t, l, node_count)?.1);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].lambda.total_cmp(&rows[b].lambda));
    let mut threshold = None;
    for &i in order.iter().rev() {
        if rows[i].r_norm < 1.0 {
            threshold = Some(rows[i].lambda);
        } else {
            break;
        }
    }
    Ok(ResidualSweep { rows, threshold })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub node_counts: Vec<usize>,
    /// `|P(n_{k+1}) - P(n_k)|`.
    pub changes: Vec<f64>,
    pub floor: f64,
    /// Each change is at most a quarter of the previous one or below the floor.
    pub passes: bool,
}

pub fn refinement_check(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    lambda: f64,
    start_nodes: usize,
    levels: usize,
) -> Result<RefinementReport> {
    let node_counts: Vec<usize> = (0..=levels).map(|k| start_nodes << k).collect();
    let ps = node_counts
        .iter()
        .map(|&n| dunford_p_lambda(s, t, &build_contour(s, t, lambda, n)?))
        .collect::<Result<Vec<_>>>()?;
    let changes: Vec<f64> = ps.windows(2).map(|w| norm(&(&w[1] - &w[0]))).collect();
    let floor = 1e-12 * norm(ps.last().expect("levels >= 0")).max(1.0);
    let passes = changes
        .windows(2)
        .all(|w| w[1] <= w[0] / 4.0 || w[1] <= floor);
    Ok(RefinementReport {
        node_counts,
        changes,
        floor,
        passes,
    })
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(m: &Mat) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000).ok_or(DunfordError::Eigen)?;
    let (_, tri) = schur.unpack();
    Ok(tri.diagonal().iter().cloned().collect())
}

/// Values above this count as unbounded.
pub const M_CAP: f64 = 1e12;

/// `sup over lambda in the sector |arg lambda| < theta of |lambda| |(A + lambda)^-1|`.
///
/// The function is subharmonic on the sector and tends to 1 at infinity, so the
/// supremum is taken on the two boundary rays.
pub fn sector_constant(a: &Mat, spectrum: &[C64], theta: f64, ray_samples: usize) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    let scale = spectrum
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    for e in spectrum {
        let m = -*e;
        if m.norm() > 1e-14 * scale && m.arg().abs() <= theta + 1e-12 {
            return f64::INFINITY;
        }
    }
    let id = identity(a.nrows());
    let value = |rho: f64, alpha: f64| -> f64 {
        match inverse(&(a + &id * C64::from_polar(rho, alpha))) {
            Ok(inv) => rho * norm(&inv),
            Err(_) => f64::INFINITY,
        }
    };
    let n = ray_samples.max(2);
    let (lo, hi) = ((scale * 1e-8).ln(), (scale * 1e8).ln());
    let mut rhos: Vec<f64> = (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
        .collect();
    rhos.extend(spectrum.iter().map(|e| e.norm()).filter(|&r| r > 0.0));
    let mut best: f64 = 1.0;
    for alpha in [theta, -theta] {
        let mut vals: Vec<(f64, f64)> = rhos.iter().map(|&r| (r.ln(), value(r, alpha))).collect();
        vals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let Some(k) = (0..vals.len()).max_by(|&i, &j| vals[i].1.total_cmp(&vals[j].1)) else {
            continue;
        };
        best = best.max(vals[k].1);
        // Golden-section refinement between the neighbours of the best sample.
        let (mut x0, mut x1) = (
            vals[k.saturating_sub(1)].0,
            vals[(k + 1).min(vals.len() - 1)].0,
        );
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let a1 = x1 - g * (x1 - x0);
            let b1 = x0 + g * (x1 - x0);
            let (fa, fb) = (value(a1.exp(), alpha), value(b1.exp(), alpha));
            best = best.max(fa).max(fb);
            if fa >= fb {
                x1 = b1;
            } else {
                x0 = a1;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorPoint {
    /// Sector half-angle.
    pub theta: f64,
    /// `pi - theta`.
    pub phi: f64,
    /// `f64::INFINITY` (JSON null) when unbounded.
    pub m_theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorialProfile {
    pub kernel_trivial: bool,
    pub points: Vec<SectorPoint>,
    /// Smallest grid `phi` with `M_{pi - phi'}` finite for every grid `phi' >= phi`;
    /// `None` if `A` has a kernel or no grid angle qualifies.
    pub spectral_angle: Option<f64>,
    pub resolution: f64,
}

pub fn spectral_angle(
    a: &ModuleOperator,
    angle_steps: usize,
    ray_samples: usize,
) -> Result<SectorialProfile> {
    let m = a.matrix();
    let spectrum = eigenvalues(m)?;
    let scale = spectrum.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let kernel_trivial = scale > 0.0 && spectrum.iter().all(|e| e.norm() > 1e-12 * scale);
    let steps = angle_steps.max(2);
    let resolution = PI / steps as f64;
    let points: Vec<SectorPoint> = (1..steps)
        .map(|k| {
            let phi = k as f64 * resolution;
            let theta = PI - phi;
            SectorPoint {
                theta,
                phi,
                m_theta: sector_constant(m, &spectrum, theta, ray_samples),
            }
        })
        .collect();
    let mut angle = None;
    if kernel_trivial {
        for p in points.iter().rev() {
            if p.m_theta.is_finite() && p.m_theta <= M_CAP {
                angle = Some(p.phi);
            } else {
                break;
            }
        }
    }
    Ok(SectorialProfile {
        kernel_trivial,
        points,
        spectral_angle: angle,
        resolution,
    })
}
