//! Seeded instance generation.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use wacpair_core::algebra::{c, commutator, kron, norm, sigma1, sigma2, MatrixJson};
use wacpair_core::random::{random_hermitian, random_unitary, rng, Rng};
use wacpair_core::{Mat, SelfAdjointOperator, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `S = s1 x A`, `T = s2 x B` with `|[A,B]_-|` tuned to the target.
    CliffordTensor,
    /// Exactly anticommuting `s1 x A`, `s2 x B` (commuting `A`, `B`) with a
    /// hermitian perturbation of norm `perturbation` added to `T`.
    PerturbedExact,
    /// `S` and `T` read from matrix JSON files.
    UserMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub k: usize,
    pub n: usize,
    /// Spectra of `A`, `B` are drawn log-uniform in `[1, 10^spectral_scale]` with random signs.
    pub spectral_scale: f64,
    /// Target `|[S,T]_+|` for `clifford_tensor`.
    pub anticommutator_target: f64,
    pub perturbation: f64,
    pub construction: Construction,
    /// Set from the experiment seed, not from the config section.
    #[serde(skip)]
    pub seed: u64,
    pub s_path: Option<PathBuf>,
    pub t_path: Option<PathBuf>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            k: 2,
            n: 4,
            spectral_scale: 1.0,
            anticommutator_target: 1.0,
            perturbation: 0.1,
            construction: Construction::PerturbedExact,
            seed: 0,
            s_path: None,
            t_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenError {
    Invalid(String),
    Infeasible { target: f64, achievable: f64 },
    Io(String),
}

impl std::fmt::Display for GenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenError::Invalid(m) => write!(f, "invalid generator spec: {m}"),
            GenError::Infeasible { target, achievable } => {
                write!(
                    f,
                    "anticommutator target {target} exceeds the achievable {achievable:.6}"
                )
            }
            GenError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for GenError {}

fn log_uniform_spectrum(g: &mut Rng, dim: usize, scale: f64) -> Vec<f64> {
    let top = scale * std::f64::consts::LN_10;
    (0..dim)
        .map(|_| {
            let v = (g.gen::<f64>() * top).exp();
            if g.gen::<bool>() {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn conjugate_diag(u: &Mat, d: &[f64]) -> Mat {
    let mut m = u.clone();
    for (j, &v) in d.iter().enumerate() {
        m.column_mut(j).scale_mut(v);
    }
    let h = m * u.adjoint();
    (&h + h.adjoint()) * c(0.5, 0.0)
}

/// `exp(i theta H)` for hermitian `H`.
fn rotation(h: &SelfAdjointOperator, theta: f64) -> Mat {
    h.apply_fn(|x| c((theta * x).cos(), (theta * x).sin()))
}

fn read_matrix(path: &PathBuf) -> Result<Mat, GenError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GenError::Io(format!("{}: {e}", path.display())))?;
    let mj: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| GenError::Invalid(format!("{}: {e}", path.display())))?;
    mj.to_matrix()
        .map_err(|e| GenError::Invalid(format!("{}: {e}", path.display())))
}

pub fn gen_pair(
    spec: &GeneratorSpec,
) -> Result<(SelfAdjointOperator, SelfAdjointOperator), GenError> {
    let (n, k) = (spec.n, spec.k);
    if n == 0 || k == 0 {
        return Err(GenError::Invalid("n and k must be positive".into()));
    }
    let wrap = |m: Mat| {
        SelfAdjointOperator::from_matrix(m, n, k).map_err(|e| GenError::Invalid(e.to_string()))
    };
    if spec.construction == Construction::UserMatrix {
        let (Some(sp), Some(tp)) = (&spec.s_path, &spec.t_path) else {
            return Err(GenError::Invalid(
                "user_matrix needs s_path and t_path".into(),
            ));
        };
        let (s, t) = (read_matrix(sp)?, read_matrix(tp)?);
        // hermitize; the operators are assumed self-adjoint up to rounding
        let h = |m: Mat| (&m + m.adjoint()) * c(0.5, 0.0);
        return Ok((wrap(h(s))?, wrap(h(t))?));
    }
    let dim = n * k;
    if dim % 2 != 0 {
        return Err(GenError::Invalid(format!(
            "n*k = {dim} must be even for a Clifford construction"
        )));
    }
    if !(spec.spectral_scale >= 0.0 && spec.spectral_scale.is_finite()) {
        return Err(GenError::Invalid(format!(
            "spectral_scale = {}",
            spec.spectral_scale
        )));
    }
    let half = dim / 2;
    let mut g = rng(spec.seed);
    let u = random_unitary(&mut g, half);
    let a = conjugate_diag(&u, &log_uniform_spectrum(&mut g, half, spec.spectral_scale));
    let db = log_uniform_spectrum(&mut g, half, spec.spectral_scale);
    let h = SelfAdjointOperator::scalar_module(random_hermitian(&mut g, half, 1.0))
        .map_err(|e| GenError::Invalid(e.to_string()))?;
    let b_at = |theta: f64| conjugate_diag(&(&u * rotation(&h, theta)), &db);
    let (s1, s2) = (sigma1(), sigma2());
    match spec.construction {
        Construction::PerturbedExact => {
            if !(spec.perturbation >= 0.0 && spec.perturbation.is_finite()) {
                return Err(GenError::Invalid(format!(
                    "perturbation = {}",
                    spec.perturbation
                )));
            }
            let e = random_hermitian(&mut g, dim, spec.perturbation);
            Ok((wrap(kron(&s1, &a))?, wrap(kron(&s2, &b_at(0.0)) + e)?))
        }
        Construction::CliffordTensor => {
            let target = spec.anticommutator_target;
            if !(target >= 0.0 && target.is_finite()) {
                return Err(GenError::Invalid(format!(
                    "anticommutator_target = {target}"
                )));
            }
            let comm = |theta: f64| norm(&commutator(&a, &b_at(theta), Sign::Minus));
            let theta = if target == 0.0 {
                0.0
            } else {
                let steps = 64;
                let grid: Vec<f64> = (0..=steps)
                    .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64)
                    .collect();
                let vals: Vec<f64> = grid.iter().map(|&th| comm(th)).collect();
                let Some(i) = vals.iter().position(|&v| v >= target) else {
                    let achievable = vals.iter().cloned().fold(0.0, f64::max);
                    return Err(GenError::Infeasible { target, achievable });
                };
                let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[i]);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if comm(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            };
            Ok((wrap(kron(&s1, &a))?, wrap(kron(&s2, &b_at(theta)))?))
        }
        Construction::UserMatrix => unreachable!("handled above"),
    }
}
