//! Doubling by the Clifford algebra on two generators.
//!
//! The doubled module is `E + E`; `S^ = diag(S, S)` and the generator
//! `sigma_i` acts by its 2x2 block pattern, i.e. as `sigma_i (x) 1_E`.

use crate::algebra::{
    c, commutator, identity, inverse, kron, norm, sigma1, sigma2, sigma3, AlgebraError, Mat,
    SelfAdjointOperator, Sign, C64,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliffordError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("generator index {0} out of range 1..=3")]
    BadIndex(usize),
    #[error("transform needs distinct generators, got ({0},{0})")]
    SameIndex(usize),
}

pub type Result<T> = std::result::Result<T, CliffordError>;

/// `sigma_1`, `sigma_2`, `sigma_3 = i sigma_1 sigma_2`.
pub fn clifford_generator(i: usize) -> Result<Mat> {
    match i {
        1 => Ok(sigma1()),
        2 => Ok(sigma2()),
        3 => Ok(sigma3()),
        other => Err(CliffordError::BadIndex(other)),
    }
}

/// Action of `sigma_i` on the doubled module of dimension `2 * dim`.
pub fn generator_action(i: usize, dim: usize) -> Result<Mat> {
    Ok(kron(&clifford_generator(i)?, &identity(dim)))
}

/// `diag(S, S)` on `B^(2n)`.
pub fn double(s: &SelfAdjointOperator) -> SelfAdjointOperator {
    let (n, k) = s.shape();
    SelfAdjointOperator::from_matrix(kron(&identity(2), s.matrix()), 2 * n, k)
        .expect("a doubled self-adjoint operator is self-adjoint")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    CommutingToAnticommuting,
    AnticommutingToCommuting,
}

/// `s_i = S^ sigma_i`, `t_j = T^ sigma_j` with the relations that swap the
/// commutator and the anticommutator.
#[derive(Debug, Clone)]
pub struct CliffordPair {
    pub s_hat: SelfAdjointOperator,
    pub t_hat: SelfAdjointOperator,
    pub s_i: SelfAdjointOperator,
    pub t_j: SelfAdjointOperator,
    pub generator_indices: (usize, usize),
    pub parity: Parity,
    /// `|[s_i,t_j]_+ - (S^T^ - T^S^) s_i s_j|` and the same with signs swapped,
    /// each relative to `|S||T|`.
    pub relation_residuals: [f64; 2],
}

/// Builds `(s_i, t_j)`; the parity records which way `source` is mapped.
pub fn transform_pair(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
    i: usize,
    j: usize,
    source: Sign,
) -> Result<CliffordPair> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    if i == j {
        return Err(CliffordError::SameIndex(i));
    }
    let dim = s.dim();
    let si = generator_action(i, dim)?;
    let sj = generator_action(j, dim)?;
    let s_hat = double(s);
    let t_hat = double(t);
    let (n2, k) = s_hat.shape();
    let s_i = SelfAdjointOperator::from_matrix(s_hat.matrix() * &si, n2, k)?;
    let t_j = SelfAdjointOperator::from_matrix(t_hat.matrix() * &sj, n2, k)?;
    let st = s_hat.matrix() * t_hat.matrix();
    let ts = t_hat.matrix() * s_hat.matrix();
    let ss = &si * &sj;
    let scale = (s.norm() * t.norm()).max(f64::MIN_POSITIVE);
    let plus =
        norm(&(commutator(s_i.matrix(), t_j.matrix(), Sign::Plus) - (&st - &ts) * &ss)) / scale;
    let minus =
        norm(&(commutator(s_i.matrix(), t_j.matrix(), Sign::Minus) - (&st + &ts) * &ss)) / scale;
    let parity = match source {
        Sign::Plus => Parity::AnticommutingToCommuting,
        Sign::Minus => Parity::CommutingToAnticommuting,
    };
    Ok(CliffordPair {
        s_hat,
        t_hat,
        s_i,
        t_j,
        generator_indices: (i, j),
        parity,
        relation_residuals: [plus, minus],
    })
}

/// Residuals of `(S^ s_i + l)^{-1} = (S^ s_i - l)(S^2 - l^2)^{-1}
/// = (S^ - l)^{-1} s_i - (l s_i + l)(S^2 - l^2)^{-1}`, against the direct
/// inverse, relative to `|(S^ s_i + l)^{-1}|`.
pub fn doubled_resolvent_residuals(
    s: &SelfAdjointOperator,
    i: usize,
    lambda: C64,
) -> Result<[f64; 2]> {
    let dim = s.dim();
    let si = generator_action(i, dim)?;
    let sh = kron(&identity(2), s.matrix());
    let id = identity(2 * dim);
    let l = &id * lambda;
    let direct = inverse(&(&sh * &si + &l))?;
    let sq = inverse(&(&sh * &sh - &id * (lambda * lambda)))?;
    let first = (&sh * &si - &l) * &sq;
    let second = inverse(&(&sh - &l))? * &si - (&si * lambda + &l) * &sq;
    let scale = norm(&direct);
    Ok([
        norm(&(first - &direct)) / scale,
        norm(&(second - &direct)) / scale,
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionRelations {
    /// `S^s_3 T^ +- T^ S^s_3 = (S^T^ +- T^S^) s_3`, for `+` and `-`.
    pub sigma3_relation: [f64; 2],
    /// `(S^s_3 +- T^) S^s_1 + S^s_1 (S^s_3 +- T^) = +-(S^T^ + T^S^) s_1`, for `+` and `-`.
    pub mixed_relation: [f64; 2],
    /// The same mixed relation with `s_3` in place of `s_1` on the right; not an
    /// identity unless `S^T^ + T^S^` vanishes.
    pub mixed_relation_sigma3_form: [f64; 2],
    /// `|S^s_3 + T^ - diag(S+T, T-S)|`.
    pub block_form: f64,
    /// Top-left block equals `S+T` bit for bit.
    pub top_left_exact: bool,
    /// Common scale `(|S| + |T|)^2`.
    pub scale: f64,
}

impl SectionRelations {
    pub fn max_relative(&self) -> f64 {
        let m = self
            .sigma3_relation
            .iter()
            .chain(&self.mixed_relation)
            .fold(self.block_form, |a, &b| a.max(b));
        m / self.scale
    }
}

pub fn verify_section5_relations(
    s: &SelfAdjointOperator,
    t: &SelfAdjointOperator,
) -> Result<SectionRelations> {
    if s.shape() != t.shape() {
        return Err(AlgebraError::ShapeMismatch("S and T act on different modules".into()).into());
    }
    let dim = s.dim();
    let s1 = generator_action(1, dim)?;
    let s3 = generator_action(3, dim)?;
    let sh = kron(&identity(2), s.matrix());
    let th = kron(&identity(2), t.matrix());
    let s_s3 = &sh * &s3;
    let s_s1 = &sh * &s1;
    let st = &sh * &th;
    let ts = &th * &sh;
    let mut sigma3_relation = [0.0; 2];
    let mut mixed_relation = [0.0; 2];
    let mut mixed_relation_sigma3_form = [0.0; 2];
    for (idx, sign) in [1.0, -1.0].into_iter().enumerate() {
        let sg = c(sign, 0.);
        let lhs = &s_s3 * &th + &th * &s_s3 * sg;
        let rhs = (&st + &ts * sg) * &s3;
        sigma3_relation[idx] = norm(&(lhs - rhs));
        let m = &s_s3 + &th * sg;
        let lhs = &m * &s_s1 + &s_s1 * &m;
        mixed_relation[idx] = norm(&(&lhs - (&st + &ts) * &s1 * sg));
        mixed_relation_sigma3_form[idx] = norm(&(&lhs - (&st + &ts) * &s3 * sg));
    }
    let sum = &s_s3 + &th;
    let mut block = Mat::zeros(2 * dim, 2 * dim);
    let plus = s.matrix() + t.matrix();
    let minus = t.matrix() - s.matrix();
    block.view_mut((0, 0), (dim, dim)).copy_from(&plus);
    block.view_mut((dim, dim), (dim, dim)).copy_from(&minus);
    let block_form = norm(&(&sum - &block));
    let top_left_exact = sum.view((0, 0), (dim, dim)) == plus;
    let scale = (s.norm() + t.norm()).powi(2).max(f64::MIN_POSITIVE);
    Ok(SectionRelations {
        sigma3_relation,
        mixed_relation,
        mixed_relation_sigma3_form,
        block_form,
        top_left_exact,
        scale,
    })
}
