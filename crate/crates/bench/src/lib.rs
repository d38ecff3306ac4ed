//! Fixtures shared by the benchmarks.

use wacpair_core::random::{random_hermitian, rng};
use wacpair_core::SelfAdjointOperator;

/// Random self-adjoint pair on `M_dim(C)` viewed as a module over `C`.
pub fn random_pair(seed: u64, dim: usize) -> (SelfAdjointOperator, SelfAdjointOperator) {
    let mut g = rng(seed);
    let s =
        SelfAdjointOperator::scalar_module(random_hermitian(&mut g, dim, 3.0)).expect("hermitian");
    let t =
        SelfAdjointOperator::scalar_module(random_hermitian(&mut g, dim, 1.0)).expect("hermitian");
    (s, t)
}

pub const DIMS: [usize; 3] = [8, 16, 32];
