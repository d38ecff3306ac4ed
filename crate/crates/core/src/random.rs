//! Seeded random matrices.

use crate::algebra::{c, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(s * re, s * im)
    })
}

/// Hermitian matrix with spectral norm `scale` (zero stays zero).
pub fn random_hermitian(rng: &mut Rng, dim: usize, scale: f64) -> Mat {
    let g = random_matrix(rng, dim, dim);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let n = crate::algebra::norm(&h);
    if n == 0.0 {
        h
    } else {
        h * c(scale / n, 0.0)
    }
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut Rng, dim: usize) -> Mat {
    random_matrix(rng, dim, dim).qr().q()
}
