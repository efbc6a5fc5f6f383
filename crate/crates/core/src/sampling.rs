//! Seeded random matrices and vectors for randomized experiments.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numkit::{c64, Matrix, Vector, C64};

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| complex_gaussian(rng))
}

pub fn real_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| c64(rng.sample(StandardNormal), 0.0))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
    orthonormal_columns(rng, dim, dim)
}

/// `dim × k` matrix with orthonormal columns.
pub fn orthonormal_columns<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Matrix {
    let g = gaussian_matrix(rng, dim, k);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random matrix with operator norm exactly `norm`.
pub fn matrix_with_norm<R: Rng + ?Sized>(rng: &mut R, dim: usize, norm: f64) -> Matrix {
    let g = gaussian_matrix(rng, dim, dim);
    let s = crate::numkit::operator_norm(&g);
    g.scale(norm / s)
}
