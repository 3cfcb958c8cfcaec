//! Seeded random primitives shared by the state generators, the ensemble
//! sampler and the basis optimizer.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::C64;

/// Generator for `(seed, stream)`; distinct streams are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal (unit variance in each of re, im).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed `n × n` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / C64::from(d.norm())
        } else {
            C64::from(1.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with unit Frobenius norm.
pub(crate) fn unit_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let h = (&z + z.adjoint()) * C64::from(0.5);
    let norm = h.norm();
    if norm > 0.0 {
        h / C64::from(norm)
    } else {
        h
    }
}

/// Deviation `max |(U†U − I)_ij|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.ncols();
    let g = u.adjoint() * u - DMatrix::<C64>::identity(n, n);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
