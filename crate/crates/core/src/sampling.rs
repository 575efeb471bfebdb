//! Seeded random matrices and tuples used by the search harness, the
//! self-verification suites and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, r, CMat};
use crate::pick::RowTuple;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sub-stream `index` of `master`; independent of evaluation order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut g = ChaCha8Rng::seed_from_u64(master);
    g.set_stream(index);
    g.random()
}

/// Standard complex Gaussian entries (real and imaginary variance 1/2 each).
pub fn gaussian<R: Rng + ?Sized>(g: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = g.sample(StandardNormal);
        let im: f64 = g.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// i.i.d. Gaussian tuple rescaled to row norm exactly `norm`.
pub fn row_contraction<R: Rng + ?Sized>(g: &mut R, n: usize, d: usize, norm: f64) -> RowTuple {
    let raw = RowTuple::new((0..d).map(|_| gaussian(g, n, n)).collect()).expect("uniform sizes");
    let scale = norm / raw.row_norm();
    raw.scaled(scale)
}

/// Haar-distributed unitary from the QR factor of a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(g: &mut R, n: usize) -> CMat {
    let (mut q, rr) = gaussian(g, n, n).qr().unpack();
    for k in 0..n {
        let d = rr[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { r(1.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}
