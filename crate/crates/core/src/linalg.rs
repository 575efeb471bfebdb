//! Dense complex helpers shared by every module: Hermitian eigendecomposition
//! with sorted output, PSD roots, operator norms and LU inversion.

use nalgebra::{DMatrix, SymmetricEigen, LU, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `E_{ij}` of size rows×cols, 0-based.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    m[(i, j)] = ONE;
    m
}

/// Largest singular value. Zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * r(0.5)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending. The input is
/// symmetrized first; callers decide whether the asymmetry was acceptable.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `values`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "Hermitian eigen needs a square matrix");
        let eig = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// V f(Λ) V* restricted to the eigenvalues selected by `keep`.
    pub fn apply(&self, f: impl Fn(f64) -> Option<f64>) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam).unwrap_or(0.0);
            scaled.column_mut(k).scale_mut(w);
        }
        let out = &scaled * self.vectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        out
    }
}

/// Square root of a Hermitian PSD matrix; eigenvalues at or below `cutoff` are dropped.
pub fn psd_sqrt(m: &CMat, cutoff: f64) -> CMat {
    HermitianEigen::new(m).apply(|l| (l > cutoff).then(|| l.sqrt()))
}

/// exp(H) for Hermitian H.
pub fn hermitian_exp(h: &CMat) -> CMat {
    HermitianEigen::new(h).apply(|l| Some(l.exp()))
}

pub fn lu_inverse(m: &CMat) -> Option<CMat> {
    let inv = LU::new(m.clone()).try_inverse()?;
    inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(inv)
}

/// Eigenvalues of a general square complex matrix (Schur form diagonal).
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

pub fn spectral_radius(m: &CMat) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthonormal basis of the numerical nullspace (columns), via SVD of `m`.
/// Singular values at most `rel_tol * sigma_max` count as zero.
pub fn nullspace(m: &CMat, rel_tol: f64) -> CMat {
    let cols = m.ncols();
    // Pad to a square-or-tall matrix so the SVD produces all right singular vectors.
    let tall = if m.nrows() < cols {
        let mut padded = CMat::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = SVD::new(tall, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let basis: Vec<_> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= rel_tol * smax.max(f64::MIN_POSITIVE))
        .map(|k| v_t.row(k).adjoint())
        .collect();
    if basis.is_empty() {
        return CMat::zeros(cols, 0);
    }
    CMat::from_columns(&basis)
}

/// Checks every entry is finite; returns the first offending position.
pub fn first_non_finite(m: &CMat) -> Option<(usize, usize)> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[r(2.0), c(0.0, 1.0), ZERO, c(0.0, -1.0), r(2.0), ZERO, ZERO, ZERO, r(-1.0)],
        );
        let e = HermitianEigen::new(&m);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!((e.min() + 1.0).abs() < 1e-12);
        assert!((e.max() - 3.0).abs() < 1e-12);
        assert!(max_abs_diff(&e.apply(Some), &m) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = CMat::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let p = &a * a.adjoint();
        let s = psd_sqrt(&p, 0.0);
        assert!(max_abs_diff(&(&s * &s), &p) < 1e-9);
    }

    #[test]
    fn nullspace_of_rank_one() {
        let v = CMat::from_column_slice(3, 1, &[ONE, r(2.0), r(-1.0)]);
        let m = v.adjoint();
        let ns = nullspace(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(op_norm(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn schur_eigenvalues_of_complex_diagonalizable() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), ONE, ZERO, r(0.5)]);
        let mut mods: Vec<f64> = eigenvalues(&m).iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        assert!((mods[0] - 0.5).abs() < 1e-12 && (mods[1] - 1.0).abs() < 1e-12);
    }
}
