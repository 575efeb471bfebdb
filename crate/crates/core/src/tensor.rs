//! Exact tensor primitives: column stacking, Kronecker products, the ψ
//! involution on `M_{n²}`, Choi matrices, commutation matrices and general
//! leg permutations.
//!
//! Indexing is 0-based. With column stacking, `vec(A)[j*n + i] = A[i, j]`, and
//! Kronecker products use `(A⊗B)[i*r + k, j*s + l] = A[i, j] * B[k, l]`. A
//! vector in `C^{n1}⊗…⊗C^{nk}` is therefore indexed row-major in its legs, the
//! first leg most significant.

use crate::error::{Error, Result};
use crate::linalg::{CMat, ONE};

/// Column stacking of an n×m matrix into an nm×1 column.
pub fn vec(a: &CMat) -> CMat {
    // nalgebra stores column-major, so this is a storage reinterpretation.
    CMat::from_column_slice(a.len(), 1, a.as_slice())
}

/// Inverse of [`vec`] for square matrices.
pub fn unvec(v: &CMat, n: usize) -> Result<CMat> {
    if v.ncols() != 1 || v.nrows() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "unvec expects an {}x1 column, got {}x{}",
            n * n,
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(CMat::from_column_slice(n, n, v.as_slice()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Kronecker product of several factors, left to right.
pub fn kron_all(factors: &[&CMat]) -> CMat {
    let mut out = CMat::from_element(1, 1, ONE);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Integer square root for matrix sides that must be perfect squares.
pub fn exact_sqrt(side: usize) -> Option<usize> {
    let n = (side as f64).sqrt().round() as usize;
    (n * n == side).then_some(n)
}

/// The ψ involution: `[E_ij ⊗ E_kl]^ψ = E_lj ⊗ E_ki`, extended linearly.
///
/// Pure entry permutation: `out[(l,k), (j,i)] = a[(i,k), (j,l)]`.
pub fn psi(a: &CMat) -> Result<CMat> {
    let side = a.nrows();
    if a.ncols() != side {
        return Err(Error::DimensionMismatch(format!(
            "psi expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = exact_sqrt(side).ok_or(Error::NotPerfectSquare(side))?;
    let mut out = CMat::zeros(side, side);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out[(l * n + k, j * n + i)] = a[(i * n + k, j * n + l)];
                }
            }
        }
    }
    Ok(out)
}

/// `C_n = Σ_ij E_ij ⊗ E_ij`.
pub fn choi_matrix(n: usize) -> CMat {
    let mut out = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            out[(i * n + i, j * n + j)] = ONE;
        }
    }
    out
}

/// Permutation matrix `Q_{n,s}` with `Q (U⊗V) Qᵀ = V⊗U` for `U ∈ M_n`, `V ∈ M_s`.
pub fn commutation_matrix(n: usize, s: usize) -> CMat {
    let mut q = CMat::zeros(n * s, n * s);
    for a in 0..n {
        for b in 0..s {
            q[(b * n + a, a * s + b)] = ONE;
        }
    }
    q
}

/// Tensor-factor dimensions of one side (rows or columns) of a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegShape {
    pub dims: Vec<usize>,
}

impl LegShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("leg dimensions must be positive".into()));
        }
        Ok(Self { dims })
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn legs(&self) -> usize {
        self.dims.len()
    }

    /// Index map: position in the original layout → position after permuting
    /// legs so that output leg `p` is input leg `perm[p]`.
    fn permuted_positions(&self, perm: &[usize]) -> Vec<usize> {
        let k = self.legs();
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut out_strides = vec![1usize; k];
        for p in (0..k.saturating_sub(1)).rev() {
            out_strides[p] = out_strides[p + 1] * out_dims[p + 1];
        }
        // stride, in the output, of each input leg
        let mut stride_of_input = vec![0usize; k];
        for (p, &src) in perm.iter().enumerate() {
            stride_of_input[src] = out_strides[p];
        }
        let mut positions = Vec::with_capacity(self.total());
        let mut digits = vec![0usize; k];
        for _ in 0..self.total() {
            positions.push(digits.iter().zip(&stride_of_input).map(|(d, s)| d * s).sum());
            for leg in (0..k).rev() {
                digits[leg] += 1;
                if digits[leg] < self.dims[leg] {
                    break;
                }
                digits[leg] = 0;
            }
        }
        positions
    }
}

fn check_perm(perm: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Reorders the tensor legs of both sides of `a`: output leg `p` is input leg
/// `perm[p]`. Equivalent to conjugation by the matching permutation matrices.
pub fn leg_permute(a: &CMat, rows: &LegShape, cols: &LegShape, perm: &[usize]) -> Result<CMat> {
    if rows.total() != a.nrows() || cols.total() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "leg shapes {:?} x {:?} do not match a {}x{} matrix",
            rows.dims,
            cols.dims,
            a.nrows(),
            a.ncols()
        )));
    }
    if rows.legs() != cols.legs() {
        return Err(Error::DimensionMismatch("row and column shapes need the same leg count".into()));
    }
    check_perm(perm, rows.legs())?;
    let rpos = rows.permuted_positions(perm);
    let cpos = cols.permuted_positions(perm);
    let mut out = CMat::zeros(a.nrows(), a.ncols());
    for (j, &cj) in cpos.iter().enumerate() {
        for (i, &ri) in rpos.iter().enumerate() {
            out[(ri, cj)] = a[(i, j)];
        }
    }
    Ok(out)
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (p, &src) in perm.iter().enumerate() {
        inv[src] = p;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, matrix_unit, max_abs_diff, r};
    use crate::sampling::{gaussian, rng};

    #[test]
    fn vec_stacks_columns() {
        let a = CMat::from_row_slice(2, 2, &[r(1.0), r(2.0), r(3.0), r(4.0)]);
        let v = vec(&a);
        let expected: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(expected, vec![1.0, 3.0, 2.0, 4.0]);
        let e12 = vec(&matrix_unit(2, 2, 0, 1));
        assert_eq!(e12[(2, 0)], ONE);
        assert_eq!(e12.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn unvec_inverts_vec() {
        let v = CMat::from_column_slice(4, 1, &[r(1.0), r(3.0), r(2.0), r(4.0)]);
        let a = unvec(&v, 2).unwrap();
        assert_eq!(a, CMat::from_row_slice(2, 2, &[r(1.0), r(2.0), r(3.0), r(4.0)]));
        assert_eq!(unvec(&CMat::zeros(9, 1), 3).unwrap(), CMat::zeros(3, 3));
        let mut g = rng(11);
        let b = gaussian(&mut g, 5, 5);
        assert_eq!(unvec(&vec(&b), 5).unwrap(), b);
        assert!(matches!(unvec(&CMat::zeros(5, 1), 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn vec_identity_classical() {
        let mut g = rng(1);
        let (a, x, b) = (gaussian(&mut g, 3, 3), gaussian(&mut g, 3, 3), gaussian(&mut g, 3, 3));
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn kron_units_and_identity() {
        let k = kron(&matrix_unit(2, 2, 0, 0), &matrix_unit(2, 2, 1, 1));
        assert_eq!(k, matrix_unit(4, 4, 1, 1));
        assert_eq!(kron(&identity(2), &identity(3)), identity(6));
        let mut g = rng(2);
        let (a, b, c, d) = (gaussian(&mut g, 2, 2), gaussian(&mut g, 3, 3), gaussian(&mut g, 2, 2), gaussian(&mut g, 3, 3));
        let lhs = kron(&a, &b) * kron(&c, &d);
        assert!(max_abs_diff(&lhs, &kron(&(&a * &c), &(&b * &d))) < 1e-12);
    }

    #[test]
    fn psi_on_matrix_units() {
        let e = |i, j| matrix_unit(2, 2, i, j);
        // E_11 ⊗ E_22 → E_21 ⊗ E_21 (1-based)
        let out = psi(&kron(&e(0, 0), &e(1, 1))).unwrap();
        assert_eq!(out, kron(&e(1, 0), &e(1, 0)));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let got = psi(&kron(&e(i, j), &e(k, l))).unwrap();
                        assert_eq!(got, kron(&e(l, j), &e(k, i)));
                    }
                }
            }
        }
    }

    #[test]
    fn psi_identity_is_choi() {
        for n in 1..=5 {
            assert_eq!(psi(&identity(n * n)).unwrap(), choi_matrix(n));
        }
    }

    #[test]
    fn psi_rank_one_kronecker() {
        let mut g = rng(3);
        let (c, d) = (gaussian(&mut g, 3, 3), gaussian(&mut g, 3, 3));
        let lhs = psi(&kron(&c, &d)).unwrap();
        let rhs = vec(&d) * vec(&c).transpose();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn psi_rejects_non_square_side() {
        assert!(matches!(psi(&CMat::zeros(3, 3)), Err(Error::NotPerfectSquare(3))));
        assert!(matches!(psi(&CMat::zeros(4, 2)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn choi_small_cases() {
        assert_eq!(choi_matrix(1), identity(1));
        let c2 = choi_matrix(2);
        let ones: Vec<(usize, usize)> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| c2[(i, j)] == ONE)
            .collect();
        assert_eq!(ones, vec![(0, 0), (0, 3), (3, 0), (3, 3)]);
        let c3 = choi_matrix(3);
        assert_eq!(c3.trace(), r(3.0));
        assert_eq!(c3, c3.transpose());
    }

    #[test]
    fn commutation_swaps_factors() {
        assert_eq!(commutation_matrix(1, 4), identity(4));
        let mut g = rng(4);
        let (u, v) = (gaussian(&mut g, 2, 2), gaussian(&mut g, 3, 3));
        let q = commutation_matrix(2, 3);
        assert!(max_abs_diff(&(&q * kron(&u, &v) * q.transpose()), &kron(&v, &u)) < 1e-12);
        assert!(max_abs_diff(&(&q * q.transpose()), &identity(6)) == 0.0);
        // rectangular form: Q_{n,t} (W⊗Z) Q_{m,s}ᵀ = Z⊗W
        let (w, z) = (gaussian(&mut g, 2, 4), gaussian(&mut g, 3, 5));
        let lhs = commutation_matrix(2, 3) * kron(&w, &z) * commutation_matrix(4, 5).transpose();
        assert!(max_abs_diff(&lhs, &kron(&z, &w)) < 1e-12);
    }

    #[test]
    fn leg_permute_matches_commutation() {
        let mut g = rng(5);
        let a = gaussian(&mut g, 6, 6);
        let shape = LegShape::new(vec![2, 3]).unwrap();
        let q = commutation_matrix(2, 3);
        let via_perm = leg_permute(&a, &shape, &shape, &[1, 0]).unwrap();
        assert!(max_abs_diff(&via_perm, &(&q * &a * q.transpose())) < 1e-15);
        assert_eq!(leg_permute(&a, &shape, &shape, &[0, 1]).unwrap(), a);
        let (u, v) = (gaussian(&mut g, 2, 2), gaussian(&mut g, 3, 3));
        let swapped = leg_permute(&kron(&u, &v), &shape, &shape, &[1, 0]).unwrap();
        assert!(max_abs_diff(&swapped, &kron(&v, &u)) < 1e-15);
    }

    #[test]
    fn leg_permute_three_legs_round_trip() {
        let mut g = rng(6);
        let a = gaussian(&mut g, 12, 12);
        let shape = LegShape::new(vec![2, 3, 2]).unwrap();
        let perm = [2, 0, 1];
        let out = leg_permute(&a, &shape, &shape, &perm).unwrap();
        let permuted_shape = LegShape::new(perm.iter().map(|&p| shape.dims[p]).collect()).unwrap();
        let back = leg_permute(&out, &permuted_shape, &permuted_shape, &inverse_permutation(&perm)).unwrap();
        assert_eq!(back, a);
        let (x, y, z) = (gaussian(&mut g, 2, 2), gaussian(&mut g, 3, 3), gaussian(&mut g, 2, 2));
        let k = kron_all(&[&x, &y, &z]);
        let moved = leg_permute(&k, &shape, &shape, &perm).unwrap();
        assert!(max_abs_diff(&moved, &kron_all(&[&z, &x, &y])) < 1e-13);
    }

    #[test]
    fn leg_permute_errors() {
        let a = CMat::zeros(6, 6);
        let bad = LegShape::new(vec![2, 2]).unwrap();
        let good = LegShape::new(vec![2, 3]).unwrap();
        assert!(matches!(leg_permute(&a, &bad, &good, &[1, 0]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(leg_permute(&a, &good, &good, &[0, 0]), Err(Error::InvalidPermutation(_))));
    }
}
