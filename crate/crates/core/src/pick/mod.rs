//! Elementary Pick matrices, the single-matrix feasibility criterion,
//! membership in `alg_X`, and the NP norm.
//!
//! Leg convention: every n²s-dimensional object lives on
//! `choi ⊗ space ⊗ block`. Targets are stored in the usual block layout
//! `Σ E_ab ⊗ Y_ab` and reshuffled to `Ŷ = Σ Y_ab ⊗ E_ab` before use.

mod target;
mod tuple;

pub use target::BlockTarget;
pub use tuple::RowTuple;

use serde::{Deserialize, Serialize};

use crate::error::{Error, OffendingBlock, Result};
use crate::linalg::{frobenius, hermitian_part, identity, lu_inverse, op_norm, CMat, HermitianEigen};
use crate::ncpoly::WordEvaluator;
use crate::tensor::{kron, psi, vec};

/// Row norms at or above this are refused by [`pick_matrix`].
pub const BOUNDARY_GUARD: f64 = 1e-12;

const ASYMMETRY_TOL: f64 = 1e-10;
const COMMUTANT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    /// Relative eigenvalue cutoff for the numerical rank of P_X.
    pub rank_tol: f64,
    /// Relative negative-eigenvalue slack for PSD decisions.
    pub psd_tol: f64,
    /// Absolute truncation error allowed for series oracles.
    pub series_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_tol: 1e-10, psd_tol: 1e-9, series_tail: 1e-8 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.rank_tol, self.psd_tol, self.series_tail].iter().all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("tolerances must be positive".into()))
        }
    }
}

/// P_X with its square root, the pseudoinverse of the root and the range
/// projection Q_X. Immutable once built.
#[derive(Debug, Clone)]
pub struct PickBundle {
    x: RowTuple,
    p: CMat,
    sqrt_p: CMat,
    pinv_sqrt_p: CMat,
    proj_q: CMat,
    rank: usize,
    eigen: HermitianEigen,
    tol: Tolerances,
}

impl PickBundle {
    /// Builds a bundle from an already computed Pick matrix (for example a
    /// closed form). `p` is symmetrized; asymmetry and negativity are errors.
    pub fn from_matrix(x: &RowTuple, p: CMat, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        let n2 = x.n() * x.n();
        if p.shape() != (n2, n2) {
            return Err(Error::DimensionMismatch(format!("Pick matrix must be {n2}x{n2}")));
        }
        let scale = frobenius(&p).max(f64::MIN_POSITIVE);
        let relative = frobenius(&(&p - p.adjoint())) / scale;
        if relative > ASYMMETRY_TOL {
            return Err(Error::NotHermitian { relative });
        }
        let eigen = HermitianEigen::new(&p);
        let lam_max = eigen.max().max(0.0);
        let bound = tol.psd_tol * lam_max;
        if eigen.min() < -bound {
            return Err(Error::NotPsd { min_eigenvalue: eigen.min(), bound: -bound });
        }
        let cutoff = tol.rank_tol * lam_max;
        let keep = |l: f64| l > cutoff;
        let rank = eigen.values.iter().filter(|&&l| keep(l)).count();
        let sqrt_p = eigen.apply(|l| keep(l).then(|| l.sqrt()));
        let pinv_sqrt_p = eigen.apply(|l| keep(l).then(|| 1.0 / l.sqrt()));
        let proj_q = eigen.apply(|l| keep(l).then_some(1.0));
        let p = hermitian_part(&p);
        Ok(Self { x: x.clone(), p, sqrt_p, pinv_sqrt_p, proj_q, rank, eigen, tol })
    }

    pub fn tuple(&self) -> &RowTuple {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn p(&self) -> &CMat {
        &self.p
    }

    pub fn sqrt_p(&self) -> &CMat {
        &self.sqrt_p
    }

    pub fn pinv_sqrt_p(&self) -> &CMat {
        &self.pinv_sqrt_p
    }

    pub fn proj_q(&self) -> &CMat {
        &self.proj_q
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.p.nrows()
    }

    /// Eigenpairs of the symmetrized P, eigenvalues ascending.
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// `√(λ_max / λ_min)` over all of P (infinite when P is singular).
    pub fn condition(&self) -> f64 {
        if !self.is_full_rank() {
            return f64::INFINITY;
        }
        (self.eigen.max() / self.eigen.min()).sqrt()
    }
}

/// `P_X = ψ((I − T)^{-1})` by LU, with T the transfer matrix.
pub fn pick_matrix(x: &RowTuple, tol: Tolerances) -> Result<PickBundle> {
    let row_norm = x.row_norm();
    if row_norm.is_nan() || row_norm >= 1.0 - BOUNDARY_GUARD {
        return Err(Error::NotRowContraction { row_norm });
    }
    let resolvent = lu_inverse(&(identity(x.n() * x.n()) - x.transfer())).ok_or(Error::SingularResolvent)?;
    PickBundle::from_matrix(x, psi(&resolvent)?, tol)
}

/// Truncated word-sum form `Σ_{|w|≤L} vec(X^w) vec(X^w)^*`: no inverse and no ψ.
pub fn pick_series(x: &RowTuple, max_len: usize) -> CMat {
    let n2 = x.n() * x.n();
    let mut out = CMat::zeros(n2, n2);
    for (_, xw) in WordEvaluator::new(x, max_len).iter() {
        let v = vec(xw);
        out += &v * v.adjoint();
    }
    out
}

/// Truncated resolvent series `Σ_{|w|≤L} conj(X^w) ⊗ X^w`, whose ψ-image is
/// [`pick_series`].
pub fn transfer_series(x: &RowTuple, max_len: usize) -> CMat {
    let n2 = x.n() * x.n();
    let mut out = CMat::zeros(n2, n2);
    for (_, xw) in WordEvaluator::new(x, max_len).iter() {
        out += kron(&xw.map(|z| z.conj()), xw);
    }
    out
}

/// Bound on `‖P_X − pick_series(X, L)‖`: `n r^{L+1}/(1−r)`, r = row_norm².
pub fn series_tail_bound(x: &RowTuple, max_len: usize) -> f64 {
    let r = x.row_norm().powi(2);
    x.n() as f64 * r.powi(max_len as i32 + 1) / (1.0 - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `‖(I − Q_X) vec Z‖`.
    pub residual: f64,
}

/// `Z ∈ alg_X` iff `vec Z ∈ ran P_X`, decided with the relative `rank_tol`.
pub fn alg_member(z: &CMat, b: &PickBundle, tol: Tolerances) -> Result<Membership> {
    if z.shape() != (b.n(), b.n()) {
        return Err(Error::DimensionMismatch(format!("matrix must be {0}x{0}", b.n())));
    }
    let v = vec(z);
    let residual = frobenius(&(&v - b.proj_q() * &v));
    Ok(Membership { member: residual <= tol.rank_tol * frobenius(&v), residual })
}

/// Membership residual of every block; `Err(NotInAlgebra)` lists failures.
pub fn check_membership(b: &PickBundle, y: &BlockTarget) -> Result<Vec<OffendingBlock>> {
    check_target_size(b, y)?;
    let mut all = Vec::with_capacity(y.s() * y.t());
    let mut bad = Vec::new();
    for (row, col, blk) in y.iter_blocks() {
        let m = alg_member(blk, b, b.tol)?;
        let rec = OffendingBlock { row, col, residual: m.residual };
        if !m.member {
            bad.push(rec.clone());
        }
        all.push(rec);
    }
    if bad.is_empty() {
        Ok(all)
    } else {
        Err(Error::NotInAlgebra(bad))
    }
}

fn check_target_size(b: &PickBundle, y: &BlockTarget) -> Result<()> {
    if y.n() != b.n() {
        return Err(Error::DimensionMismatch(format!("target blocks are {0}x{0}, node is {1}x{1}", y.n(), b.n())));
    }
    Ok(())
}

/// `K = P⊗I_s − (I_n⊗Ŷ)(P⊗I_t)(I_n⊗Ŷ)^*` on choi ⊗ space ⊗ block.
pub fn criterion_matrix(b: &PickBundle, y: &BlockTarget) -> Result<CMat> {
    check_target_size(b, y)?;
    let big_y = kron(&identity(b.n()), &y.space_first());
    let k = kron(b.p(), &identity(y.s())) - &big_y * kron(b.p(), &identity(y.t())) * big_y.adjoint();
    Ok(hermitian_part(&k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Feasibility {
    pub feasible: bool,
    /// `λ_min(K)`.
    pub margin: f64,
    /// Membership residual of every block, row-major over the grid.
    pub alg_residuals: Vec<OffendingBlock>,
}

/// An interpolant of norm ≤ 1 exists iff every block lies in `alg_X` and K ⪰ 0.
pub fn feasible(b: &PickBundle, y: &BlockTarget, tol: Tolerances) -> Result<Feasibility> {
    let alg_residuals = check_membership(b, y)?;
    let eig = HermitianEigen::new(&criterion_matrix(b, y)?);
    let scale = eig.min().abs().max(eig.max().abs()).max(1.0);
    let margin = eig.min();
    Ok(Feasibility { feasible: margin >= -tol.psd_tol * scale, margin, alg_residuals })
}

/// `ᴾYᴾ = (P^{†/2}⊗I_s)(I_n⊗Ŷ)(P^{1/2}⊗I_t)`.
pub fn conjugated_target(b: &PickBundle, y: &BlockTarget) -> Result<CMat> {
    check_membership(b, y)?;
    Ok(sandwich(b.pinv_sqrt_p(), b.sqrt_p(), y))
}

fn sandwich(left: &CMat, right: &CMat, y: &BlockTarget) -> CMat {
    let big_y = kron(&identity(y.n()), &y.space_first());
    kron(left, &identity(y.s())) * big_y * kron(right, &identity(y.t()))
}

/// `‖Y‖_{NP(X)} = ‖ᴾYᴾ‖`.
pub fn np_norm(b: &PickBundle, y: &BlockTarget) -> Result<f64> {
    Ok(op_norm(&conjugated_target(b, y)?))
}

/// `‖D(I⊗X_i) − (I⊗X_i)D‖ / ‖D‖`, maximized over letters.
pub fn commutant_residual(x: &RowTuple, d: &CMat) -> f64 {
    let scale = op_norm(d).max(f64::MIN_POSITIVE);
    x.ampliated().iter().map(|a| op_norm(&(d * a - a * d)) / scale).fold(0.0, f64::max)
}

fn check_preconditioner(b: &PickBundle, d: &CMat) -> Result<()> {
    let n2 = b.n() * b.n();
    if d.shape() != (n2, n2) {
        return Err(Error::DimensionMismatch(format!("preconditioner must be {n2}x{n2}")));
    }
    let sv = nalgebra::SVD::new(d.clone(), false, false).singular_values;
    if sv.iter().any(|v| v.is_nan()) || sv.min() <= 1e-12 * sv.max() {
        return Err(Error::NotInvertible);
    }
    let residual = commutant_residual(b.tuple(), d);
    if residual > COMMUTANT_TOL {
        return Err(Error::NotInCommutant { residual });
    }
    Ok(())
}

/// `Q_D = (D P D^*)^{1/2}` and its pseudoinverse, cut at `rank_tol`.
pub fn preconditioned_roots(b: &PickBundle, d: &CMat) -> (CMat, CMat) {
    let eig = HermitianEigen::new(&(d * b.p() * d.adjoint()));
    let cutoff = b.tol.rank_tol * eig.max().max(0.0);
    (
        eig.apply(|l| (l > cutoff).then(|| l.sqrt())),
        eig.apply(|l| (l > cutoff).then(|| 1.0 / l.sqrt())),
    )
}

/// `‖(Q_D^†⊗I_s)(I_n⊗Ŷ)(Q_D⊗I_t)‖` for D invertible in the commutant of
/// `{I⊗X_i}`; the same number as [`np_norm`], conditioned differently.
pub fn np_norm_preconditioned(b: &PickBundle, y: &BlockTarget, d: &CMat) -> Result<f64> {
    check_membership(b, y)?;
    check_preconditioner(b, d)?;
    if *d == identity(d.nrows()) {
        return np_norm(b, y);
    }
    let (q, q_pinv) = preconditioned_roots(b, d);
    Ok(op_norm(&sandwich(&q_pinv, &q, y)))
}

/// `√(‖M‖ ‖M^†‖)` for PSD M, the pseudoinverse cut at `rel_tol·‖M‖`.
pub fn range_condition(m: &CMat, rel_tol: f64) -> f64 {
    let eig = HermitianEigen::new(m);
    let cutoff = rel_tol * eig.max().max(0.0);
    let smallest = eig.values.iter().copied().filter(|&l| l > cutoff).fold(f64::INFINITY, f64::min);
    if smallest.is_finite() {
        (eig.max() / smallest).sqrt()
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests;
