//! Boomerang matrices, the defect Δ_X, the isometry V_X and the mini-dilation
//! identity `V^*(α(X̃)β(X̃)^* ⊗ I)V = α(X)β(X)^* ⊗ I`.

use crate::error::{Error, Result};
use crate::linalg::{identity, op_norm, psd_sqrt, r, CMat, HermitianEigen};
use crate::ncpoly::{eval_poly, NcPoly};
use crate::pick::{PickBundle, RowTuple};
use crate::tensor::{commutation_matrix, kron, kron_all};

/// Default cap on n: V_X has n⁴ rows.
pub const DEFAULT_SIZE_CAP: usize = 12;
const SWITCH_TOL: f64 = 1e-10;
const ISOMETRY_TOL: f64 = 1e-8;
const DEFECT_TOL: f64 = 1e-10;

/// `B̆ = Σ_ij e_i ⊗ e_j ⊗ E_ij`, an n³×n 0/1 matrix.
pub fn boomerang(n: usize) -> CMat {
    let mut b = CMat::zeros(n * n * n, n);
    for i in 0..n {
        for j in 0..n {
            b[((i * n + j) * n + i, j)] = r(1.0);
        }
    }
    b
}

/// `B̆^T (A ⊗ CD) B̆`, checked against `B̆^T([(C^T⊗I)A(D^T⊗I)] ⊗ I)B̆`.
pub fn boomerang_sandwich(a: &CMat, c: &CMat, d: &CMat) -> Result<CMat> {
    let n = c.nrows();
    if a.shape() != (n * n, n * n) || c.shape() != (n, n) || d.shape() != (n, n) {
        return Err(Error::DimensionMismatch("boomerang sandwich needs A in M_{n²} and C, D in M_n".into()));
    }
    let b = boomerang(n);
    let id = identity(n);
    let lhs = b.transpose() * kron(a, &(c * d)) * &b;
    let inner = kron(&c.transpose(), &id) * a * kron(&d.transpose(), &id);
    let rhs = b.transpose() * kron(&inner, &id) * &b;
    let residual = op_norm(&(&lhs - &rhs)) / op_norm(&lhs).max(1.0);
    if residual > SWITCH_TOL {
        return Err(Error::IdentityViolation { what: "boomerang switch", residual });
    }
    Ok(lhs)
}

/// `B̆_r = (Σ_ij e_i ⊗ e_j ⊗ I_r ⊗ E_ij) Q_{n,r}`, of size n³r × nr.
pub fn ampliated_boomerang(n: usize, r_: usize) -> CMat {
    let mut sum = CMat::zeros(n * n * r_ * n, r_ * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..r_ {
                // row (e_i ⊗ e_j ⊗ e_k ⊗ e_i), column (e_k ⊗ e_j)
                sum[(((i * n + j) * r_ + k) * n + i, k * n + j)] = r(1.0);
            }
        }
    }
    sum * commutation_matrix(n, r_)
}

#[derive(Debug, Clone)]
pub struct DilationData {
    bundle: PickBundle,
    /// `Δ_X = I − Σ X_i X_i^*`.
    pub delta: CMat,
    pub sqrt_delta: CMat,
    /// `V_X = (P^{1/2} ⊗ I_n ⊗ Δ^{1/2}) B̆_n`, n⁴×n².
    pub v: CMat,
    /// `X̃_i = P^{†/2}(I ⊗ X_i)P^{1/2}`.
    pub xtilde: RowTuple,
    /// `‖V^*V − I‖`.
    pub isometry_residual: f64,
}

impl DilationData {
    pub fn bundle(&self) -> &PickBundle {
        &self.bundle
    }
}

pub fn dilation_data(b: &PickBundle) -> Result<DilationData> {
    dilation_data_capped(b, DEFAULT_SIZE_CAP)
}

pub fn dilation_data_capped(b: &PickBundle, cap: usize) -> Result<DilationData> {
    let x = b.tuple();
    let n = x.n();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let delta = identity(n) - x.row_gram();
    let eig = HermitianEigen::new(&delta);
    if eig.min() < -DEFECT_TOL {
        return Err(Error::NotPsd { min_eigenvalue: eig.min(), bound: -DEFECT_TOL });
    }
    let sqrt_delta = psd_sqrt(&delta, 0.0);
    let v = kron_all(&[b.sqrt_p(), &identity(n), &sqrt_delta]) * ampliated_boomerang(n, n);
    let isometry_residual = op_norm(&(v.adjoint() * &v - identity(n * n)));
    if isometry_residual > ISOMETRY_TOL {
        return Err(Error::IsometryFailure { residual: isometry_residual });
    }
    let xtilde = RowTuple::new(x.ampliated().iter().map(|a| b.pinv_sqrt_p() * a * b.sqrt_p()).collect())?;
    Ok(DilationData { bundle: b.clone(), delta, sqrt_delta, v, xtilde, isometry_residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiniDilationResiduals {
    /// `‖V^*(α(X̃)β(X̃)^* ⊗ I_{n²})V − α(X)β(X)^* ⊗ I_n‖`.
    pub dilation: f64,
    /// `‖Q(I⊗W)P − (I⊗W)P‖ / max(1, ‖(I⊗W)P‖)` for `W = α(X)`.
    pub projection: f64,
    /// `‖α(X̃)Q − P^{†/2}(I⊗α(X))P^{1/2}‖`.
    pub compression: f64,
}

impl MiniDilationResiduals {
    pub fn max(&self) -> f64 {
        self.dilation.max(self.projection).max(self.compression)
    }
}

pub fn mini_dilation_check(data: &DilationData, alpha: &NcPoly, beta: &NcPoly) -> Result<MiniDilationResiduals> {
    let b = &data.bundle;
    let x = b.tuple();
    let n = x.n();
    let ax = eval_poly(alpha, x)?;
    let bx = eval_poly(beta, x)?;
    let axt = eval_poly(alpha, &data.xtilde)?;
    let bxt = eval_poly(beta, &data.xtilde)?;

    let lhs = data.v.adjoint() * kron(&(&axt * bxt.adjoint()), &identity(n * n)) * &data.v;
    let rhs = kron(&(&ax * bx.adjoint()), &identity(n));
    let dilation = op_norm(&(lhs - rhs));

    let iw_p = kron(&identity(n), &ax) * b.p();
    let projection = op_norm(&(b.proj_q() * &iw_p - &iw_p)) / op_norm(&iw_p).max(1.0);

    let compressed = b.pinv_sqrt_p() * kron(&identity(n), &ax) * b.sqrt_p();
    let compression = op_norm(&(axt * b.proj_q() - compressed));
    Ok(MiniDilationResiduals { dilation, projection, compression })
}
