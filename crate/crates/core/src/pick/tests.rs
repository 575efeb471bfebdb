use super::*;
use crate::linalg::{c, matrix_unit, max_abs_diff, r, C64};
use crate::sampling::{gaussian, rng, row_contraction, unitary, SeededRng};
use crate::tensor::choi_matrix;

fn scalar(x: C64) -> RowTuple {
    RowTuple::new(vec![CMat::from_element(1, 1, x)]).unwrap()
}

fn diag(entries: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(entries.len(), entries.iter().map(|&e| r(e))))
}

fn bundle(x: &RowTuple) -> PickBundle {
    pick_matrix(x, Tolerances::default()).unwrap()
}

/// Random element of alg_X: a degree ≤ 2 polynomial in the tuple.
fn alg_element(g: &mut SeededRng, x: &RowTuple) -> CMat {
    let coeffs = gaussian(g, 1, 1 + x.d() + x.d() * x.d());
    let mut out = identity(x.n()) * coeffs[0];
    let mut k = 1;
    for a in x.mats() {
        out += a * coeffs[k];
        k += 1;
    }
    for a in x.mats() {
        for b in x.mats() {
            out += a * b * coeffs[k];
            k += 1;
        }
    }
    out
}

/// `Σ_k Φ_X^k(H)` with `Φ_X(H) = Σ X_i H X_i^*`, summed by plain iteration.
fn resolvent_of_h(x: &RowTuple, h: &CMat, iters: usize) -> CMat {
    let mut term = h.clone();
    let mut sum = h.clone();
    for _ in 0..iters {
        term = x.mats().iter().fold(CMat::zeros(x.n(), x.n()), |acc, a| acc + a * &term * a.adjoint());
        sum += &term;
    }
    sum
}

#[test]
fn scalar_geometric_series() {
    let b = bundle(&scalar(r(0.5)));
    assert!((b.p()[(0, 0)] - r(4.0 / 3.0)).norm() < 1e-14);
    assert_eq!(b.rank(), 1);
}

#[test]
fn choi_point_closed_form() {
    // X_ij = E_ij/√n scaled by t: P = C_n + t²/(n(1−t²)) I
    let (n, t) = (2usize, 0.8);
    let mats = (0..n * n).map(|k| matrix_unit(n, n, k / n, k % n) * r(t / (n as f64).sqrt())).collect();
    let b = bundle(&RowTuple::new(mats).unwrap());
    let expected = choi_matrix(n) + identity(n * n) * r(8.0 / 9.0);
    assert!(max_abs_diff(b.p(), &expected) < 1e-12);
}

#[test]
fn refuses_boundary_and_beyond() {
    assert!(matches!(pick_matrix(&scalar(r(1.0)), Tolerances::default()), Err(Error::NotRowContraction { .. })));
    assert!(matches!(pick_matrix(&scalar(r(1.5)), Tolerances::default()), Err(Error::NotRowContraction { .. })));
}

#[test]
fn bundle_invariants() {
    let mut g = rng(21);
    let b = bundle(&row_contraction(&mut g, 3, 2, 0.7));
    let scale = op_norm(b.p());
    assert!(max_abs_diff(&(b.sqrt_p() * b.sqrt_p()), b.p()) < 1e-10 * scale);
    let q = b.proj_q();
    assert!(max_abs_diff(&(b.pinv_sqrt_p() * b.sqrt_p()), q) < 1e-10);
    assert!(max_abs_diff(&(b.sqrt_p() * b.pinv_sqrt_p()), q) < 1e-10);
    assert!(max_abs_diff(&(q * q), q) < 1e-10);
    assert!(max_abs_diff(q, &q.adjoint()) < 1e-12);
}

#[test]
fn series_examples() {
    let x = scalar(r(0.5));
    assert_eq!(transfer_series(&x, 0), identity(1));
    assert!((transfer_series(&x, 3)[(0, 0)] - r(85.0 / 64.0)).norm() < 1e-15);
    let mut g = rng(22);
    let y = row_contraction(&mut g, 3, 2, 0.5);
    assert_eq!(transfer_series(&y, 0), identity(9));
    assert_eq!(pick_series(&y, 0), choi_matrix(3));
}

#[test]
fn series_brackets_closed_form() {
    let mut g = rng(23);
    for _ in 0..5 {
        let x = row_contraction(&mut g, 3, 2, 0.8);
        let b = bundle(&x);
        let l = 12;
        let s = pick_series(&x, l);
        assert!(op_norm(&(b.p() - &s)) <= series_tail_bound(&x, l));
        assert!(max_abs_diff(&psi(&transfer_series(&x, l)).unwrap(), &s) < 1e-12);
    }
}

#[test]
fn p_minus_sum_is_choi() {
    let mut g = rng(24);
    for (n, d) in [(2, 1), (3, 2), (4, 3)] {
        let x = row_contraction(&mut g, n, d, 0.85);
        let b = bundle(&x);
        let id = identity(n);
        let mut lhs = b.p().clone();
        for a in x.mats() {
            lhs -= kron(&a.transpose(), &id) * b.p() * kron(&a.map(|z| z.conj()), &id);
        }
        assert!(max_abs_diff(&lhs, &choi_matrix(n)) < 1e-9 * op_norm(b.p()));
    }
}

#[test]
fn diagonal_node_algebra() {
    // alg of diag(0, 1/2) is span{I, X} = the diagonal matrices
    let x = RowTuple::new(vec![diag(&[0.0, 0.5])]).unwrap();
    let b = bundle(&x);
    assert_eq!(b.rank(), 2);
    let tol = Tolerances::default();
    assert!(alg_member(&matrix_unit(2, 2, 0, 0), &b, tol).unwrap().member);
    assert!(alg_member(&identity(2), &b, tol).unwrap().member);
    let off = alg_member(&matrix_unit(2, 2, 0, 1), &b, tol).unwrap();
    assert!(!off.member && (off.residual - 1.0).abs() < 1e-12);
    let y = BlockTarget::single(matrix_unit(2, 2, 0, 1)).unwrap();
    assert!(matches!(feasible(&b, &y, tol), Err(Error::NotInAlgebra(v)) if v.len() == 1));
}

#[test]
fn shift_dft_algebra_is_everything() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let shift = CMat::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)]);
    let x = RowTuple::new(vec![shift * r(s), diag(&[-1.0, 1.0]) * r(s)]).unwrap().scaled(0.9);
    let b = bundle(&x);
    assert_eq!(b.rank(), 4);
    let mut g = rng(25);
    assert!(alg_member(&gaussian(&mut g, 2, 2), &b, Tolerances::default()).unwrap().member);
}

#[test]
fn scalar_criterion_and_feasibility() {
    let tol = Tolerances::default();
    let b0 = bundle(&scalar(r(0.0)));
    let f = feasible(&b0, &BlockTarget::single(CMat::from_element(1, 1, r(0.9))).unwrap(), tol).unwrap();
    assert!(f.feasible && (f.margin - 0.19).abs() < 1e-12);
    let f = feasible(&b0, &BlockTarget::single(CMat::from_element(1, 1, r(1.1))).unwrap(), tol).unwrap();
    assert!(!f.feasible && (f.margin + 0.21).abs() < 1e-12);

    let (x, y) = (c(0.3, -0.2), c(-0.5, 0.4));
    let k = criterion_matrix(&bundle(&scalar(x)), &BlockTarget::single(CMat::from_element(1, 1, y)).unwrap()).unwrap();
    assert!((k[(0, 0)].re - (1.0 - y.norm_sqr()) / (1.0 - x.norm_sqr())).abs() < 1e-14);
}

#[test]
fn two_point_direct_sum_is_singular_psd() {
    let x = RowTuple::new(vec![diag(&[0.0, 0.5])]).unwrap();
    let b = bundle(&x);
    let y = BlockTarget::single(diag(&[0.0, 0.5])).unwrap();
    let f = feasible(&b, &y, Tolerances::default()).unwrap();
    assert!(f.feasible && f.margin.abs() < 1e-12);
    assert!((np_norm(&b, &y).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn criterion_matches_choi_of_phi() {
    // K = Σ E_ij ⊗ Φ(E_ij), Φ(H) = S(H)⊗I_s − Ŷ (S(H)⊗I_t) Ŷ^*, S = Σ_w X^w · X^w*
    let mut g = rng(26);
    for (s, t) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let x = row_contraction(&mut g, 2, 2, 0.6);
        let b = bundle(&x);
        let blocks = (0..s).map(|_| (0..t).map(|_| alg_element(&mut g, &x)).collect()).collect();
        let y = BlockTarget::new(blocks).unwrap();
        let yh = y.space_first();
        let n = 2;
        let mut oracle = CMat::zeros(n * n * s, n * n * s);
        for i in 0..n {
            for j in 0..n {
                let sh = resolvent_of_h(&x, &matrix_unit(n, n, i, j), 400);
                let phi = kron(&sh, &identity(s)) - &yh * kron(&sh, &identity(t)) * yh.adjoint();
                oracle += kron(&matrix_unit(n, n, i, j), &phi);
            }
        }
        let k = criterion_matrix(&b, &y).unwrap();
        assert!(max_abs_diff(&k, &oracle) < 1e-9 * op_norm(&oracle).max(1.0), "shape ({s},{t})");
    }
}

#[test]
fn conjugated_identity_is_projection() {
    let x = RowTuple::new(vec![diag(&[0.0, 0.5])]).unwrap();
    let b = bundle(&x);
    let py = conjugated_target(&b, &BlockTarget::single(identity(2)).unwrap()).unwrap();
    assert!(max_abs_diff(&py, b.proj_q()) < 1e-12);
    let b0 = bundle(&scalar(r(0.0)));
    let y = c(0.2, 0.7);
    assert!((np_norm(&b0, &BlockTarget::single(CMat::from_element(1, 1, y)).unwrap()).unwrap() - y.norm()).abs() < 1e-14);
}

#[test]
fn feasibility_norm_duality() {
    let mut g = rng(27);
    let tol = Tolerances::default();
    for trial in 0..6 {
        let x = row_contraction(&mut g, 2, 2, 0.9);
        let b = bundle(&x);
        let y = BlockTarget::row(vec![alg_element(&mut g, &x), alg_element(&mut g, &x)]).unwrap();
        let np = np_norm(&b, &y).unwrap();
        assert!(np >= y.norm() - 1e-8, "trial {trial}");
        for k in 1..40 {
            let cc = np * (0.5 + k as f64 / 26.0);
            if (cc / np - 1.0).abs() < 1e-6 {
                continue;
            }
            let f = feasible(&b, &y.scaled(1.0 / cc), tol).unwrap();
            assert_eq!(f.feasible, np <= cc * (1.0 + 1e-7), "trial {trial} c {cc} np {np}");
        }
    }
}

#[test]
fn unitary_invariance() {
    let mut g = rng(28);
    let x = row_contraction(&mut g, 3, 2, 0.8);
    let y = BlockTarget::column(vec![alg_element(&mut g, &x), alg_element(&mut g, &x)]).unwrap();
    let u = unitary(&mut g, 3);
    let xu = x.conjugated(&u).unwrap();
    let yu = y.map_blocks(|blk| u.adjoint() * blk * &u).unwrap();
    let a = np_norm(&bundle(&x), &y).unwrap();
    let b = np_norm(&bundle(&xu), &yu).unwrap();
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn preconditioning_by_scalars_and_commutant() {
    let mut g = rng(29);
    let x = row_contraction(&mut g, 2, 2, 0.8);
    let b = bundle(&x);
    let y = BlockTarget::single(alg_element(&mut g, &x)).unwrap();
    let base = np_norm(&b, &y).unwrap();
    let n2 = 4;
    assert_eq!(np_norm_preconditioned(&b, &y, &identity(n2)).unwrap(), base);
    assert!((np_norm_preconditioned(&b, &y, &(identity(n2) * r(2.0))).unwrap() - base).abs() < 1e-8);
    // A ⊗ I commutes with I ⊗ X_i
    let a = gaussian(&mut g, 2, 2);
    let d = kron(&(&a * a.adjoint() + identity(2)), &identity(2));
    assert!((np_norm_preconditioned(&b, &y, &d).unwrap() - base).abs() < 1e-8);
    assert!(matches!(np_norm_preconditioned(&b, &y, &kron(&identity(2), &a)), Err(Error::NotInCommutant { .. })));
    assert!(matches!(np_norm_preconditioned(&b, &y, &CMat::zeros(4, 4)), Err(Error::NotInvertible)));
}
