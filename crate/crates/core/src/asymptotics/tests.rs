use super::*;
use crate::linalg::{matrix_unit, max_abs_diff, HermitianEigen};
use crate::pick::np_norm_preconditioned;
use crate::sampling::unitary;
use crate::zoo::{choi_point, weighted_unitaries};

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn weighted_unitaries_have_uniform_perron_vector() {
    let mut g = rng(41);
    let (u1, u2) = (unitary(&mut g, 3), unitary(&mut g, 3));
    let x = weighted_unitaries(&[u1, u2], &[r(0.6), C64::new(0.0, 0.8)]).unwrap();
    let pd = perron(&x).unwrap();
    // Σ|w_i|² U_i^*(I/n)U_i = I/n
    assert!(max_abs_diff(&pd.w, &(identity(3) / r(3.0))) < 1e-10);
    assert!(fixed_point_residual(&x, &pd.w) < 1e-10);
    assert!((pd.normalization_check - r(1.0)).norm() < 1e-12);
}

#[test]
fn shift_dft_spectral_radius_one() {
    let x = shift_dft(3).unwrap();
    let pd = perron(&x).unwrap();
    assert!((pd.spectral_radius - 1.0).abs() < 1e-10);
    assert!(pd.gap_to_next > 0.0);
    assert!(fixed_point_residual(&x, &pd.w) < 1e-9);
    assert!(HermitianEigen::new(&pd.w).min() > 0.0);
}

#[test]
fn choi_point_perron_data() {
    let x = choi_point(2).unwrap();
    let pd = perron(&x).unwrap();
    assert!(max_abs_diff(&pd.w, &(identity(2) * r(0.5))) < 1e-10);
    assert!((pd.gap_to_next - 1.0).abs() < 1e-10);
    assert!(max_abs_diff(&anp_limit_matrix(&pd), &(identity(4) * r(0.5))) < 1e-10);
}

#[test]
fn perron_preconditions() {
    let x = shift_dft(2).unwrap();
    assert!(matches!(perron(&x.scaled(0.9)), Err(Error::NotCoisometry { .. })));
    // commuting diagonal unitaries generate only the diagonal algebra
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![r(1.0), r(-1.0)]));
    let reducible = RowTuple::new(vec![identity(2) * r(s), d1 * r(s)]).unwrap();
    assert!(matches!(perron(&reducible), Err(Error::NotIrreducible { rank: 2, full: 4 })));
}

#[test]
fn g_b_decomposition() {
    let x = shift_dft(3).unwrap();
    let pd = perron(&x).unwrap();
    let t = x.transfer();
    let g = vec(&identity(3)) * vec(&pd.w).adjoint();
    let b = &t - &g;
    assert!(max_abs_diff(&(&t * &g), &g) < 1e-9);
    assert!(max_abs_diff(&(&g * &t), &g) < 1e-9);
    assert!(op_norm(&(&g * &b)) < 1e-9 && op_norm(&(&b * &g)) < 1e-9);
}

#[test]
fn empirical_limit_matrix() {
    let x = shift_dft(3).unwrap();
    let pd = perron(&x).unwrap();
    let limit = anp_limit_matrix(&pd);
    let dist = |t: f64| {
        let b = pick_matrix(&x.scaled(t), tol()).unwrap();
        op_norm(&(b.p() * r((1.0 - t * t) / (t * t)) - &limit))
    };
    let (a, b, c) = (dist(0.9), dist(0.99), dist(0.999));
    assert!(a > b && b > c && c < 0.02, "{a} {b} {c}");
}

#[test]
fn anp_trace_examples() {
    let x = shift_dft(2).unwrap();
    let grid = [0.9, 0.99, 0.999];
    let id = anp_norm(&x, &BlockTarget::single(identity(2)).unwrap(), &grid, tol()).unwrap();
    assert!(id.points.iter().all(|p| (p.np_norm - 1.0).abs() < 1e-9));

    let e12 = anp_norm(&x, &BlockTarget::single(matrix_unit(2, 2, 0, 1)).unwrap(), &grid, tol()).unwrap();
    assert!(e12.points.windows(2).all(|p| p[1].np_norm <= p[0].np_norm + 1e-6));
    assert!(e12.drift < 0.05);

    let row = BlockTarget::row(vec![matrix_unit(2, 2, 0, 0), matrix_unit(2, 2, 0, 1)]).unwrap();
    let tr = anp_norm(&x, &row, &grid, tol()).unwrap();
    assert!((tr.value - 2f64.sqrt()).abs() < 0.1);
    assert!(tr.to_csv().starts_with("t,np_norm,target_norm,ratio\n9.0000000000000002e-1,"));

    assert!(anp_norm(&x, &row, &[0.99, 0.9], tol()).is_err());
    assert!(matches!(anp_norm(&x.scaled(0.5), &row, &grid, tol()), Err(Error::NotCoisometry { .. })));
}

#[test]
fn kappa_bounds() {
    let x = shift_dft(2).unwrap();
    let near = kappa_lower(&x.scaled(0.999), 64, 1, tol()).unwrap();
    assert!(near.kappa_lower >= 1.0 && near.kappa_lower <= 1.1, "{near:?}");
    let far = kappa_lower(&x.scaled(0.5), 64, 1, tol()).unwrap();
    assert!(far.kappa_lower > 1.0);
    assert_eq!(far, kappa_lower(&x.scaled(0.5), 64, 1, tol()).unwrap());
}

#[test]
fn commutant_of_irreducible_is_m_n_tensor_identity() {
    let x = shift_dft(2).unwrap().scaled(0.7);
    assert_eq!(commutant_basis(&x).len(), 4);
    let herm = hermitian_commutant_basis(&x);
    assert_eq!(herm.len(), 4);
    for h in &herm {
        assert!(max_abs_diff(h, &h.adjoint()) < 1e-12);
        assert!(crate::pick::commutant_residual(&x, h) < 1e-10);
    }
}

#[test]
fn gamma_never_worse_than_identity_and_bounds_kappa() {
    let mut g = rng(42);
    let x = crate::sampling::row_contraction(&mut g, 2, 2, 0.9);
    let b = pick_matrix(&x, tol()).unwrap();
    let est = gamma_effective(&x, 200, 3, tol()).unwrap();
    assert!((est.gamma_at_identity - b.condition()).abs() < 1e-8 * b.condition());
    assert!(est.gamma_upper <= est.gamma_at_identity);
    let report = condition_report(&x, 64, 200, 3, tol()).unwrap();
    assert!(report.kappa_lower >= 1.0);
    assert!(report.kappa_lower <= report.gamma_upper + 1e-8);
    assert!(matches!(
        gamma_effective(&RowTuple::new(vec![CMat::zeros(2, 2)]).unwrap(), 10, 0, tol()),
        Err(Error::NotFullRank { .. })
    ));
}

#[test]
fn direct_sum_four_block_pattern() {
    let mut g = rng(43);
    let x1 = crate::sampling::row_contraction(&mut g, 2, 2, 0.5);
    let x2 = shift_dft(2).unwrap().scaled(0.9);
    let b = pick_matrix(&direct_sum(&x1, &x2).unwrap(), tol()).unwrap();
    let pattern = sector_pattern(b.p(), 2, 2);
    let nonzero: Vec<(usize, usize)> =
        (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| pattern[i][j] > 1e-12).collect();
    assert_eq!(nonzero, vec![(0, 0), (0, 3), (3, 0), (3, 3)]);

    // swapping the summands relabels 11 ↔ 22
    let swapped = pick_matrix(&direct_sum(&x2, &x1).unwrap(), tol()).unwrap();
    let sp = sector_pattern(swapped.p(), 2, 2);
    let relabel = [3, 2, 1, 0];
    for i in 0..4 {
        for j in 0..4 {
            assert!((sp[relabel[i]][relabel[j]] - pattern[i][j]).abs() < 1e-9);
        }
    }
    let grouped = sector_regroup(b.p(), 2, 2);
    assert!((op_norm(&grouped) - op_norm(b.p())).abs() < 1e-9);
    assert!(grouped.view((4, 4), (4, 4)).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn mixed_radius_below_one() {
    let mut g = rng(44);
    for _ in 0..10 {
        let x1 = crate::sampling::row_contraction(&mut g, 2, 2, 0.8);
        assert!(mixed_spectral_radius(&x1, &shift_dft(3).unwrap()).unwrap() < 1.0);
    }
}

#[test]
fn sector_preconditioner_keeps_np_norm() {
    let mut g = rng(45);
    let x1 = crate::sampling::row_contraction(&mut g, 2, 2, 0.5);
    let t = 0.99;
    let x = direct_sum(&x1, &shift_dft(2).unwrap().scaled(t)).unwrap();
    let b = pick_matrix(&x, tol()).unwrap();
    let y = BlockTarget::single(random_alg_element(&b, &mut g)).unwrap();
    let d = direct_sum_preconditioner(2, 2, t);
    let plain = np_norm(&b, &y).unwrap();
    let pre = np_norm_preconditioned(&b, &y, &d).unwrap();
    assert!((plain - pre).abs() < 1e-6 * plain.max(1.0), "{plain} {pre}");
    let cp = range_condition(b.p(), 1e-10);
    let cd = range_condition(&(&d * b.p() * &d), 1e-10);
    assert!(cd < cp, "{cd} {cp}");
}

#[test]
fn direct_sum_limit_decreases() {
    let x1 = RowTuple::new(vec![CMat::zeros(2, 2); 2]).unwrap();
    let report = direct_sum_limit_check(&x1, &shift_dft(2).unwrap(), &[0.9, 0.99, 0.999], tol()).unwrap();
    assert!(report.decreasing);
    let limit = direct_sum_limit_target(&crate::tensor::choi_matrix(2), 2, 2);
    assert_eq!(limit[(0, 0)], r(1.0));
    assert_eq!(limit[(15, 15)], r(1.0));
    assert_eq!(limit[(5, 5)], r(1.0));
    assert_eq!(limit[(8, 8)], r(0.0));
}

#[test]
fn interpolating_prefix_cases() {
    let one = interpolating_prefix(&[0.5], &[2], 1e-3, 32, 12, 9).unwrap();
    assert_eq!(one.scales.len(), 1);
    assert!(one.max_np_norm + one.slack <= 1.0);
    let zero = interpolating_prefix(&[0.0, 0.0], &[2, 1], 1e-3, 8, 12, 9).unwrap();
    assert_eq!(zero.iterations, 1);
    let two = interpolating_prefix(&[0.5, 0.5], &[2, 2], 1e-3, 32, 12, 9).unwrap();
    assert!(two.scales[1] > two.scales[0]);
    assert!(matches!(interpolating_prefix(&[0.99], &[2], 0.5, 4, 2, 0), Err(Error::BudgetExhausted)));
}
