//! Boundary behaviour of Pick matrices: Perron data of the transfer matrix,
//! the ANP limit, sampled condition numbers, direct sums with a co-isometric
//! summand, and finite interpolating prefixes.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_exp, identity, nullspace, op_norm, r, CMat, C64};
use crate::pick::{
    np_norm, pick_matrix, range_condition, BlockTarget, PickBundle, RowTuple, Tolerances,
};
use crate::sampling::{derive_seed, gaussian, rng, SeededRng};
use crate::schema::csv_float;
use crate::tensor::{kron, unvec, vec};
use crate::zoo::shift_dft;

pub const COISOMETRY_TOL: f64 = 1e-10;
pub const DEGENERATE_GAP_TOL: f64 = 1e-8;
/// Scale at which irreducibility is tested: alg_X is t-independent for t ≠ 0.
const IRREDUCIBILITY_SCALE: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct PerronData {
    /// Hermitian, trace one, solves `Σ X_i^* W X_i = W`.
    pub w: CMat,
    pub spectral_radius: f64,
    /// `min |1 − λ|` over the eigenvalues of T other than the Perron eigenvalue.
    pub gap_to_next: f64,
    /// `vec(W)^* vec(I)`, 1 after normalization.
    pub normalization_check: C64,
}

/// Perron data of an irreducible row co-isometry.
pub fn perron(x: &RowTuple) -> Result<PerronData> {
    let residual = x.coisometry_defect();
    if residual > COISOMETRY_TOL {
        return Err(Error::NotCoisometry { residual });
    }
    let n = x.n();
    let rank = pick_matrix(&x.scaled(IRREDUCIBILITY_SCALE), Tolerances::default())?.rank();
    if rank < n * n {
        return Err(Error::NotIrreducible { rank, full: n * n });
    }
    let t = x.transfer();
    let eigs = crate::linalg::eigenvalues(&t);
    let spectral_radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Other peripheral eigenvalues (e.g. −1 for the n = 2 shift pair) do not
    // affect the Abel limit; only a second eigenvalue at 1 spoils the G/B split.
    let perron_index = (0..eigs.len())
        .min_by(|&a, &b| (eigs[a] - r(1.0)).norm().total_cmp(&(eigs[b] - r(1.0)).norm()))
        .expect("non-empty spectrum");
    let gap_to_next = (0..eigs.len())
        .filter(|&k| k != perron_index)
        .map(|k| (r(1.0) - eigs[k]).norm())
        .fold(1.0, f64::min);
    if gap_to_next <= DEGENERATE_GAP_TOL {
        return Err(Error::DegenerateGap { gap: gap_to_next });
    }

    // T^* vec(W) = vec(Σ X_i^* W X_i): W spans the kernel of T^* − I.
    let shifted = t.adjoint() - identity(n * n);
    let svd = nalgebra::SVD::new(shifted, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = svd.singular_values.imin();
    let mut w = unvec(&CMat::from_iterator(n * n, 1, v_t.row(k).iter().map(|z| z.conj())), n)?;
    let tr = w.trace();
    if tr.norm() > 0.0 {
        w *= tr.conj() / tr.norm();
    }
    let w = crate::linalg::hermitian_part(&w);
    let w = &w / w.trace();
    let normalization_check = (vec(&w).adjoint() * vec(&identity(n)))[(0, 0)];
    Ok(PerronData { w, spectral_radius, gap_to_next, normalization_check })
}

/// `‖Σ X_i^* W X_i − W‖`.
pub fn fixed_point_residual(x: &RowTuple, w: &CMat) -> f64 {
    let image = x.mats().iter().fold(CMat::zeros(x.n(), x.n()), |acc, a| acc + a.adjoint() * w * a);
    op_norm(&(image - w))
}

/// `lim_{t→1} (1−t²)/t² P_{tX} = conj(W) ⊗ I`.
pub fn anp_limit_matrix(pd: &PerronData) -> CMat {
    kron(&pd.w.map(|z| z.conj()), &identity(pd.w.nrows()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePoint {
    pub t: f64,
    pub np_norm: f64,
    pub target_norm: f64,
    /// `np_norm / target_norm`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnpTrace {
    pub points: Vec<TracePoint>,
    /// `np_norm` at the last grid point.
    pub value: f64,
    /// `|np_norm(t_last) − ‖Y‖|`.
    pub drift: f64,
}

impl AnpTrace {
    pub const CSV_HEADER: &'static str = "t,np_norm,target_norm,ratio";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_float(p.t),
                csv_float(p.np_norm),
                csv_float(p.target_norm),
                csv_float(p.ratio)
            ));
        }
        out
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t-grid".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InvalidArgument("t-grid must lie in (0, 1)".into()));
    }
    if t_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument("t-grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `‖Y‖_{NP(tX)}` along the grid; the limit is `‖Y‖` for irreducible
/// row co-isometries.
pub fn anp_norm(x: &RowTuple, y: &BlockTarget, t_grid: &[f64], tol: Tolerances) -> Result<AnpTrace> {
    check_grid(t_grid)?;
    perron(x)?;
    let target_norm = y.norm();
    let points = t_grid
        .par_iter()
        .map(|&t| {
            let b = pick_matrix(&x.scaled(t), tol)?;
            let np = np_norm(&b, y)?;
            Ok(TracePoint { t, np_norm: np, target_norm, ratio: np / target_norm })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = points.last().expect("non-empty grid").np_norm;
    Ok(AnpTrace { points, value, drift: (value - target_norm).abs() })
}

/// Block shapes sampled by [`kappa_lower`].
pub const KAPPA_SHAPES: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KappaEstimate {
    /// Largest sampled `‖Y‖_{NP(X)} / ‖Y‖`; a lower bound for κ(X).
    pub kappa_lower: f64,
    pub samples: usize,
    pub worst_shape: (usize, usize),
}

/// Gaussian n×n matrix projected onto alg_X (through `Q_X` on vec).
pub fn random_alg_element(b: &PickBundle, g: &mut SeededRng) -> CMat {
    let n = b.n();
    let v = b.proj_q() * vec(&gaussian(g, n, n));
    unvec(&v, n).expect("n² entries")
}

/// Sampled lower bound on the sup-form condition number. `Y = I` is always
/// among the samples, so the result is at least 1.
pub fn kappa_lower(x: &RowTuple, samples: usize, seed: u64, tol: Tolerances) -> Result<KappaEstimate> {
    let b = pick_matrix(x, tol)?;
    let identity_ratio = np_norm(&b, &BlockTarget::single(identity(x.n()))?)?;
    let ratios = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let shape = KAPPA_SHAPES[(k % 4) as usize];
            let mut g = rng(derive_seed(seed, k));
            let blocks = (0..shape.0).map(|_| (0..shape.1).map(|_| random_alg_element(&b, &mut g)).collect()).collect();
            let y = BlockTarget::new(blocks)?;
            let norm = y.norm();
            if norm == 0.0 {
                return Ok((0.0, shape));
            }
            Ok((np_norm(&b, &y)? / norm, shape))
        })
        .collect::<Result<Vec<_>>>()?;
    let (kappa_lower, worst_shape) =
        ratios.into_iter().fold((identity_ratio, (1, 1)), |best, cur| if cur.0 > best.0 { cur } else { best });
    Ok(KappaEstimate { kappa_lower, samples: samples + 1, worst_shape })
}

/// Complex basis (as n²×n² matrices) of the commutant of `{I ⊗ X_i}`.
pub fn commutant_basis(x: &RowTuple) -> Vec<CMat> {
    commutant_of(&x.ampliated())
}

fn commutant_of(gens: &[CMat]) -> Vec<CMat> {
    let m = gens[0].nrows();
    let id = identity(m);
    // vec(DA − AD) = (Aᵀ ⊗ I − I ⊗ A) vec D
    let mut stacked = CMat::zeros(gens.len() * m * m, m * m);
    for (k, a) in gens.iter().enumerate() {
        let op = kron(&a.transpose(), &id) - kron(&id, a);
        stacked.view_mut((k * m * m, 0), (m * m, m * m)).copy_from(&op);
    }
    let ns = nullspace(&stacked, 1e-10);
    (0..ns.ncols())
        .map(|j| unvec(&CMat::from_iterator(m * m, 1, ns.column(j).iter().copied()), m).expect("m² entries"))
        .collect()
}

/// Real basis (Frobenius-orthonormal) of the Hermitian elements of the
/// commutant of `{I ⊗ X_i}`.
pub fn hermitian_commutant_basis(x: &RowTuple) -> Vec<CMat> {
    let mut gens = x.ampliated();
    gens.extend(x.ampliated().iter().map(|a| a.adjoint()));
    // the commutant of a *-closed set is *-closed: real and imaginary parts span
    let candidates: Vec<CMat> = commutant_of(&gens)
        .iter()
        .flat_map(|b| [crate::linalg::hermitian_part(b), crate::linalg::hermitian_part(&(b * C64::new(0.0, 1.0)))])
        .collect();
    let mut basis: Vec<CMat> = Vec::new();
    for mut h in candidates {
        for e in &basis {
            let coeff = real_inner(e, &h);
            h -= e * r(coeff);
        }
        let norm = real_inner(&h, &h).sqrt();
        if norm > 1e-8 {
            basis.push(h / r(norm));
        }
    }
    basis
}

fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p.conj() * q).re).sum()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GammaEstimate {
    /// Best `√(‖DPD‖‖(DPD)^{-1}‖)` found.
    pub gamma_upper: f64,
    /// Value at D = I, i.e. `√cond(P_X)`.
    pub gamma_at_identity: f64,
    #[serde(skip)]
    pub best_d: CMat,
    pub evaluations: usize,
}

fn preconditioned_condition(b: &PickBundle, d: &CMat) -> f64 {
    range_condition(&(d * b.p() * d.adjoint()), b.tolerances().rank_tol)
}

/// Coordinate descent on `D = exp(Σ c_k H_k)` over a Hermitian commutant
/// basis, accepting improvements only; at most `budget` evaluations.
pub fn gamma_effective(x: &RowTuple, budget: usize, seed: u64, tol: Tolerances) -> Result<GammaEstimate> {
    let b = pick_matrix(x, tol)?;
    if !b.is_full_rank() {
        return Err(Error::NotFullRank { rank: b.rank(), full: b.p().nrows() });
    }
    let basis = hermitian_commutant_basis(x);
    let n2 = b.p().nrows();
    let gamma_at_identity = preconditioned_condition(&b, &identity(n2));
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.shuffle(&mut rng(seed));

    let build = |coeffs: &[f64]| {
        let h = coeffs.iter().zip(&basis).fold(CMat::zeros(n2, n2), |acc, (&ck, hk)| acc + hk * r(ck));
        hermitian_exp(&h)
    };
    let mut coeffs = vec![0.0; basis.len()];
    let mut best = gamma_at_identity;
    let mut best_d = identity(n2);
    let mut evaluations = 1;
    let mut step = 0.5;
    'outer: while evaluations < budget && step > 1e-6 && !basis.is_empty() {
        let mut improved = false;
        for &k in &order {
            for sign in [1.0, -1.0] {
                if evaluations >= budget {
                    break 'outer;
                }
                let mut trial = coeffs.clone();
                trial[k] += sign * step;
                let d = build(&trial);
                let value = preconditioned_condition(&b, &d);
                evaluations += 1;
                if value < best {
                    best = value;
                    best_d = d;
                    coeffs = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(GammaEstimate { gamma_upper: best, gamma_at_identity, best_d, evaluations })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionReport {
    pub kappa_lower: f64,
    pub gamma_upper: f64,
    #[serde(skip)]
    pub best_d: CMat,
    pub samples: usize,
}

pub fn condition_report(x: &RowTuple, samples: usize, budget: usize, seed: u64, tol: Tolerances) -> Result<ConditionReport> {
    let kappa = kappa_lower(x, samples, seed, tol)?;
    let gamma = gamma_effective(x, budget, seed, tol)?;
    Ok(ConditionReport { kappa_lower: kappa.kappa_lower, gamma_upper: gamma.gamma_upper, best_d: gamma.best_d, samples: kappa.samples })
}

/// `X1 ⊕ X2`, coordinatewise.
pub fn direct_sum(x1: &RowTuple, x2: &RowTuple) -> Result<RowTuple> {
    x1.direct_sum(x2)
}

/// `ρ(Σ conj(X1_i) ⊗ X2_i)`.
pub fn mixed_spectral_radius(x1: &RowTuple, x2: &RowTuple) -> Result<f64> {
    if x1.d() != x2.d() {
        return Err(Error::DimensionMismatch("tuples have different letter counts".into()));
    }
    let t = x1
        .mats()
        .iter()
        .zip(x2.mats())
        .fold(CMat::zeros(x1.n() * x2.n(), x1.n() * x2.n()), |acc, (a, b)| acc + kron(&a.map(|z| z.conj()), b));
    Ok(crate::linalg::spectral_radius(&t))
}

/// Sector of vec index `k` for an (n1+n2)-square matrix: `2·[row ≥ n1] + [col ≥ n1]`,
/// so 0, 1, 2, 3 stand for the 11, 12, 21, 22 blocks.
pub fn sector(k: usize, n1: usize, n2: usize) -> usize {
    let big = n1 + n2;
    2 * usize::from(k % big >= n1) + usize::from(k / big >= n1)
}

/// Permutation (new index → old vec index) grouping vec indices by sector,
/// keeping vec order within each sector.
pub fn sector_order(n1: usize, n2: usize) -> Vec<usize> {
    let total = (n1 + n2) * (n1 + n2);
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by_key(|&k| sector(k, n1, n2));
    order
}

/// `M` with rows and columns reordered into the 4×4 sector layout.
pub fn sector_regroup(m: &CMat, n1: usize, n2: usize) -> CMat {
    let order = sector_order(n1, n2);
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(order[i], order[j])])
}

/// Frobenius norms of the 4×4 sector blocks of an (n1+n2)²-square matrix.
pub fn sector_pattern(m: &CMat, n1: usize, n2: usize) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out[sector(i, n1, n2)][sector(j, n1, n2)] += m[(i, j)].norm_sqr();
        }
    }
    out.map(|row| row.map(f64::sqrt))
}

/// Diagonal commutant element scaling the 22 sector by `√(n2(1−t²))`.
pub fn direct_sum_preconditioner(n1: usize, n2: usize, t: f64) -> CMat {
    let total = (n1 + n2) * (n1 + n2);
    let s = (n2 as f64 * (1.0 - t * t)).sqrt();
    CMat::from_fn(total, total, |i, j| {
        if i != j {
            r(0.0)
        } else if sector(i, n1, n2) == 3 {
            r(s)
        } else {
            r(1.0)
        }
    })
}

/// `P_{X1}` on the 11 sector and `I` on the 22 sector, in vec indexing.
pub fn direct_sum_limit_target(p1: &CMat, n1: usize, n2: usize) -> CMat {
    let big = n1 + n2;
    let total = big * big;
    let local = |k: usize| (k / big) * n1 + k % big;
    CMat::from_fn(total, total, |i, j| match (sector(i, n1, n2), sector(j, n1, n2)) {
        (0, 0) => p1[(local(i), local(j))],
        (3, 3) if i == j => r(1.0),
        _ => r(0.0),
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectSumPoint {
    pub t: f64,
    /// `‖P̃(t) − diag(P_{X1}, I)‖` with `P̃ = D P_{X1⊕tX2} D`.
    pub distance: f64,
    /// Range condition number of `P_{X1⊕tX2}`.
    pub condition_plain: f64,
    /// Range condition number of `P̃(t)`.
    pub condition_preconditioned: f64,
    /// Sector-block norms of `P̃(t) − diag(P_{X1}, I)`.
    pub sector_distance: [[f64; 4]; 4],
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectSumReport {
    pub points: Vec<DirectSumPoint>,
    /// Distances strictly decrease along the grid.
    pub decreasing: bool,
}

/// Tracks the preconditioned Pick matrix of `X1 ⊕ tX2` toward its limit
/// `diag(P_{X1}, I)` for a strict contraction X1 and an irreducible
/// co-isometry X2.
pub fn direct_sum_limit_check(x1: &RowTuple, x2: &RowTuple, t_grid: &[f64], tol: Tolerances) -> Result<DirectSumReport> {
    check_grid(t_grid)?;
    let p1 = pick_matrix(x1, tol)?;
    perron(x2)?;
    let (n1, n2) = (x1.n(), x2.n());
    let target = direct_sum_limit_target(p1.p(), n1, n2);
    let points = t_grid
        .par_iter()
        .map(|&t| {
            let b = pick_matrix(&direct_sum(x1, &x2.scaled(t))?, tol)?;
            let d = direct_sum_preconditioner(n1, n2, t);
            let pt = &d * b.p() * &d;
            let diff = &pt - &target;
            Ok(DirectSumPoint {
                t,
                distance: op_norm(&diff),
                condition_plain: range_condition(b.p(), tol.rank_tol),
                condition_preconditioned: range_condition(&pt, tol.rank_tol),
                sector_distance: sector_pattern(&diff, n1, n2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = points.windows(2).all(|p| p[1].distance < p[0].distance);
    Ok(DirectSumReport { points, decreasing })
}

/// An irreducible row co-isometry of size n with d = 2.
pub fn prefix_node(n: usize) -> Result<RowTuple> {
    if n == 1 {
        let s = r(std::f64::consts::FRAC_1_SQRT_2);
        return RowTuple::new(vec![CMat::from_element(1, 1, s); 2]);
    }
    shift_dft(n)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PrefixCertificate {
    /// Scales `t_1 < t_2 < …` of the certified nodes.
    pub scales: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Largest sampled NP norm of `⊕ Y^{(i)}` with `‖Y^{(i)}‖ ≤ ρ_i`.
    pub max_np_norm: f64,
    pub slack: f64,
    pub iterations: usize,
}

/// Scales for round `k`: `1 − t_1 = 2^{-(k+1)}`, each next gap `2^{-(k+2)}` times the previous.
fn prefix_scales(m: usize, round: usize) -> Vec<f64> {
    let ratio = 0.5f64.powi(round as i32 + 2);
    let mut gap = 0.5f64.powi(round as i32 + 1);
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push(1.0 - gap);
        gap *= ratio;
    }
    out
}

/// Searches scales `t_i ↗ 1` until every sampled block-diagonal target
/// `⊕ Y^{(i)}`, `‖Y^{(i)}‖ ≤ ρ_i`, has NP norm at most `1 − slack` at the node
/// `⊕ t_i U^{(i)}`. Sampled certificate only, not a proof.
pub fn interpolating_prefix(
    rhos: &[f64],
    sizes: &[usize],
    slack: f64,
    samples: usize,
    max_rounds: usize,
    seed: u64,
) -> Result<PrefixCertificate> {
    if rhos.len() != sizes.len() || rhos.is_empty() {
        return Err(Error::InvalidArgument("rhos and sizes must be non-empty and of equal length".into()));
    }
    if rhos.iter().any(|&p| !(0.0..1.0).contains(&p)) || sizes.contains(&0) {
        return Err(Error::InvalidArgument("rho must lie in [0, 1) and sizes be positive".into()));
    }
    let nodes = sizes.iter().map(|&n| prefix_node(n)).collect::<Result<Vec<_>>>()?;
    let total: usize = sizes.iter().sum();
    let tol = Tolerances::default();
    for round in 0..max_rounds {
        let scales = prefix_scales(rhos.len(), round);
        if scales.last().is_some_and(|&t| t >= 1.0 - 1e-9) {
            break;
        }
        let mut x = nodes[0].scaled(scales[0]);
        for (node, &t) in nodes.iter().zip(&scales).skip(1) {
            x = direct_sum(&x, &node.scaled(t))?;
        }
        let b = pick_matrix(&x, tol)?;
        let worst = (0..=samples as u64)
            .into_par_iter()
            .map(|k| {
                let mut g = rng(derive_seed(seed, k));
                let mut y = CMat::zeros(total, total);
                let mut off = 0;
                for (&n, &rho) in sizes.iter().zip(rhos) {
                    // sample 0 is the scaled identity
                    let z = if k == 0 { identity(n) } else { gaussian(&mut g, n, n) };
                    let norm = op_norm(&z);
                    y.view_mut((off, off), (n, n)).copy_from(&(z * r(rho / norm)));
                    off += n;
                }
                match np_norm(&b, &BlockTarget::single(y)?) {
                    Ok(v) => Ok(v),
                    Err(Error::NotInAlgebra(_)) => Ok(f64::INFINITY),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if worst + slack <= 1.0 {
            return Ok(PrefixCertificate { scales, sizes: sizes.to_vec(), max_np_norm: worst, slack, iterations: round + 1 });
        }
    }
    Err(Error::BudgetExhausted)
}

#[cfg(test)]
mod tests;
