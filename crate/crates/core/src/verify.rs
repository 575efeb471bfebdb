//! Self-verification: each suite draws random instances of an exact identity
//! and reports the worst residual against a fixed threshold.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::{ampliated_boomerang, boomerang, dilation_data, mini_dilation_check};
use crate::error::{Error, Result};
use crate::linalg::{identity, max_abs_diff, op_norm, r, CMat, HermitianEigen, C64};
use crate::ncpoly::{words_up_to, NcPoly};
use crate::pick::{feasible, pick_matrix, pick_series, series_tail_bound, BlockTarget, RowTuple, Tolerances};
use crate::sampling::{derive_seed, gaussian, rng, row_contraction, SeededRng};
use crate::tensor::{choi_matrix, kron, kron_all, psi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// (largest n, trials per suite)
    pub fn budget(self) -> (usize, usize) {
        match self {
            Level::Quick => (3, 10),
            Level::Full => (5, 100),
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(Error::InvalidArgument(format!("unknown level '{other}' (quick|full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Negative control: replaces ψ by a perturbed permutation.
    #[serde(default)]
    pub corrupt_psi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: usize,
    pub max_residual: f64,
    pub threshold: f64,
    /// Trials that raised an error instead of producing a residual.
    pub errors: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&'static str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name).collect()
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<24} {:>6} {:>12} {:>10}  status\n", "suite", "trials", "max resid", "threshold");
        for s in &self.suites {
            out.push_str(&format!(
                "{:<24} {:>6} {:>12.3e} {:>10.0e}  {}\n",
                s.name,
                s.trials,
                s.max_residual,
                s.threshold,
                if s.passed { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

type PsiFn = fn(&CMat) -> Result<CMat>;

fn corrupted_psi(a: &CMat) -> Result<CMat> {
    let mut out = psi(a)?;
    out[(0, 0)] += r(1e-3);
    Ok(out)
}

/// Runs `trials` instances; `instance` returns a residual for one draw.
pub fn run_suite(
    name: &'static str,
    trials: usize,
    threshold: f64,
    seed: u64,
    instance: impl Fn(&mut SeededRng, usize) -> Result<f64> + Sync,
) -> SuiteResult {
    let outcomes: Vec<Result<f64>> =
        (0..trials).into_par_iter().map(|k| instance(&mut rng(derive_seed(seed, k as u64)), k)).collect();
    let errors = outcomes.iter().filter(|o| o.is_err()).count();
    let max_residual = outcomes.iter().filter_map(|o| o.as_ref().ok()).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let max_residual = if max_residual == f64::NEG_INFINITY { f64::NAN } else { max_residual };
    SuiteResult { name, trials, max_residual, threshold, errors, passed: errors == 0 && max_residual <= threshold }
}

fn size(g: &mut SeededRng, max_n: usize) -> usize {
    g.random_range(1..=max_n)
}

fn contraction(g: &mut SeededRng, n: usize, max_norm: f64) -> RowTuple {
    let d = g.random_range(1..=3);
    let norm = g.random_range(0.1..max_norm);
    row_contraction(g, n, d, norm)
}

fn random_poly(g: &mut SeededRng, d: usize, max_degree: usize) -> NcPoly {
    let deg = g.random_range(0..=max_degree);
    let words = words_up_to(d, deg);
    let coeffs = gaussian(g, 1, words.len());
    NcPoly::from_terms(d, words.into_iter().zip(coeffs.iter().copied())).expect("letters in range")
}

fn relative(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

pub fn psi_involution(max_n: usize, trials: usize, seed: u64, psi_fn: PsiFn) -> SuiteResult {
    run_suite("psi-involution", trials, 0.0, seed, |g, _| {
        let n = size(g, max_n);
        let a = gaussian(g, n * n, n * n);
        Ok(max_abs_diff(&psi_fn(&psi_fn(&a)?)?, &a))
    })
}

/// `[(A⊗B)U(C⊗D)]^ψ = (Dᵀ⊗B)U^ψ(C⊗Aᵀ)`.
pub fn psi_modularity(max_n: usize, trials: usize, seed: u64, psi_fn: PsiFn) -> SuiteResult {
    run_suite("psi-modularity", trials, 1e-10, seed, |g, _| {
        let n = size(g, max_n);
        let [a, b, c_, d] = [0; 4].map(|_| gaussian(g, n, n));
        let u = gaussian(g, n * n, n * n);
        let lhs = psi_fn(&(kron(&a, &b) * &u * kron(&c_, &d)))?;
        let rhs = kron(&d.transpose(), &b) * psi_fn(&u)? * kron(&c_, &a.transpose());
        Ok(relative(op_norm(&(&lhs - &rhs)), op_norm(&rhs)))
    })
}

/// `‖P_X − Σ_{|w|≤12} vec(X^w)vec(X^w)^*‖` minus the geometric tail bound (r ≤ 0.81).
pub fn pick_series_suite(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    const L: usize = 12;
    run_suite("pick-series", trials, 1e-10, seed, |g, _| {
        let n = size(g, max_n);
        let x = contraction(g, n, 0.9);
        let p = pick_matrix(&x, Tolerances::default())?;
        Ok(op_norm(&(p.p() - pick_series(&x, L))) - series_tail_bound(&x, L))
    })
}

/// `P_X − Σ (X_iᵀ⊗I)P_X(conj(X_i)⊗I) = C_n`, relative to ‖P_X‖.
pub fn stein_identity(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite("stein-identity", trials, 1e-9, seed, |g, _| {
        let n = size(g, max_n);
        let x = contraction(g, n, 0.95);
        let b = pick_matrix(&x, Tolerances::default())?;
        let id = identity(n);
        let lhs = x.mats().iter().fold(b.p().clone(), |acc, xi| {
            acc - kron(&xi.transpose(), &id) * b.p() * kron(&xi.conjugate(), &id)
        });
        Ok(op_norm(&(lhs - choi_matrix(n))) / op_norm(b.p()))
    })
}

fn stencil(x: &RowTuple, h: &CMat) -> CMat {
    x.mats().iter().fold(h.clone(), |acc, a| acc - a * h * a.adjoint())
}

/// `B̆ᵀ(P_X ⊗ (H − Σ X_i H X_i^*))B̆ = H`.
pub fn boomerang_recovery(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite("boomerang-recovery", trials, 1e-9, seed, |g, _| {
        let n = size(g, max_n);
        let x = contraction(g, n, 0.95);
        let b = pick_matrix(&x, Tolerances::default())?;
        let h = gaussian(g, n, n);
        let bm = boomerang(n);
        let got = bm.transpose() * kron(b.p(), &stencil(&x, &h)) * &bm;
        Ok(op_norm(&(got - &h)) / (op_norm(b.p()) * op_norm(&h).max(1.0)))
    })
}

/// The right, left and two-sided exchange rules for the ampliated boomerang.
pub fn boomerang_exchange(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite("boomerang-exchange", trials, 1e-10, seed, |g, _| {
        let n = size(g, max_n);
        let (s, t) = (g.random_range(1..=3), g.random_range(1..=3));
        let a = gaussian(g, n * n, n * n);
        let cm = gaussian(g, n, n);
        let (z, w) = (gaussian(g, n * t, n * s), gaussian(g, n * s, n * t));
        let (j, k) = (gaussian(g, n * s, n * s), gaussian(g, n * s, n * s));
        let (bs, bt) = (ampliated_boomerang(n, s), ampliated_boomerang(n, t));
        let (in_, is, it) = (identity(n), identity(s), identity(t));
        let rel = |l: CMat, r_: CMat| relative(op_norm(&(&l - &r_)), op_norm(&r_));

        let right = rel(
            kron(&(kron(&a, &it) * kron(&in_, &z)), &cm) * &bs,
            kron_all(&[&a, &it, &cm]) * &bt * &z,
        );
        let left = rel(
            bs.transpose() * kron(&(kron(&in_, &w) * kron(&a, &it)), &cm),
            &w * bt.transpose() * kron_all(&[&a, &it, &cm]),
        );
        let both = rel(
            bs.transpose() * kron(&(kron(&in_, &j) * kron(&a, &is) * kron(&in_, &k)), &cm) * &bs,
            &j * bs.transpose() * kron_all(&[&a, &is, &cm]) * &bs * &k,
        );
        Ok(right.max(left).max(both))
    })
}

/// `B̆_sᵀ(P_X ⊗ I_s ⊗ (H − Σ X_i H X_i^*))B̆_s = H ⊗ I_s`.
pub fn ampliated_recovery(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite("ampliated-recovery", trials, 1e-9, seed, |g, _| {
        let n = size(g, max_n);
        let s = g.random_range(1..=3);
        let x = contraction(g, n, 0.95);
        let b = pick_matrix(&x, Tolerances::default())?;
        let h = gaussian(g, n, n);
        let bs = ampliated_boomerang(n, s);
        let got = bs.transpose() * kron_all(&[b.p(), &identity(s), &stencil(&x, &h)]) * &bs;
        Ok(op_norm(&(got - kron(&h, &identity(s)))) / (op_norm(b.p()) * op_norm(&h).max(1.0)))
    })
}

pub fn dilation_isometry(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite("dilation-isometry", trials, 1e-9, seed, |g, _| {
        let n = size(g, max_n);
        let x = contraction(g, n, 0.95);
        Ok(dilation_data(&pick_matrix(&x, Tolerances::default())?)?.isometry_residual)
    })
}

/// Which residual of the mini-dilation check a suite reports.
#[derive(Clone, Copy)]
enum MiniPart {
    Dilation,
    Projection,
    Compression,
}

fn mini_suite(name: &'static str, part: MiniPart, threshold: f64, max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    run_suite(name, trials, threshold, seed, |g, _| {
        let n = size(g, max_n);
        let x = contraction(g, n, 0.9);
        let data = dilation_data(&pick_matrix(&x, Tolerances::default())?)?;
        let (alpha, beta) = (random_poly(g, x.d(), 3), random_poly(g, x.d(), 3));
        let res = mini_dilation_check(&data, &alpha, &beta)?;
        Ok(match part {
            MiniPart::Dilation => res.dilation,
            MiniPart::Projection => res.projection,
            MiniPart::Compression => res.compression,
        })
    })
}

/// `V^*(α(X̃)β(X̃)^* ⊗ I)V = α(X)β(X)^* ⊗ I` for degree ≤ 3.
pub fn mini_dilation(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    mini_suite("mini-dilation", MiniPart::Dilation, 1e-7, max_n, trials, seed)
}

/// `Q_X(I⊗α(X))P_X = (I⊗α(X))P_X`.
pub fn projection_invariance(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    mini_suite("projection-invariance", MiniPart::Projection, 1e-9, max_n, trials, seed)
}

/// `α(X̃)Q_X = P^{†/2}(I⊗α(X))P^{1/2}`.
pub fn compression(max_n: usize, trials: usize, seed: u64) -> SuiteResult {
    mini_suite("compression", MiniPart::Compression, 1e-8, max_n, trials, seed)
}

/// A scalar problem: nodes `z`, targets `w` in the open disc.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProblem {
    pub z: Vec<C64>,
    pub w: Vec<C64>,
}

impl ScalarProblem {
    pub fn random(g: &mut SeededRng, points: usize) -> Self {
        let mut disc = |rad: f64| {
            let (rho, th): (f64, f64) = (g.random::<f64>().sqrt() * rad, g.random::<f64>() * std::f64::consts::TAU);
            C64::from_polar(rho, th)
        };
        let z = (0..points).map(|_| disc(0.95)).collect();
        let w = (0..points).map(|_| disc(0.99)).collect();
        Self { z, w }
    }

    /// `λ_min [(1 − w_i conj w_j)/(1 − z_i conj z_j)]`.
    pub fn classical_margin(&self) -> f64 {
        let k = self.z.len();
        let m = CMat::from_fn(k, k, |i, j| {
            (r(1.0) - self.w[i] * self.w[j].conj()) / (r(1.0) - self.z[i] * self.z[j].conj())
        });
        HermitianEigen::new(&m).min()
    }

    /// Margin of the matrix criterion on `X = diag(z)`, `Y = diag(w)`.
    pub fn matrix_margin(&self) -> Result<f64> {
        let diag = |v: &[C64]| CMat::from_diagonal(&nalgebra::DVector::from_column_slice(v));
        let x = RowTuple::new(vec![diag(&self.z)])?;
        let b = pick_matrix(&x, Tolerances::default())?;
        Ok(feasible(&b, &BlockTarget::single(diag(&self.w))?, Tolerances::default())?.margin)
    }

    /// Verdicts agree, or one margin sits inside the ±1e-8 band.
    pub fn verdicts_agree(&self) -> Result<bool> {
        let (cl, mx) = (self.classical_margin(), self.matrix_margin()?);
        Ok((cl >= 0.0) == (mx >= 0.0) || cl.abs() <= 1e-8 || mx.abs() <= 1e-8)
    }
}

/// Disagreements between the matrix criterion on diagonal nodes and the
/// classical Pick matrix (2–4 points).
pub fn scalar_collapse(trials: usize, seed: u64) -> SuiteResult {
    run_suite("scalar-pick-collapse", trials, 0.0, seed, |g, _| {
        let k = g.random_range(2..=4);
        let prob = ScalarProblem::random(g, k);
        Ok(if prob.verdicts_agree()? { 0.0 } else { 1.0 })
    })
}

pub fn run_verify(opts: VerifyOptions) -> VerifyReport {
    let (max_n, trials) = opts.level.budget();
    let psi_fn: PsiFn = if opts.corrupt_psi { corrupted_psi } else { psi };
    let s = |k: u64| derive_seed(opts.seed, k);
    let jobs: Vec<Box<dyn Fn() -> SuiteResult + Sync>> = vec![
        Box::new(move || psi_involution(max_n + 1, trials, s(0), psi_fn)),
        Box::new(move || psi_modularity(max_n.min(4), trials, s(1), psi_fn)),
        Box::new(move || pick_series_suite(max_n.min(4), trials, s(2))),
        Box::new(move || stein_identity(max_n.min(4), trials, s(3))),
        Box::new(move || boomerang_recovery(max_n, trials, s(4))),
        Box::new(move || boomerang_exchange(max_n.min(4), trials, s(5))),
        Box::new(move || ampliated_recovery(max_n.min(4), trials, s(6))),
        Box::new(move || dilation_isometry(max_n, trials, s(7))),
        Box::new(move || mini_dilation(max_n.min(3), trials, s(8))),
        Box::new(move || projection_invariance(max_n.min(3), trials, s(9))),
        Box::new(move || compression(max_n.min(3), trials, s(10))),
        Box::new(move || scalar_collapse(2 * trials, s(11))),
    ];
    let suites: Vec<SuiteResult> = jobs.par_iter().map(|f| f()).collect();
    let passed = suites.iter().all(|s| s.passed);
    VerifyReport { options: opts, suites, passed }
}
