//! Column–row experiments: the deterministic `Y_i = E_{1i}` construction on the
//! shift/phase node, and the seeded randomized search loop.
//!
//! Trials are independent: trial `k` draws everything from
//! `derive_seed(seed, k)`. Batches run on the rayon pool and are merged in
//! trial order, and the stopping rule is applied to the merged stream, so the
//! output does not depend on the number of workers.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_unit, CMat, C64};
use crate::pick::{np_norm, pick_matrix, BlockTarget, PickBundle, RowTuple, Tolerances};
use crate::sampling::{derive_seed, rng, row_contraction};
use crate::schema::{csv_float, MatrixJson, RowTupleJson};
use crate::tensor::{unvec, vec};
use crate::zoo::{random_normalized, shift_dft};

/// Row norm of the raw tuples in ablation mode.
pub const ABLATION_ROW_NORM: f64 = 0.9;
const BATCH: usize = 512;
const PHASE_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-10;
const DOMINANCE_SLACK: f64 = 1e-8;
const BOUND_SLACK: f64 = 1e-6;

pub const CSV_HEADER: [&str; 9] =
    ["trialIndex", "seed", "n", "m", "epsilon", "colNormNP", "rowNormNP", "ratio", "elapsed_ms"];

/// How an eigenvector `v` of `P_X` becomes a target matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetOrientation {
    /// `Y = unvec(v)ᵀ`.
    #[default]
    RowMajor,
    /// `Y = unvec(v)`.
    ColumnStack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_letters")]
    pub d: usize,
    pub gamma: f64,
    /// Scale-back; with `epsilon_range` each trial draws ε' uniformly from (0, ε).
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub epsilon_range: bool,
    pub max_trials: usize,
    pub seed: u64,
    /// Worker count; never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_parallelism: Option<usize>,
    #[serde(default)]
    pub orientation: TargetOrientation,
    /// Skip the normalization: raw Gaussian tuples scaled to row norm 0.9.
    #[serde(default)]
    pub ablation: bool,
    /// Measure per-trial wall time (makes the CSV run-dependent).
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_letters() -> usize {
    2
}

fn default_true() -> bool {
    true
}

impl SearchConfig {
    pub fn new(n: usize, m: usize, gamma: f64, epsilon: f64, max_trials: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            d: 2,
            gamma,
            epsilon,
            epsilon_range: true,
            max_trials,
            seed,
            trial_parallelism: None,
            orientation: TargetOrientation::default(),
            ablation: false,
            record_timing: false,
            tolerances: Tolerances::default(),
        }
    }

    /// A cutoff at or above √m is accepted: it can never be reached, so the
    /// run spends its whole budget (the `m = 1` baseline relies on this).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 || self.d == 0 {
            return bad("n and d must be positive".into());
        }
        if self.m == 0 || self.m > self.n * self.n {
            return bad(format!("m = {} must lie in 1..={}", self.m, self.n * self.n));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} not in (0, 1)", self.epsilon));
        }
        if self.trial_parallelism == Some(0) {
            return bad("trialParallelism must be positive".into());
        }
        self.tolerances.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub x: RowTuple,
    pub ys: Vec<CMat>,
    pub row_norm_np: f64,
    pub col_norm_np: f64,
    pub ratio: f64,
    pub elapsed: Option<Duration>,
}

impl SearchRecord {
    fn from_targets(trial_index: usize, seed: u64, epsilon: f64, b: &PickBundle, ys: Vec<CMat>) -> Result<Self> {
        let row_norm_np = np_norm(b, &BlockTarget::row(ys.clone())?)?;
        let col_norm_np = np_norm(b, &BlockTarget::column(ys.clone())?)?;
        Ok(Self {
            trial_index,
            seed,
            epsilon,
            x: b.tuple().clone(),
            ys,
            row_norm_np,
            col_norm_np,
            ratio: row_norm_np / col_norm_np,
            elapsed: None,
        })
    }

    pub fn m(&self) -> usize {
        self.ys.len()
    }

    /// Rows are expected to be at least as hard as columns.
    pub fn dominance_ok(&self) -> bool {
        self.row_norm_np >= self.col_norm_np - DOMINANCE_SLACK
    }

    pub fn within_bound(&self) -> bool {
        self.ratio <= (self.m() as f64).sqrt() + BOUND_SLACK
    }

    pub fn csv_fields(&self) -> [String; 9] {
        [
            self.trial_index.to_string(),
            self.seed.to_string(),
            self.x.n().to_string(),
            self.m().to_string(),
            csv_float(self.epsilon),
            csv_float(self.col_norm_np),
            csv_float(self.row_norm_np),
            csv_float(self.ratio),
            self.elapsed.map(|d| csv_float(d.as_secs_f64() * 1e3)).unwrap_or_default(),
        ]
    }

    pub fn to_json(&self) -> SearchRecordJson {
        SearchRecordJson {
            trial_index: self.trial_index,
            seed: self.seed,
            epsilon: self.epsilon,
            x: RowTupleJson::from_tuple(&self.x),
            ys: self.ys.iter().map(MatrixJson::from_matrix).collect(),
            row_norm_np: self.row_norm_np,
            col_norm_np: self.col_norm_np,
            ratio: self.ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchRecordJson {
    pub trial_index: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub x: RowTupleJson,
    pub ys: Vec<MatrixJson>,
    pub row_norm_np: f64,
    pub col_norm_np: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialFailure {
    pub trial_index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Record(SearchRecord),
    Failed(TrialFailure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSummary {
    pub trials_run: usize,
    pub success: bool,
    /// Largest ratio seen (the running maximum `M_r`).
    pub best: Option<SearchRecord>,
    pub failures: usize,
    pub dominance_violations: usize,
    pub bound_violations: usize,
}

impl SearchSummary {
    pub fn max_ratio(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |b| b.ratio)
    }
}

/// `X = t·(S, M)/√2`, `Y_i = E_{1i}`: row target norm √n, column target norm 1.
pub fn deterministic_colrow(n: usize, t: f64) -> Result<SearchRecord> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("t = {t} not in (0, 1)")));
    }
    let x = shift_dft(n)?.scaled(t);
    let b = pick_matrix(&x, Tolerances::default())?;
    let ys = (0..n).map(|i| matrix_unit(n, n, 0, i)).collect();
    SearchRecord::from_targets(0, 0, 1.0 - t, &b, ys)
}

/// The `m` eigenvectors of `P_X` with the smallest eigenvalues above
/// `rank_tol·λ_max`, as matrices. Each vector is phase-normalized (first
/// entry above 1e-12 in modulus made real positive); eigenvalues within
/// 1e-10·λ_max of each other are ordered lexicographically by entries.
pub fn eigen_target_select(b: &PickBundle, m: usize, orientation: TargetOrientation) -> Result<Vec<CMat>> {
    if b.rank() < m {
        return Err(Error::RankTooSmall { rank: b.rank(), requested: m });
    }
    let eig = b.eigen();
    let lmax = eig.max();
    let cutoff = b.tolerances().rank_tol * lmax;
    let mut cands: Vec<(f64, CMat)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > cutoff)
        .map(|(k, &l)| (l, phase_normalized(eig.vectors.columns(k, 1).into_owned())))
        .collect();
    // values arrive ascending; sort ties inside each cluster
    let mut start = 0;
    while start < cands.len() {
        let mut end = start + 1;
        while end < cands.len() && cands[end].0 - cands[end - 1].0 <= TIE_TOL * lmax {
            end += 1;
        }
        cands[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
    let n = b.n();
    cands
        .into_iter()
        .take(m)
        .map(|(_, v)| {
            let y = unvec(&v, n)?;
            Ok(match orientation {
                TargetOrientation::ColumnStack => y,
                TargetOrientation::RowMajor => y.transpose(),
            })
        })
        .collect()
}

fn phase_normalized(v: CMat) -> CMat {
    match v.iter().find(|z| z.norm() > PHASE_TOL) {
        Some(&z) => v * (z.conj() / z.norm()),
        None => v,
    }
}

fn lex_cmp(a: &CMat, b: &CMat) -> Ordering {
    let key = |z: &C64| [z.re, z.im];
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let (kx, ky) = (key(x), key(y));
            kx[0].total_cmp(&ky[0]).then(kx[1].total_cmp(&ky[1]))
        })
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// One trial of the loop, fully determined by `(cfg, trial_index)`.
pub fn run_trial(cfg: &SearchConfig, trial_index: usize) -> TrialOutcome {
    let seed = derive_seed(cfg.seed, trial_index as u64);
    let start = cfg.record_timing.then(Instant::now);
    let result = (|| {
        let mut g = rng(seed);
        let (x, epsilon) = if cfg.ablation {
            (row_contraction(&mut g, cfg.n, cfg.d, ABLATION_ROW_NORM), 1.0 - ABLATION_ROW_NORM)
        } else {
            let eps = if cfg.epsilon_range {
                let u: f64 = g.sample(Open01);
                cfg.epsilon * u
            } else {
                cfg.epsilon
            };
            (random_normalized(cfg.n, cfg.d, eps, g.random())?, eps)
        };
        let b = pick_matrix(&x, cfg.tolerances)?;
        let ys = eigen_target_select(&b, cfg.m, cfg.orientation)?;
        SearchRecord::from_targets(trial_index, seed, epsilon, &b, ys)
    })();
    match result {
        Ok(mut rec) => {
            rec.elapsed = start.map(|s| s.elapsed());
            TrialOutcome::Record(rec)
        }
        Err(e) => TrialOutcome::Failed(TrialFailure { trial_index, seed, message: e.to_string() }),
    }
}

/// Runs the loop until a ratio reaches `gamma` or the budget is spent,
/// handing every outcome to `sink` in trial order.
pub fn random_search(cfg: &SearchConfig, mut sink: impl FnMut(&TrialOutcome)) -> Result<SearchSummary> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.trial_parallelism.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut summary = SearchSummary {
        trials_run: 0,
        success: false,
        best: None,
        failures: 0,
        dominance_violations: 0,
        bound_violations: 0,
    };
    let mut next = 0;
    while next < cfg.max_trials && !summary.success {
        let end = (next + BATCH).min(cfg.max_trials);
        let batch: Vec<TrialOutcome> = pool.install(|| (next..end).into_par_iter().map(|k| run_trial(cfg, k)).collect());
        for outcome in batch {
            summary.trials_run += 1;
            sink(&outcome);
            match outcome {
                TrialOutcome::Failed(_) => summary.failures += 1,
                TrialOutcome::Record(rec) => {
                    summary.dominance_violations += usize::from(!rec.dominance_ok());
                    summary.bound_violations += usize::from(!rec.within_bound());
                    let hit = rec.ratio >= cfg.gamma;
                    if summary.best.as_ref().is_none_or(|b| rec.ratio > b.ratio) {
                        summary.best = Some(rec);
                    }
                    if hit {
                        summary.success = true;
                        break;
                    }
                }
            }
        }
        next = end;
    }
    Ok(summary)
}

/// Convenience wrapper keeping every outcome.
pub fn random_search_collect(cfg: &SearchConfig) -> Result<(SearchSummary, Vec<TrialOutcome>)> {
    let mut all = Vec::new();
    let summary = random_search(cfg, |o| all.push(o.clone()))?;
    Ok((summary, all))
}

/// Inverse of the target map: the eigenvector a target came from.
pub fn target_vector(y: &CMat, orientation: TargetOrientation) -> CMat {
    match orientation {
        TargetOrientation::ColumnStack => vec(y),
        TargetOrientation::RowMajor => vec(&y.transpose()),
    }
}
