//! Example nodes: the cyclic shift / diagonal-phase pair, weighted unitary
//! points, the Choi point and normalized random row contractions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, matrix_unit, op_norm, r, CMat, HermitianEigen, C64};
use crate::pick::RowTuple;
use crate::sampling::{gaussian, rng};

const UNITARY_TOL: f64 = 1e-10;
const WEIGHT_TOL: f64 = 1e-10;

/// `S e_i = e_{i+1 mod n}`.
pub fn cyclic_shift(n: usize) -> CMat {
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        s[((i + 1) % n, i)] = r(1.0);
    }
    s
}

/// `M e_i = ω^i e_i` with 1-based i, ω = exp(2πi/n); each entry from its angle.
pub fn phase_diagonal(n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        let k = ((i + 1) % n) as f64;
        m[(i, i)] = C64::from_polar(1.0, 2.0 * PI * k / n as f64);
    }
    m
}

/// `(S/√2, M/√2)`: an irreducible row co-isometry.
pub fn shift_dft(n: usize) -> Result<RowTuple> {
    if n < 2 {
        return Err(Error::InvalidArgument("shift-dft needs n >= 2".into()));
    }
    RowTuple::new(vec![cyclic_shift(n) * r(FRAC_1_SQRT_2), phase_diagonal(n) * r(FRAC_1_SQRT_2)])
}

/// `X_ij = E_ij/√n` in lexicographic order, d = n².
pub fn choi_point(n: usize) -> Result<RowTuple> {
    if n < 2 {
        return Err(Error::InvalidArgument("choi-point needs n >= 2".into()));
    }
    let w = r(1.0 / (n as f64).sqrt());
    RowTuple::new((0..n * n).map(|k| matrix_unit(n, n, k / n, k % n) * w).collect())
}

/// `(w_1 U_1, …, w_d U_d)` with Σ|w_i|² = 1 and all w_i ≠ 0.
pub fn weighted_unitaries(unitaries: &[CMat], weights: &[C64]) -> Result<RowTuple> {
    if unitaries.len() != weights.len() {
        return Err(Error::BadWeights(format!("{} unitaries but {} weights", unitaries.len(), weights.len())));
    }
    check_weights(weights)?;
    for u in unitaries {
        if !u.is_square() {
            return Err(Error::DimensionMismatch("unitaries must be square".into()));
        }
        let residual = op_norm(&(u.adjoint() * u - identity(u.nrows())));
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
    }
    RowTuple::new(unitaries.iter().zip(weights).map(|(u, &w)| u * w).collect())
}

fn check_weights(weights: &[C64]) -> Result<()> {
    if weights.iter().any(|w| w.norm() == 0.0) {
        return Err(Error::BadWeights("weights must be nonzero".into()));
    }
    let total: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::BadWeights(format!("sum of |w|^2 is {total}, expected 1")));
    }
    Ok(())
}

/// `(1−ε)(Σ Z_i Z_i^*)^{-1/2} Z` for standard complex Gaussian `Z_i`; redraws
/// (from the same stream) while the Gram matrix is numerically singular.
pub fn random_normalized(n: usize, d: usize, epsilon: f64, seed: u64) -> Result<RowTuple> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("n and d must be positive".into()));
    }
    let mut g = rng(seed);
    loop {
        let z: Vec<CMat> = (0..d).map(|_| gaussian(&mut g, n, n)).collect();
        let gram = z.iter().fold(CMat::zeros(n, n), |acc, zi| acc + zi * zi.adjoint());
        let eig = HermitianEigen::new(&gram);
        if eig.min() <= 1e-12 * eig.max() {
            continue;
        }
        let inv_root = eig.apply(|l| Some((1.0 - epsilon) / l.sqrt()));
        return RowTuple::new(z.iter().map(|zi| &inv_root * zi).collect());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    ShiftDft,
    WeightedUnitaries,
    ChoiPoint,
    RandomNormalized,
}

impl std::str::FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift-dft" => Ok(Self::ShiftDft),
            "weighted-unitaries" => Ok(Self::WeightedUnitaries),
            "choi-point" => Ok(Self::ChoiPoint),
            "random-normalized" => Ok(Self::RandomNormalized),
            other => Err(Error::InvalidArgument(format!("unknown node kind '{other}'"))),
        }
    }
}

/// Recipe for a zoo node. `weighted-unitaries` weights the shift/phase pair;
/// `epsilon` scales deterministic nodes by `1−ε` and is required for
/// `random-normalized`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl NodeSpec {
    pub fn build(&self) -> Result<RowTuple> {
        let expect_d = |d: usize| match self.d {
            Some(given) if given != d => Err(Error::InvalidArgument(format!("{:?} has d = {d}, spec says {given}", self.kind))),
            _ => Ok(()),
        };
        let base = match self.kind {
            NodeKind::ShiftDft => {
                expect_d(2)?;
                shift_dft(self.n)?
            }
            NodeKind::ChoiPoint => {
                expect_d(self.n * self.n)?;
                choi_point(self.n)?
            }
            NodeKind::WeightedUnitaries => {
                expect_d(2)?;
                let w: Vec<C64> = match &self.weights {
                    Some(w) => w.iter().map(|&[re, im]| c(re, im)).collect(),
                    None => vec![r(FRAC_1_SQRT_2); 2],
                };
                if self.n < 2 {
                    return Err(Error::InvalidArgument("weighted-unitaries needs n >= 2".into()));
                }
                weighted_unitaries(&[cyclic_shift(self.n), phase_diagonal(self.n)], &w)?
            }
            NodeKind::RandomNormalized => {
                let d = self.d.ok_or_else(|| Error::InvalidArgument("random-normalized needs d".into()))?;
                let eps = self.epsilon.ok_or_else(|| Error::InvalidArgument("random-normalized needs epsilon".into()))?;
                return random_normalized(self.n, d, eps, self.seed.unwrap_or(0));
            }
        };
        match self.epsilon {
            Some(eps) if !(0.0..1.0).contains(&eps) => Err(Error::InvalidArgument(format!("epsilon {eps} not in [0, 1)"))),
            Some(eps) => Ok(base.scaled(1.0 - eps)),
            None => Ok(base),
        }
    }
}
