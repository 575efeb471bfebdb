//! JSON wire types shared by the library and the CLI.
//!
//! A matrix is `{"rows", "cols", "data": [[re, im], …]}` in row-major order; a
//! tuple is `{"n", "d", "mats"}`; a block target `{"s", "t", "n", "blocks"}`.
//! Integer literals are accepted wherever a real is expected. Floats are
//! written as shortest round-trip decimals (JSON) or with 17 significant
//! digits (CSV).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::pick::{BlockTarget, RowTuple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::DimensionMismatch("matrix dimensions must be positive".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if let Some(k) = self.data.iter().position(|[re, im]| !(re.is_finite() && im.is_finite())) {
            return Err(Error::NonFinite { row: k / self.cols, col: k % self.cols });
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowTupleJson {
    pub n: usize,
    pub d: usize,
    pub mats: Vec<MatrixJson>,
}

impl RowTupleJson {
    pub fn from_tuple(x: &RowTuple) -> Self {
        Self { n: x.n(), d: x.d(), mats: x.mats().iter().map(MatrixJson::from_matrix).collect() }
    }

    pub fn to_tuple(&self) -> Result<RowTuple> {
        if self.mats.len() != self.d {
            return Err(Error::DimensionMismatch(format!("d = {} but {} matrices", self.d, self.mats.len())));
        }
        let x = RowTuple::new(self.mats.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?)?;
        if x.n() != self.n {
            return Err(Error::DimensionMismatch(format!("n = {} but matrices are {}x{}", self.n, x.n(), x.n())));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTargetJson {
    pub s: usize,
    pub t: usize,
    pub n: usize,
    pub blocks: Vec<Vec<MatrixJson>>,
}

impl BlockTargetJson {
    pub fn from_target(y: &BlockTarget) -> Self {
        Self {
            s: y.s(),
            t: y.t(),
            n: y.n(),
            blocks: y.blocks().iter().map(|row| row.iter().map(MatrixJson::from_matrix).collect()).collect(),
        }
    }

    pub fn to_target(&self) -> Result<BlockTarget> {
        let blocks = self
            .blocks
            .iter()
            .map(|row| row.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let y = BlockTarget::new(blocks)?;
        if (y.s(), y.t(), y.n()) != (self.s, self.t, self.n) {
            return Err(Error::DimensionMismatch(format!(
                "declared s={}, t={}, n={} but blocks give s={}, t={}, n={}",
                self.s,
                self.t,
                self.n,
                y.s(),
                y.t(),
                y.n()
            )));
        }
        Ok(y)
    }
}

pub fn parse_tuple(text: &str) -> Result<RowTuple> {
    serde_json::from_str::<RowTupleJson>(text)
        .map_err(|e| Error::InvalidArgument(format!("tuple JSON: {e}")))?
        .to_tuple()
}

pub fn parse_target(text: &str) -> Result<BlockTarget> {
    serde_json::from_str::<BlockTargetJson>(text)
        .map_err(|e| Error::InvalidArgument(format!("target JSON: {e}")))?
        .to_target()
}

/// Seventeen significant digits, enough to round-trip any binary64.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}
