use crate::error::{Error, Result};
use crate::linalg::{first_non_finite, op_norm, CMat};
use crate::tensor::{kron, leg_permute, LegShape};
use crate::linalg::matrix_unit;

/// `Y ∈ M_{s×t} ⊗ M_n`: an s×t grid of n×n blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTarget {
    s: usize,
    t: usize,
    n: usize,
    blocks: Vec<Vec<CMat>>,
}

impl BlockTarget {
    pub fn new(blocks: Vec<Vec<CMat>>) -> Result<Self> {
        let s = blocks.len();
        let t = blocks.first().map_or(0, Vec::len);
        if s == 0 || t == 0 {
            return Err(Error::DimensionMismatch("block grid must be non-empty".into()));
        }
        let n = blocks[0][0].nrows();
        for (a, row) in blocks.iter().enumerate() {
            if row.len() != t {
                return Err(Error::DimensionMismatch(format!("block row {} has {} blocks, expected {t}", a + 1, row.len())));
            }
            for (b, y) in row.iter().enumerate() {
                if y.shape() != (n, n) || n == 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "block ({}, {}) is {}x{}, expected {n}x{n}",
                        a + 1,
                        b + 1,
                        y.nrows(),
                        y.ncols()
                    )));
                }
                if let Some((row, col)) = first_non_finite(y) {
                    return Err(Error::NonFinite { row: a * n + row, col: b * n + col });
                }
            }
        }
        Ok(Self { s, t, n, blocks })
    }

    /// 1×1 target.
    pub fn single(y: CMat) -> Result<Self> {
        Self::new(vec![vec![y]])
    }

    /// `[Y_1 ⋯ Y_m]` (s = 1, t = m).
    pub fn row(ys: Vec<CMat>) -> Result<Self> {
        Self::new(vec![ys])
    }

    /// `[Y_1; ⋯; Y_m]` (s = m, t = 1).
    pub fn column(ys: Vec<CMat>) -> Result<Self> {
        Self::new(ys.into_iter().map(|y| vec![y]).collect())
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<CMat>] {
        &self.blocks
    }

    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &CMat)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().enumerate().map(move |(b, y)| (a, b, y)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|row| row.iter().map(|y| y * crate::linalg::r(c)).collect())
            .collect();
        Self { blocks, ..*self }
    }

    pub fn map_blocks(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        Self::new(self.blocks.iter().map(|row| row.iter().map(&f).collect()).collect())
    }

    /// The sn×tn block matrix `Σ E_ab ⊗ Y_ab`.
    pub fn to_dense(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(self.s * n, self.t * n);
        for (a, b, y) in self.iter_blocks() {
            out.view_mut((a * n, b * n), (n, n)).copy_from(y);
        }
        out
    }

    /// Operator norm of the block matrix.
    pub fn norm(&self) -> f64 {
        op_norm(&self.to_dense())
    }

    /// `Ŷ = Σ Y_ab ⊗ E_ab`, the target acting on space ⊗ block legs.
    pub fn space_first(&self) -> CMat {
        let n = self.n;
        let rows = LegShape { dims: vec![self.s, n] };
        let cols = LegShape { dims: vec![self.t, n] };
        leg_permute(&self.to_dense(), &rows, &cols, &[1, 0]).expect("shapes match by construction")
    }

    /// Slow reference for [`Self::space_first`], used by tests.
    #[doc(hidden)]
    pub fn space_first_reference(&self) -> CMat {
        let mut out = CMat::zeros(self.n * self.s, self.n * self.t);
        for (a, b, y) in self.iter_blocks() {
            out += kron(y, &matrix_unit(self.s, self.t, a, b));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff, r};
    use crate::sampling::{gaussian, rng};

    #[test]
    fn validates_grid() {
        assert!(BlockTarget::new(vec![]).is_err());
        assert!(BlockTarget::new(vec![vec![identity(2)], vec![identity(2), identity(2)]]).is_err());
        assert!(BlockTarget::new(vec![vec![identity(2), identity(3)]]).is_err());
    }

    #[test]
    fn dense_layout() {
        let t = BlockTarget::row(vec![matrix_unit(2, 2, 0, 0), matrix_unit(2, 2, 0, 1)]).unwrap();
        assert_eq!((t.s(), t.t(), t.n()), (1, 2, 2));
        let d = t.to_dense();
        assert_eq!(d[(0, 0)], r(1.0));
        assert_eq!(d[(0, 3)], r(1.0));
        assert!((t.norm() - 2f64.sqrt()).abs() < 1e-12);
        let c = BlockTarget::column(vec![matrix_unit(2, 2, 0, 0), matrix_unit(2, 2, 0, 1)]).unwrap();
        assert!((c.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn space_first_matches_kron_sum() {
        let mut g = rng(11);
        let blocks = (0..2).map(|_| (0..3).map(|_| gaussian(&mut g, 2, 2)).collect()).collect();
        let t = BlockTarget::new(blocks).unwrap();
        assert!(max_abs_diff(&t.space_first(), &t.space_first_reference()) < 1e-15);
    }
}
