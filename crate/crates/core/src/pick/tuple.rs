use crate::error::{Error, Result};
use crate::linalg::{first_non_finite, identity, op_norm, CMat};
use crate::tensor::kron;

/// A d-tuple `X = (X_1, …, X_d)` of n×n matrices: an interpolation node.
#[derive(Debug, Clone, PartialEq)]
pub struct RowTuple {
    mats: Vec<CMat>,
}

impl RowTuple {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::DimensionMismatch("a tuple needs at least one matrix".into()));
        };
        let n = first.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty matrix in tuple".into()));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "tuple entry {} is {}x{}, expected {n}x{n}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if let Some((row, col)) = first_non_finite(m) {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self { mats })
    }

    pub fn n(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    /// `Σ X_i X_i^*`.
    pub fn row_gram(&self) -> CMat {
        self.mats.iter().fold(CMat::zeros(self.n(), self.n()), |acc, x| acc + x * x.adjoint())
    }

    /// `‖Σ X_i X_i^*‖^{1/2}`.
    pub fn row_norm(&self) -> f64 {
        op_norm(&self.row_gram()).sqrt()
    }

    /// `‖Σ X_i X_i^* − I‖`; zero for a row co-isometry.
    pub fn coisometry_defect(&self) -> f64 {
        op_norm(&(self.row_gram() - identity(self.n())))
    }

    /// `T = Σ conj(X_i) ⊗ X_i`.
    pub fn transfer(&self) -> CMat {
        let n2 = self.n() * self.n();
        self.mats
            .iter()
            .fold(CMat::zeros(n2, n2), |acc, x| acc + kron(&x.map(|z| z.conj()), x))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { mats: self.mats.iter().map(|x| x * crate::linalg::r(t)).collect() }
    }

    /// `(U^* X_1 U, …, U^* X_d U)`.
    pub fn conjugated(&self, u: &CMat) -> Result<Self> {
        if u.shape() != (self.n(), self.n()) {
            return Err(Error::DimensionMismatch("conjugating unitary has the wrong size".into()));
        }
        Ok(Self { mats: self.mats.iter().map(|x| u.adjoint() * x * u).collect() })
    }

    /// `I ⊗ X_i` for each letter, the generators whose commutant preconditions P_X.
    pub fn ampliated(&self) -> Vec<CMat> {
        let id = identity(self.n());
        self.mats.iter().map(|x| kron(&id, x)).collect()
    }

    /// Coordinatewise `X_i ⊕ Y_i`.
    pub fn direct_sum(&self, other: &RowTuple) -> Result<Self> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch(format!(
                "direct sum of {}- and {}-letter tuples",
                self.d(),
                other.d()
            )));
        }
        let (n1, n2) = (self.n(), other.n());
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| {
                let mut m = CMat::zeros(n1 + n2, n1 + n2);
                m.view_mut((0, 0), (n1, n1)).copy_from(a);
                m.view_mut((n1, n1), (n2, n2)).copy_from(b);
                m
            })
            .collect();
        Ok(Self { mats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, r};
    use crate::sampling::{gaussian, rng, row_contraction, unitary};
    use crate::tensor::vec;

    #[test]
    fn rejects_ragged_and_nonfinite() {
        assert!(RowTuple::new(vec![]).is_err());
        assert!(RowTuple::new(vec![identity(2), identity(3)]).is_err());
        let mut bad = identity(2);
        bad[(1, 0)] = r(f64::NAN);
        assert!(matches!(RowTuple::new(vec![bad]), Err(Error::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn row_norm_cases() {
        let zero = RowTuple::new(vec![CMat::zeros(3, 3); 2]).unwrap();
        assert_eq!(zero.row_norm(), 0.0);
        let mut g = rng(5);
        let x = row_contraction(&mut g, 3, 2, 0.8);
        assert!((x.scaled(0.37).row_norm() - 0.37 * x.row_norm()).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = RowTuple::new(vec![unitary(&mut g, 3) * r(s), unitary(&mut g, 3) * r(s)]).unwrap();
        assert!((u.row_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_maps_vec_identity_to_row_gram() {
        let mut g = rng(6);
        let x = RowTuple::new(vec![gaussian(&mut g, 3, 3), gaussian(&mut g, 3, 3)]).unwrap();
        let lhs = x.transfer() * vec(&identity(3));
        assert!(max_abs_diff(&lhs, &vec(&x.row_gram())) < 1e-12);
        let scalar = RowTuple::new(vec![CMat::from_element(1, 1, crate::linalg::c(0.3, 0.4))]).unwrap();
        assert!((scalar.transfer()[(0, 0)] - r(0.25)).norm() < 1e-15);
    }

    #[test]
    fn direct_sum_is_block_diagonal() {
        let a = RowTuple::new(vec![CMat::zeros(1, 1)]).unwrap();
        let b = RowTuple::new(vec![CMat::from_element(1, 1, r(0.5))]).unwrap();
        let s = a.direct_sum(&b).unwrap();
        assert_eq!(s.mats()[0], CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![r(0.0), r(0.5)])));
        let mut g = rng(7);
        let (x, y) = (row_contraction(&mut g, 2, 2, 0.6), row_contraction(&mut g, 3, 2, 0.9));
        assert!((x.direct_sum(&y).unwrap().row_norm() - 0.9).abs() < 1e-12);
        assert!(x.direct_sum(&row_contraction(&mut g, 2, 3, 0.5)).is_err());
    }
}
