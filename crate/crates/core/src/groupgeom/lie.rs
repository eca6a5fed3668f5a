//! Group operations in exponential coordinates of the first kind.

use nalgebra::{DMatrix, DVector};

use super::ode::{integrate, OdeError, OdeOptions};
use crate::closure::StructureConstants;

#[derive(Debug, Clone)]
pub struct ExpChart {
    constants: StructureConstants,
}

/// `Σ_k s^k A^k / (k+1)!` for `s = ±1`.
fn series(a: &DMatrix<f64>, sign: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..80 {
        term = (&term * a) * (sign / (k as f64 + 1.0));
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

impl ExpChart {
    pub fn new(constants: StructureConstants) -> Self {
        ExpChart { constants }
    }

    pub fn dim(&self) -> usize {
        self.constants.dim()
    }

    pub fn constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn ad(&self, xi: &[f64]) -> DMatrix<f64> {
        self.constants.ad(xi)
    }

    /// `Ad_{exp ξ} = e^{ad ξ}`.
    pub fn adjoint(&self, xi: &[f64]) -> DMatrix<f64> {
        self.ad(xi).exp()
    }

    /// `(1 - e^{-ad ξ})/ad ξ`: coordinate tangent at ξ to its left trivialization.
    pub fn left_trivialize(&self, xi: &[f64]) -> DMatrix<f64> {
        series(&self.ad(xi), -1.0)
    }

    /// `(e^{ad ξ} - 1)/ad ξ`: coordinate tangent at ξ to its right trivialization.
    pub fn right_trivialize(&self, xi: &[f64]) -> DMatrix<f64> {
        series(&self.ad(xi), 1.0)
    }

    /// Columns are the left-invariant fields at ξ in coordinates.
    pub fn left_field_matrix(&self, xi: &[f64]) -> Option<DMatrix<f64>> {
        self.left_trivialize(xi).try_inverse()
    }

    /// Left Haar density with respect to `dξ`.
    pub fn haar_density(&self, xi: &[f64]) -> f64 {
        self.left_trivialize(xi).determinant().abs()
    }

    pub fn inverse(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().map(|v| -v).collect()
    }

    /// `exp(a)·exp(b)` by flowing the left-invariant field of `b` from `a`.
    pub fn mul(&self, a: &[f64], b: &[f64], opts: &OdeOptions) -> Result<Vec<f64>, OdeError> {
        if self.constants.is_zero() {
            return Ok(a.iter().zip(b).map(|(x, y)| x + y).collect());
        }
        let bv = DVector::from_column_slice(b);
        integrate(
            |z, out| {
                let j = self.left_trivialize(z);
                let v = j.lu().solve(&bv).unwrap_or_else(|| DVector::from_element(bv.len(), f64::NAN));
                out.copy_from_slice(v.as_slice());
                Ok(())
            },
            a,
            1.0,
            opts,
        )
    }
}
