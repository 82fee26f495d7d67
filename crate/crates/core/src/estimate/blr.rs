use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::chi2::chi2_quantile;
use crate::error::{Error, Result};

/// Recursive Bayesian linear regression for one row of `W`.
///
/// Posterior `w ~ N(ŵ, σ² Λ⁻¹)`; the recursion keeps `Λ⁻¹` directly
/// (Sherman–Morrison) together with a running `log det Λ`.
#[derive(Clone, Debug)]
pub struct BlrRow {
    w_hat: DVector<f64>,
    lambda_inv: DMatrix<f64>,
    sigma: f64,
    log_det: f64,
    log_det0: f64,
    lambda0_max: f64,
}

impl BlrRow {
    /// Gaussian prior with mean `w0` and precision `lambda0` (in units of σ⁻²).
    pub fn new(w0: DVector<f64>, lambda0: DMatrix<f64>, sigma: f64) -> Result<Self> {
        let d = w0.len();
        if lambda0.shape() != (d, d) {
            return Err(Error::dim("BLR prior precision", d, lambda0.nrows()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument("BLR σ must be positive".into()));
        }
        let sym = (&lambda0 + lambda0.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("BLR prior precision is not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let lambda0_max = SymmetricEigen::new(sym).eigenvalues.max();
        Ok(Self {
            w_hat: w0,
            lambda_inv: chol.inverse(),
            sigma,
            log_det,
            log_det0: log_det,
            lambda0_max,
        })
    }

    /// Flat-prior start from data: `Λ₀ = Σφφᵀ + ridge·I`, `ŵ₀` the
    /// least-squares fit.
    pub fn from_data(phis: &[DVector<f64>], ys: &[f64], sigma: f64, ridge: f64) -> Result<Self> {
        if phis.is_empty() || phis.len() != ys.len() {
            return Err(Error::InvalidArgument(
                "BLR warm start needs matching, nonempty samples".into(),
            ));
        }
        let d = phis[0].len();
        let mut gram = DMatrix::identity(d, d) * ridge;
        let mut rhs = DVector::zeros(d);
        for (phi, y) in phis.iter().zip(ys) {
            if phi.len() != d {
                return Err(Error::dim("BLR warm-start feature", d, phi.len()));
            }
            gram += phi * phi.transpose();
            rhs += phi * *y;
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("warm-start Gram matrix is singular".into()))?;
        let w0 = chol.solve(&rhs);
        Self::new(w0, gram, sigma)
    }

    pub fn dim(&self) -> usize {
        self.w_hat.len()
    }

    pub fn w_hat(&self) -> &DVector<f64> {
        &self.w_hat
    }

    pub fn lambda_inv(&self) -> &DMatrix<f64> {
        &self.lambda_inv
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// One observation `y = wᵀφ + noise`.
    pub fn update(&mut self, phi: &DVector<f64>, y: f64) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::dim("BLR feature", self.dim(), phi.len()));
        }
        if phi.iter().any(|v| !v.is_finite()) || !y.is_finite() {
            return Err(Error::NonFinite("BLR observation"));
        }
        let g = &self.lambda_inv * phi;
        let denom = 1.0 + phi.dot(&g);
        let y_hat = self.w_hat.dot(phi);
        self.w_hat -= &g * ((y_hat - y) / denom);
        self.lambda_inv -= &g * g.transpose() / denom;
        self.lambda_inv = (&self.lambda_inv + self.lambda_inv.transpose()) * 0.5;
        self.log_det += denom.ln();
        Ok(())
    }

    /// Smallest eigenvalue of `Λ_t`.
    pub fn lambda_min(&self) -> f64 {
        let max_inv = SymmetricEigen::new(self.lambda_inv.clone()).eigenvalues.max();
        1.0 / max_inv
    }

    /// Time-uniform confidence scale `β_t(δ')`.
    pub fn beta(&self, delta_row: f64) -> Result<f64> {
        if !(delta_row > 0.0 && delta_row < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "risk level {delta_row} outside (0, 1)"
            )));
        }
        let info = (self.log_det - self.log_det0 - 2.0 * delta_row.ln()).max(0.0);
        let chi2 = chi2_quantile(self.dim(), 1.0 - delta_row)?;
        Ok(info.sqrt() + (self.lambda0_max / self.lambda_min() * chi2).sqrt())
    }

    /// Euclidean radius of the confidence ellipsoid `‖w̃‖_Λ ≤ σβ`.
    pub fn radius(&self, delta_row: f64) -> Result<f64> {
        Ok(self.sigma * self.beta(delta_row)? / self.lambda_min().sqrt())
    }
}
