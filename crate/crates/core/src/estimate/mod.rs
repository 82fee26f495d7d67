//! Online estimation of `W` in `f(x) = W φ(x)`.
//!
//! Each row of `W` is learned independently, either by set membership
//! (bounded noise) or by recursive Bayesian linear regression with
//! time-uniform confidence radii. The controller only ever sees a
//! [`CommittedEstimate`], whose radii never grow.

mod blr;
pub mod chi2;
mod commit;
mod set_membership;

pub use blr::BlrRow;
pub use chi2::chi2_quantile;
pub use commit::{gated_commit, CommittedEstimate};
pub use set_membership::SetMembershipRow;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Learner for a single row of `W`.
#[derive(Clone, Debug)]
pub enum RowEstimator {
    /// Row known to be zero; never updated.
    Known,
    Blr(BlrRow),
    SetMembership(SetMembershipRow),
}

impl RowEstimator {
    fn point(&self, d: usize, delta_row: f64) -> Result<(DVector<f64>, f64)> {
        match self {
            RowEstimator::Known => Ok((DVector::zeros(d), 0.0)),
            RowEstimator::Blr(row) => Ok((row.w_hat().clone(), row.radius(delta_row)?)),
            RowEstimator::SetMembership(row) => row.point(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Estimator {
    rows: Vec<RowEstimator>,
    feature_dim: usize,
    delta: f64,
    committed: CommittedEstimate,
    observations: usize,
}

impl Estimator {
    /// The initial candidate is committed unconditionally.
    pub fn new(rows: Vec<RowEstimator>, feature_dim: usize, delta: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("estimator needs at least one row".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("risk level {delta} outside (0, 1)")));
        }
        let mut est = Self {
            committed: CommittedEstimate {
                w_hat: DMatrix::zeros(rows.len(), feature_dim),
                radii: DVector::zeros(rows.len()),
                delta,
            },
            rows,
            feature_dim,
            delta,
            observations: 0,
        };
        let (w_hat, radii) = est.candidate()?;
        est.committed = CommittedEstimate { w_hat, radii, delta };
        Ok(est)
    }

    pub fn state_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Per-row risk `δ/n` (union bound over rows).
    pub fn delta_row(&self) -> f64 {
        self.delta / self.rows.len() as f64
    }

    pub fn rows(&self) -> &[RowEstimator] {
        &self.rows
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    /// Feed `y = x⁺ − A x − B u` observed at features `φ(x)`.
    pub fn observe(&mut self, phi: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if phi.len() != self.feature_dim {
            return Err(Error::dim("estimator feature", self.feature_dim, phi.len()));
        }
        if y.len() != self.rows.len() {
            return Err(Error::dim("estimator measurement", self.rows.len(), y.len()));
        }
        let step = self.observations;
        for (i, row) in self.rows.iter_mut().enumerate() {
            match row {
                RowEstimator::Known => {}
                RowEstimator::Blr(r) => r.update(phi, y[i])?,
                RowEstimator::SetMembership(r) => r.update(phi, y[i], i, step)?,
            }
        }
        self.observations += 1;
        Ok(())
    }

    /// Current (uncommitted) point estimate and radii.
    pub fn candidate(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let n = self.rows.len();
        let mut w_hat = DMatrix::zeros(n, self.feature_dim);
        let mut radii = DVector::zeros(n);
        let delta_row = self.delta_row();
        for (i, row) in self.rows.iter().enumerate() {
            let (w, r) = row.point(self.feature_dim, delta_row)?;
            w_hat.row_mut(i).copy_from(&w.transpose());
            radii[i] = r;
        }
        Ok((w_hat, radii))
    }

    /// Gated commit of the current candidate; returns whether it was accepted.
    pub fn commit(&mut self) -> Result<bool> {
        let (w_hat, radii) = self.candidate()?;
        let next = gated_commit(&self.committed, w_hat, radii);
        let accepted = next != self.committed;
        self.committed = next;
        Ok(accepted)
    }

    pub fn committed(&self) -> &CommittedEstimate {
        &self.committed
    }
}
