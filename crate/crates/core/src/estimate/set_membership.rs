use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{BoxSet, HPolytope};

/// Feasible parameter set of one row of `W` under a bounded noise
/// coordinate `|v_i| ≤ σ_i`.
#[derive(Clone, Debug)]
pub struct SetMembershipRow {
    feasible: HPolytope,
    noise_bound: f64,
}

impl SetMembershipRow {
    pub fn new(feasible: HPolytope, noise_bound: f64) -> Result<Self> {
        if !(noise_bound >= 0.0) || !noise_bound.is_finite() {
            return Err(Error::InvalidArgument("noise bound must be nonnegative".into()));
        }
        if feasible.is_empty()? {
            return Err(Error::EmptySet);
        }
        Ok(Self {
            feasible,
            noise_bound,
        })
    }

    /// Prior box `ŵ₀ ± r₀` in every coordinate.
    pub fn from_prior(w0: &DVector<f64>, r0: f64, noise_bound: f64) -> Result<Self> {
        let radii = DVector::from_element(w0.len(), r0);
        let prior = BoxSet::new(w0.clone(), radii)?;
        Self::new(prior.to_polytope(), noise_bound)
    }

    pub fn feasible(&self) -> &HPolytope {
        &self.feasible
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    /// Intersect with the slab `|wᵀφ − residual| ≤ σ`. `step` only labels
    /// the error when the set empties.
    pub fn update(&mut self, phi: &DVector<f64>, residual: f64, row: usize, step: usize) -> Result<()> {
        if phi.len() != self.feasible.dim() {
            return Err(Error::dim("set-membership feature", self.feasible.dim(), phi.len()));
        }
        if phi.iter().any(|v| !v.is_finite()) || !residual.is_finite() {
            return Err(Error::NonFinite("set-membership observation"));
        }
        if phi.norm() <= 1e-14 {
            return Ok(());
        }
        let d = phi.len();
        let mut a = DMatrix::zeros(2, d);
        a.row_mut(0).copy_from(&phi.transpose());
        a.row_mut(1).copy_from(&(-phi).transpose());
        let b = DVector::from_vec(vec![
            residual + self.noise_bound,
            self.noise_bound - residual,
        ]);
        let slab = HPolytope::new(a, b)?;
        let next = self.feasible.intersect_reduce(&slab)?;
        if next.is_empty()? {
            return Err(Error::NoiseModelViolated { row, step });
        }
        self.feasible = next;
        Ok(())
    }

    /// Point estimate and a Euclidean radius covering the whole feasible set:
    /// the center and half-diagonal of its interval hull.
    pub fn point(&self) -> Result<(DVector<f64>, f64)> {
        let hull = self.feasible.interval_hull()?;
        if hull.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok((hull.center().clone(), hull.radii().norm()))
    }
}
