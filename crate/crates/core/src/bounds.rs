//! Disturbance supports built from the committed estimate.
//!
//! * `F`: support of `Ŵφ(x)` and of the true `f` given the committed radii,
//! * `F̂`: running intersection of every `F` so far,
//! * `D`: support of the estimation error `(Ŵ − W)φ(x)`,
//! * `D̂`: compound disturbance `(I − BB†)F̂ ⊕ BB†D ⊕ V` seen by the
//!   cancelling controller.
//!
//! All are zero-centered boxes; they rely on `‖φ(x)‖ ≤ 1` on `X`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::estimate::CommittedEstimate;
use crate::geom::BoxSet;
use crate::mpc::pseudo_inverse;

/// `|z_i| ≤ ‖ŵ_i‖ + 2 r_i`.
pub fn f_support(w_hat: &DMatrix<f64>, radii: &DVector<f64>) -> Result<BoxSet> {
    if w_hat.nrows() != radii.len() {
        return Err(Error::dim("support radii", w_hat.nrows(), radii.len()));
    }
    let r = DVector::from_iterator(
        radii.len(),
        w_hat
            .row_iter()
            .zip(radii.iter())
            .map(|(row, r)| row.norm() + 2.0 * r),
    );
    BoxSet::centered(r)
}

/// Running intersection; `prev = None` is the base case.
pub fn f_hat_step(prev: Option<&BoxSet>, now: &BoxSet) -> Result<BoxSet> {
    match prev {
        None => Ok(now.clone()),
        Some(p) => {
            if p.dim() != now.dim() {
                return Err(Error::dim("support intersection", p.dim(), now.dim()));
            }
            BoxSet::centered(p.radii().inf(now.radii()))
        }
    }
}

/// `|z_i| ≤ r_i`.
pub fn d_bound(radii: &DVector<f64>) -> Result<BoxSet> {
    BoxSet::centered(radii.clone())
}

/// `(I − BB†)F̂ ⊕ BB†D ⊕ V` as an interval hull.
pub fn compound_disturbance(
    b: &DMatrix<f64>,
    f_hat: &BoxSet,
    d: &BoxSet,
    v: &BoxSet,
) -> Result<BoxSet> {
    let n = b.nrows();
    let proj = b * pseudo_inverse(b)?;
    let unmatched = DMatrix::identity(n, n) - &proj;
    f_hat
        .image_hull(&unmatched)?
        .minkowski_sum(&d.image_hull(&proj)?)?
        .minkowski_sum(v)
}

/// The bound family for one committed estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyBounds {
    pub f: BoxSet,
    pub f_hat: BoxSet,
    pub d: BoxSet,
    pub d_hat: BoxSet,
    pub v: BoxSet,
}

impl UncertaintyBounds {
    /// Bounds for the first commit. A zero-centered `prior` box known to
    /// contain the range of `f` caps `F̂` from the start.
    pub fn initial(
        b: &DMatrix<f64>,
        est: &CommittedEstimate,
        v: &BoxSet,
        prior: Option<&BoxSet>,
    ) -> Result<Self> {
        Self::from_parts(b, est, v, prior)
    }

    /// Bounds after a (possibly unchanged) commit.
    pub fn advance(&self, b: &DMatrix<f64>, est: &CommittedEstimate) -> Result<Self> {
        Self::from_parts(b, est, &self.v, Some(&self.f_hat))
    }

    fn from_parts(
        b: &DMatrix<f64>,
        est: &CommittedEstimate,
        v: &BoxSet,
        prev_f_hat: Option<&BoxSet>,
    ) -> Result<Self> {
        let f = f_support(&est.w_hat, &est.radii)?;
        let f_hat = f_hat_step(prev_f_hat, &f)?;
        let d = d_bound(&est.radii)?;
        let d_hat = compound_disturbance(b, &f_hat, &d, v)?;
        Ok(Self {
            f,
            f_hat,
            d,
            d_hat,
            v: v.clone(),
        })
    }

    /// Disturbance box of the benchmark controller, `F̂ ⊕ V`.
    pub fn benchmark_box(&self) -> Result<BoxSet> {
        self.f_hat.minkowski_sum(&self.v)
    }

    /// Input set shrinkage `B†F̂` for the cancelling controller.
    pub fn input_margin(&self, b: &DMatrix<f64>) -> Result<BoxSet> {
        self.f_hat.image_hull(&pseudo_inverse(b)?)
    }
}

/// Reject feature maps with `‖φ(x)‖ > 1 + tol` on sampled points of `region`.
pub fn check_feature_norm<F, R>(
    features: F,
    region: &BoxSet,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<()>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    R: Rng + ?Sized,
{
    let lo = region.lower();
    let hi = region.upper();
    for _ in 0..samples {
        let x = DVector::from_fn(region.dim(), |i, _| {
            lo[i] + (hi[i] - lo[i]) * rng.random::<f64>()
        });
        let norm = features(&x).norm();
        if norm > 1.0 + tol {
            return Err(Error::Config(format!(
                "feature norm {norm:.6} exceeds 1 at x = {:?}",
                x.as_slice()
            )));
        }
    }
    Ok(())
}
