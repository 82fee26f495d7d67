//! Closed-loop controller: estimate → bounds → terminal set → robust QP →
//! input.
//!
//! Three variants share the machinery:
//!
//! * `Ce` cancels `B B† f̂` and robustifies against `D̂`, with inputs
//!   tightened by `B†F̂`;
//! * `Benchmark` cancels nothing and treats `F̂ ⊕ V` as the disturbance;
//! * `Naive` ignores the unknown term and only covers the noise `V`.

use nalgebra::{DMatrix, DVector};

use crate::bounds::UncertaintyBounds;
use crate::config::{ControllerKind, Refresh};
use crate::error::{Error, Result};
use crate::estimate::{CommittedEstimate, Estimator};
use crate::geom::{BoxSet, HPolytope};
use crate::mpc::{ce_policy, pseudo_inverse, solve_step, Ingredients, MpcConfig, MpcSolution};
use crate::sim::features::FeatureMap;
use crate::terminal::{max_rpi, solve_dare};

/// Outcome of one control decision.
#[derive(Clone, Debug)]
pub struct Decision {
    /// Input to apply; `None` when the robust program is infeasible.
    pub input: Option<DVector<f64>>,
    pub solution: MpcSolution,
    /// Prediction `Ŵφ(x)` used for cancellation (zero for the benchmarks).
    pub f_hat: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct Controller {
    kind: ControllerKind,
    refresh: Refresh,
    mpc: MpcConfig,
    features: FeatureMap,
    clamp: Option<BoxSet>,
    b_dagger: DMatrix<f64>,
    p: DMatrix<f64>,
    k: DMatrix<f64>,
    a_k: DMatrix<f64>,
    estimator: Estimator,
    bounds: UncertaintyBounds,
    ingredients: Ingredients,
}

impl Controller {
    pub fn new(
        kind: ControllerKind,
        refresh: Refresh,
        mpc: MpcConfig,
        features: FeatureMap,
        v: BoxSet,
        clamp: Option<BoxSet>,
        estimator: Estimator,
    ) -> Result<Self> {
        mpc.validate()?;
        let n = mpc.n();
        if v.dim() != n {
            return Err(Error::dim("noise box", n, v.dim()));
        }
        if estimator.state_dim() != n || estimator.feature_dim() != features.dim() {
            return Err(Error::dim("estimator shape", n, estimator.state_dim()));
        }
        let b_dagger = pseudo_inverse(&mpc.b)?;
        let (p, k) = solve_dare(&mpc.a, &mpc.b, &mpc.q, &mpc.r)?;
        let a_k = &mpc.a - &mpc.b * &k;
        let bounds = UncertaintyBounds::initial(&mpc.b, estimator.committed(), &v, clamp.as_ref())?;
        let ingredients = compute_ingredients(kind, &mpc, &bounds, &p, &k, &a_k, None)?;
        Ok(Self {
            kind,
            refresh,
            mpc,
            features,
            clamp,
            b_dagger,
            p,
            k,
            a_k,
            estimator,
            bounds,
            ingredients,
        })
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn mpc(&self) -> &MpcConfig {
        &self.mpc
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn committed(&self) -> &CommittedEstimate {
        self.estimator.committed()
    }

    pub fn bounds(&self) -> &UncertaintyBounds {
        &self.bounds
    }

    pub fn ingredients(&self) -> &Ingredients {
        &self.ingredients
    }

    /// LQR gain used for the terminal set.
    pub fn lqr_gain(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Solve the robust program at `x` without changing any state.
    pub fn plan(&self, x: &DVector<f64>) -> Result<MpcSolution> {
        solve_step(&self.mpc, x, &self.ingredients)
    }

    /// `f̂(x)` as the cancelling controller applies it (after clamping).
    pub fn prediction(&self, x: &DVector<f64>) -> DVector<f64> {
        let raw = &self.estimator.committed().w_hat * self.features.eval(x);
        match &self.clamp {
            Some(c) => {
                let within = c.intersect(&self.bounds.f_hat).unwrap_or_else(|_| c.clone());
                within.clamp(&raw)
            }
            None => raw,
        }
    }

    pub fn act(&self, x: &DVector<f64>) -> Result<Decision> {
        let solution = self.plan(x)?;
        let n = self.mpc.n();
        let (input, f_hat) = match (solution.first_input(), self.kind) {
            (None, _) => (None, DVector::zeros(n)),
            (Some(u), ControllerKind::Ce) => {
                let f_hat = self.prediction(x);
                (Some(ce_policy(u, &f_hat, &self.b_dagger, None)), f_hat)
            }
            (Some(u), _) => (Some(u.clone()), DVector::zeros(n)),
        };
        Ok(Decision {
            input,
            solution,
            f_hat,
        })
    }

    /// Feed one transition to the estimator; with per-step refresh, the
    /// bounds and terminal set follow immediately.
    pub fn observe(&mut self, x: &DVector<f64>, u: &DVector<f64>, x_next: &DVector<f64>) -> Result<()> {
        let n = self.mpc.n();
        if x.len() != n || x_next.len() != n {
            return Err(Error::dim("observed state", n, x.len().min(x_next.len())));
        }
        if u.len() != self.mpc.m() {
            return Err(Error::dim("observed input", self.mpc.m(), u.len()));
        }
        let y = x_next - &self.mpc.a * x - &self.mpc.b * u;
        self.estimator.observe(&self.features.eval(x), &y)?;
        if self.refresh == Refresh::Step {
            self.refresh_now()?;
        }
        Ok(())
    }

    /// Episode boundary; with per-episode refresh this is when the new
    /// estimate reaches the controller.
    pub fn end_episode(&mut self) -> Result<()> {
        if self.refresh == Refresh::Episode {
            self.refresh_now()?;
        }
        Ok(())
    }

    fn refresh_now(&mut self) -> Result<()> {
        self.estimator.commit()?;
        let bounds = self.bounds.advance(&self.mpc.b, self.estimator.committed())?;
        if bounds != self.bounds {
            self.ingredients = compute_ingredients(
                self.kind,
                &self.mpc,
                &bounds,
                &self.p,
                &self.k,
                &self.a_k,
                Some(&self.ingredients),
            )?;
            self.bounds = bounds;
        }
        Ok(())
    }
}

fn compute_ingredients(
    kind: ControllerKind,
    mpc: &MpcConfig,
    bounds: &UncertaintyBounds,
    p: &DMatrix<f64>,
    k: &DMatrix<f64>,
    a_k: &DMatrix<f64>,
    previous: Option<&Ingredients>,
) -> Result<Ingredients> {
    let (d_hat, u_tight) = match kind {
        ControllerKind::Ce => (
            bounds.d_hat.clone(),
            mpc.u.pontryagin_diff_box(&bounds.input_margin(&mpc.b)?)?,
        ),
        ControllerKind::Benchmark => (bounds.benchmark_box()?, mpc.u.clone()),
        ControllerKind::Naive => (bounds.v.clone(), mpc.u.clone()),
    };
    if let Some(prev) = previous {
        if prev.d_hat == d_hat && prev.u_tight == u_tight {
            return Ok(prev.clone());
        }
    }
    let terminal = if u_tight.is_empty()? {
        HPolytope::empty(mpc.n())
    } else {
        max_rpi(a_k, &mpc.x, &u_tight, k, &d_hat)?
    };
    Ok(Ingredients {
        d_hat,
        u_tight,
        terminal,
        p: p.clone(),
    })
}
