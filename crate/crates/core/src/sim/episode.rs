use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::plant::Plant;
use crate::controller::Controller;
use crate::error::Result;
use crate::geom::BoxSet;
use crate::mpc::{MpcConfig, MpcSolution};

/// Tolerance on realized constraint checks.
pub const VIOLATION_TOL: f64 = 1e-9;

/// One row of the trace. Input, noise and solver fields are absent on the
/// final row and on the row where the program turned infeasible.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub t: usize,
    pub x: DVector<f64>,
    pub u: Option<DVector<f64>>,
    pub v: Option<DVector<f64>>,
    pub cost_stage: Option<f64>,
    pub qp_status: Option<&'static str>,
    pub qp_cost: Option<f64>,
    pub radii: DVector<f64>,
    pub f_hat_radii: DVector<f64>,
    pub d_hat_radii: DVector<f64>,
    pub w_hat_norms: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub trace: Vec<TraceRecord>,
    /// `Σ_t x(t)ᵀQx(t) + u(t)ᵀRu(t)` over applied inputs.
    pub realized_cost: f64,
    /// False if the robust program was infeasible at some step; the trace
    /// stops there.
    pub feasible: bool,
    /// First realized state or input constraint violation, if any.
    pub violation: Option<String>,
    /// Predicted tube (one box per horizon step) at every solved step.
    pub tubes: Vec<Vec<BoxSet>>,
}

impl EpisodeResult {
    pub fn final_state(&self) -> &DVector<f64> {
        &self.trace.last().expect("trace has the initial state").x
    }

    pub fn steps_completed(&self) -> usize {
        self.trace.iter().filter(|r| r.u.is_some()).count()
    }
}

#[derive(Serialize)]
pub struct EpisodeSummary {
    pub realized_cost: f64,
    pub feasible: bool,
    pub violation: Option<String>,
    pub steps: usize,
    pub final_state: Vec<f64>,
}

impl From<&EpisodeResult> for EpisodeSummary {
    fn from(r: &EpisodeResult) -> Self {
        Self {
            realized_cost: r.realized_cost,
            feasible: r.feasible,
            violation: r.violation.clone(),
            steps: r.steps_completed(),
            final_state: r.final_state().iter().copied().collect(),
        }
    }
}

fn snapshot(t: usize, x: &DVector<f64>, controller: &Controller) -> TraceRecord {
    let est = controller.committed();
    TraceRecord {
        t,
        x: x.clone(),
        u: None,
        v: None,
        cost_stage: None,
        qp_status: None,
        qp_cost: None,
        radii: est.radii.clone(),
        f_hat_radii: controller.bounds().f_hat.radii().clone(),
        d_hat_radii: controller.ingredients().d_hat.radii().clone(),
        w_hat_norms: est.row_norms(),
    }
}

/// Boxes `x̄_k ⊕ hull(Σ_j M_{k,j} D̂)` of the predicted reachable sets.
pub fn predicted_tube(cfg: &MpcConfig, sol: &MpcSolution, d_hat: &BoxSet) -> Vec<BoxSet> {
    let n = cfg.n();
    let horizon = sol.u_bar.len();
    let mut tube = Vec::with_capacity(horizon + 1);
    // m_rows[j] = M_{k,j} for the current k
    let mut m_rows: Vec<DMatrix<f64>> = Vec::new();
    for k in 0..=horizon {
        if k > 0 {
            // M_{k,j} = A M_{k-1,j} + B K_{k-1,j} for j < k-1; M_{k,k-1} = I
            m_rows = m_rows
                .iter()
                .enumerate()
                .map(|(j, mj)| &cfg.a * mj + &cfg.b * &sol.gains[k - 1][j])
                .collect();
            m_rows.push(DMatrix::identity(n, n));
        }
        let mut radii = DVector::zeros(n);
        let mut center = sol.nominal[k].clone();
        for mj in &m_rows {
            radii += mj.abs() * d_hat.radii();
            center += mj * d_hat.center();
        }
        tube.push(BoxSet::new(center, radii).expect("nonnegative radii"));
    }
    tube
}

/// Run one closed-loop episode from `x0` for `steps` steps.
pub fn run_episode<R: Rng + ?Sized>(
    plant: &Plant,
    controller: &mut Controller,
    x0: &DVector<f64>,
    steps: usize,
    rng: &mut R,
) -> Result<EpisodeResult> {
    let mut trace = Vec::with_capacity(steps + 1);
    let mut tubes = Vec::new();
    let mut realized_cost = 0.0;
    let mut violation = None;
    let mut feasible = true;
    let mut x = x0.clone();
    let (q, r) = (controller.mpc().q.clone(), controller.mpc().r.clone());

    if !controller.mpc().x.contains(&x, VIOLATION_TOL) {
        violation = Some("initial state outside X".to_string());
    }

    for t in 0..steps {
        let mut record = snapshot(t, &x, controller);
        let decision = controller.act(&x)?;
        record.qp_status = Some(decision.solution.status.as_str());
        let Some(u) = decision.input else {
            feasible = false;
            trace.push(record);
            break;
        };
        record.qp_cost = Some(decision.solution.cost);
        tubes.push(predicted_tube(
            controller.mpc(),
            &decision.solution,
            &controller.ingredients().d_hat,
        ));

        let v = plant.noise.sample(plant.n(), rng);
        let x_next = plant.step(&x, &u, &v);
        let stage = x.dot(&(&q * &x)) + u.dot(&(&r * &u));
        realized_cost += stage;

        if violation.is_none() {
            if !controller.mpc().u.contains(&u, VIOLATION_TOL) {
                violation = Some(format!("input {:?} outside U at t = {t}", u.as_slice()));
            } else if !controller.mpc().x.contains(&x_next, VIOLATION_TOL) {
                violation = Some(format!("state {:?} outside X at t = {}", x_next.as_slice(), t + 1));
            }
        }

        record.u = Some(u.clone());
        record.v = Some(v);
        record.cost_stage = Some(stage);
        trace.push(record);

        controller.observe(&x, &u, &x_next)?;
        x = x_next;
    }
    if feasible {
        trace.push(snapshot(steps, &x, controller));
    }
    controller.end_episode()?;
    Ok(EpisodeResult {
        trace,
        realized_cost,
        feasible,
        violation,
        tubes,
    })
}
