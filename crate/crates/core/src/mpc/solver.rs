//! Interior-point backend for [`QpForm`].

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::qp::QpForm;
use crate::error::{Error, Result};

/// Accepted primal infeasibility of a returned solution.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub enum QpOutcome {
    Optimal { z: Vec<f64>, cost: f64 },
    Infeasible,
}

pub fn solve_qp(qp: &QpForm) -> Result<QpOutcome> {
    if qp.trivially_infeasible {
        return Ok(QpOutcome::Infeasible);
    }
    let nz = qp.num_vars();
    let nu = qp.layout.num_inputs();

    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..nu {
        for r in 0..=c {
            let v = qp.h_inputs[(r, c)];
            if v != 0.0 {
                pi.push(r);
                pj.push(c);
                pv.push(v);
            }
        }
    }
    let p = CscMatrix::new_from_triplets(nz, nz, pi, pj, pv);
    let mut q = vec![0.0; nz];
    q[..nu].copy_from_slice(qp.g_inputs.as_slice());

    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    for (r, row) in qp.rows.iter().enumerate() {
        for &(c, v) in row {
            ai.push(r);
            aj.push(c);
            av.push(v);
        }
    }
    let a = CscMatrix::new_from_triplets(qp.rows.len(), nz, ai, aj, av);
    let cones = [SupportedConeT::NonnegativeConeT(qp.rows.len())];

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(400)
        .build()
        .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &qp.rhs, &cones, settings)
        .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
    solver.solve();

    let status = solver.solution.status;
    match status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            Ok(QpOutcome::Infeasible)
        }
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let z = solver.solution.x.clone();
            let violation = qp.max_violation(&z);
            if violation <= FEAS_TOL && z.iter().all(|v| v.is_finite()) {
                let cost = qp.objective(&z);
                Ok(QpOutcome::Optimal { z, cost })
            } else {
                Err(Error::Solver(format!(
                    "{status:?} with constraint violation {violation:.3e}"
                )))
            }
        }
        other => Err(Error::Solver(format!("{other:?}"))),
    }
}
