//! Dense LP contract used by the polytope routines.
//!
//! Everything goes through [`solve`]: optimize a linear objective over
//! `{x : A x ≤ b}` with free variables. The backend is a primal simplex, so
//! optimal values are vertex-exact up to floating point.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimizer when `status` is optimal, otherwise zeros.
    pub x: DVector<f64>,
    /// Finite iff `status` is optimal; `±inf` otherwise, signed so that an
    /// infeasible maximization reads `-inf` and an unbounded one `+inf`.
    pub value: f64,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, sense: Sense, n: usize) -> Self {
        let value = match (status, sense) {
            (LpStatus::Infeasible, Sense::Maximize) | (LpStatus::Unbounded, Sense::Minimize) => {
                f64::NEG_INFINITY
            }
            _ => f64::INFINITY,
        };
        Self {
            status,
            x: DVector::zeros(n),
            value,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Optimize `cᵀx` over `{x : A x ≤ b}`.
pub fn solve(
    objective: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    sense: Sense,
) -> Result<LpSolution> {
    let n = objective.len();
    if a.ncols() != n {
        return Err(Error::dim("LP constraint columns", n, a.ncols()));
    }
    if a.nrows() != b.len() {
        return Err(Error::dim("LP offsets", a.nrows(), b.len()));
    }
    if objective
        .iter()
        .chain(a.iter())
        .chain(b.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("LP data"));
    }

    let direction = match sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    };
    let mut problem = Problem::new(direction);
    // A variable absent from every row is pinned at zero; if it carries
    // objective weight the problem is unbounded whenever it is feasible.
    let free_direction =
        (0..n).any(|j| objective[j] != 0.0 && a.column(j).iter().all(|v| *v == 0.0));
    let vars: Vec<_> = objective
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let bounds = if a.column(j).iter().all(|v| *v == 0.0) {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            problem.add_var(c, bounds)
        })
        .collect();
    for (i, row) in a.row_iter().enumerate() {
        let terms: Vec<_> = row
            .iter()
            .zip(vars.iter())
            .filter(|(v, _)| **v != 0.0)
            .map(|(v, var)| (*var, *v))
            .collect();
        if terms.is_empty() {
            if b[i] < 0.0 {
                return Ok(LpSolution::non_optimal(LpStatus::Infeasible, sense, n));
            }
            continue;
        }
        problem.add_constraint(terms.as_slice(), ComparisonOp::Le, b[i]);
    }

    match problem.solve() {
        Ok(_) if free_direction => Ok(LpSolution::non_optimal(LpStatus::Unbounded, sense, n)),
        Ok(outcome) => {
            let solution = outcome
                .into_solution()
                .map_err(|_| Error::Lp("LP solve interrupted".into()))?;
            let x = DVector::from_iterator(n, vars.iter().map(|v| solution.var_value(*v)));
            Ok(LpSolution {
                status: LpStatus::Optimal,
                value: objective.dot(&x),
                x,
            })
        }
        Err(microlp::Error::Infeasible) => {
            Ok(LpSolution::non_optimal(LpStatus::Infeasible, sense, n))
        }
        Err(microlp::Error::Unbounded) => {
            Ok(LpSolution::non_optimal(LpStatus::Unbounded, sense, n))
        }
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}
