//! Constraint-tightened robust MPC over causal affine disturbance feedback,
//! and the certainty-equivalent matching law.

mod qp;
mod solver;

pub use qp::{build_qp, QpForm, QpLayout};
pub use solver::{solve_qp, QpOutcome, FEAS_TOL};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{BoxSet, HPolytope};

/// How later inputs react to realized disturbances.
#[derive(Clone, Debug, PartialEq)]
pub enum FeedbackMode {
    /// Gains `K_{k,j}` are decision variables.
    Optimized,
    /// `u_k = ū_k − K (x_k − x̄_k)` with a given gain.
    FixedGain(DMatrix<f64>),
    /// No feedback inside the horizon.
    OpenLoop,
}

#[derive(Clone, Debug)]
pub struct MpcConfig {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub horizon: usize,
    pub x: HPolytope,
    pub u: HPolytope,
    pub feedback: FeedbackMode,
}

impl MpcConfig {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if self.a.ncols() != n {
            return Err(Error::dim("A columns", n, self.a.ncols()));
        }
        if self.b.nrows() != n {
            return Err(Error::dim("B rows", n, self.b.nrows()));
        }
        if self.q.shape() != (n, n) {
            return Err(Error::dim("Q", n, self.q.nrows()));
        }
        if self.r.shape() != (m, m) {
            return Err(Error::dim("R", m, self.r.nrows()));
        }
        if self.x.dim() != n {
            return Err(Error::dim("state constraints", n, self.x.dim()));
        }
        if self.u.dim() != m {
            return Err(Error::dim("input constraints", m, self.u.dim()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        for (name, mat) in [("Q", &self.q), ("R", &self.r)] {
            let sym = (mat + mat.transpose()) * 0.5;
            if (mat - &sym).amax() > 1e-12 || sym.cholesky().is_none() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be symmetric positive definite"
                )));
            }
        }
        if let FeedbackMode::FixedGain(k) = &self.feedback {
            if k.shape() != (m, n) {
                return Err(Error::dim("fixed feedback gain", m, k.nrows()));
            }
        }
        Ok(())
    }
}

/// Moore–Penrose pseudoinverse `(BᵀB)⁻¹Bᵀ` of a full-column-rank matrix.
pub fn pseudo_inverse(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = b.transpose() * b;
    let scale = gram.amax().max(1.0);
    let eig = nalgebra::SymmetricEigen::new(gram.clone());
    if eig.eigenvalues.min() <= 1e-12 * scale {
        return Err(Error::RankDeficient);
    }
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    Ok(chol.solve(&b.transpose()))
}

/// Per-step ingredients of the robust program.
#[derive(Clone, Debug)]
pub struct Ingredients {
    pub d_hat: BoxSet,
    pub u_tight: HPolytope,
    pub terminal: HPolytope,
    pub p: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpcStatus {
    Optimal,
    Infeasible,
}

impl MpcStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MpcStatus::Optimal => "optimal",
            MpcStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MpcSolution {
    pub status: MpcStatus,
    /// Nominal inputs `ū_0 … ū_{N-1}`.
    pub u_bar: Vec<DVector<f64>>,
    /// `gains[k][j] = K_{k,j}` for `j < k`.
    pub gains: Vec<Vec<DMatrix<f64>>>,
    /// Nominal states `x̄_0 … x̄_N`.
    pub nominal: Vec<DVector<f64>>,
    /// Optimal value (`+inf` when infeasible).
    pub cost: f64,
}

impl MpcSolution {
    fn infeasible() -> Self {
        Self {
            status: MpcStatus::Infeasible,
            u_bar: Vec::new(),
            gains: Vec::new(),
            nominal: Vec::new(),
            cost: f64::INFINITY,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == MpcStatus::Optimal
    }

    /// First input of the optimal policy.
    pub fn first_input(&self) -> Option<&DVector<f64>> {
        self.u_bar.first()
    }

    /// Policy input at step `k` after disturbances `d_0 … d_{k-1}`.
    pub fn policy_input(&self, k: usize, ds: &[DVector<f64>]) -> DVector<f64> {
        let mut u = self.u_bar[k].clone();
        for (j, d) in ds.iter().enumerate().take(k) {
            u += &self.gains[k][j] * d;
        }
        u
    }

    /// Realized states and inputs under a disturbance sequence of length N.
    pub fn rollout(
        &self,
        cfg: &MpcConfig,
        x0: &DVector<f64>,
        ds: &[DVector<f64>],
    ) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let mut xs = vec![x0.clone()];
        let mut us = Vec::new();
        for k in 0..self.u_bar.len() {
            let u = self.policy_input(k, ds);
            let next = &cfg.a * &xs[k] + &cfg.b * &u + &ds[k];
            us.push(u);
            xs.push(next);
        }
        (xs, us)
    }
}

/// Solve the robust program at `x0`.
pub fn solve_step(cfg: &MpcConfig, x0: &DVector<f64>, ing: &Ingredients) -> Result<MpcSolution> {
    let qp = build_qp(cfg, x0, &ing.d_hat, &ing.u_tight, &ing.terminal, &ing.p)?;
    match solve_qp(&qp)? {
        QpOutcome::Infeasible => Ok(MpcSolution::infeasible()),
        QpOutcome::Optimal { z, cost } => Ok(unpack(cfg, x0, &qp, &z, cost)),
    }
}

fn unpack(cfg: &MpcConfig, x0: &DVector<f64>, qp: &QpForm, z: &[f64], cost: f64) -> MpcSolution {
    let (n, m, horizon) = (cfg.n(), cfg.m(), cfg.horizon);
    let layout = &qp.layout;
    let u_bar: Vec<DVector<f64>> = (0..horizon)
        .map(|k| DVector::from_fn(m, |r, _| z[layout.input_col(k, r)]))
        .collect();
    let fixed = match &cfg.feedback {
        FeedbackMode::FixedGain(k) => Some((k.clone(), &cfg.a - &cfg.b * k)),
        _ => None,
    };
    let gains = (0..horizon)
        .map(|k| {
            (0..k)
                .map(|j| match (&cfg.feedback, &fixed) {
                    (FeedbackMode::Optimized, _) => {
                        DMatrix::from_fn(m, n, |r, c| z[layout.gain_col(k, j, r, c)])
                    }
                    (FeedbackMode::FixedGain(_), Some((gain, a_k))) => {
                        -(gain * a_k.pow((k - 1 - j) as u32))
                    }
                    _ => DMatrix::zeros(m, n),
                })
                .collect()
        })
        .collect();
    let mut nominal = vec![x0.clone()];
    for k in 0..horizon {
        let next = &cfg.a * &nominal[k] + &cfg.b * &u_bar[k];
        nominal.push(next);
    }
    MpcSolution {
        status: MpcStatus::Optimal,
        u_bar,
        gains,
        nominal,
        cost,
    }
}

/// Benchmark tube MPC: disturbance box `V′ = F̂ ⊕ V`, untightened inputs,
/// its own terminal set, and no cancellation.
pub fn benchmark_step(
    cfg: &MpcConfig,
    x0: &DVector<f64>,
    v_prime: &BoxSet,
    terminal: &HPolytope,
    p: &DMatrix<f64>,
) -> Result<MpcSolution> {
    let ing = Ingredients {
        d_hat: v_prime.clone(),
        u_tight: cfg.u.clone(),
        terminal: terminal.clone(),
        p: p.clone(),
    };
    solve_step(cfg, x0, &ing)
}

/// Certainty-equivalent input `u* − B† f̂`, with `f̂` optionally clamped
/// into a known box first.
pub fn ce_policy(
    u_star: &DVector<f64>,
    f_hat: &DVector<f64>,
    b_dagger: &DMatrix<f64>,
    clamp: Option<&BoxSet>,
) -> DVector<f64> {
    match clamp {
        Some(bx) => u_star - b_dagger * bx.clamp(f_hat),
        None => u_star - b_dagger * f_hat,
    }
}
