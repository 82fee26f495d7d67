//! Terminal ingredients: LQR cost and gain from the discrete algebraic
//! Riccati equation, and the maximal robust positive invariant set.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{pre_set, BoxSet, HPolytope, SET_TOL};

pub const DARE_TOL: f64 = 1e-10;
pub const DARE_MAX_ITER: usize = 100_000;
pub const RPI_MAX_ITER: usize = 200;

#[derive(Clone, Debug)]
pub struct TerminalIngredients {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub o: HPolytope,
}

/// Fixed point of `P ← Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA`, and
/// `K = (R + BᵀPB)⁻¹ BᵀPA`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::dim("DARE system", n, b.nrows()));
    }
    if q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dim("DARE weights", n, q.nrows()));
    }
    let gain = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let s = r + b.transpose() * p * b;
        let chol = s
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("R + BᵀPB is not positive definite".into()))?;
        Ok(chol.solve(&(b.transpose() * p * a)))
    };
    let mut p = q.clone();
    for _ in 0..DARE_MAX_ITER {
        let k = gain(&p)?;
        let mut next = q + a.transpose() * &p * a - a.transpose() * &p * b * &k;
        next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let diff = (&next - &p).amax();
        p = next;
        if diff <= DARE_TOL * p.amax().max(1.0) {
            let k = gain(&p)?;
            return Ok((p, k));
        }
    }
    Err(Error::NotStabilizable {
        iterations: DARE_MAX_ITER,
    })
}

/// Maximal robust positive invariant set of `x⁺ = A_K x + d`, `d ∈ D̂`,
/// inside `X ∩ {x : −Kx ∈ U_tight}`. An empty result is returned as an
/// (empty) polytope, not as an error.
pub fn max_rpi(
    a_k: &DMatrix<f64>,
    x: &HPolytope,
    u_tight: &HPolytope,
    k: &DMatrix<f64>,
    d_hat: &BoxSet,
) -> Result<HPolytope> {
    let n = x.dim();
    if k.ncols() != n || k.nrows() != u_tight.dim() {
        return Err(Error::dim("terminal gain", u_tight.dim(), k.nrows()));
    }
    let input_rows = u_tight.preimage(&(-k))?;
    let omega0 = x.intersect_reduce(&input_rows)?;
    if omega0.is_empty()? {
        return Ok(HPolytope::empty(n));
    }
    let mut omega = omega0.clone();
    for _ in 0..RPI_MAX_ITER {
        let next = pre_set(a_k, &omega, d_hat)?.intersect_reduce(&omega0)?;
        if next.is_empty()? {
            return Ok(HPolytope::empty(n));
        }
        // next ⊆ omega always holds; convergence is the reverse inclusion
        if omega.is_subset_of(&next, SET_TOL)? {
            return Ok(next);
        }
        omega = next;
    }
    Err(Error::RpiNotConverged {
        iterations: RPI_MAX_ITER,
        last: Box::new(omega),
    })
}

/// DARE terminal cost and gain plus the maximal RPI set for `D̂`.
pub fn terminal_ingredients(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &HPolytope,
    u_tight: &HPolytope,
    d_hat: &BoxSet,
) -> Result<TerminalIngredients> {
    let (p, k) = solve_dare(a, b, q, r)?;
    let a_k = a - b * &k;
    let o = max_rpi(&a_k, x, u_tight, &k, d_hat)?;
    Ok(TerminalIngredients { p, k, o })
}
