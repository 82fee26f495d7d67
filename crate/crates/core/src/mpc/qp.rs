//! Robust counterpart of the tube MPC over causal affine disturbance
//! feedback, compiled to a convex QP.
//!
//! Policy: `u_k = ū_k + Σ_{j<k} K_{k,j} d_j`. Realized states are
//! `x_k = x̄_k + Σ_{j<k} M_{k,j} d_j` with
//! `M_{k,j} = A^{k-1-j} + Σ_{i=j+1}^{k-1} A^{k-1-i} B K_{i,j}`.
//! A row `aᵀ(·) ≤ b` must hold for every `d_j` in the box `c ± r`, which is
//! `aᵀ(nominal) + Σ_j (cᵀ coefᵀ_j + Σ_l |coef_{j,l}| r_l) ≤ b`; each
//! `|coef_{j,l}|` that depends on decision variables gets an epigraph
//! variable.

use nalgebra::{DMatrix, DVector, RowDVector};

use super::{FeedbackMode, MpcConfig};
use crate::error::{Error, Result};
use crate::geom::{BoxSet, HPolytope};

/// Sparse linear expression `constant + Σ coef·z_col`.
#[derive(Clone, Debug, Default)]
struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl Affine {
    fn constant(v: f64) -> Self {
        Self {
            constant: v,
            terms: Vec::new(),
        }
    }

    fn add_scaled(&mut self, other: &Affine, s: f64) {
        if s == 0.0 {
            return;
        }
        self.constant += s * other.constant;
        self.terms
            .extend(other.terms.iter().map(|&(c, v)| (c, v * s)));
    }

    fn compress(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (c, v) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => out.push((c, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }
}

/// Column bookkeeping for the QP variable vector
/// `z = [ū_0 … ū_{N-1} | K_{k,j} (row-major, j < k) | epigraph t]`.
#[derive(Clone, Debug)]
pub struct QpLayout {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub optimized_gains: bool,
    pub num_abs: usize,
}

impl QpLayout {
    pub fn num_inputs(&self) -> usize {
        self.horizon * self.m
    }

    pub fn num_gains(&self) -> usize {
        if self.optimized_gains {
            self.horizon * (self.horizon - 1) / 2 * self.m * self.n
        } else {
            0
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_inputs() + self.num_gains() + self.num_abs
    }

    pub fn input_col(&self, k: usize, r: usize) -> usize {
        k * self.m + r
    }

    /// Column of entry `(r, c)` of `K_{k,j}`, `j < k`.
    pub fn gain_col(&self, k: usize, j: usize, r: usize, c: usize) -> usize {
        debug_assert!(j < k && self.optimized_gains);
        let block = k * (k - 1) / 2 + j;
        self.num_inputs() + block * self.m * self.n + r * self.n + c
    }
}

/// `min ½ zᵀ H z + gᵀ z + constant` subject to `G z ≤ h`.
///
/// `H` only couples the nominal inputs; gain and epigraph variables carry
/// no cost.
#[derive(Clone, Debug)]
pub struct QpForm {
    pub h_inputs: DMatrix<f64>,
    pub g_inputs: DVector<f64>,
    pub constant: f64,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub layout: QpLayout,
    /// A constraint with no decision variables was violated while building.
    pub trivially_infeasible: bool,
}

impl QpForm {
    pub fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    /// Largest `G z − h` over all rows.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, h)| row.iter().map(|&(c, v)| v * z[c]).sum::<f64>() - h)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let u = DVector::from_column_slice(&z[..self.layout.num_inputs()]);
        0.5 * u.dot(&(&self.h_inputs * &u)) + self.g_inputs.dot(&u) + self.constant
    }
}

struct Builder<'a> {
    layout: QpLayout,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    trivially_infeasible: bool,
    center: &'a DVector<f64>,
    radii: &'a DVector<f64>,
}

impl Builder<'_> {
    /// `nominal + Σ_j coef_jᵀ d_j ≤ b` for all `d_j` in the box, where
    /// `coefs[j][l]` is the affine coefficient on `d_j[l]`.
    fn robust_row(&mut self, nominal: Affine, coefs: &[Vec<Affine>], b: f64) {
        let mut row = nominal;
        let mut rhs = b;
        let mut epigraphs: Vec<(usize, Affine)> = Vec::new();
        for coef_j in coefs {
            for (l, coef) in coef_j.iter().enumerate() {
                row.add_scaled(coef, self.center[l]);
                let r = self.radii[l];
                if r == 0.0 {
                    continue;
                }
                let coef = coef.clone().compress();
                if coef.terms.is_empty() {
                    rhs -= coef.constant.abs() * r;
                } else {
                    let t = self.layout.num_vars();
                    self.layout.num_abs += 1;
                    row.terms.push((t, r));
                    epigraphs.push((t, coef));
                }
            }
        }
        let row = row.compress();
        self.push(row.terms, rhs - row.constant);
        for (t, coef) in epigraphs {
            // ±coef ≤ t
            let mut plus = coef.terms.clone();
            plus.push((t, -1.0));
            self.push(plus, -coef.constant);
            let mut minus: Vec<_> = coef.terms.iter().map(|&(c, v)| (c, -v)).collect();
            minus.push((t, -1.0));
            self.push(minus, coef.constant);
        }
    }

    fn push(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        if terms.is_empty() {
            if rhs < -1e-9 {
                self.trivially_infeasible = true;
            }
            return;
        }
        self.rows.push(terms);
        self.rhs.push(rhs);
    }
}

/// Compile the robust program for initial state `x0`.
///
/// Constraints: realized `x_k ∈ X` for `1 ≤ k ≤ N−1`, realized
/// `u_k ∈ U_tight` for `0 ≤ k ≤ N−1` and realized `x_N ∈ O`, for every
/// disturbance sequence in `D̂^N`. Cost: `x̄_Nᵀ P x̄_N + Σ x̄_kᵀQx̄_k + ū_kᵀRū_k`.
pub fn build_qp(
    cfg: &MpcConfig,
    x0: &DVector<f64>,
    d_hat: &BoxSet,
    u_tight: &HPolytope,
    terminal: &HPolytope,
    p: &DMatrix<f64>,
) -> Result<QpForm> {
    let (n, m, horizon) = (cfg.n(), cfg.m(), cfg.horizon);
    if x0.len() != n {
        return Err(Error::dim("MPC initial state", n, x0.len()));
    }
    if d_hat.dim() != n {
        return Err(Error::dim("MPC disturbance box", n, d_hat.dim()));
    }
    if d_hat.is_empty() {
        return Err(Error::EmptySet);
    }
    if u_tight.dim() != m {
        return Err(Error::dim("MPC input set", m, u_tight.dim()));
    }
    if terminal.dim() != n {
        return Err(Error::dim("MPC terminal set", n, terminal.dim()));
    }
    if p.shape() != (n, n) {
        return Err(Error::dim("MPC terminal cost", n, p.nrows()));
    }

    let layout = QpLayout {
        n,
        m,
        horizon,
        optimized_gains: matches!(cfg.feedback, FeedbackMode::Optimized),
        num_abs: 0,
    };

    // A^k for k = 0..=N
    let mut powers = vec![DMatrix::identity(n, n)];
    for k in 1..=horizon {
        powers.push(&cfg.a * &powers[k - 1]);
    }

    // gain expressions K_{k,j}[r][c]
    let fixed_powers: Vec<DMatrix<f64>> = match &cfg.feedback {
        FeedbackMode::FixedGain(k) => {
            let a_k = &cfg.a - &cfg.b * k;
            let mut v = vec![DMatrix::identity(n, n)];
            for i in 1..horizon {
                v.push(&a_k * &v[i - 1]);
            }
            v.iter().map(|p| -(k * p)).collect()
        }
        _ => Vec::new(),
    };
    let gain = |k: usize, j: usize, r: usize, c: usize| -> Affine {
        match &cfg.feedback {
            FeedbackMode::Optimized => Affine {
                constant: 0.0,
                terms: vec![(layout.gain_col(k, j, r, c), 1.0)],
            },
            FeedbackMode::FixedGain(_) => Affine::constant(fixed_powers[k - 1 - j][(r, c)]),
            FeedbackMode::OpenLoop => Affine::default(),
        }
    };

    let mut builder = Builder {
        layout: layout.clone(),
        rows: Vec::new(),
        rhs: Vec::new(),
        trivially_infeasible: false,
        center: d_hat.center(),
        radii: d_hat.radii(),
    };

    // robust state rows: k = 1..N-1 on X, k = N on the terminal set
    for k in 1..=horizon {
        let set = if k == horizon { terminal } else { &cfg.x };
        for (row_idx, a_row) in set.a().row_iter().enumerate() {
            let a_row: RowDVector<f64> = a_row.into_owned();
            // aᵀ A^{k-1-i} B for i = 0..k-1
            let ab: Vec<RowDVector<f64>> =
                (0..k).map(|i| &a_row * &powers[k - 1 - i] * &cfg.b).collect();

            let mut nominal = Affine::constant((&a_row * &powers[k] * x0)[0]);
            for (i, abi) in ab.iter().enumerate() {
                for r in 0..m {
                    if abi[r] != 0.0 {
                        nominal.terms.push((layout.input_col(i, r), abi[r]));
                    }
                }
            }

            let coefs: Vec<Vec<Affine>> = (0..k)
                .map(|j| {
                    let base = &a_row * &powers[k - 1 - j];
                    (0..n)
                        .map(|l| {
                            let mut coef = Affine::constant(base[l]);
                            for (i, abi) in ab.iter().enumerate().skip(j + 1) {
                                for r in 0..m {
                                    coef.add_scaled(&gain(i, j, r, l), abi[r]);
                                }
                            }
                            coef
                        })
                        .collect()
                })
                .collect();
            builder.robust_row(nominal, &coefs, set.b()[row_idx]);
        }
    }

    // robust input rows
    for k in 0..horizon {
        for (row_idx, a_row) in u_tight.a().row_iter().enumerate() {
            let mut nominal = Affine::default();
            for r in 0..m {
                if a_row[r] != 0.0 {
                    nominal.terms.push((layout.input_col(k, r), a_row[r]));
                }
            }
            let coefs: Vec<Vec<Affine>> = (0..k)
                .map(|j| {
                    (0..n)
                        .map(|l| {
                            let mut coef = Affine::default();
                            for r in 0..m {
                                coef.add_scaled(&gain(k, j, r, l), a_row[r]);
                            }
                            coef
                        })
                        .collect()
                })
                .collect();
            builder.robust_row(nominal, &coefs, u_tight.b()[row_idx]);
        }
    }

    // nominal cost: x̄_k = A^k x0 + Γ_k ū
    let nu = horizon * m;
    let mut h = DMatrix::zeros(nu, nu);
    let mut g = DVector::zeros(nu);
    let mut constant = 0.0;
    for k in 0..=horizon {
        let weight = if k == horizon { p } else { &cfg.q };
        let mut gamma = DMatrix::zeros(n, nu);
        for i in 0..k {
            gamma
                .columns_mut(i * m, m)
                .copy_from(&(&powers[k - 1 - i] * &cfg.b));
        }
        let free = &powers[k] * x0;
        let wg = weight * &gamma;
        h += gamma.transpose() * &wg * 2.0;
        g += wg.transpose() * &free * 2.0;
        constant += free.dot(&(weight * &free));
    }
    for k in 0..horizon {
        let mut block = h.view_mut((k * m, k * m), (m, m));
        block += &cfg.r * 2.0;
    }
    let h = (&h + h.transpose()) * 0.5;

    Ok(QpForm {
        h_inputs: h,
        g_inputs: g,
        constant,
        rows: builder.rows,
        rhs: builder.rhs,
        layout: builder.layout,
        trivially_infeasible: builder.trivially_infeasible,
    })
}
