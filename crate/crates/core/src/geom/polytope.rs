use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::lp::{self, LpSolution, LpStatus, Sense};
use super::BoxSet;
use crate::error::{Error, Result};

/// Absolute tolerance on offsets for redundancy and containment tests.
pub const SET_TOL: f64 = 1e-9;

/// Entries with magnitude at or above this are read as "no bound".
pub const UNBOUNDED: f64 = 1e300;

const ZERO_ROW: f64 = 1e-14;

/// Halfspace representation `{x : A x ≤ b}`.
///
/// A polytope with no rows is the whole space. The canonical empty set is
/// stored as two contradictory halfspaces; use [`HPolytope::is_empty`] to test.
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl HPolytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::dim("polytope offsets", a.nrows(), b.len()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polytope data"));
        }
        if a.row_iter().any(|r| r.norm() <= ZERO_ROW) {
            return Err(Error::InvalidArgument(
                "polytope has a zero normal row".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// Like [`HPolytope::new`], but zero rows are resolved instead of
    /// rejected: `0 ≤ b` is dropped, `0 ≤ b < 0` empties the set.
    pub fn from_rows_lossy(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let dim = a.ncols();
        if a.nrows() != b.len() {
            return Err(Error::dim("polytope offsets", a.nrows(), b.len()));
        }
        let mut keep = Vec::with_capacity(a.nrows());
        for (i, row) in a.row_iter().enumerate() {
            if row.norm() <= ZERO_ROW {
                if b[i] < -SET_TOL {
                    return Ok(Self::empty(dim));
                }
            } else {
                keep.push(i);
            }
        }
        let a = a.select_rows(keep.iter());
        let b = b.select_rows(keep.iter());
        Self::new(a, b)
    }

    /// `lower ≤ x ≤ upper`; entries beyond [`UNBOUNDED`] produce no row.
    pub fn from_bounds(lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("polytope bounds", lower.len(), upper.len()));
        }
        let n = lower.len();
        let mut rows: Vec<RowDVector<f64>> = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..n {
            if upper[i].is_finite() && upper[i].abs() < UNBOUNDED {
                let mut r = RowDVector::zeros(n);
                r[i] = 1.0;
                rows.push(r);
                offsets.push(upper[i]);
            }
            if lower[i].is_finite() && lower[i].abs() < UNBOUNDED {
                let mut r = RowDVector::zeros(n);
                r[i] = -1.0;
                rows.push(r);
                offsets.push(-lower[i]);
            }
        }
        Self::new(stack_rows(&rows, n), DVector::from_vec(offsets))
    }

    pub fn universe(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, dim),
            b: DVector::zeros(0),
        }
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "empty polytope needs a positive dimension");
        let mut a = DMatrix::zeros(2, dim);
        a[(0, 0)] = 1.0;
        a[(1, 0)] = -1.0;
        Self {
            a,
            b: DVector::from_element(2, -1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        (0..self.num_rows()).all(|i| self.a.row(i).dot(&x.transpose()) <= self.b[i] + tol)
    }

    /// Worst violation `max_i (a_iᵀx − b_i)`, `-inf` for the universe.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (0..self.num_rows())
            .map(|i| self.a.row(i).dot(&x.transpose()) - self.b[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn maximize(&self, direction: &DVector<f64>) -> Result<LpSolution> {
        if direction.len() != self.dim() {
            return Err(Error::dim("polytope LP", self.dim(), direction.len()));
        }
        lp::solve(direction, &self.a, &self.b, Sense::Maximize)
    }

    pub fn minimize(&self, direction: &DVector<f64>) -> Result<LpSolution> {
        if direction.len() != self.dim() {
            return Err(Error::dim("polytope LP", self.dim(), direction.len()));
        }
        lp::solve(direction, &self.a, &self.b, Sense::Minimize)
    }

    pub fn is_empty(&self) -> Result<bool> {
        let sol = self.maximize(&DVector::zeros(self.dim()))?;
        Ok(sol.status == LpStatus::Infeasible)
    }

    /// Stack halfspaces without removing redundancy.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::dim("polytope intersection", self.dim(), other.dim()));
        }
        let n = self.dim();
        let mut a = DMatrix::zeros(self.num_rows() + other.num_rows(), n);
        a.rows_mut(0, self.num_rows()).copy_from(&self.a);
        a.rows_mut(self.num_rows(), other.num_rows())
            .copy_from(&other.a);
        let mut b = DVector::zeros(self.num_rows() + other.num_rows());
        b.rows_mut(0, self.num_rows()).copy_from(&self.b);
        b.rows_mut(self.num_rows(), other.num_rows())
            .copy_from(&other.b);
        Ok(Self { a, b })
    }

    /// Intersection with redundant rows removed.
    pub fn intersect_reduce(&self, other: &Self) -> Result<Self> {
        self.stack(other)?.reduce()
    }

    /// Normalize rows, merge parallel duplicates and drop every row whose
    /// removal leaves the set unchanged (per-row LP, tolerance [`SET_TOL`]).
    pub fn reduce(&self) -> Result<Self> {
        let n = self.dim();
        let mut rows: Vec<(RowDVector<f64>, f64)> = Vec::with_capacity(self.num_rows());
        for (i, row) in self.a.row_iter().enumerate() {
            let norm = row.norm();
            let unit = row / norm;
            let offset = self.b[i] / norm;
            if let Some(existing) = rows.iter_mut().find(|(r, _)| (r - &unit).amax() <= 1e-12) {
                existing.1 = existing.1.min(offset);
            } else {
                rows.push((unit.into_owned(), offset));
            }
        }
        let candidate = Self::from_pairs(&rows, n);
        if candidate.is_empty()? {
            return Ok(Self::empty(n));
        }

        let mut active = vec![true; rows.len()];
        for i in 0..rows.len() {
            let others: Vec<usize> = (0..rows.len()).filter(|&j| j != i && active[j]).collect();
            let a = DMatrix::from_fn(others.len(), n, |r, c| rows[others[r]].0[c]);
            let b = DVector::from_iterator(others.len(), others.iter().map(|&j| rows[j].1));
            let sol = lp::solve(&rows[i].0.transpose(), &a, &b, Sense::Maximize)?;
            if sol.status == LpStatus::Optimal && sol.value <= rows[i].1 + SET_TOL {
                active[i] = false;
            }
        }
        let kept: Vec<_> = rows
            .into_iter()
            .zip(active)
            .filter_map(|(r, keep)| keep.then_some(r))
            .collect();
        Ok(Self::from_pairs(&kept, n))
    }

    fn from_pairs(rows: &[(RowDVector<f64>, f64)], n: usize) -> Self {
        Self {
            a: DMatrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]),
            b: DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1)),
        }
    }

    /// `P ⊖ S`: same normals, offsets lowered by the box support.
    pub fn pontryagin_diff_box(&self, s: &BoxSet) -> Result<Self> {
        if s.dim() != self.dim() {
            return Err(Error::dim("Pontryagin difference", self.dim(), s.dim()));
        }
        if s.is_empty() {
            return Ok(Self::universe(self.dim()));
        }
        let mut b = self.b.clone();
        for (i, row) in self.a.row_iter().enumerate() {
            b[i] -= s.support(&row.transpose())?;
        }
        Ok(Self {
            a: self.a.clone(),
            b,
        })
    }

    /// `{x : M x ∈ P}`.
    pub fn preimage(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim() {
            return Err(Error::dim("polytope preimage", self.dim(), m.nrows()));
        }
        Self::from_rows_lossy(&self.a * m, self.b.clone())
    }

    /// `P ⊆ Q` up to `tol` on each facet of `Q`. Unbounded `P` in a facet
    /// direction of `Q` is reported as not contained.
    pub fn is_subset_of(&self, other: &Self, tol: f64) -> Result<bool> {
        if other.dim() != self.dim() {
            return Err(Error::dim("polytope containment", self.dim(), other.dim()));
        }
        for (i, row) in other.a.row_iter().enumerate() {
            let sol = self.maximize(&row.transpose())?;
            match sol.status {
                LpStatus::Infeasible => return Ok(true),
                LpStatus::Unbounded => return Ok(false),
                LpStatus::Optimal if sol.value > other.b[i] + tol => return Ok(false),
                LpStatus::Optimal => {}
            }
        }
        Ok(true)
    }

    /// Center and radius of the largest inscribed Euclidean ball.
    pub fn chebyshev_ball(&self) -> Result<(DVector<f64>, f64)> {
        let n = self.dim();
        let m = self.num_rows();
        let mut a = DMatrix::zeros(m, n + 1);
        a.columns_mut(0, n).copy_from(&self.a);
        for i in 0..m {
            a[(i, n)] = self.a.row(i).norm();
        }
        let mut c = DVector::zeros(n + 1);
        c[n] = 1.0;
        let sol = lp::solve(&c, &a, &self.b, Sense::Maximize)?;
        match sol.status {
            LpStatus::Optimal => {
                let r = sol.x[n];
                if r < -SET_TOL {
                    return Err(Error::EmptySet);
                }
                Ok((sol.x.rows(0, n).into_owned(), r.max(0.0)))
            }
            LpStatus::Unbounded => Err(Error::Unbounded("Chebyshev ball".into())),
            LpStatus::Infeasible => Err(Error::EmptySet),
        }
    }

    /// Tightest axis-aligned box containing the set (2n LPs).
    pub fn interval_hull(&self) -> Result<BoxSet> {
        let n = self.dim();
        let mut lower = DVector::zeros(n);
        let mut upper = DVector::zeros(n);
        for i in 0..n {
            let e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            let hi = self.maximize(&e)?;
            let lo = self.minimize(&e)?;
            match (hi.status, lo.status) {
                (LpStatus::Infeasible, _) | (_, LpStatus::Infeasible) => {
                    return Ok(BoxSet::empty(n))
                }
                (LpStatus::Optimal, LpStatus::Optimal) => {
                    upper[i] = hi.value;
                    lower[i] = lo.value.min(hi.value);
                }
                _ => return Err(Error::Unbounded("interval hull".into())),
            }
        }
        BoxSet::from_bounds(&lower, &upper)
    }
}

fn stack_rows(rows: &[RowDVector<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c])
}

/// One-step robust pre-set `{x : A_K x ⊕ D ⊆ Ω}`, reduced.
pub fn pre_set(a_k: &DMatrix<f64>, omega: &HPolytope, d: &BoxSet) -> Result<HPolytope> {
    let n = omega.dim();
    if a_k.nrows() != n || a_k.ncols() != n {
        return Err(Error::dim("pre-set dynamics", n, a_k.nrows()));
    }
    if d.dim() != n {
        return Err(Error::dim("pre-set disturbance", n, d.dim()));
    }
    if d.is_empty() {
        return Err(Error::EmptySet);
    }
    let tightened = omega.pontryagin_diff_box(d)?;
    tightened.preimage(a_k)?.reduce()
}

#[derive(Serialize, Deserialize)]
struct PolytopeRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

impl Serialize for HPolytope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolytopeRepr {
            a: self
                .a
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            b: self.b.iter().copied().collect(),
            dim: (self.num_rows() == 0).then_some(self.dim()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HPolytope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolytopeRepr::deserialize(deserializer)?;
        let n = repr
            .a
            .first()
            .map(|r| r.len())
            .or(repr.dim)
            .ok_or_else(|| serde::de::Error::custom("polytope without rows needs `dim`"))?;
        if repr.a.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("ragged polytope normal matrix"));
        }
        let a = DMatrix::from_fn(repr.a.len(), n, |r, c| repr.a[r][c]);
        HPolytope::new(a, DVector::from_vec(repr.b)).map_err(serde::de::Error::custom)
    }
}
