use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::HPolytope;
use crate::error::{Error, Result};

/// Axis-aligned box `{ c + diag(r) u : ‖u‖∞ ≤ 1 }`.
///
/// The empty box is a distinguished value carried by a flag; radii are never
/// negative.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    center: DVector<f64>,
    radii: DVector<f64>,
    empty: bool,
}

impl BoxSet {
    pub fn new(center: DVector<f64>, radii: DVector<f64>) -> Result<Self> {
        if center.len() != radii.len() {
            return Err(Error::dim("box radii", center.len(), radii.len()));
        }
        if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument(
                "box radii must be finite and nonnegative".into(),
            ));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("box center"));
        }
        Ok(Self {
            center,
            radii,
            empty: false,
        })
    }

    /// Zero-centered box.
    pub fn centered(radii: DVector<f64>) -> Result<Self> {
        Self::new(DVector::zeros(radii.len()), radii)
    }

    pub fn from_slices(center: &[f64], radii: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(center),
            DVector::from_column_slice(radii),
        )
    }

    /// Box with bounds `lower ≤ x ≤ upper`.
    pub fn from_bounds(lower: &DVector<f64>, upper: &DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Ok(Self::empty(lower.len()));
        }
        Self::new((lower + upper) * 0.5, (upper - lower) * 0.5)
    }

    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            radii: DVector::zeros(n),
            empty: false,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::point(DVector::zeros(dim))
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            center: DVector::zeros(dim),
            radii: DVector::zeros(dim),
            empty: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radii(&self) -> &DVector<f64> {
        &self.radii
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn lower(&self) -> DVector<f64> {
        &self.center - &self.radii
    }

    pub fn upper(&self) -> DVector<f64> {
        &self.center + &self.radii
    }

    /// Support function `h_S(a) = aᵀc + Σ |a_i| r_i`.
    pub fn support(&self, direction: &DVector<f64>) -> Result<f64> {
        if direction.len() != self.dim() {
            return Err(Error::dim("box support", self.dim(), direction.len()));
        }
        if self.empty {
            return Err(Error::EmptySet);
        }
        let linear = direction.dot(&self.center);
        let spread: f64 = direction
            .iter()
            .zip(self.radii.iter())
            .map(|(a, r)| a.abs() * r)
            .sum();
        Ok(linear + spread)
    }

    /// Tightest box containing `M·S`: center `Mc`, radii `|M| r`.
    pub fn image_hull(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim() {
            return Err(Error::dim("box image hull", m.ncols(), self.dim()));
        }
        if self.empty {
            return Ok(Self::empty(m.nrows()));
        }
        let abs = m.abs();
        Ok(Self {
            center: m * &self.center,
            radii: abs * &self.radii,
            empty: false,
        })
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::dim("box Minkowski sum", self.dim(), other.dim()));
        }
        if self.empty || other.empty {
            return Ok(Self::empty(self.dim()));
        }
        Ok(Self {
            center: &self.center + &other.center,
            radii: &self.radii + &other.radii,
            empty: false,
        })
    }

    /// Intersection of two boxes (exact for axis-aligned boxes).
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::dim("box intersection", self.dim(), other.dim()));
        }
        if self.empty || other.empty {
            return Ok(Self::empty(self.dim()));
        }
        let lower = self.lower().sup(&other.lower());
        let upper = self.upper().inf(&other.upper());
        Self::from_bounds(&lower, &upper)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if self.empty || x.len() != self.dim() {
            return false;
        }
        x.iter()
            .zip(self.center.iter().zip(self.radii.iter()))
            .all(|(xi, (c, r))| (xi - c).abs() <= r + tol)
    }

    pub fn is_subset_of(&self, other: &Self, tol: f64) -> bool {
        if self.empty {
            return true;
        }
        if other.empty || other.dim() != self.dim() {
            return false;
        }
        let lo = self.lower();
        let hi = self.upper();
        let olo = other.lower();
        let ohi = other.upper();
        (0..self.dim()).all(|i| lo[i] >= olo[i] - tol && hi[i] <= ohi[i] + tol)
    }

    /// Clamp a point into the box elementwise.
    pub fn clamp(&self, x: &DVector<f64>) -> DVector<f64> {
        let lo = self.lower();
        let hi = self.upper();
        DVector::from_iterator(
            x.len(),
            x.iter().enumerate().map(|(i, v)| v.max(lo[i]).min(hi[i])),
        )
    }

    /// All `2^n` vertices (repeated vertices are kept when some radii vanish).
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        if self.empty {
            return Vec::new();
        }
        let n = self.dim();
        (0..(1usize << n))
            .map(|mask| {
                DVector::from_iterator(
                    n,
                    (0..n).map(|i| {
                        let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                        self.center[i] + s * self.radii[i]
                    }),
                )
            })
            .collect()
    }

    pub fn to_polytope(&self) -> HPolytope {
        if self.empty {
            return HPolytope::empty(self.dim());
        }
        HPolytope::from_bounds(&self.lower(), &self.upper()).expect("box bounds are consistent")
    }
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    center: Vec<f64>,
    radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    empty: bool,
}

impl Serialize for BoxSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BoxRepr {
            center: self.center.iter().copied().collect(),
            radii: self.radii.iter().copied().collect(),
            empty: self.empty,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoxSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BoxRepr::deserialize(deserializer)?;
        if repr.empty {
            return Ok(BoxSet::empty(repr.center.len()));
        }
        BoxSet::from_slices(&repr.center, &repr.radii).map_err(serde::de::Error::custom)
    }
}
