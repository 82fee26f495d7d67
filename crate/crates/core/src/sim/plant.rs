use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::features::FeatureMap;
use super::wind::WindField;
use crate::error::{Error, Result};
use crate::geom::BoxSet;

/// Independent per-coordinate Gaussian noise, redrawn outside `±clip·std`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub std: f64,
    /// Clip bound in units of `std`.
    pub clip: f64,
}

impl NoiseModel {
    pub fn bound(&self) -> f64 {
        self.clip * self.std
    }

    /// The support box `V`.
    pub fn support(&self, n: usize) -> BoxSet {
        BoxSet::centered(DVector::from_element(n, self.bound())).expect("nonnegative noise bound")
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DVector<f64> {
        if self.std == 0.0 {
            return DVector::zeros(n);
        }
        let normal = Normal::new(0.0, self.std).expect("finite std");
        let bound = self.bound();
        DVector::from_fn(n, |_, _| loop {
            let v: f64 = normal.sample(rng);
            if v.abs() <= bound {
                break v;
            }
        })
    }
}

/// The unknown term the simulation applies.
#[derive(Clone, Debug, PartialEq)]
pub enum Truth {
    /// `W φ(x)` with the plant's `w_true`.
    Features,
    /// The wind increment itself; `w_true` is then only its best fit and
    /// the features no longer represent `f` exactly.
    Wind { field: WindField, mass: f64, dt: f64 },
}

/// `x⁺ = A x + B u + f(x) + v`, with `f(x) = W φ(x)` unless `truth` says
/// otherwise.
#[derive(Clone, Debug)]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w_true: DMatrix<f64>,
    pub features: FeatureMap,
    pub noise: NoiseModel,
    pub truth: Truth,
}

impl Plant {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w_true: DMatrix<f64>,
        features: FeatureMap,
        noise: NoiseModel,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::dim("plant matrices", n, b.nrows()));
        }
        if w_true.shape() != (n, features.dim()) {
            return Err(Error::dim("plant W", features.dim(), w_true.ncols()));
        }
        Ok(Self {
            a,
            b,
            w_true,
            features,
            noise,
            truth: Truth::Features,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// The unknown term `f(x)`.
    pub fn f(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.truth {
            Truth::Features => &self.w_true * self.features.eval(x),
            Truth::Wind { field, mass, dt } => field.state_increment(x, *mass, *dt),
        }
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + self.f(x) + v
    }
}

/// Euler discretization of the planar quadrotor linearized at hover.
///
/// State `(p_x, p_y, θ, v_x, v_y, ω)`, inputs are the two rotor thrust
/// deviations from `m g / 2`.
pub fn planar_quadrotor(
    mass: f64,
    inertia: f64,
    arm: f64,
    gravity: f64,
    dt: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut ac = DMatrix::zeros(6, 6);
    ac[(0, 3)] = 1.0;
    ac[(1, 4)] = 1.0;
    ac[(2, 5)] = 1.0;
    ac[(3, 2)] = -gravity;
    let mut bc = DMatrix::zeros(6, 2);
    bc[(4, 0)] = 1.0 / mass;
    bc[(4, 1)] = 1.0 / mass;
    bc[(5, 0)] = arm / inertia;
    bc[(5, 1)] = -arm / inertia;
    (DMatrix::identity(6, 6) + ac * dt, bc * dt)
}
