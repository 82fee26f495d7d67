use nalgebra::{DVector, Vector2};

/// Planar wind blowing along `(sin θ_w, −cos θ_w)` whose speed decays as
/// `V₀ exp(−(s/ℓ)²)` with the distance `s` from an axis through the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct WindField {
    pub theta_w_deg: f64,
    pub v0: f64,
    pub width: f64,
    /// Linear drag coefficient (N·s/m).
    pub drag: f64,
}

impl WindField {
    /// Drag chosen so the peak force is `peak_fraction · m g`.
    pub fn with_peak_force(theta_w_deg: f64, v0: f64, width: f64, peak_force: f64) -> Self {
        Self {
            theta_w_deg,
            v0,
            width,
            drag: if v0 > 0.0 { peak_force / v0 } else { 0.0 },
        }
    }

    pub fn direction(&self) -> Vector2<f64> {
        let th = self.theta_w_deg.to_radians();
        Vector2::new(th.sin(), -th.cos())
    }

    pub fn velocity(&self, px: f64, py: f64) -> Vector2<f64> {
        let dir = self.direction();
        // distance from the axis spanned by `dir`
        let s = px * dir.y - py * dir.x;
        dir * (self.v0 * (-(s / self.width).powi(2)).exp())
    }

    pub fn force(&self, px: f64, py: f64) -> Vector2<f64> {
        self.velocity(px, py) * self.drag
    }

    /// Per-step state increment of a quadrotor state `(p, θ, v, ω)`.
    pub fn state_increment(&self, x: &DVector<f64>, mass: f64, dt: f64) -> DVector<f64> {
        let f = self.force(x[0], x[1]);
        let mut out = DVector::zeros(6);
        out[3] = dt * f.x / mass;
        out[4] = dt * f.y / mass;
        out
    }
}
