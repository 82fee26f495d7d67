//! Experiment configuration (TOML, or JSON).
//!
//! Unknown keys are rejected. Values that have a sensible default are
//! optional; the stage-cost matrices and constraint bounds are not.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub uncertainty: UncertaintyConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub estimator: EstimatorConfig,
    pub mpc: MpcSection,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    /// Explicit `x⁺ = A x + B u`.
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    },
    /// Planar quadrotor linearized at hover, Euler-discretized.
    /// State `(p_x, p_y, θ, v_x, v_y, ω)`, input: rotor thrust deviations.
    PlanarQuadrotor {
        #[serde(default = "quad::mass")]
        mass: f64,
        #[serde(default = "quad::inertia")]
        inertia: f64,
        #[serde(default = "quad::arm")]
        arm: f64,
        #[serde(default = "quad::gravity")]
        gravity: f64,
        #[serde(default = "quad::dt")]
        dt: f64,
    },
}

mod quad {
    pub fn mass() -> f64 {
        0.5
    }
    pub fn inertia() -> f64 {
        0.01
    }
    pub fn arm() -> f64 {
        0.25
    }
    pub fn gravity() -> f64 {
        9.81
    }
    pub fn dt() -> f64 {
        0.05
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncertaintyConfig {
    /// `f(x) = [0, w1]ᵀ tanh(x₂)`.
    MatchedTanh { w1: f64 },
    /// `f(x) = [w1 sin(4x₁), w2 tanh(x₂)]ᵀ / √2`.
    UnmatchedSinTanh { w1: f64, w2: f64 },
    /// Wind drag on a planar quadrotor, learned through random Fourier
    /// features. `W` is the ridge fit of the drag term onto the features
    /// over `fit_lower ≤ x ≤ fit_upper`.
    Wind {
        #[serde(default = "wind::features")]
        features: usize,
        /// Incidence angle in degrees; 0 blows straight down.
        #[serde(default)]
        theta_w: f64,
        #[serde(default = "wind::v0")]
        v0: f64,
        #[serde(default = "wind::width")]
        width: f64,
        /// Drag coefficient (N·s/m); defaults to a peak force of 0.3·m·g.
        #[serde(default)]
        drag: Option<f64>,
        #[serde(default = "wind::fit_samples")]
        fit_samples: usize,
        fit_lower: Vec<f64>,
        fit_upper: Vec<f64>,
        #[serde(default = "wind::feature_seed")]
        feature_seed: u64,
        /// Simulate the fitted `W φ(x)` or the drag field itself.
        #[serde(default = "wind::truth")]
        truth: WindTruth,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindTruth {
    Fit,
    Field,
}

mod wind {
    pub fn features() -> usize {
        20
    }
    pub fn v0() -> f64 {
        3.0
    }
    pub fn width() -> f64 {
        1.0
    }
    pub fn fit_samples() -> usize {
        2000
    }
    pub fn feature_seed() -> u64 {
        1
    }
    pub fn truth() -> super::WindTruth {
        super::WindTruth::Fit
    }
}

/// Per-coordinate Gaussian noise, redrawn outside `±clip·std`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub std: f64,
    #[serde(default = "default_clip")]
    pub clip: f64,
}

fn default_clip() -> f64 {
    1.959_964
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            std: 0.005f64.sqrt(),
            clip: default_clip(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Blr,
    SetMembership,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    /// Start from least squares on the warm-start data.
    Flat,
    /// `w_i ~ N(mean_i, σ² (precision·I)⁻¹)`; warm-start data is then
    /// applied as ordinary updates.
    Gaussian {
        #[serde(default)]
        mean: Option<Vec<Vec<f64>>>,
        precision: f64,
    },
    /// Set-membership box `mean ± radius` around the warm-start fit.
    Box { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Number of warm-start samples.
    #[serde(default)]
    pub warm_start: usize,
    /// Half-width of the box around the origin the warm-start states are
    /// drawn from.
    #[serde(default = "default_warm_box")]
    pub warm_start_box: f64,
    /// Rows of `W` that are learned; the others are known to be zero.
    /// Defaults to every row.
    #[serde(default)]
    pub estimated_rows: Option<Vec<usize>>,
    #[serde(default = "default_prior")]
    pub prior: PriorConfig,
    /// BLR variance proxy; defaults to the noise std.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Set-membership noise half-width; defaults to the noise clip bound.
    #[serde(default)]
    pub noise_bound: Option<f64>,
}

fn default_delta() -> f64 {
    0.05
}

fn default_warm_box() -> f64 {
    1.0
}

fn default_prior() -> PriorConfig {
    PriorConfig::Flat
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Optimized,
    Fixed,
    OpenLoop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    pub horizon: usize,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// State bounds; `inf` entries leave a coordinate unconstrained.
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackKind,
}

fn default_feedback() -> FeedbackKind {
    FeedbackKind::Optimized
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refresh {
    Episode,
    Step,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Clamp `f̂` into `±clamp` before cancelling.
    #[serde(default)]
    pub clamp: Option<Vec<f64>>,
    #[serde(default = "default_refresh")]
    pub refresh: Refresh,
    /// Box on which `‖φ(x)‖ ≤ 1` is checked; defaults to the state bounds.
    #[serde(default)]
    pub feature_lower: Option<Vec<f64>>,
    #[serde(default)]
    pub feature_upper: Option<Vec<f64>>,
}

fn default_refresh() -> Refresh {
    Refresh::Step
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            clamp: None,
            refresh: default_refresh(),
            feature_lower: None,
            feature_upper: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Ce,
    Benchmark,
    Naive,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Ce => "ce",
            ControllerKind::Benchmark => "benchmark",
            ControllerKind::Naive => "naive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_controller")]
    pub controller: ControllerKind,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

fn default_steps() -> usize {
    50
}

fn default_episodes() -> usize {
    1
}

fn default_controller() -> ControllerKind {
    ControllerKind::Ce
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            episodes: default_episodes(),
            controller: default_controller(),
            x0: None,
            seed: 0,
        }
    }
}

/// Sweepable scalar parameters.
pub const PARAMS: [&str; 6] = ["w1", "w2", "warm_start", "delta", "theta_w", "v0"];

impl ExperimentConfig {
    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| {
                Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
            })?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(toml_message(text, &e)))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical JSON text (fixed field order, floats in shortest form).
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn state_dim(&self) -> usize {
        match &self.plant {
            PlantConfig::Linear { a, .. } => a.len(),
            PlantConfig::PlanarQuadrotor { .. } => 6,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.plant {
            PlantConfig::Linear { b, .. } => b.first().map_or(0, |r| r.len()),
            PlantConfig::PlanarQuadrotor { .. } => 2,
        }
    }

    /// Structural checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let n = self.state_dim();
        let m = self.input_dim();
        if n == 0 || m == 0 {
            return Err(Error::Config("plant needs at least one state and one input".into()));
        }
        if let PlantConfig::Linear { a, b } = &self.plant {
            matrix("plant.a", a, n, n)?;
            matrix("plant.b", b, n, m)?;
        }
        matrix("mpc.q", &self.mpc.q, n, n)?;
        matrix("mpc.r", &self.mpc.r, m, m)?;
        vector("mpc.x_lower", &self.mpc.x_lower, n)?;
        vector("mpc.x_upper", &self.mpc.x_upper, n)?;
        vector("mpc.u_lower", &self.mpc.u_lower, m)?;
        vector("mpc.u_upper", &self.mpc.u_upper, m)?;
        if self.mpc.horizon == 0 {
            return Err(Error::Config("mpc.horizon must be at least 1".into()));
        }
        let e = &self.estimator;
        if !(e.delta > 0.0 && e.delta < 1.0) {
            return Err(Error::Config(format!("estimator.delta = {} outside (0, 1)", e.delta)));
        }
        if let Some(rows) = &e.estimated_rows {
            if let Some(bad) = rows.iter().find(|&&r| r >= n) {
                return Err(Error::Config(format!(
                    "estimator.estimated_rows contains {bad}, state dimension is {n}"
                )));
            }
        }
        match (&e.kind, &e.prior) {
            (EstimatorKind::Blr, PriorConfig::Box { .. }) => {
                return Err(Error::Config("a box prior needs the set_membership estimator".into()))
            }
            (EstimatorKind::SetMembership, PriorConfig::Flat | PriorConfig::Gaussian { .. }) => {
                return Err(Error::Config("the set_membership estimator needs a box prior".into()))
            }
            _ => {}
        }
        if matches!(e.prior, PriorConfig::Flat) && e.warm_start == 0 {
            return Err(Error::Config("a flat prior needs estimator.warm_start > 0".into()));
        }
        if !(self.noise.std >= 0.0) || !(self.noise.clip > 0.0) {
            return Err(Error::Config("noise.std must be ≥ 0 and noise.clip > 0".into()));
        }
        if let Some(x0) = &self.run.x0 {
            vector("run.x0", x0, n)?;
        }
        if let Some(c) = &self.bounds.clamp {
            vector("bounds.clamp", c, n)?;
        }
        if let UncertaintyConfig::Wind {
            fit_lower,
            fit_upper,
            features,
            ..
        } = &self.uncertainty
        {
            if !matches!(self.plant, PlantConfig::PlanarQuadrotor { .. }) {
                return Err(Error::Config("wind uncertainty needs the planar_quadrotor plant".into()));
            }
            vector("uncertainty.fit_lower", fit_lower, n)?;
            vector("uncertainty.fit_upper", fit_upper, n)?;
            if *features == 0 {
                return Err(Error::Config("uncertainty.features must be positive".into()));
            }
        } else if n != 2 {
            return Err(Error::Config(
                "matched_tanh and unmatched_sin_tanh need a two-state plant".into(),
            ));
        }
        Ok(())
    }

    /// Set a sweepable parameter by name.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match (name, &mut self.uncertainty) {
            ("w1", UncertaintyConfig::MatchedTanh { w1 })
            | ("w1", UncertaintyConfig::UnmatchedSinTanh { w1, .. }) => *w1 = value,
            ("w2", UncertaintyConfig::UnmatchedSinTanh { w2, .. }) => *w2 = value,
            ("theta_w", UncertaintyConfig::Wind { theta_w, .. }) => *theta_w = value,
            ("v0", UncertaintyConfig::Wind { v0, .. }) => *v0 = value,
            ("warm_start", _) => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("warm_start must be a count, got {value}")));
                }
                self.estimator.warm_start = value as usize;
            }
            ("delta", _) => self.estimator.delta = value,
            _ => {
                return Err(Error::Config(format!(
                    "unknown parameter `{name}` for this experiment (known: {})",
                    PARAMS.join(", ")
                )))
            }
        }
        self.validate()
    }

    pub fn x0(&self) -> DVector<f64> {
        match &self.run.x0 {
            Some(v) => DVector::from_column_slice(v),
            None => DVector::zeros(self.state_dim()),
        }
    }
}

fn toml_message(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

fn matrix(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<()> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Config(format!("{name} must be {nr}×{nc}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn vector(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Config(format!("{name} must have {n} entries, got {}", v.len())));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Config(format!("{name} has NaN entries")));
    }
    Ok(())
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(nr, nc, |i, j| rows[i][j])
}
