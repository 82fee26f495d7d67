use nalgebra::{DMatrix, DVector};
use rand::RngExt;

use super::episode::{run_episode, EpisodeResult};
use super::features::FeatureMap;
use super::plant::{planar_quadrotor, NoiseModel, Plant, Truth};
use super::wind::WindField;
use crate::bounds::check_feature_norm;
use crate::config::{
    to_matrix, ControllerKind, EstimatorKind, ExperimentConfig, FeedbackKind, PlantConfig,
    PriorConfig, UncertaintyConfig, WindTruth,
};
use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::estimate::{BlrRow, Estimator, RowEstimator, SetMembershipRow};
use crate::geom::{BoxSet, HPolytope};
use crate::mpc::{FeedbackMode, MpcConfig};
use crate::rng::{stream, Purpose};
use crate::terminal::solve_dare;

/// Feature-norm check sample count.
const FEATURE_CHECK_SAMPLES: usize = 10_000;

/// A validated experiment: plant, controller settings and noise support.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plant: Plant,
    pub mpc: MpcConfig,
    pub v_box: BoxSet,
    pub x0: DVector<f64>,
    /// Wind field behind the simulated `W`, for the quadrotor.
    pub wind: Option<WindField>,
}

impl Experiment {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let n = config.state_dim();
        let (a, b, quad) = match &config.plant {
            PlantConfig::Linear { a, b } => (to_matrix(a), to_matrix(b), None),
            PlantConfig::PlanarQuadrotor {
                mass,
                inertia,
                arm,
                gravity,
                dt,
            } => {
                let (a, b) = planar_quadrotor(*mass, *inertia, *arm, *gravity, *dt);
                (a, b, Some((*mass, *gravity, *dt)))
            }
        };

        let noise = NoiseModel {
            std: config.noise.std,
            clip: config.noise.clip,
        };
        let (features, w_true, wind) = match &config.uncertainty {
            UncertaintyConfig::MatchedTanh { w1 } => {
                let mut w = DMatrix::zeros(2, 1);
                w[(1, 0)] = *w1;
                (FeatureMap::MatchedTanh, w, None)
            }
            UncertaintyConfig::UnmatchedSinTanh { w1, w2 } => {
                let w = DMatrix::from_diagonal(&DVector::from_vec(vec![*w1, *w2]));
                (FeatureMap::UnmatchedSinTanh, w, None)
            }
            UncertaintyConfig::Wind {
                features,
                theta_w,
                v0,
                width,
                drag,
                fit_samples,
                fit_lower,
                fit_upper,
                feature_seed,
                truth,
            } => {
                let (mass, gravity, dt) = quad.expect("validated: wind needs the quadrotor");
                let wind = match drag {
                    Some(c) => WindField {
                        theta_w_deg: *theta_w,
                        v0: *v0,
                        width: *width,
                        drag: *c,
                    },
                    None => WindField::with_peak_force(*theta_w, *v0, *width, 0.3 * mass * gravity),
                };
                let mut rng = stream(*feature_seed, Purpose::Features, 0);
                let fmap = FeatureMap::random_fourier(*features, n, &mut rng);
                let region = BoxSet::from_bounds(
                    &DVector::from_column_slice(fit_lower),
                    &DVector::from_column_slice(fit_upper),
                )?;
                let mut rng = stream(*feature_seed, Purpose::WindFit, 0);
                let w = fit_wind(&wind, &fmap, &region, *fit_samples, mass, dt, &mut rng)?;
                (fmap, w, Some((wind, *truth, mass, dt)))
            }
        };
        let mut plant = Plant::new(a.clone(), b.clone(), w_true, features, noise)?;
        if let Some((field, WindTruth::Field, mass, dt)) = &wind {
            plant.truth = Truth::Wind {
                field: field.clone(),
                mass: *mass,
                dt: *dt,
            };
        }
        let wind = wind.map(|w| w.0);

        let x_set = HPolytope::from_bounds(
            &DVector::from_column_slice(&config.mpc.x_lower),
            &DVector::from_column_slice(&config.mpc.x_upper),
        )?;
        let u_set = HPolytope::from_bounds(
            &DVector::from_column_slice(&config.mpc.u_lower),
            &DVector::from_column_slice(&config.mpc.u_upper),
        )?;
        let q = to_matrix(&config.mpc.q);
        let r = to_matrix(&config.mpc.r);
        let feedback = match config.mpc.feedback {
            FeedbackKind::Optimized => FeedbackMode::Optimized,
            FeedbackKind::OpenLoop => FeedbackMode::OpenLoop,
            FeedbackKind::Fixed => FeedbackMode::FixedGain(solve_dare(&a, &b, &q, &r)?.1),
        };
        let mpc = MpcConfig {
            a,
            b,
            q,
            r,
            horizon: config.mpc.horizon,
            x: x_set,
            u: u_set,
            feedback,
        };
        mpc.validate().map_err(|e| Error::Config(e.to_string()))?;

        // ‖φ‖ ≤ 1 on the state region
        let lower = config
            .bounds
            .feature_lower
            .clone()
            .unwrap_or_else(|| config.mpc.x_lower.clone());
        let upper = config
            .bounds
            .feature_upper
            .clone()
            .unwrap_or_else(|| config.mpc.x_upper.clone());
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "state bounds are unbounded; set bounds.feature_lower / feature_upper".into(),
            ));
        }
        let region = BoxSet::from_bounds(
            &DVector::from_column_slice(&lower),
            &DVector::from_column_slice(&upper),
        )?;
        let mut rng = stream(config.run.seed, Purpose::FeatureCheck, 0);
        check_feature_norm(
            |x| plant.features.eval(x),
            &region,
            FEATURE_CHECK_SAMPLES,
            1e-9,
            &mut rng,
        )?;

        if let Some(c) = &config.bounds.clamp {
            check_clamp(&plant, c, &region, &mut stream(config.run.seed, Purpose::FeatureCheck, 1))?;
        }

        let v_box = noise.support(n);
        Ok(Self {
            x0: config.x0(),
            config: config.clone(),
            plant,
            mpc,
            v_box,
            wind,
        })
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    /// Replace the simulated `W` (prior-drawn parameters, ablations).
    pub fn with_true_w(mut self, w: DMatrix<f64>) -> Result<Self> {
        if w.shape() != self.plant.w_true.shape() {
            return Err(Error::dim("replacement W", self.plant.w_true.ncols(), w.ncols()));
        }
        self.plant.w_true = w;
        Ok(self)
    }

    fn estimated_rows(&self) -> Vec<usize> {
        self.config
            .estimator
            .estimated_rows
            .clone()
            .unwrap_or_else(|| (0..self.n()).collect())
    }

    /// Warm-start transitions: states uniform in the warm-start box (clipped
    /// to the state bounds), zero input, one noisy plant step.
    pub fn warm_start_data(&self, seed: u64) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let cfg = &self.config;
        let n = self.n();
        let half = cfg.estimator.warm_start_box;
        let mut rng = stream(seed, Purpose::WarmStart, 0);
        let mut phis = Vec::with_capacity(cfg.estimator.warm_start);
        let mut ys = Vec::with_capacity(cfg.estimator.warm_start);
        let u = DVector::zeros(self.plant.m());
        for _ in 0..cfg.estimator.warm_start {
            let x = DVector::from_fn(n, |i, _| {
                let lo = (-half).max(cfg.mpc.x_lower[i]);
                let hi = half.min(cfg.mpc.x_upper[i]);
                lo + (hi - lo) * rng.random::<f64>()
            });
            let v = self.plant.noise.sample(n, &mut rng);
            let x_next = self.plant.step(&x, &u, &v);
            ys.push(&x_next - &self.plant.a * &x);
            phis.push(self.plant.features.eval(&x));
        }
        (phis, ys)
    }

    pub fn build_estimator(&self, seed: u64) -> Result<Estimator> {
        let cfg = &self.config.estimator;
        let d = self.plant.features.dim();
        let n = self.n();
        let estimated = self.estimated_rows();
        let (phis, ys) = self.warm_start_data(seed);
        let sigma = cfg.sigma.unwrap_or(self.plant.noise.std);
        let noise_bound = cfg.noise_bound.unwrap_or(self.plant.noise.bound());
        let row_ys = |i: usize| ys.iter().map(|y| y[i]).collect::<Vec<_>>();

        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            if !estimated.contains(&i) {
                rows.push(RowEstimator::Known);
                continue;
            }
            let row = match (&cfg.kind, &cfg.prior) {
                (EstimatorKind::Blr, PriorConfig::Flat) => {
                    RowEstimator::Blr(BlrRow::from_data(&phis, &row_ys(i), sigma, 1e-9)?)
                }
                (EstimatorKind::Blr, PriorConfig::Gaussian { mean, precision }) => {
                    let w0 = match mean {
                        Some(m) => DVector::from_column_slice(&m[i]),
                        None => DVector::zeros(d),
                    };
                    let mut row =
                        BlrRow::new(w0, DMatrix::identity(d, d) * *precision, sigma)?;
                    for (phi, y) in phis.iter().zip(&ys) {
                        row.update(phi, y[i])?;
                    }
                    RowEstimator::Blr(row)
                }
                (EstimatorKind::SetMembership, PriorConfig::Box { radius }) => {
                    let center = if phis.is_empty() {
                        DVector::zeros(d)
                    } else {
                        BlrRow::from_data(&phis, &row_ys(i), 1.0, 1e-9)?.w_hat().clone()
                    };
                    let mut row = SetMembershipRow::from_prior(&center, *radius, noise_bound)?;
                    for (step, (phi, y)) in phis.iter().zip(&ys).enumerate() {
                        row.update(phi, y[i], i, step)?;
                    }
                    RowEstimator::SetMembership(row)
                }
                _ => unreachable!("prior/estimator pairing is validated"),
            };
            rows.push(row);
        }
        Estimator::new(rows, d, cfg.delta)
    }

    pub fn controller(&self, kind: ControllerKind, seed: u64) -> Result<Controller> {
        let clamp = match &self.config.bounds.clamp {
            Some(r) => Some(BoxSet::centered(DVector::from_column_slice(r))?),
            None => None,
        };
        Controller::new(
            kind,
            self.config.bounds.refresh,
            self.mpc.clone(),
            self.plant.features.clone(),
            self.v_box.clone(),
            clamp,
            self.build_estimator(seed)?,
        )
    }

    /// All configured episodes with a fresh controller.
    pub fn run(&self, kind: ControllerKind, seed: u64) -> Result<Vec<EpisodeResult>> {
        let mut controller = self.controller(kind, seed)?;
        self.run_with(&mut controller, seed)
    }

    /// All configured episodes, carrying the controller's estimator across
    /// episodes. Every episode starts from the same `x0`.
    pub fn run_with(&self, controller: &mut Controller, seed: u64) -> Result<Vec<EpisodeResult>> {
        let mut out = Vec::with_capacity(self.config.run.episodes);
        for ep in 0..self.config.run.episodes {
            let mut rng = stream(seed, Purpose::Noise, ep as u64);
            out.push(run_episode(
                &self.plant,
                controller,
                &self.x0,
                self.config.run.steps,
                &mut rng,
            )?);
        }
        Ok(out)
    }
}

/// The clamp box must contain the range of `f`; checked on samples.
fn check_clamp<R: rand::Rng + ?Sized>(
    plant: &Plant,
    clamp: &[f64],
    region: &BoxSet,
    rng: &mut R,
) -> Result<()> {
    let lo = region.lower();
    let hi = region.upper();
    for _ in 0..FEATURE_CHECK_SAMPLES {
        let x = DVector::from_fn(region.dim(), |i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
        let f = plant.f(&x);
        if let Some(i) = (0..f.len()).find(|&i| f[i].abs() > clamp[i] + 1e-9) {
            return Err(Error::Config(format!(
                "bounds.clamp[{i}] = {} does not contain f at sampled state {:?} (|f_{i}| = {})",
                clamp[i],
                x.as_slice(),
                f[i].abs()
            )));
        }
    }
    Ok(())
}

/// Ridge fit of the per-step wind increment onto the features over `region`.
fn fit_wind<R: rand::Rng + ?Sized>(
    wind: &WindField,
    fmap: &FeatureMap,
    region: &BoxSet,
    samples: usize,
    mass: f64,
    dt: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = fmap.dim();
    let n = region.dim();
    let lo = region.lower();
    let hi = region.upper();
    let mut gram = DMatrix::identity(d, d) * 1e-6;
    let mut rhs = DMatrix::zeros(d, n);
    for _ in 0..samples {
        let x = DVector::from_fn(n, |i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
        let phi = fmap.eval(&x);
        let target = wind.state_increment(&x, mass, dt);
        gram += &phi * phi.transpose();
        rhs += &phi * target.transpose();
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Config("wind fit Gram matrix is singular".into()))?;
    Ok(chol.solve(&rhs).transpose())
}
