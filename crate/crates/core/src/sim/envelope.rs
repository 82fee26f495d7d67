//! Feasible-envelope study: the share of `X` from which the robust program
//! is feasible at `t = 0`.

use nalgebra::DVector;
use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use super::Experiment;
use crate::config::{ControllerKind, ExperimentConfig};
use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::geom::BoxSet;
use crate::mpc::MpcStatus;
use crate::rng::{stream, Purpose};

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopePoint {
    pub controller: &'static str,
    pub param: f64,
    pub fraction: f64,
    /// Hull of the feasible grid points (2-D only), counter-clockwise.
    pub hull_vertices: Vec<[f64; 2]>,
}

/// The state box the envelope is measured against.
pub fn state_box(controller: &Controller) -> Result<BoxSet> {
    let hull = controller.mpc().x.interval_hull()?;
    if hull.lower().iter().chain(hull.upper().iter()).any(|v| !v.is_finite() || v.abs() >= 1e300) {
        return Err(Error::InvalidArgument(
            "feasible envelope needs bounded state constraints".into(),
        ));
    }
    Ok(hull)
}

fn feasible(controller: &Controller, x: &DVector<f64>) -> Result<bool> {
    Ok(controller.plan(x)?.status == MpcStatus::Optimal)
}

/// Envelope fraction for one controller.
///
/// For `n = 2`, a `grid × grid` lattice over `X` is tested and the area of
/// the convex hull of the feasible points is divided by the area of `X`. For
/// larger `n`, `grid²` uniform samples give a membership ratio.
pub fn envelope(controller: &Controller, grid: usize, seed: u64) -> Result<(f64, Vec<[f64; 2]>)> {
    if grid < 2 {
        return Err(Error::InvalidArgument("envelope grid needs at least 2 points per axis".into()));
    }
    let region = state_box(controller)?;
    let lo = region.lower();
    let hi = region.upper();
    let n = region.dim();
    if controller.ingredients().terminal.is_empty()? {
        return Ok((0.0, Vec::new()));
    }

    if n == 2 {
        let points: Vec<DVector<f64>> = (0..grid * grid)
            .map(|idx| {
                let (i, j) = (idx / grid, idx % grid);
                let s = |k: usize, d: usize| lo[d] + (hi[d] - lo[d]) * k as f64 / (grid - 1) as f64;
                DVector::from_vec(vec![s(i, 0), s(j, 1)])
            })
            .collect();
        let flags = points
            .par_iter()
            .map(|x| feasible(controller, x))
            .collect::<Result<Vec<_>>>()?;
        let kept: Vec<[f64; 2]> = points
            .iter()
            .zip(&flags)
            .filter(|(_, f)| **f)
            .map(|(x, _)| [x[0], x[1]])
            .collect();
        let hull = convex_hull(&kept);
        let area = polygon_area(&hull);
        let total = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        Ok(((area / total).clamp(0.0, 1.0), hull))
    } else {
        let samples = grid * grid;
        let mut rng = stream(seed, Purpose::Envelope, 0);
        let points: Vec<DVector<f64>> = (0..samples)
            .map(|_| DVector::from_fn(n, |d, _| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>()))
            .collect();
        let hits = points
            .par_iter()
            .map(|x| feasible(controller, x))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|f| *f)
            .count();
        Ok((hits as f64 / samples as f64, Vec::new()))
    }
}

/// Envelope point for a controller at one parameter value.
pub fn envelope_point(controller: &Controller, param: f64, grid: usize, seed: u64) -> Result<EnvelopePoint> {
    let (fraction, hull_vertices) = envelope(controller, grid, seed)?;
    Ok(EnvelopePoint {
        controller: controller.kind().as_str(),
        param,
        fraction,
        hull_vertices,
    })
}

/// Envelope for each controller at each parameter value, in that order.
pub fn envelope_study(
    config: &ExperimentConfig,
    param: &str,
    values: &[f64],
    kinds: &[ControllerKind],
    grid: usize,
) -> Result<Vec<EnvelopePoint>> {
    let mut out = Vec::with_capacity(values.len() * kinds.len());
    for &value in values {
        let mut cfg = config.clone();
        cfg.set_param(param, value)?;
        let exp = Experiment::from_config(&cfg)?;
        for &kind in kinds {
            let controller = exp.controller(kind, cfg.run.seed)?;
            out.push(envelope_point(&controller, value, grid, cfg.run.seed)?);
        }
    }
    Ok(out)
}

/// Andrew's monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    twice.abs() / 2.0
}
