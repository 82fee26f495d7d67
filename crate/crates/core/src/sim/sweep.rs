//! Closed-loop cost as a function of one configuration parameter.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::Experiment;
use crate::config::{ControllerKind, ExperimentConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub controller: &'static str,
    pub seeds: usize,
    /// Every seed stayed feasible for the whole run.
    pub feasible: bool,
    /// Mean and two standard deviations of the realized cost over seeds;
    /// `None` when any seed was infeasible.
    pub cost_mean: Option<f64>,
    pub cost_2sigma: Option<f64>,
}

/// Mean and `2σ` (population standard deviation) of `costs`.
pub fn mean_2sigma(costs: &[f64]) -> (f64, f64) {
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    (mean, 2.0 * var.sqrt())
}

/// One row per (value, controller). Seeds are `run.seed, run.seed + 1, …`;
/// the cost of a seed is the mean realized cost over its episodes.
pub fn cost_sweep(
    config: &ExperimentConfig,
    param: &str,
    values: &[f64],
    kinds: &[ControllerKind],
    seeds: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if seeds == 0 {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let mut rows = Vec::with_capacity(values.len() * kinds.len());
    for &value in values {
        let mut cfg = config.clone();
        cfg.set_param(param, value)?;
        let exp = Experiment::from_config(&cfg)?;
        for &kind in kinds {
            let runs = (0..seeds as u64)
                .into_par_iter()
                .map(|i| exp.run(kind, cfg.run.seed.wrapping_add(i)))
                .collect::<Result<Vec<_>>>()?;
            let feasible = runs.iter().flatten().all(|r| r.feasible);
            let costs: Vec<f64> = runs
                .iter()
                .map(|eps| eps.iter().map(|r| r.realized_cost).sum::<f64>() / eps.len().max(1) as f64)
                .collect();
            let (mean, two_sigma) = mean_2sigma(&costs);
            rows.push(SweepRow {
                param: param.to_string(),
                value,
                controller: kind.as_str(),
                seeds,
                feasible,
                cost_mean: feasible.then_some(mean),
                cost_2sigma: feasible.then_some(two_sigma),
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "param,value,controller,seeds,feasible,cost_mean,cost_2sigma";

pub fn write_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(|c| format!("{c:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.param,
            r.value,
            r.controller,
            r.seeds,
            r.feasible,
            opt(r.cost_mean),
            opt(r.cost_2sigma)
        )?;
    }
    Ok(())
}
