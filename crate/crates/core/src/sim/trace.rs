//! Trace CSV and JSON exports read by the plotting scripts.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::episode::{EpisodeResult, EpisodeSummary};
use crate::controller::Controller;
use crate::error::Result;
use crate::sim::FeatureMap;

/// Trace header for `n` states and `m` inputs.
pub fn header(n: usize, m: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    let indexed = |prefix: &'static str, k: usize| (0..k).map(move |i| format!("{prefix}_{i}"));
    cols.extend(indexed("x", n));
    cols.extend(indexed("u", m));
    cols.extend(indexed("v", n));
    cols.extend(["cost_stage", "qp_status", "qp_cost"].map(String::from));
    cols.extend(indexed("radius", n));
    cols.extend(indexed("fhat_radius", n));
    cols.extend(indexed("dhat_radius", n));
    cols.extend(indexed("what_norm", n));
    cols
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Write one episode as CSV. Missing values (after the last step, or after
/// an infeasible solve) are empty fields.
pub fn write_csv<W: Write>(out: &mut W, result: &EpisodeResult, n: usize, m: usize) -> Result<()> {
    writeln!(out, "{}", header(n, m).join(","))?;
    for rec in &result.trace {
        let mut fields = vec![rec.t.to_string()];
        fields.extend(rec.x.iter().map(|v| num(*v)));
        match &rec.u {
            Some(u) => fields.extend(u.iter().map(|v| num(*v))),
            None => fields.extend(std::iter::repeat_n(String::new(), m)),
        }
        match &rec.v {
            Some(v) => fields.extend(v.iter().map(|v| num(*v))),
            None => fields.extend(std::iter::repeat_n(String::new(), n)),
        }
        fields.push(rec.cost_stage.map(num).unwrap_or_default());
        fields.push(rec.qp_status.unwrap_or("").to_string());
        fields.push(rec.qp_cost.map(num).unwrap_or_default());
        for col in [&rec.radii, &rec.f_hat_radii, &rec.d_hat_radii, &rec.w_hat_norms] {
            fields.extend(col.iter().map(|v| num(*v)));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
pub struct RunSummary<'a> {
    pub config_hash: String,
    pub controller: &'a str,
    pub seed: u64,
    /// First episode's realized cost.
    pub realized_cost: f64,
    /// Every episode completed without an infeasible solve.
    pub feasible: bool,
    pub episodes: Vec<EpisodeSummary>,
}

impl<'a> RunSummary<'a> {
    pub fn new(config_hash: String, controller: &'a str, seed: u64, results: &[EpisodeResult]) -> Self {
        Self {
            config_hash,
            controller,
            seed,
            realized_cost: results.first().map_or(0.0, |r| r.realized_cost),
            feasible: results.iter().all(|r| r.feasible),
            episodes: results.iter().map(EpisodeSummary::from).collect(),
        }
    }
}

/// Predicted reachable-set boxes: one list per solved step.
pub fn tubes_json(result: &EpisodeResult) -> Value {
    Value::Array(
        result
            .tubes
            .iter()
            .enumerate()
            .map(|(t, tube)| json!({ "t": t, "boxes": tube }))
            .collect(),
    )
}

/// Sets the controller currently uses: constraints, terminal set and the
/// disturbance boxes, plus the learned model for feature maps that can be
/// plotted.
pub fn sets_json(controller: &Controller) -> Value {
    let mpc = controller.mpc();
    let bounds = controller.bounds();
    let ing = controller.ingredients();
    let est = controller.committed();
    let w_hat: Vec<Vec<f64>> = est
        .w_hat
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let mut v = json!({
        "X": mpc.x,
        "U": mpc.u,
        "U_tight": ing.u_tight,
        "terminal": ing.terminal,
        "d_hat": ing.d_hat,
        "f_hat": bounds.f_hat,
        "V": bounds.v,
        "radii": est.radii.iter().copied().collect::<Vec<_>>(),
        "w_hat": w_hat,
    });
    if let FeatureMap::RandomFourier { alpha, beta } = controller.features() {
        let alpha: Vec<Vec<f64>> = alpha.row_iter().map(|r| r.iter().copied().collect()).collect();
        v["features"] = json!({
            "kind": "random_fourier",
            "alpha": alpha,
            "beta": beta.iter().copied().collect::<Vec<_>>(),
        });
    }
    v
}

/// `{"t0": sets, "final": sets}` wrapper for before/after snapshots.
pub fn sets_pair(before: Value, after: Value) -> Value {
    json!({ "t0": before, "final": after })
}
