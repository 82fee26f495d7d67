use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn armpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armpc"))
        .args(args)
        .output()
        .expect("spawn armpc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn matched() -> String {
    configs().join("matched.toml").display().to_string()
}

fn write_variant(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> String {
    let text = fs::read_to_string(configs().join("matched.toml")).unwrap();
    let path = dir.join(name);
    fs::write(&path, edit(text)).unwrap();
    path.display().to_string()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn run_writes_one_row_per_step_and_a_summary() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "trace.csv");
    let res = armpc(&["run", &matched(), "--seed", "7", "--out", &out]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x_0,x_1,u_0,v_0,v_1,cost_stage,qp_status,qp_cost,radius_0,radius_1,\
         fhat_radius_0,fhat_radius_1,dhat_radius_0,dhat_radius_1,what_norm_0,what_norm_1"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 51);
    assert!(rows[0].starts_with("0,"));
    assert!(rows[50].starts_with("50,"));
    assert!(rows[..50].iter().all(|r| r.contains(",optimal,")));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p(&dir, "trace.json")).unwrap()).unwrap();
    assert_eq!(summary["feasible"], true);
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["controller"], "ce");
    assert!(summary["realized_cost"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    assert_eq!(code(&armpc(&["run", &matched(), "--out", &a])), 0);
    assert_eq!(code(&armpc(&["run", &matched(), "--out", &b])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = p(&dir, "c.csv");
    assert_eq!(code(&armpc(&["run", &matched(), "--seed", "1", "--out", &c])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn controller_variants_dispatch() {
    let dir = TempDir::new().unwrap();
    for kind in ["ce", "benchmark", "naive"] {
        let out = p(&dir, &format!("{kind}.csv"));
        let res = armpc(&["run", &matched(), "--controller", kind, "--out", &out]);
        assert_eq!(code(&res), 0, "{kind}: {}", stderr(&res));
        let summary: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(p(&dir, &format!("{kind}.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(summary["controller"], kind);
    }
}

#[test]
fn recorded_infeasibility_still_exits_zero() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "bench.csv");
    let cfg = write_variant(dir.path(), "heavy.toml", |t| t.replace("w1 = 0.5", "w1 = 1.8"));
    let res = armpc(&["run", &cfg, "--controller", "benchmark", "--out", &out]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",infeasible,"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p(&dir, "bench.json")).unwrap()).unwrap();
    assert_eq!(summary["feasible"], false);
}

#[test]
fn tubes_and_sets_exports() {
    let dir = TempDir::new().unwrap();
    let (tubes, sets) = (p(&dir, "tubes.json"), p(&dir, "sets.json"));
    let res = armpc(&[
        "run", &matched(), "--out", &p(&dir, "t.csv"), "--tubes", &tubes, "--sets", &sets,
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let tubes: serde_json::Value = serde_json::from_str(&fs::read_to_string(&tubes).unwrap()).unwrap();
    let steps = tubes.as_array().unwrap();
    assert_eq!(steps.len(), 50);
    assert_eq!(steps[0]["t"], 0);
    // horizon 3: boxes for x_0 … x_3
    assert_eq!(steps[0]["boxes"].as_array().unwrap().len(), 4);
    assert!(steps[0]["boxes"][0]["radii"].is_array());

    let sets: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sets).unwrap()).unwrap();
    for key in ["X", "U", "U_tight", "terminal", "d_hat", "f_hat", "V", "radii", "w_hat"] {
        assert!(!sets["t0"][key].is_null(), "t0.{key}");
        assert!(!sets["final"][key].is_null(), "final.{key}");
    }
}

#[test]
fn multi_episode_runs_write_one_trace_per_episode() {
    let dir = TempDir::new().unwrap();
    let cfg = write_variant(dir.path(), "eps.toml", |t| {
        t.replace("steps = 50", "steps = 5\nepisodes = 3")
    });
    let res = armpc(&["run", &cfg, "--out", &p(&dir, "tr.csv")]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for k in 1..=3 {
        let csv = fs::read_to_string(p(&dir, &format!("tr_ep{k}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 7);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p(&dir, "tr.json")).unwrap()).unwrap();
    assert_eq!(summary["episodes"].as_array().unwrap().len(), 3);
}

#[test]
fn zero_steps_gives_only_the_initial_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_variant(dir.path(), "z.toml", |t| t.replace("steps = 50", "steps = 0"));
    let out = p(&dir, "z.csv");
    assert_eq!(code(&armpc(&["run", &cfg, "--out", &out])), 0);
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,2e0,2e0,,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "x.csv");

    let no_q = write_variant(dir.path(), "noq.toml", |t| {
        t.lines()
            .filter(|l| !l.starts_with("q ="))
            .collect::<Vec<_>>()
            .join("\n")
    });
    let res = armpc(&["run", &no_q, "--out", &out]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains('q'), "{}", stderr(&res));

    let unknown = write_variant(dir.path(), "unknown.toml", |t| t.replace("w1 = 0.5", "w1 = 0.5\nbogus = 1"));
    let res = armpc(&["run", &unknown, "--out", &out]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("line"), "{}", stderr(&res));

    let zero_horizon = write_variant(dir.path(), "h0.toml", |t| t.replace("horizon = 3", "horizon = 0"));
    assert_eq!(code(&armpc(&["run", &zero_horizon, "--out", &out])), 2);

    let unstabilizable = write_variant(dir.path(), "ns.toml", |t| {
        t.replace("a = [[1.0, 0.2], [0.0, 1.0]]", "a = [[2.0, 0.0], [0.0, 1.0]]")
    });
    assert_eq!(code(&armpc(&["run", &unstabilizable, "--out", &out])), 2);

    assert_eq!(code(&armpc(&["run", &p(&dir, "missing.toml"), "--out", &out])), 2);
    assert_eq!(code(&armpc(&["run", &matched(), "--controller", "bogus"])), 2);
    assert_eq!(code(&armpc(&["frobnicate"])), 2);
}

#[test]
fn solver_failure_exits_3() {
    // badly scaled state bounds make the interior-point solver stall
    let dir = TempDir::new().unwrap();
    let cfg = write_variant(dir.path(), "scaled.toml", |t| {
        t.replace("x_lower = [-4.0, -3.0]", "x_lower = [-1e12, -3.0]")
            .replace("x_upper = [4.0, 3.0]", "x_upper = [1e12, 3.0]")
    });
    let res = armpc(&["run", &cfg, "--out", &p(&dir, "s.csv")]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
    assert!(stderr(&res).contains("solver"), "{}", stderr(&res));
}

#[test]
fn sweep_table() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "sweep.csv");
    let res = armpc(&[
        "sweep", &matched(), "--param", "w1", "--values", "0.25,0.5,1.0", "--seeds", "20",
        "--controller", "ce", "--out", &out,
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,controller,seeds,feasible,cost_mean,cost_2sigma");
    assert_eq!(lines.len(), 4);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[..5], &["w1", "0.25", "ce", "20", "true"]);
    assert!(first[5].parse::<f64>().unwrap() > 0.0);
    assert!(first[6].parse::<f64>().unwrap() >= 0.0);
    // at w1 = 1.0 the CE controller cannot start from [2, 2]: flagged, no cost
    let last: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(&last[..5], &["w1", "1", "ce", "20", "false"]);
    assert_eq!(&last[5..], &["", ""]);
}

#[test]
fn sweep_argument_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "s.csv");
    assert_eq!(code(&armpc(&["sweep", &matched(), "--values", "--out", &out])), 2);
    assert_eq!(code(&armpc(&["sweep", &matched(), "--out", &out])), 2);
    let res = armpc(&["sweep", &matched(), "--param", "mass", "--values", "1", "--out", &out]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("unknown parameter"));
    assert_eq!(code(&armpc(&["sweep", &matched(), "--values", "0.5", "--seeds", "0", "--out", &out])), 2);
    assert_eq!(code(&armpc(&["envelope", &matched(), "--values", "--out", &out])), 2);
    assert_eq!(code(&armpc(&["envelope", &matched(), "--param", "w9", "--values", "1", "--out", &out])), 2);
}

#[test]
fn envelope_smoke_and_monotone() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "env.json");
    let start = Instant::now();
    let res = armpc(&["envelope", &matched(), "--values", "0.5", "--grid", "3", "--out", &out]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(start.elapsed().as_secs_f64() < 10.0);

    let res = armpc(&[
        "envelope", &matched(), "--values", "0,0.25,0.5,0.75,1.0,1.5", "--grid", "11", "--out", &out,
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let points: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 12);
    for kind in ["ce", "benchmark"] {
        let fractions: Vec<f64> = points
            .iter()
            .filter(|p| p["controller"] == kind)
            .map(|p| p["fraction"].as_f64().unwrap())
            .collect();
        assert_eq!(fractions.len(), 6);
        assert!(fractions.windows(2).all(|w| w[1] <= w[0]), "{kind}: {fractions:?}");
        assert!(fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    }
    let first = &points[0];
    assert!(first["param"].is_number());
    assert!(first["hull_vertices"].as_array().unwrap().len() >= 3);
}
