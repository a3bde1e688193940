use std::path::Path;

use anyhow::{anyhow, Result};
use erds::diagnostics::{balance_report, BalanceReport};
use erds::equilibrium;
use erds::hypotheses::{check_models, CheckReport};
use erds::scenario::{RunConfig, Scenario};
use erds::stepper::Stepper;
use erds::{StateField, TrajectoryF64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{self, num};
use crate::SweepParam;

/// Sample count of the check that gates `simulate`.
const GATE_SAMPLES: usize = 1000;

fn build(cfg: &RunConfig) -> Result<Scenario<f64>> {
    Ok(cfg.build::<f64>()?)
}

fn stepper(sc: &Scenario<f64>) -> Result<Stepper<f64>> {
    Ok(Stepper::new(sc.models.clone(), sc.solver, sc.grid.clone())?)
}

fn run_checks(cfg: &RunConfig, sc: &Scenario<f64>, samples: usize) -> Result<CheckReport> {
    Ok(check_models(&sc.models.entropy, &sc.models.mobility, &sc.models.reactions, sc.concept, sc.grid.dim(), samples, cfg.seed)?)
}

pub fn check(cfg: &RunConfig, samples: usize, out: Option<&Path>) -> Result<bool> {
    let sc = build(cfg)?;
    let report = run_checks(cfg, &sc, samples)?;
    for h in &report.hypotheses {
        println!("{:<8} {}  {}", h.name, if h.passed { "ok  " } else { "FAIL" }, h.detail);
    }
    println!("coercivity margin  {:?}", report.coercivity_margin);
    println!(
        "identities         |A + M D2S| = {:.3e}, asymmetry = {:.3e}, psd shift = {:.1e}",
        report.identities.a_identity, report.identities.asymmetry, report.identities.psd_shift
    );
    println!(
        "reaction entropy   min = {:.3e}, at equilibrium = {:.3e}",
        report.reaction_production.min_production, report.reaction_production.max_at_equilibrium
    );
    println!("growth             degrees {:?}, threshold {:?}", report.growth.degrees, report.growth.threshold);
    for f in report.failures() {
        println!("failure: {f}");
    }
    println!("{}", if report.passed { "check passed" } else { "check FAILED" });
    if let Some(dir) = out {
        output::write_json(&dir.join("report.json"), &json!({ "config": cfg, "seed": cfg.seed, "check": report }))?;
    }
    Ok(report.passed)
}

fn ledger_json(b: &BalanceReport) -> Value {
    json!(b)
}

fn meta(cfg: &RunConfig, traj: &TrajectoryF64, failure: Option<(usize, String)>) -> Value {
    let ledger = match balance_report(traj) {
        Ok(b) => ledger_json(&b),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({
        "config": cfg,
        "seed": cfg.seed,
        "versions": { "erds": env!("CARGO_PKG_VERSION") },
        "status": match &failure {
            None => json!("completed"),
            Some((step, msg)) => json!({ "failed_at_step": step, "error": msg }),
        },
        "steps": traj.steps(),
        "final_time": traj.times.last().copied().unwrap_or(0.0),
        "sums": traj.sums,
        "ledger": ledger,
    })
}

fn write_run(dir: &Path, cfg: &RunConfig, traj: &TrajectoryF64, failure: Option<(usize, String)>) -> Result<()> {
    output::write_snapshots(&dir.join("snapshots.csv"), traj)?;
    output::write_steps(&dir.join("steps.csv"), &traj.reports)?;
    output::write_json(&dir.join("meta.json"), &meta(cfg, traj, failure))
}

/// Runs one configuration, writes its files and returns the trajectory.
/// A failed run writes what it has and reports the error.
fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<std::result::Result<TrajectoryF64, String>> {
    let sc = build(cfg)?;
    let st = stepper(&sc)?;
    match st.run(&sc.initial, sc.horizon, sc.stride) {
        Ok(traj) => {
            write_run(dir, cfg, &traj, None)?;
            Ok(Ok(traj))
        }
        Err(e) => {
            let msg = e.to_string();
            if let Some(partial) = &e.partial {
                write_run(dir, cfg, partial, Some((e.step, msg.clone())))?;
            }
            Ok(Err(msg))
        }
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path, gate: bool) -> Result<bool> {
    if gate {
        let sc = build(cfg)?;
        let report = run_checks(cfg, &sc, GATE_SAMPLES)?;
        if !report.passed {
            for f in report.failures() {
                eprintln!("failure: {f}");
            }
            return Err(anyhow!("hypothesis check failed; rerun `erds check` for details or pass --no-check"));
        }
    }
    match run_to_dir(cfg, out)? {
        Ok(traj) => {
            let b = balance_report(&traj)?;
            println!("{} steps to t = {}; output in {}", traj.steps(), num(*traj.times.last().unwrap()), out.display());
            for c in b.checks() {
                println!(
                    "{:<18} {}  lhs {} rhs {} tol {:.1e}",
                    c.name,
                    if c.passed { "ok  " } else { "FAIL" },
                    num(c.lhs),
                    num(c.rhs),
                    c.tolerance
                );
            }
            println!("positivity min     {}", num(b.positivity_min));
            Ok(true)
        }
        Err(msg) => {
            eprintln!("run failed: {msg}; partial output in {}", out.display());
            Ok(false)
        }
    }
}

fn with_param(cfg: &RunConfig, param: SweepParam, value: f64) -> RunConfig {
    let mut c = cfg.clone();
    match param {
        SweepParam::Tau => c.solver.tau = value,
        SweepParam::Eps => c.solver.eps = value,
        SweepParam::Delta => c.solver.delta = value,
        SweepParam::Rho => c.solver.rho = value,
    }
    c
}

struct SweepRun {
    value: f64,
    outcome: std::result::Result<TrajectoryF64, String>,
}

fn max_diff(a: &StateField<f64>, b: &StateField<f64>) -> Option<f64> {
    (a.grid() == b.grid() && a.ncomp() == b.ncomp()).then(|| a.max_abs_diff(b))
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "index",
    "param",
    "value",
    "status",
    "steps",
    "final_time",
    "energy_drift",
    "entropy_gain",
    "ledger_passed",
    "diff_prev",
    "diff_ratio",
];

pub fn sweep(cfg: &RunConfig, out: &Path, param: SweepParam, values: &[f64]) -> Result<bool> {
    let configs: Vec<RunConfig> = values.iter().map(|&v| with_param(cfg, param, v)).collect();
    for c in &configs {
        c.validate()?;
    }
    let runs: Vec<SweepRun> = configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (c, &value))| {
            let dir = out.join(format!("{}-{i}", param.name()));
            run_to_dir(c, &dir).map(|outcome| SweepRun { value, outcome })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(runs.len());
    let mut summary = Vec::with_capacity(runs.len());
    let mut prev_diff: Option<f64> = None;
    let mut all_ok = true;
    for (i, run) in runs.iter().enumerate() {
        let prev = i.checked_sub(1).and_then(|j| runs[j].outcome.as_ref().ok());
        let diff = match (&run.outcome, prev) {
            (Ok(t), Some(p)) => max_diff(t.last(), p.last()),
            _ => None,
        };
        let ratio = match (prev_diff, diff) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
        prev_diff = diff;
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        match &run.outcome {
            Ok(t) => {
                let first = t.reports.first().expect("non-empty run");
                let last = t.reports.last().expect("non-empty run");
                let drift = last.energy_after - first.energy_before;
                let gain = last.entropy_after - first.entropy_before;
                let ledger = balance_report(t)?;
                all_ok &= ledger.passed;
                rows.push(vec![
                    i.to_string(),
                    param.name().into(),
                    num(run.value),
                    "ok".into(),
                    t.steps().to_string(),
                    num(*t.times.last().unwrap()),
                    num(drift),
                    num(gain),
                    ledger.passed.to_string(),
                    opt(diff),
                    opt(ratio),
                ]);
                summary.push(json!({
                    "value": run.value, "status": "ok", "steps": t.steps(), "energy_drift": drift,
                    "entropy_gain": gain, "diff_prev": diff, "diff_ratio": ratio, "ledger": ledger,
                }));
            }
            Err(msg) => {
                all_ok = false;
                rows.push(vec![
                    i.to_string(),
                    param.name().into(),
                    num(run.value),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                    String::new(),
                    String::new(),
                ]);
                summary.push(json!({ "value": run.value, "status": "failed", "error": msg }));
            }
        }
    }
    output::write_rows(&out.join("sweep.csv"), &SWEEP_COLUMNS, &rows)?;
    output::write_json(
        &out.join("report.json"),
        &json!({ "config": cfg, "param": param.name(), "values": values, "runs": summary }),
    )?;
    println!("{}", SWEEP_COLUMNS.join(","));
    for r in &rows {
        println!("{}", r.join(","));
    }
    Ok(all_ok)
}

pub fn equilibrate(cfg: &RunConfig, out: &Path, threshold: f64, max_steps: usize) -> Result<bool> {
    let sc = build(cfg)?;
    let st = stepper(&sc)?;
    match equilibrium::equilibrate(&st, &sc.initial, threshold, max_steps, sc.stride) {
        Ok(eq) => {
            let r = &eq.report;
            write_run(out, cfg, &eq.trajectory, None)?;
            output::write_json(&out.join("report.json"), &json!({ "config": cfg, "equilibration": r }))?;
            let status = if r.converged { "converged" } else { "timeout" };
            println!("{status} after {} steps (t = {}), rate {}", r.steps, num(r.time), num(r.final_rate));
            println!("predicted state    {}", r.predicted.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" "));
            println!("distance           {} (monotone: {})", num(*r.distances.last().unwrap()), r.distance_monotone);
            println!("c/w(u) spread      {}", num(r.ratio_spread));
            println!("u oscillation      {}", num(r.energy_oscillation));
            println!("entropy            {} (monotone: {})", num(*r.entropy.last().unwrap()), r.entropy_monotone);
            Ok(r.converged)
        }
        Err(e) => {
            let msg = e.to_string();
            if let Some(partial) = &e.partial {
                write_run(out, cfg, partial, Some((e.step, msg.clone())))?;
            }
            eprintln!("equilibration failed: {msg}");
            Ok(false)
        }
    }
}
