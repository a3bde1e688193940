//! CSV and JSON artifacts. Column order is fixed; floats carry 17 significant digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use erds::stepper::StepReport;
use erds::TrajectoryF64;

pub const STEP_COLUMNS: [&str; 18] = [
    "step",
    "time",
    "iterations",
    "newton_iterations",
    "residual",
    "entropy_before",
    "entropy_after",
    "production",
    "reaction_production",
    "regularization_dissipation",
    "energy_before",
    "energy_after",
    "energy_drift_predicted",
    "positivity_min",
    "heat_dissipation",
    "p_functional",
    "l2_before",
    "l2_after",
];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// `t,cell,c1..cI,u`, one row per stored snapshot and cell.
pub fn write_snapshots(path: &Path, traj: &TrajectoryF64) -> Result<()> {
    let mut f = create(path)?;
    let ns = traj.models.species();
    let mut header = vec!["t".to_string(), "cell".to_string()];
    header.extend((1..=ns).map(|i| format!("c{i}")));
    header.push("u".into());
    writeln!(f, "{}", header.join(","))?;
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        for p in 0..snap.cells() {
            let mut row = vec![num(*t), p.to_string()];
            row.extend(snap.cell(p).iter().map(|&x| num(x)));
            writeln!(f, "{}", row.join(","))?;
        }
    }
    f.flush()?;
    Ok(())
}

fn step_row(r: &StepReport<f64>) -> String {
    let mut row = vec![r.step.to_string(), num(r.time), r.iterations.to_string(), r.newton_iterations.to_string()];
    row.extend(
        [
            r.residual,
            r.entropy_before,
            r.entropy_after,
            r.production,
            r.reaction_production,
            r.regularization_dissipation,
            r.energy_before,
            r.energy_after,
            r.energy_drift_predicted,
            r.positivity_min,
            r.heat_dissipation,
            r.p_functional,
            r.l2_before,
            r.l2_after,
        ]
        .map(num),
    );
    row.join(",")
}

pub fn write_steps(path: &Path, reports: &[StepReport<f64>]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{}", STEP_COLUMNS.join(","))?;
    for r in reports {
        writeln!(f, "{}", step_row(r))?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}
