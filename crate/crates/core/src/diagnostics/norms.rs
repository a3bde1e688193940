use serde::Serialize;

use super::DiagnosticsError;
use crate::onsager::{flux, Regime};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// s = (2d+2)/(2d+1).
pub fn flux_exponent(d: usize) -> f64 {
    (2 * d + 2) as f64 / (2 * d + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxNormSeries {
    pub s: f64,
    pub times: Vec<f64>,
    /// ‖A(Z)∇Z‖_{L^s} per snapshot.
    pub norms: Vec<f64>,
    /// Σ Δt·‖A(Z)∇Z‖^s over snapshots after the first.
    pub integrated: f64,
}

/// Discrete L^s norm of the face fluxes of every stored snapshot.
pub fn flux_norm<T: Real>(traj: &Trajectory<T>, s: f64) -> Result<FluxNormSeries, DiagnosticsError> {
    if !(s >= 1.0) {
        return Err(DiagnosticsError::Argument { name: "s", message: format!("need s >= 1, got {s}") });
    }
    let m = &traj.models;
    let vol = traj.grid().volume::<f64>();
    let mut norms = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let f = flux(&m.mobility, &m.entropy, snap, &snap.gradients())?;
        let sum: f64 = f.magnitudes().iter().map(|x| x.as_f64().powf(s)).sum();
        norms.push((sum * vol).powf(1.0 / s));
    }
    let times: Vec<f64> = traj.times.iter().map(|t| t.as_f64()).collect();
    let integrated = (1..norms.len()).map(|j| (times[j] - times[j - 1]) * norms[j].powf(s)).sum();
    Ok(FluxNormSeries { s, times, norms, integrated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GnExponents {
    /// Exponent for the concentrations: 2+2/d under (H), 1+2/d under (H′).
    pub q1: f64,
    /// Exponent for the energy: 2+4/d.
    pub q2: f64,
}

pub fn gn_exponents(regime: Regime, d: usize) -> GnExponents {
    let d = d as f64;
    let q1 = match regime {
        Regime::H => 2.0 + 2.0 / d,
        Regime::HPrime => 1.0 + 2.0 / d,
    };
    GnExponents { q1, q2: 2.0 + 4.0 / d }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GnSeries {
    pub exponents: GnExponents,
    pub times: Vec<f64>,
    /// ‖cᵢ‖_{L^{q1}} per snapshot and species.
    pub species: Vec<Vec<f64>>,
    /// ‖u‖_{L^{q2}} per snapshot.
    pub energy: Vec<f64>,
    /// (ΣΔt‖cᵢ‖^{q1})^{1/q1} per species.
    pub species_space_time: Vec<f64>,
    /// (ΣΔt‖u‖^{q2})^{1/q2}.
    pub energy_space_time: f64,
}

fn lq<T: Real>(values: impl Iterator<Item = T>, q: f64, vol: f64) -> f64 {
    (values.map(|v| v.as_f64().abs().powf(q)).sum::<f64>() * vol).powf(1.0 / q)
}

/// Lebesgue norms at the Gagliardo–Nirenberg exponents of the regime.
pub fn gn_norms<T: Real>(traj: &Trajectory<T>, regime: Regime, d: usize) -> Result<GnSeries, DiagnosticsError> {
    if d == 0 {
        return Err(DiagnosticsError::Argument { name: "d", message: "dimension must be positive".into() });
    }
    let exponents = gn_exponents(regime, d);
    let vol = traj.grid().volume::<f64>();
    let ns = traj.models.species();
    let mut species = Vec::new();
    let mut energy = Vec::new();
    for snap in &traj.snapshots {
        species.push((0..ns).map(|i| lq(snap.component(i).into_iter(), exponents.q1, vol)).collect::<Vec<_>>());
        energy.push(lq(snap.energy().into_iter(), exponents.q2, vol));
    }
    let times: Vec<f64> = traj.times.iter().map(|t| t.as_f64()).collect();
    let dt: Vec<f64> = (1..times.len()).map(|j| times[j] - times[j - 1]).collect();
    let species_space_time = (0..ns)
        .map(|i| {
            let q = exponents.q1;
            dt.iter().enumerate().map(|(j, &h)| h * species[j + 1][i].powf(q)).sum::<f64>().powf(1.0 / q)
        })
        .collect();
    let q = exponents.q2;
    let energy_space_time = dt.iter().enumerate().map(|(j, &h)| h * energy[j + 1].powf(q)).sum::<f64>().powf(1.0 / q);
    Ok(GnSeries { exponents, times, species, energy, species_space_time, energy_space_time })
}
