use serde::Serialize;

use super::DiagnosticsError;
use crate::scalar::Real;
use crate::thermo::lambda;
use crate::trajectory::Trajectory;

/// One ledger comparison. `passed` means `lhs ≤ rhs + tolerance` for
/// inequalities and `|lhs − rhs| ≤ tolerance` for identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First step at which the per-step version failed.
    pub first_violation: Option<usize>,
}

impl LedgerCheck {
    fn identity(name: &'static str, lhs: f64, rhs: f64, tolerance: f64, first_violation: Option<usize>) -> Self {
        let passed = (lhs - rhs).abs() <= tolerance && first_violation.is_none();
        Self { name, lhs, rhs, tolerance, passed, first_violation }
    }

    fn at_most(name: &'static str, lhs: f64, rhs: f64, tolerance: f64, first_violation: Option<usize>) -> Self {
        let passed = lhs <= rhs + tolerance && first_violation.is_none();
        Self { name, lhs, rhs, tolerance, passed, first_violation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub steps: usize,
    /// quad(u^N) + ετΣquad(v^k) against quad(u⁰).
    pub energy: LedgerCheck,
    /// τΣ(𝒬 + reaction production) against 𝒮_δ(Z^N) − 𝒮_δ(Z⁰).
    pub entropy: LedgerCheck,
    /// 𝒮_δ(Z^k) ≥ 𝒮_δ(Z^{k−1}) for every step.
    pub entropy_monotone: LedgerCheck,
    /// quad((u^k)²) ≤ quad((u^{k−1})²) for every step.
    pub l2_monotone: LedgerCheck,
    /// Running sums against the data functional, at every stored snapshot.
    pub uniform_bound: LedgerCheck,
    /// Smallest component over all steps.
    pub positivity_min: f64,
    pub passed: bool,
}

impl BalanceReport {
    pub fn checks(&self) -> [&LedgerCheck; 5] {
        [&self.energy, &self.entropy, &self.entropy_monotone, &self.l2_monotone, &self.uniform_bound]
    }

    pub fn failures(&self) -> Vec<&LedgerCheck> {
        self.checks().into_iter().filter(|c| !c.passed).collect()
    }
}

/// Energy and entropy ledgers of a run plus the uniform data bound.
///
/// Per-step tolerances are 10·fp_tol; accumulated ones scale with N.
pub fn balance_report<T: Real>(traj: &Trajectory<T>) -> Result<BalanceReport, DiagnosticsError> {
    let reports = &traj.reports;
    let first = reports.first().ok_or(DiagnosticsError::Empty)?;
    let last = reports.last().expect("non-empty");
    let n = reports.len();
    let fp_tol = traj.config.fp_tol.as_f64();
    let step_tol = 10.0 * fp_tol;
    let nf = n as f64;

    let mut energy_viol = None;
    let mut entropy_viol = None;
    let mut mono_viol = None;
    let mut l2_viol = None;
    let mut positivity = f64::INFINITY;
    for r in reports {
        let de = (r.energy_after - r.energy_before - r.energy_drift_predicted).as_f64();
        if de.abs() > step_tol && energy_viol.is_none() {
            energy_viol = Some(r.step);
        }
        let gain = (r.entropy_after - r.entropy_before).as_f64();
        if gain < (r.production + r.reaction_production).as_f64() - step_tol && entropy_viol.is_none() {
            entropy_viol = Some(r.step);
        }
        if gain < -step_tol && mono_viol.is_none() {
            mono_viol = Some(r.step);
        }
        if (r.l2_after - r.l2_before).as_f64() > step_tol && l2_viol.is_none() {
            l2_viol = Some(r.step);
        }
        positivity = positivity.min(r.positivity_min.as_f64());
    }

    let energy = LedgerCheck::identity(
        "energy",
        (last.energy_after + traj.sums.eps_energy).as_f64(),
        first.energy_before.as_f64(),
        nf * fp_tol,
        energy_viol,
    );
    let entropy = LedgerCheck::at_most(
        "entropy",
        (traj.sums.production + traj.sums.reaction).as_f64(),
        (last.entropy_after - first.entropy_before).as_f64(),
        nf * step_tol,
        entropy_viol,
    );
    let entropy_monotone = LedgerCheck::at_most(
        "entropy-monotone",
        first.entropy_before.as_f64(),
        last.entropy_after.as_f64(),
        nf * step_tol,
        mono_viol,
    );
    let l2_monotone =
        LedgerCheck::at_most("l2-monotone", last.l2_after.as_f64(), first.l2_before.as_f64(), nf * step_tol, l2_viol);
    let uniform_bound = uniform_bound(traj, step_tol)?;
    let passed =
        [&energy, &entropy, &entropy_monotone, &l2_monotone, &uniform_bound].iter().all(|c| c.passed) && positivity > 0.0;
    Ok(BalanceReport {
        steps: n,
        energy,
        entropy,
        entropy_monotone,
        l2_monotone,
        uniform_bound,
        positivity_min: positivity,
        passed,
    })
}

/// At each snapshot n:
///
/// ```text
/// (1−β)Σᵢquad(λ(cᵢⁿ)) + τΣ_{k≤n}(𝒬ᵏ + ρᵏ) + ½quad((uⁿ)²) + τΣ_{k≤n}⟨qᵏ,∇uᵏ⟩
///     ≤ σ̂₀(Eⁿ) + 2IβC_wEⁿ + I(2βC_w+1) − 𝒮_δ(Z⁰) + ½quad((u⁰)²)
/// ```
///
/// with Eⁿ = quad(uⁿ). This combines the entropy ledger with the pointwise
/// upper entropy bound (Jensen in u) and the L² energy estimate.
fn uniform_bound<T: Real>(traj: &Trajectory<T>, step_tol: f64) -> Result<LedgerCheck, DiagnosticsError> {
    let e = &traj.models.entropy;
    let k = e.bound_constants();
    let (beta, c_w) = (k.beta.as_f64(), k.c_w.as_f64());
    let species = e.species();
    let i = species as f64;
    let grid = traj.grid();
    let reports = &traj.reports;
    let s0 = reports[0].entropy_before.as_f64();
    let half_l2_0 = 0.5 * reports[0].l2_before.as_f64();

    let mut cum = vec![0.0; reports.len() + 1];
    for (j, r) in reports.iter().enumerate() {
        cum[j + 1] = cum[j] + (r.production + r.reaction_production + r.heat_dissipation).as_f64();
    }
    let mut worst: Option<(f64, f64, usize)> = None;
    let mut violation = None;
    for (snap, &step) in traj.snapshots.iter().zip(&traj.snapshot_steps) {
        let mut lam = 0.0;
        let mut u2 = 0.0;
        let mut energy = 0.0;
        for p in 0..snap.cells() {
            let z = snap.cell(p);
            lam += z[..species].iter().map(|&c| lambda(c).as_f64()).sum::<f64>();
            let u = z[species].as_f64();
            u2 += u * u;
            energy += u;
        }
        let vol = grid.volume::<f64>();
        let (lam, u2, energy) = (lam * vol, u2 * vol, energy * vol);
        let lhs = (1.0 - beta) * lam + cum[step] + 0.5 * u2;
        let rhs = e.sigma().value(T::lit(energy)).as_f64() + 2.0 * i * beta * c_w * energy + i * (2.0 * beta * c_w + 1.0) - s0
            + half_l2_0;
        let tol = (step.max(1) as f64) * step_tol;
        if lhs > rhs + tol && violation.is_none() {
            violation = Some(step);
        }
        if worst.map_or(true, |(l, r, _)| lhs - rhs > l - r) {
            worst = Some((lhs, rhs, step));
        }
    }
    let (lhs, rhs, _) = worst.expect("at least one snapshot");
    Ok(LedgerCheck::at_most("uniform-bound", lhs, rhs, reports.len() as f64 * step_tol, violation))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2EnergyReport {
    /// ½quad((u^N)²) − ½quad((u⁰)²) + τΣ⟨q,∇u⟩.
    pub defect: f64,
    pub tolerance: f64,
    /// quad((u^k)²) non-increasing within 10·fp_tol per step.
    pub monotone: bool,
    pub first_violation: Option<usize>,
    pub passed: bool,
}

/// Discrete L² energy identity, checked per step and accumulated.
pub fn l2_energy_identity<T: Real>(traj: &Trajectory<T>) -> Result<L2EnergyReport, DiagnosticsError> {
    let reports = &traj.reports;
    if reports.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let step_tol = 10.0 * traj.config.fp_tol.as_f64();
    let mut first_violation = None;
    let mut monotone = true;
    let mut defect = 0.0;
    for r in reports {
        let d = 0.5 * (r.l2_after - r.l2_before).as_f64() + r.heat_dissipation.as_f64();
        defect += d;
        if d > step_tol && first_violation.is_none() {
            first_violation = Some(r.step);
        }
        if (r.l2_after - r.l2_before).as_f64() > step_tol {
            monotone = false;
        }
    }
    let tolerance = reports.len() as f64 * step_tol;
    let passed = defect <= tolerance && first_violation.is_none() && monotone;
    Ok(L2EnergyReport { defect, tolerance, monotone, first_violation, passed })
}
