//! Long-time behaviour: the detailed-balance state selected by the
//! conservation laws, and stepping until the discrete time derivative vanishes.

use serde::Serialize;

use crate::field::StateField;
use crate::kinetics::ReactionNetwork;
use crate::linalg::DenseMatrix;
use crate::scalar::Real;
use crate::stepper::{RunError, StepError, StepReport, Stepper, POSITIVITY_LIFT};
use crate::thermo::{EntropyModel, ThermoError};
use crate::trajectory::{RunningSums, Trajectory};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the span of `vectors`.
fn orthonormal(vectors: impl IntoIterator<Item = Vec<f64>>, out: &mut Vec<Vec<f64>>) {
    for mut v in vectors {
        for q in out.iter() {
            let p = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-10 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
}

/// Orthonormal basis of the linear combinations of species conserved by
/// every reaction (the orthogonal complement of the stoichiometric span).
pub fn conserved_directions<T: Real>(network: &ReactionNetwork<T>, species: usize) -> Vec<Vec<f64>> {
    let mut span = Vec::new();
    orthonormal(
        network.reactions.iter().map(|r| r.beta.iter().zip(&r.alpha).map(|(&b, &a)| b as f64 - a as f64).collect()),
        &mut span,
    );
    let rank = span.len();
    orthonormal(
        (0..species).map(|i| {
            let mut e = vec![0.0; species];
            e[i] = 1.0;
            e
        }),
        &mut span,
    );
    span.split_off(rank)
}

/// Spatially uniform detailed-balance state with the conserved species
/// combinations of `mean_c` and internal energy `u`.
///
/// Writes c = w(u)·exp(y) with y orthogonal to every reaction vector, so all
/// rates vanish, and fixes y by Newton's method on the strictly convex
/// potential Σ wᵢe^{yᵢ} − y·c̄ restricted to that subspace.
pub fn detailed_balance_state<T: Real>(
    model: &EntropyModel<T>,
    network: &ReactionNetwork<T>,
    mean_c: &[f64],
    u: f64,
) -> Result<Vec<f64>, StepError> {
    let n = model.species();
    if mean_c.len() != n {
        return Err(StepError::Shape { expected: n, got: mean_c.len() });
    }
    let m: EntropyModel<f64> = model.cast();
    let w = m.equilibrium(u);
    let q = conserved_directions(network, n);
    let k = q.len();
    let target: Vec<f64> = q.iter().map(|qi| dot(qi, mean_c)).collect();
    let state = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| w[i] * (0..k).map(|j| a[j] * q[j][i]).sum::<f64>().exp()).collect() };
    let potential = |a: &[f64]| -> f64 { state(a).iter().sum::<f64>() - dot(a, &target) };
    let mut a = vec![0.0; k];
    for _ in 0..200 {
        let c = state(&a);
        let g: Vec<f64> = (0..k).map(|j| dot(&q[j], &c) - target[j]).collect();
        if g.iter().map(|x| x.abs()).fold(0.0, f64::max) <= 1e-14 * (1.0 + target.iter().map(|x| x.abs()).sum::<f64>()) {
            break;
        }
        let rows: Vec<Vec<f64>> =
            (0..k).map(|r| (0..k).map(|s| (0..n).map(|i| q[r][i] * c[i] * q[s][i]).sum()).collect()).collect();
        let step = DenseMatrix::from_rows(&rows).solve(&g).map_err(StepError::Linear)?;
        let phi = potential(&a);
        let mut theta = 1.0;
        loop {
            let trial: Vec<f64> = a.iter().zip(&step).map(|(x, d)| x - theta * d).collect();
            if potential(&trial) <= phi || theta < 1e-12 {
                a = trial;
                break;
            }
            theta *= 0.5;
        }
    }
    let mut z = state(&a);
    z.push(u);
    Ok(z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibrationReport {
    pub converged: bool,
    pub steps: usize,
    pub time: f64,
    pub threshold: f64,
    /// ‖Zᵏ − Zᵏ⁻¹‖_max/τ at the last step.
    pub final_rate: f64,
    /// Detailed-balance state fixed by the conserved quantities of Z⁰.
    pub predicted: Vec<f64>,
    /// max-norm distance of Zᵏ to the predicted state, per step (index 0 is Z⁰).
    pub distances: Vec<f64>,
    pub distance_monotone: bool,
    /// 𝒮_δ(Zᵏ) per step.
    pub entropy: Vec<f64>,
    pub entropy_monotone: bool,
    /// Cell-wise spread of cᵢ/wᵢ(u) over species at the end, maximised over cells.
    pub ratio_spread: f64,
    /// max u − min u at the end.
    pub energy_oscillation: f64,
}

/// Outcome of [`equilibrate`]: the report plus the trajectory of stored states.
#[derive(Debug, Clone)]
pub struct Equilibration<T> {
    pub report: EquilibrationReport,
    pub trajectory: Trajectory<T>,
}

/// Steps from `z0` until ‖Zᵏ − Zᵏ⁻¹‖_max/τ < `threshold` or `max_steps` is hit.
pub fn equilibrate<T: Real>(
    stepper: &Stepper<T>,
    z0: &StateField<T>,
    threshold: f64,
    max_steps: usize,
    stride: usize,
) -> Result<Equilibration<T>, RunError<T>> {
    let fail = |step, source| RunError { step, source, partial: None };
    if !(threshold > 0.0) || max_steps == 0 || stride == 0 {
        return Err(fail(0, StepError::Config { name: "threshold/max_steps/stride", value: threshold }));
    }
    let models = stepper.models();
    let cfg = *stepper.config();
    let tau = cfg.tau.as_f64();
    let tol = 10.0 * cfg.fp_tol.as_f64();
    let grid = stepper.grid();
    let ns = models.species();
    let start = z0.lifted(T::lit(POSITIVITY_LIFT));
    let cells = grid.cell_count() as f64;
    let mean: Vec<f64> = (0..=ns).map(|a| start.component(a).iter().map(|x| x.as_f64()).sum::<f64>() / cells).collect();
    let predicted = detailed_balance_state(&models.entropy, &models.reactions, &mean[..ns], mean[ns]).map_err(|e| fail(0, e))?;
    let distance = |z: &StateField<T>| {
        (0..grid.cell_count())
            .flat_map(|p| z.cell(p).iter().zip(&predicted).map(|(x, y)| (x.as_f64() - y).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    };
    let entropy_of = |z: &StateField<T>| -> Result<f64, ThermoError> { Ok(models.entropy.total_entropy(z)?.as_f64()) };

    let mut w = models.entropy.to_entropy_vars(&start).map_err(|e| fail(0, e.into()))?;
    let mut traj = Trajectory {
        models: models.clone(),
        config: cfg,
        times: vec![T::zero()],
        snapshot_steps: vec![0],
        snapshots: vec![start.clone()],
        stride,
        reports: Vec::<StepReport<T>>::new(),
        sums: RunningSums::default(),
    };
    let mut distances = vec![distance(&start)];
    let mut entropy = vec![entropy_of(&start).map_err(|e| fail(0, e.into()))?];
    let mut z = start;
    let mut converged = false;
    let mut final_rate = f64::INFINITY;
    let mut k = 0;
    while k < max_steps {
        k += 1;
        let t = T::count(k) * cfg.tau;
        let out = match stepper.nonlinear_step(&z, &w, k, t) {
            Ok(out) => out,
            Err(source) => return Err(RunError { step: k, source, partial: Some(Box::new(traj)) }),
        };
        final_rate = out.state.max_abs_diff(&z).as_f64() / tau;
        let r = &out.report;
        traj.sums.production += r.production;
        traj.sums.reaction += r.reaction_production;
        traj.sums.p_functional += r.p_functional;
        traj.sums.heat += r.heat_dissipation;
        traj.sums.eps_energy -= r.energy_drift_predicted;
        entropy.push(r.entropy_after.as_f64());
        traj.reports.push(out.report);
        z = out.state;
        w = out.vars;
        distances.push(distance(&z));
        converged = final_rate < threshold;
        if k % stride == 0 || converged || k == max_steps {
            traj.times.push(t);
            traj.snapshot_steps.push(k);
            traj.snapshots.push(z.clone());
        }
        if converged {
            break;
        }
    }

    let m64: EntropyModel<f64> = models.entropy.cast();
    let mut ratio_spread: f64 = 0.0;
    for p in 0..grid.cell_count() {
        let cell: Vec<f64> = z.cell(p).iter().map(|x| x.as_f64()).collect();
        let wu = m64.equilibrium(cell[ns]);
        let ratios: Vec<f64> = (0..ns).map(|i| cell[i] / wu[i]).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        ratio_spread = ratio_spread.max(hi - lo);
    }
    let u = z.energy();
    let (ulo, uhi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x.as_f64()), b.max(x.as_f64())));
    let report = EquilibrationReport {
        converged,
        steps: k,
        time: k as f64 * tau,
        threshold,
        final_rate,
        predicted,
        distance_monotone: distances.windows(2).all(|d| d[1] <= d[0] + tol),
        distances,
        entropy_monotone: entropy.windows(2).all(|s| s[1] >= s[0] - tol),
        entropy,
        ratio_spread,
        energy_oscillation: uhi - ulo,
    };
    Ok(Equilibration { report, trajectory: traj })
}
