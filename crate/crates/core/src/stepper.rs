//! Backward-Euler stepping in entropy variables.
//!
//! Each step solves, for the unknown W with Z = Z(W),
//!
//! ```text
//! Z − Z_prev − τR_ϱ(Z) − τ div(𝕄(Z_f)∇W) + τε(Δ² + 1)W = 0
//! ```
//!
//! cellwise (the strong form of the weak system tested with cell indicators).
//! Unknowns are ordered cell-major so the Jacobian is banded.

use serde::Serialize;

use crate::field::{CellField, EntropyVars, StateField};
use crate::grid::Grid;
use crate::kinetics::{KineticsError, ReactionNetwork};
use crate::linalg::{max_abs, BandedMatrix, DenseMatrix, LinalgError};
use crate::onsager::{MobilityModel, OnsagerError};
use crate::scalar::Real;
use crate::thermo::{EntropyModel, ThermoError};
use crate::trajectory::{RunningSums, Trajectory};

/// Entropy, mobility and reaction models of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct Models<T> {
    pub entropy: EntropyModel<T>,
    pub mobility: MobilityModel<T>,
    pub reactions: ReactionNetwork<T>,
}

impl<T: Real> Models<T> {
    pub fn species(&self) -> usize {
        self.entropy.species()
    }

    /// Replaces δ in both the entropy and the mobility.
    pub fn with_delta(&self, delta: T) -> Result<Self, ThermoError> {
        Ok(Self {
            entropy: self.entropy.with_delta(delta)?,
            mobility: self.mobility.with_delta(delta),
            reactions: self.reactions.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    pub tau: T,
    pub eps: T,
    pub fp_tol: T,
    pub fp_max_iters: usize,
    /// Initial damping θ₀ ∈ (0, 1].
    pub damping: T,
    /// Below this residual the iteration uses Newton directions.
    pub newton_switch: T,
    /// Abort when ‖W‖ exceeds this multiple of the a-priori bound.
    pub apriori_factor: T,
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), StepError> {
        let pos = |name: &'static str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(StepError::Config { name, value: v.as_f64() })
            }
        };
        pos("tau", self.tau)?;
        pos("eps", self.eps)?;
        pos("fp_tol", self.fp_tol)?;
        pos("damping", self.damping)?;
        pos("apriori_factor", self.apriori_factor)?;
        if self.damping > T::one() {
            return Err(StepError::Config { name: "damping", value: self.damping.as_f64() });
        }
        if !(self.newton_switch >= T::zero()) {
            return Err(StepError::Config { name: "newton_switch", value: self.newton_switch.as_f64() });
        }
        if self.fp_max_iters == 0 {
            return Err(StepError::Config { name: "fp_max_iters", value: 0.0 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("solver parameter {name} = {value} is invalid")]
    Config { name: &'static str, value: f64 },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Onsager(#[from] OnsagerError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinalgError),
    #[error("linear solve backward error {backward_error:e} above 1e-12")]
    LinearAccuracy { backward_error: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e}); try a smaller tau")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("line search stalled at residual {residual:e}; try a smaller tau")]
    Stalled { residual: f64 },
    #[error("iterate norm {norm:e} exceeds a-priori bound {bound:e}")]
    Divergence { norm: f64, bound: f64 },
    #[error("state has {got} components, models expect {expected}")]
    Shape { expected: usize, got: usize },
}

/// Per-step diagnostics. Integrals already carry the factor τ where noted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport<T> {
    pub step: usize,
    pub time: T,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub residual: T,
    pub entropy_before: T,
    pub entropy_after: T,
    /// τ⟨𝕄∇W, ∇W⟩.
    pub production: T,
    /// τ quad(D_cS·R_ϱ).
    pub reaction_production: T,
    /// τε(quad(|ΔW|²) + quad(|W|²)).
    pub regularization_dissipation: T,
    pub energy_before: T,
    pub energy_after: T,
    /// −ετ quad(v).
    pub energy_drift_predicted: T,
    pub positivity_min: T,
    /// τ⟨q, ∇u⟩ with q the energy row of 𝕄∇W.
    pub heat_dissipation: T,
    /// τ𝒫(Z) on face gradients.
    pub p_functional: T,
    pub l2_before: T,
    pub l2_after: T,
}

#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub state: StateField<T>,
    pub vars: EntropyVars<T>,
    pub report: StepReport<T>,
}

/// A failed run together with everything computed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("step {step} failed: {source}")]
pub struct RunError<T: Real> {
    pub step: usize,
    pub source: StepError,
    pub partial: Option<Box<Trajectory<T>>>,
}

struct Evaluation<T> {
    state: StateField<T>,
    defect: Vec<T>,
    norm: T,
}

/// Lift applied to zero components of initial data.
pub const POSITIVITY_LIFT: f64 = 1e-12;

const THETA_MIN: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Stepper<T> {
    models: Models<T>,
    config: SolverConfig<T>,
    grid: Grid,
    reg_rows: Vec<Vec<(usize, T)>>,
    band: usize,
}

impl<T: Real> Stepper<T> {
    pub fn new(models: Models<T>, config: SolverConfig<T>, grid: Grid) -> Result<Self, StepError> {
        config.validate()?;
        if models.mobility.species() != models.species() {
            return Err(StepError::Shape { expected: models.species(), got: models.mobility.species() });
        }
        if !(models.entropy.delta() > T::zero()) {
            return Err(ThermoError::InversionRequiresDelta.into());
        }
        let ncomp = models.species() + 1;
        let band = grid.stencil_reach() * ncomp + ncomp - 1;
        let reg_rows = grid.regularization_rows();
        Ok(Self { models, config, grid, reg_rows, band })
    }

    pub fn models(&self) -> &Models<T> {
        &self.models
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn ncomp(&self) -> usize {
        self.models.species() + 1
    }

    fn check_field(&self, f: &CellField<T>) -> Result<(), StepError> {
        if f.ncomp() != self.ncomp() {
            return Err(StepError::Shape { expected: self.ncomp(), got: f.ncomp() });
        }
        if f.grid() != &self.grid {
            return Err(StepError::Shape { expected: self.grid.cell_count(), got: f.cells() });
        }
        Ok(())
    }

    fn mobility_at(&self, z: &[T]) -> DenseMatrix<T> {
        let n = self.models.species();
        self.models.mobility.mobility_unchecked(&self.models.entropy, &z[..n], z[n])
    }

    fn rates_at(&self, z: &[T]) -> Result<Vec<T>, StepError> {
        let n = self.models.species();
        if self.models.reactions.is_empty() {
            return Ok(vec![T::zero(); n]);
        }
        Ok(self.models.reactions.regularized_rate(&self.models.entropy, &z[..n], z[n])?)
    }

    /// Applies τ(−div 𝕄(Z_f)∇W) + τε(Δ²+1)W, accumulating into `out`.
    fn apply_operator(&self, z_frozen: &StateField<T>, w: &[T], out: &mut [T]) {
        let nc = self.ncomp();
        let tau = self.config.tau;
        let scale = tau * T::count(self.grid.n() * self.grid.n());
        for &fi in self.grid.interior_faces() {
            let (l, r) = self.grid.faces()[fi].cells.expect("interior");
            let m = self.mobility_at(&z_frozen.face_average(l, r));
            let dw: Vec<T> = (0..nc).map(|a| w[r * nc + a] - w[l * nc + a]).collect();
            let g = m.mul_vec(&dw);
            for a in 0..nc {
                out[l * nc + a] -= scale * g[a];
                out[r * nc + a] += scale * g[a];
            }
        }
        let te = tau * self.config.eps;
        for (p, row) in self.reg_rows.iter().enumerate() {
            for &(q, b) in row {
                for a in 0..nc {
                    out[p * nc + a] += te * b * w[q * nc + a];
                }
            }
        }
    }

    fn add_operator_matrix(&self, z_frozen: &StateField<T>, mat: &mut BandedMatrix<T>) {
        let nc = self.ncomp();
        let tau = self.config.tau;
        let scale = tau * T::count(self.grid.n() * self.grid.n());
        for &fi in self.grid.interior_faces() {
            let (l, r) = self.grid.faces()[fi].cells.expect("interior");
            let m = self.mobility_at(&z_frozen.face_average(l, r));
            for a in 0..nc {
                for b in 0..nc {
                    let v = scale * m[(a, b)];
                    mat.add(l * nc + a, l * nc + b, v);
                    mat.add(l * nc + a, r * nc + b, -v);
                    mat.add(r * nc + a, l * nc + b, -v);
                    mat.add(r * nc + a, r * nc + b, v);
                }
            }
        }
        let te = tau * self.config.eps;
        for (p, row) in self.reg_rows.iter().enumerate() {
            for &(q, b) in row {
                for a in 0..nc {
                    mat.add(p * nc + a, q * nc + a, te * b);
                }
            }
        }
    }

    /// Matrix and right-hand side of the linear step, both divided by h^d.
    pub fn linear_system(
        &self,
        z_frozen: &StateField<T>,
        z_prev: &StateField<T>,
    ) -> Result<(BandedMatrix<T>, Vec<T>), StepError> {
        self.check_field(z_frozen)?;
        self.check_field(z_prev)?;
        let nc = self.ncomp();
        let n = z_frozen.as_slice().len();
        let mut mat = BandedMatrix::zeros(n, self.band, self.band);
        self.add_operator_matrix(z_frozen, &mut mat);
        let mut rhs = vec![T::zero(); n];
        for p in 0..z_frozen.cells() {
            let zt = z_frozen.cell(p);
            let rates = self.rates_at(zt)?;
            for a in 0..nc {
                rhs[p * nc + a] = z_prev.cell(p)[a] - zt[a];
            }
            for (i, ri) in rates.into_iter().enumerate() {
                rhs[p * nc + i] += self.config.tau * ri;
            }
        }
        Ok((mat, rhs))
    }

    /// Γ(Z̃): the W solving the linearized step with mobility and rates frozen at Z̃.
    pub fn linear_step(&self, z_frozen: &StateField<T>, z_prev: &StateField<T>) -> Result<EntropyVars<T>, StepError> {
        for p in 0..z_frozen.cells() {
            for (a, &v) in z_frozen.cell(p).iter().enumerate() {
                if !(v > T::zero()) {
                    return Err(ThermoError::NonPositiveCell { cell: p, component: a, value: v.as_f64() }.into());
                }
            }
        }
        let (mat, rhs) = self.linear_system(z_frozen, z_prev)?;
        let check = mat.clone();
        let x = mat.solve(&rhs)?;
        // normwise backward error of the direct solve
        let ax = check.mul_vec(&x);
        let res = max_abs(&ax.iter().zip(&rhs).map(|(&a, &b)| a - b).collect::<Vec<_>>());
        let row_norm = (0..check.dim())
            .map(|i| {
                let lo = i.saturating_sub(self.band);
                let hi = (i + self.band).min(check.dim() - 1);
                (lo..=hi).map(|j| check.get(i, j).abs()).sum::<T>()
            })
            .fold(T::zero(), T::max);
        let denom = row_norm * max_abs(&x) + max_abs(&rhs);
        if denom > T::zero() {
            let be = res / denom;
            if be > T::lit(1e-12) {
                return Err(StepError::LinearAccuracy { backward_error: be.as_f64() });
            }
        }
        Ok(EntropyVars::new(self.grid.clone(), self.ncomp(), x).expect("shape"))
    }

    fn l2(&self, v: &[T]) -> T {
        (v.iter().map(|&x| x * x).sum::<T>() * self.grid.volume::<T>()).sqrt()
    }

    fn evaluate(&self, z_prev: &StateField<T>, w: &EntropyVars<T>) -> Result<Evaluation<T>, StepError> {
        let state = self.models.entropy.from_entropy_vars(w)?;
        let nc = self.ncomp();
        let mut defect = vec![T::zero(); w.as_slice().len()];
        for p in 0..state.cells() {
            let z = state.cell(p);
            for a in 0..nc {
                defect[p * nc + a] = z[a] - z_prev.cell(p)[a];
            }
            for (i, ri) in self.rates_at(z)?.into_iter().enumerate() {
                defect[p * nc + i] -= self.config.tau * ri;
            }
        }
        self.apply_operator(&state, w.as_slice(), &mut defect);
        if defect.iter().any(|d| !d.is_finite()) {
            return Err(StepError::Stalled { residual: f64::INFINITY });
        }
        let norm = self.l2(&defect);
        Ok(Evaluation { state, defect, norm })
    }

    /// Defect of the nonlinear system at W, as a cell field in strong form.
    pub fn residual(&self, z_prev: &StateField<T>, w: &EntropyVars<T>) -> Result<(StateField<T>, Vec<T>, T), StepError> {
        self.check_field(z_prev)?;
        self.check_field(w)?;
        let e = self.evaluate(z_prev, w)?;
        Ok((e.state, e.defect, e.norm))
    }

    /// Jacobian of the defect with respect to W.
    fn jacobian(&self, state: &StateField<T>, w: &[T]) -> Result<BandedMatrix<T>, StepError> {
        let nc = self.ncomp();
        let ns = nc - 1;
        let cells = state.cells();
        let mut mat = BandedMatrix::zeros(cells * nc, self.band, self.band);
        self.add_operator_matrix(state, &mut mat);
        let mut dzdw = Vec::with_capacity(cells);
        for p in 0..cells {
            let z = state.cell(p);
            let jz = self.models.entropy.state_jacobian(z)?;
            let mut block = jz.clone();
            if !self.models.reactions.is_empty() {
                let dr = self.models.reactions.regularized_jacobian(&self.models.entropy, &z[..ns], z[ns])?;
                for i in 0..ns {
                    for b in 0..nc {
                        let v: T = (0..nc).map(|g| dr[(i, g)] * jz[(g, b)]).sum();
                        block[(i, b)] -= self.config.tau * v;
                    }
                }
            }
            for a in 0..nc {
                for b in 0..nc {
                    mat.add(p * nc + a, p * nc + b, block[(a, b)]);
                }
            }
            dzdw.push(jz);
        }
        // dependence of the face mobility on the adjacent states
        let half_scale = self.config.tau * T::count(self.grid.n() * self.grid.n()) * T::lit(0.5);
        let step_rel = T::epsilon().cbrt();
        for &fi in self.grid.interior_faces() {
            let (l, r) = self.grid.faces()[fi].cells.expect("interior");
            let zf = state.face_average(l, r);
            let dw: Vec<T> = (0..nc).map(|a| w[r * nc + a] - w[l * nc + a]).collect();
            let mut p_mat = DenseMatrix::zeros(nc, nc);
            for g in 0..nc {
                let h = (step_rel * zf[g].abs().max(T::one())).min(zf[g] * T::lit(0.5));
                let mut zp = zf.clone();
                let mut zm = zf.clone();
                zp[g] += h;
                zm[g] -= h;
                let col_p = self.mobility_at(&zp).mul_vec(&dw);
                let col_m = self.mobility_at(&zm).mul_vec(&dw);
                for a in 0..nc {
                    p_mat[(a, g)] = (col_p[a] - col_m[a]) / (h + h);
                }
            }
            for (cell, jz) in [(l, &dzdw[l]), (r, &dzdw[r])] {
                let g_mat = p_mat.matmul(jz);
                for a in 0..nc {
                    for b in 0..nc {
                        let v = half_scale * g_mat[(a, b)];
                        mat.add(l * nc + a, cell * nc + b, -v);
                        mat.add(r * nc + a, cell * nc + b, v);
                    }
                }
            }
        }
        Ok(mat)
    }

    /// Upper bound for ‖W‖_{L²} implied by τε‖W‖² ≤ 𝒮(Z) − 𝒮(Z_prev) and the
    /// pointwise upper entropy bound at the conserved energy level.
    pub fn apriori_bound(&self, z_prev: &StateField<T>) -> Result<T, StepError> {
        let e = &self.models.entropy;
        let k = e.bound_constants();
        let energy = self.grid.quad(&z_prev.energy());
        let i = T::count(e.species());
        let two = T::lit(2.0);
        let upper = e.sigma().value(energy) + two * i * k.beta * k.c_w * energy + i * (two * k.beta * k.c_w + T::one());
        let gap = (upper - e.total_entropy(z_prev)?).max(T::zero());
        Ok((gap / (self.config.tau * self.config.eps)).sqrt().max(T::one()))
    }

    /// Solves one step starting from `guess` (typically W^{k−1}).
    pub fn nonlinear_step(
        &self,
        z_prev: &StateField<T>,
        guess: &EntropyVars<T>,
        step: usize,
        time: T,
    ) -> Result<StepOutcome<T>, StepError> {
        self.check_field(z_prev)?;
        self.check_field(guess)?;
        let cfg = &self.config;
        let bound = self.apriori_bound(z_prev)?;
        let mut w = guess.clone();
        let mut cur = self.evaluate(z_prev, &w)?;
        let mut theta = cfg.damping;
        let mut iterations = 1;
        let mut newton_iterations = 0;
        let mut force_newton = false;
        let theta_min = T::lit(THETA_MIN);
        while cur.norm > cfg.fp_tol {
            if iterations >= cfg.fp_max_iters {
                return Err(StepError::MaxIterations { iterations, residual: cur.norm.as_f64() });
            }
            let newton = force_newton || cur.norm <= cfg.newton_switch;
            let dir: Vec<T> = if newton {
                let jac = self.jacobian(&cur.state, w.as_slice())?;
                let neg: Vec<T> = cur.defect.iter().map(|&d| -d).collect();
                jac.solve(&neg)?
            } else {
                let g = self.linear_step(&cur.state, z_prev)?;
                g.as_slice().iter().zip(w.as_slice()).map(|(&a, &b)| a - b).collect()
            };
            let accepted = loop {
                let data: Vec<T> = w.as_slice().iter().zip(&dir).map(|(&a, &d)| a + theta * d).collect();
                let trial = EntropyVars::new(self.grid.clone(), self.ncomp(), data).expect("shape");
                match self.evaluate(z_prev, &trial) {
                    Ok(e) if e.norm < cur.norm => {
                        theta = (theta * T::lit(1.2)).min(T::one());
                        break Some((trial, e));
                    }
                    _ => {
                        theta = theta * T::lit(0.5);
                        if theta < theta_min {
                            break None;
                        }
                    }
                }
            };
            match accepted {
                Some((trial, e)) => {
                    w = trial;
                    cur = e;
                    iterations += 1;
                    if newton {
                        newton_iterations += 1;
                    }
                }
                None if !newton => {
                    // the frozen-coefficient map is not a descent direction here
                    force_newton = true;
                    theta = T::one();
                }
                None => return Err(StepError::Stalled { residual: cur.norm.as_f64() }),
            }
            let wn = self.l2(w.as_slice());
            if wn > cfg.apriori_factor * bound {
                return Err(StepError::Divergence { norm: wn.as_f64(), bound: (cfg.apriori_factor * bound).as_f64() });
            }
        }
        let report = self.report(z_prev, &cur.state, &w, iterations, newton_iterations, cur.norm, step, time)?;
        Ok(StepOutcome { state: cur.state, vars: w, report })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        z_prev: &StateField<T>,
        z: &StateField<T>,
        w: &EntropyVars<T>,
        iterations: usize,
        newton_iterations: usize,
        residual: T,
        step: usize,
        time: T,
    ) -> Result<StepReport<T>, StepError> {
        let e = &self.models.entropy;
        let tau = self.config.tau;
        let eps = self.config.eps;
        let grid = &self.grid;
        let nc = self.ncomp();
        let ns = nc - 1;
        let vol = grid.volume::<T>();
        let inv_h = T::count(grid.n());
        let ws = w.as_slice();

        let mut production = T::zero();
        let mut heat = T::zero();
        let mut pfun = T::zero();
        for &fi in grid.interior_faces() {
            let (l, r) = grid.faces()[fi].cells.expect("interior");
            let zf = z.face_average(l, r);
            let m = self.mobility_at(&zf);
            let gw: Vec<T> = (0..nc).map(|a| (ws[r * nc + a] - ws[l * nc + a]) * inv_h).collect();
            let gz: Vec<T> = (0..nc).map(|a| (z.cell(r)[a] - z.cell(l)[a]) * inv_h).collect();
            let q = m.mul_vec(&gw);
            production += q.iter().zip(&gw).map(|(&a, &b)| a * b).sum::<T>();
            heat += q[ns] * gz[ns];
            pfun += self.models.mobility.p_form(e, &zf[..ns], zf[ns], &gz)?;
        }
        let mut reaction = T::zero();
        if !self.models.reactions.is_empty() {
            for p in 0..z.cells() {
                let rates = self.rates_at(z.cell(p))?;
                reaction -= rates.iter().zip(&ws[p * nc..p * nc + ns]).map(|(&r, &y)| r * y).sum::<T>();
            }
        }
        let mut reg = T::zero();
        for a in 0..nc {
            let comp = w.component(a);
            reg += grid.reg_form(&comp, &comp, T::one()).map_err(|_| StepError::Shape { expected: nc, got: 0 })?;
        }
        let u_prev = z_prev.energy();
        let u = z.energy();
        let v = w.component(ns);
        Ok(StepReport {
            step,
            time,
            iterations,
            newton_iterations,
            residual,
            entropy_before: e.total_entropy(z_prev)?,
            entropy_after: e.total_entropy(z)?,
            production: tau * production * vol,
            reaction_production: tau * reaction * vol,
            regularization_dissipation: tau * eps * reg,
            energy_before: grid.quad(&u_prev),
            energy_after: grid.quad(&u),
            energy_drift_predicted: -eps * tau * grid.quad(&v),
            positivity_min: z.min_value(),
            heat_dissipation: tau * heat * vol,
            p_functional: tau * pfun * vol,
            l2_before: grid.quad(&u_prev.iter().map(|&x| x * x).collect::<Vec<_>>()),
            l2_after: grid.quad(&u.iter().map(|&x| x * x).collect::<Vec<_>>()),
        })
    }

    /// N = ⌈T/τ⌉ steps from `z0`; snapshots every `stride` steps and at the end.
    pub fn run(&self, z0: &StateField<T>, horizon: T, stride: usize) -> Result<Trajectory<T>, RunError<T>> {
        let fail = |step, source| RunError { step, source, partial: None };
        self.check_field(z0).map_err(|e| fail(0, e))?;
        if !(horizon > T::zero()) || stride == 0 {
            return Err(fail(0, StepError::Config { name: "horizon/stride", value: horizon.as_f64() }));
        }
        let tau = self.config.tau;
        let ratio = horizon / tau;
        let steps = (ratio - ratio * T::lit(1e-12)).ceil().to_usize().unwrap_or(1).max(1);
        let start = z0.lifted(T::lit(POSITIVITY_LIFT));
        let mut w = self.models.entropy.to_entropy_vars(&start).map_err(|e| fail(0, e.into()))?;
        let mut traj = Trajectory {
            models: self.models.clone(),
            config: self.config,
            times: vec![T::zero()],
            snapshot_steps: vec![0],
            snapshots: vec![start.clone()],
            stride,
            reports: Vec::with_capacity(steps),
            sums: RunningSums::default(),
        };
        let mut z = start;
        for k in 1..=steps {
            let t = T::count(k) * tau;
            match self.nonlinear_step(&z, &w, k, t) {
                Ok(out) => {
                    let r = &out.report;
                    traj.sums.production += r.production;
                    traj.sums.reaction += r.reaction_production;
                    traj.sums.p_functional += r.p_functional;
                    traj.sums.heat += r.heat_dissipation;
                    traj.sums.eps_energy -= r.energy_drift_predicted;
                    traj.reports.push(out.report);
                    z = out.state;
                    w = out.vars;
                    if k % stride == 0 || k == steps {
                        traj.times.push(t);
                        traj.snapshot_steps.push(k);
                        traj.snapshots.push(z.clone());
                    }
                }
                Err(source) => {
                    return Err(RunError { step: k, source, partial: Some(Box::new(traj)) });
                }
            }
        }
        Ok(traj)
    }
}
