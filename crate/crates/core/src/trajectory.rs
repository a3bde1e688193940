//! Stored output of a time-stepping run.

use serde::Serialize;

use crate::field::StateField;
use crate::grid::Grid;
use crate::scalar::Real;
use crate::stepper::{Models, SolverConfig, StepReport};

/// Cumulative sums over accepted steps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RunningSums<T> {
    /// Σ τ𝒬(Z^k), the discrete diffusive entropy production.
    pub production: T,
    /// Σ τ quad(D_cS·R_ϱ).
    pub reaction: T,
    /// Σ τ𝒫(Z^k) evaluated on face gradients of Z.
    pub p_functional: T,
    /// Σ τ⟨q, ∇u⟩ with q the discrete heat flux.
    pub heat: T,
    /// Σ ετ quad(v^k).
    pub eps_energy: T,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub models: Models<T>,
    pub config: SolverConfig<T>,
    /// Times of the stored snapshots; the first entry is 0.
    pub times: Vec<T>,
    /// Step index of each snapshot.
    pub snapshot_steps: Vec<usize>,
    pub snapshots: Vec<StateField<T>>,
    pub stride: usize,
    pub reports: Vec<StepReport<T>>,
    pub sums: RunningSums<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn initial(&self) -> &StateField<T> {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &StateField<T> {
        self.snapshots.last().expect("non-empty trajectory")
    }

    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    pub fn tau(&self) -> T {
        self.config.tau
    }

    /// True when every time step has a stored snapshot.
    pub fn is_dense(&self) -> bool {
        self.stride == 1 && self.snapshots.len() == self.reports.len() + 1
    }
}
