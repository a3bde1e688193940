//! Post-hoc checks of conservation laws and a-priori estimates on trajectories.

mod balance;
mod bounds;
mod norms;
mod renorm;
mod truncation;

pub use balance::{balance_report, l2_energy_identity, BalanceReport, L2EnergyReport, LedgerCheck};
pub use bounds::{entropy_bounds_check, p_entropy, EntropyBoundsReport};
pub use norms::{flux_exponent, flux_norm, gn_exponents, gn_norms, FluxNormSeries, GnExponents, GnSeries};
pub use renorm::{renorm_residual, RenormResidual, TestProfile};
pub use truncation::{truncation_property_suite, PropertyOutcome, TruncationReport, Truncator};

use crate::kinetics::KineticsError;
use crate::onsager::OnsagerError;
use crate::thermo::ThermoError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Onsager(#[from] OnsagerError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("trajectory has no steps")]
    Empty,
    #[error("trajectory must store every step (stride 1), got stride {stride}")]
    Sparse { stride: usize },
    #[error("invalid argument {name}: {message}")]
    Argument { name: &'static str, message: String },
}
