//! Entropy-variable discretization of reaction-cross-diffusion systems with
//! energy, after the thermodynamic structure of Onsager mobilities.

pub mod diagnostics;
pub mod equilibrium;
pub mod field;
pub mod grid;
pub mod hypotheses;
pub mod kinetics;
pub mod linalg;
pub mod onsager;
pub mod presets;
pub mod scalar;
pub mod scenario;
pub mod stepper;
pub mod thermo;
pub mod trajectory;

pub use field::{CellField, EntropyVars, StateField};
pub use grid::Grid;
pub use scalar::Real;

pub type EntropyModelF64 = thermo::EntropyModel<f64>;
pub type EntropyModelF32 = thermo::EntropyModel<f32>;
pub type MobilityModelF64 = onsager::MobilityModel<f64>;
pub type MobilityModelF32 = onsager::MobilityModel<f32>;
pub type ReactionNetworkF64 = kinetics::ReactionNetwork<f64>;
pub type ReactionNetworkF32 = kinetics::ReactionNetwork<f32>;
pub type StepperF64 = stepper::Stepper<f64>;
pub type StepperF32 = stepper::Stepper<f32>;
pub type TrajectoryF64 = trajectory::Trajectory<f64>;
pub type TrajectoryF32 = trajectory::Trajectory<f32>;
