//! Run configuration: TOML schema, load-time validation and model assembly.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::field::{EntropyVars, StateField};
use crate::grid::{Grid, GridSpec};
use crate::kinetics::{Reaction, ReactionNetwork};
use crate::onsager::{MobilityModel, Pi1Preset, Regime, SolutionConcept};
use crate::scalar::Real;
use crate::stepper::{Models, SolverConfig};
use crate::thermo::{EntropyModel, EquilibriumFamily, SigmaFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySpec {
    pub sigma: SigmaFamily<f64>,
    pub w: Vec<EquilibriumFamily<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilitySpec {
    pub regime: Regime,
    pub kappa0: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub pi1: Pi1Preset<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "defaults::fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "defaults::fp_max_iters")]
    pub fp_max_iters: usize,
    #[serde(default = "defaults::one")]
    pub damping: f64,
    #[serde(default = "defaults::newton_switch")]
    pub newton_switch: f64,
    #[serde(default = "defaults::apriori_factor")]
    pub apriori_factor: f64,
}

mod defaults {
    pub fn fp_tol() -> f64 {
        1e-10
    }
    pub fn fp_max_iters() -> usize {
        100
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn newton_switch() -> f64 {
        1e3
    }
    pub fn apriori_factor() -> f64 {
        1e3
    }
    pub fn stride() -> usize {
        1
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn wavenumber() -> usize {
        1
    }
}

/// Initial data Z⁰.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant {
        c: Vec<f64>,
        u: f64,
    },
    /// base + amplitude·Π_d cos(kπx_d).
    Cosine {
        c: Vec<f64>,
        u: f64,
        c_amp: Vec<f64>,
        u_amp: f64,
        #[serde(default = "defaults::wavenumber")]
        wavenumber: usize,
    },
    /// base + amplitude·exp(−|x − centre|²/(2 width²)).
    Gaussian {
        c: Vec<f64>,
        u: f64,
        c_amp: Vec<f64>,
        u_amp: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// cᵢ = wᵢ(u) with u uniform.
    Equilibrium {
        u: f64,
    },
    /// Uniform entropy variables mapped back to a state.
    EntropyVars {
        y: Vec<f64>,
        v: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub concept: SolutionConcept,
    pub horizon: f64,
    #[serde(default = "defaults::stride")]
    pub stride: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    pub entropy: EntropySpec,
    pub mobility: MobilitySpec,
    #[serde(default)]
    pub reactions: Vec<Reaction<f64>>,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub initial: InitialProfile,
    #[serde(default)]
    pub output: OutputSpec,
}

/// One validation finding, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            Self::Invalid(v) => v,
            Self::Parse(_) => &[],
        }
    }
}

/// Models, solver settings, grid and initial data of one run.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub name: String,
    pub concept: SolutionConcept,
    pub models: Models<T>,
    pub solver: SolverConfig<T>,
    pub grid: Grid,
    pub initial: StateField<T>,
    pub horizon: T,
    pub stride: usize,
    pub seed: u64,
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue { path: path.into(), message: message.into() });
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be a positive finite number, got {v}"));
        }
    }

    fn nonnegative(&mut self, path: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.push(path, format!("must be finite and >= 0, got {v}"));
        }
    }

    fn length(&mut self, path: &str, got: usize, expected: usize) {
        if got != expected {
            self.push(path, format!("has {got} entries, expected {expected} (one per species)"));
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn species(&self) -> usize {
        self.entropy.w.len()
    }

    /// Cross-field consistency, reported with field paths.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut is = Issues(Vec::new());
        let n = self.species();
        if n == 0 {
            is.push("entropy.w", "needs at least one species");
        }
        if let Err(e) = self.entropy.sigma.validate() {
            is.push("entropy.sigma", e.to_string());
        }
        for (i, w) in self.entropy.w.iter().enumerate() {
            if let Err(e) = w.validate() {
                is.push(format!("entropy.w[{i}]"), e.to_string());
            }
        }

        let m = &self.mobility;
        is.length("mobility.kappa0", m.kappa0.len(), n);
        is.length("mobility.kappa1", m.kappa1.len(), n);
        is.positive("mobility.pi1.p0", m.pi1.p0());
        for (i, (&k0, &k1)) in m.kappa0.iter().zip(&m.kappa1).enumerate() {
            is.nonnegative(&format!("mobility.kappa0[{i}]"), k0);
            is.nonnegative(&format!("mobility.kappa1[{i}]"), k1);
            match (self.concept, m.regime) {
                (SolutionConcept::Weak, Regime::H) => {
                    if !(k1 > 0.0) {
                        is.push(format!("mobility.kappa1[{i}]"), "regime H (weak solutions) requires kappa1 > 0");
                    }
                }
                (SolutionConcept::Weak, Regime::HPrime) | (SolutionConcept::Renormalised, Regime::H) => {
                    let which = if m.regime == Regime::H { "renormalised solutions" } else { "regime H'" };
                    if k1 != 0.0 {
                        is.push(format!("mobility.kappa1[{i}]"), format!("{which} requires kappa1 = 0"));
                    }
                    if !(k0 > 0.0) {
                        is.push(format!("mobility.kappa0[{i}]"), format!("{which} requires kappa0 > 0"));
                    }
                }
                (SolutionConcept::Renormalised, Regime::HPrime) => {}
            }
        }
        if self.concept == SolutionConcept::Renormalised && m.regime == Regime::HPrime {
            is.push("concept", "renormalised solutions are built on regime H");
        }
        match (m.regime, &m.pi1) {
            (Regime::H, Pi1Preset::InverseGamma { .. }) => {
                is.push("mobility.pi1.kind", "regime H uses one-plus-u-squared or u-squared")
            }
            (Regime::HPrime, Pi1Preset::OnePlusUSquared { .. } | Pi1Preset::USquared { .. }) => {
                is.push("mobility.pi1.kind", "regime H' uses inverse-gamma")
            }
            _ => {}
        }

        for (j, r) in self.reactions.iter().enumerate() {
            let p = format!("reactions[{j}]");
            is.length(&format!("{p}.alpha"), r.alpha.len(), n);
            is.length(&format!("{p}.beta"), r.beta.len(), n);
            if r.alpha == r.beta {
                is.push(format!("{p}.beta"), "must differ from alpha");
            }
            if !r.rate.c_powers.is_empty() {
                is.length(&format!("{p}.rate.c_powers"), r.rate.c_powers.len(), n);
            }
            is.nonnegative(&format!("{p}.rate.k"), r.rate.k);
            is.nonnegative(&format!("{p}.rate.activation"), r.rate.activation);
        }

        if !(1..=2).contains(&self.grid.dim) {
            is.push("grid.dim", format!("must be 1 or 2, got {}", self.grid.dim));
        }
        if self.grid.n < 2 {
            is.push("grid.n", format!("must be >= 2, got {}", self.grid.n));
        }

        let s = &self.solver;
        is.positive("solver.tau", s.tau);
        is.positive("solver.eps", s.eps);
        is.positive("solver.delta", s.delta);
        is.nonnegative("solver.rho", s.rho);
        is.positive("solver.fp_tol", s.fp_tol);
        is.positive("solver.apriori_factor", s.apriori_factor);
        is.nonnegative("solver.newton_switch", s.newton_switch);
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            is.push("solver.damping", format!("must lie in (0, 1], got {}", s.damping));
        }
        if s.fp_max_iters == 0 {
            is.push("solver.fp_max_iters", "must be >= 1");
        }
        is.positive("horizon", self.horizon);
        if self.stride == 0 {
            is.push("stride", "must be >= 1");
        }
        self.validate_initial(&mut is, n);

        if is.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(is.0))
        }
    }

    fn validate_initial(&self, is: &mut Issues, n: usize) {
        let base = |is: &mut Issues, c: &[f64], u: f64| {
            is.length("initial.c", c.len(), n);
            for (i, &ci) in c.iter().enumerate() {
                is.nonnegative(&format!("initial.c[{i}]"), ci);
            }
            is.positive("initial.u", u);
        };
        match &self.initial {
            InitialProfile::Constant { c, u } => base(is, c, *u),
            InitialProfile::Cosine { c, u, c_amp, u_amp, wavenumber } => {
                base(is, c, *u);
                is.length("initial.c_amp", c_amp.len(), n);
                for (i, (&ci, &ai)) in c.iter().zip(c_amp).enumerate() {
                    if ai.abs() > ci {
                        is.push(format!("initial.c_amp[{i}]"), "amplitude exceeds base value; profile would be negative");
                    }
                }
                if u_amp.abs() >= *u {
                    is.push("initial.u_amp", "amplitude must be below u so the energy stays positive");
                }
                if *wavenumber == 0 {
                    is.push("initial.wavenumber", "must be >= 1");
                }
            }
            InitialProfile::Gaussian { c, u, c_amp, u_amp, width, center } => {
                base(is, c, *u);
                is.length("initial.c_amp", c_amp.len(), n);
                for (i, (&ci, &ai)) in c.iter().zip(c_amp).enumerate() {
                    if ci + ai.min(0.0) < 0.0 {
                        is.push(format!("initial.c_amp[{i}]"), "profile would be negative");
                    }
                }
                if u + u_amp.min(0.0) <= 0.0 {
                    is.push("initial.u_amp", "profile would make the energy non-positive");
                }
                is.positive("initial.width", *width);
                if center.len() != self.grid.dim {
                    is.push("initial.center", format!("needs {} coordinates", self.grid.dim));
                }
            }
            InitialProfile::Equilibrium { u } => is.positive("initial.u", *u),
            InitialProfile::EntropyVars { y, v } => {
                is.length("initial.y", y.len(), n);
                if !v.is_finite() || y.iter().any(|x| !x.is_finite()) {
                    is.push("initial", "entropy variables must be finite");
                }
            }
        }
    }

    /// Assembles models and initial data in scalar type `T`.
    pub fn build<T: Real>(&self) -> Result<Scenario<T>, ConfigError> {
        self.validate()?;
        let fail = |path: &str, e: &dyn fmt::Display| {
            ConfigError::Invalid(vec![ConfigIssue { path: path.into(), message: e.to_string() }])
        };
        let n = self.species();
        let s = &self.solver;
        let entropy =
            EntropyModel::new(self.entropy.sigma, self.entropy.w.clone(), s.delta).map_err(|e| fail("entropy", &e))?.cast::<T>();
        let m = &self.mobility;
        let mobility = MobilityModel::new(m.kappa0.clone(), m.kappa1.clone(), m.pi1, m.regime, s.delta)
            .map_err(|e| fail("mobility", &e))?
            .cast::<T>();
        let reactions = ReactionNetwork::new(self.reactions.clone(), s.rho, n).map_err(|e| fail("reactions", &e))?.cast::<T>();
        let models = Models { entropy, mobility, reactions };
        let grid = Grid::new(self.grid.dim, self.grid.n).map_err(|e| fail("grid", &e))?;
        let initial = self.initial_field::<T>(&models, &grid).map_err(|e| fail("initial", &e))?;
        let solver = SolverConfig {
            tau: T::lit(s.tau),
            eps: T::lit(s.eps),
            fp_tol: T::lit(s.fp_tol),
            fp_max_iters: s.fp_max_iters,
            damping: T::lit(s.damping),
            newton_switch: T::lit(s.newton_switch),
            apriori_factor: T::lit(s.apriori_factor),
        };
        Ok(Scenario {
            name: self.name.clone(),
            concept: self.concept,
            models,
            solver,
            grid,
            initial,
            horizon: T::lit(self.horizon),
            stride: self.stride,
            seed: self.seed,
        })
    }

    fn initial_field<T: Real>(&self, models: &Models<T>, grid: &Grid) -> Result<StateField<T>, Box<dyn std::error::Error>> {
        let n = self.species();
        let dim = grid.dim();
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let field = match &self.initial {
            InitialProfile::Constant { c, u } => {
                let mut z = lit(c);
                z.push(T::lit(*u));
                StateField::from_fn(grid.clone(), n + 1, |_| z.clone())?
            }
            InitialProfile::Cosine { c, u, c_amp, u_amp, wavenumber } => {
                let k = *wavenumber as f64 * std::f64::consts::PI;
                StateField::from_fn(grid.clone(), n + 1, |p| {
                    let x = grid.cell_center::<f64>(p);
                    let shape: f64 = x[..dim].iter().map(|&xi| (k * xi).cos()).product();
                    let mut z: Vec<T> = c.iter().zip(c_amp).map(|(&b, &a)| T::lit(b + a * shape)).collect();
                    z.push(T::lit(u + u_amp * shape));
                    z
                })?
            }
            InitialProfile::Gaussian { c, u, c_amp, u_amp, width, center } => StateField::from_fn(grid.clone(), n + 1, |p| {
                let x = grid.cell_center::<f64>(p);
                let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum();
                let shape = (-r2 / (2.0 * width * width)).exp();
                let mut z: Vec<T> = c.iter().zip(c_amp).map(|(&b, &a)| T::lit(b + a * shape)).collect();
                z.push(T::lit(u + u_amp * shape));
                z
            })?,
            InitialProfile::Equilibrium { u } => {
                let u = T::lit(*u);
                let mut z = models.entropy.equilibrium(u);
                z.push(u);
                StateField::from_fn(grid.clone(), n + 1, |_| z.clone())?
            }
            InitialProfile::EntropyVars { y, v } => {
                let mut w = lit(y);
                w.push(T::lit(*v));
                let vars = EntropyVars::from_fn(grid.clone(), n + 1, |_| w.clone())?;
                models.entropy.from_entropy_vars(&vars)?
            }
        };
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
horizon = 0.1

[entropy]
sigma = { kind = "log", b = 1.0 }
w = [{ kind = "power-law", b0 = 1.0, b1 = 0.0, beta = 0.5 }]

[mobility]
regime = "H"
kappa0 = [1.0]
kappa1 = [1.0]
pi1 = { kind = "u-squared", p0 = 1.0 }

[grid]
dim = 1
n = 8

[solver]
tau = 0.01
eps = 1e-8
delta = 1e-3

[initial]
kind = "constant"
c = [1.0]
u = 1.0
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.stride, 1);
        assert_eq!(cfg.solver.fp_tol, 1e-10);
        assert!(cfg.reactions.is_empty());
        let sc = cfg.build::<f64>().unwrap();
        assert_eq!(sc.initial.cells(), 8);
    }

    #[test]
    fn regime_h_without_self_diffusion_is_rejected() {
        let text = MINIMAL.replace("kappa1 = [1.0]", "kappa1 = [0.0]");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(err.issues().iter().any(|i| i.path == "mobility.kappa1[0]"), "{err}");
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = MINIMAL.replace("horizon = 0.1", "horizon = 0.1\nhorizn = 2");
        assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Parse(_))));
    }
}
