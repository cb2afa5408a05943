//! Scenario configuration: one JSON document, validated as a whole.

use serde::{Deserialize, Serialize};
use starlab_core::expansion::{classify_expansion, thermo_expansion_gate, Classification, DtSpec};
use starlab_core::functionals::WeightSpec;
use starlab_core::homogeneous::PhaseSpec;
use starlab_core::lagrangian::{Family, SolverSpec};
use starlab_core::profile::GridSpec;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Profile,
    Expansion,
    Phase,
    EvolveSs,
    EvolveLinear,
    EvolveThermo,
    Verify,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Gas {
    #[default]
    Isentropic,
    Thermo,
}

/// Physical parameters. Unset values are filled per scenario by
/// [`validate_config`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Profile used by the `profile` scenario.
    pub gas: Gas,
    pub delta: Option<f64>,
    pub a0: f64,
    pub a1: Option<f64>,
    pub k: f64,
    pub epsilon: f64,
    /// Specific heat; the thermodynamic profile fixes it to `3K`.
    pub c_nu: Option<f64>,
    /// Central density of the thermodynamic profile.
    pub rho_c: f64,
    pub mu: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gas: Gas::Isentropic,
            delta: None,
            a0: 1.0,
            a1: None,
            k: 1.0,
            epsilon: 0.25,
            c_nu: None,
            rho_c: 1.0,
            mu: 1.0,
        }
    }
}

/// Final clock value (`t`, `s` or `tau` depending on the scenario) and the
/// emission cadence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HorizonConfig {
    pub end: Option<f64>,
    pub emit_every: Option<f64>,
}

/// Shape of one initial field before amplitude scaling. Random shapes take
/// their seed from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    Constant,
    Bump {
        center: f64,
        width: f64,
    },
    RandomSmooth {
        #[serde(default = "default_modes")]
        modes: usize,
    },
    RandomInterior {
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

fn default_modes() -> usize {
    6
}

impl ShapeSpec {
    pub fn family(&self, seed: u64) -> Family {
        match *self {
            ShapeSpec::Constant => Family::Constant,
            ShapeSpec::Bump { center, width } => Family::Bump { center, width },
            ShapeSpec::RandomSmooth { modes } => Family::RandomSmooth { modes, seed },
            ShapeSpec::RandomInterior { modes } => Family::RandomInterior { modes, seed },
        }
    }

    fn check(&self, name: &str, errors: &mut Vec<String>) {
        match *self {
            ShapeSpec::Bump { center, width } => {
                if !(0.0..=1.0).contains(&center) {
                    errors.push(format!("{name}: bump center must lie in [0, 1]"));
                }
                if !(width > 0.0) {
                    errors.push(format!("{name}: bump width must be positive"));
                }
            }
            ShapeSpec::RandomSmooth { modes } | ShapeSpec::RandomInterior { modes } => {
                if modes == 0 {
                    errors.push(format!("{name}: modes must be at least 1"));
                }
            }
            ShapeSpec::Constant => {}
        }
    }
}

/// Initial perturbation: shapes for position, velocity and temperature,
/// scaled together so that the initial amplitude equals `amplitude`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub amplitude: f64,
    pub theta0: ShapeSpec,
    pub theta1: ShapeSpec,
    pub zeta: ShapeSpec,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            theta0: ShapeSpec::RandomSmooth { modes: 6 },
            theta1: ShapeSpec::RandomInterior { modes: 6 },
            zeta: ShapeSpec::RandomSmooth { modes: 6 },
        }
    }
}

/// Initial states of the phase scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    /// `(phi, phi_s)` pairs; the default is the 3 by 3 grid over
    /// `{-0.05, 0, 0.05}`.
    pub states: Vec<[f64; 2]>,
    pub spec: PhaseSpec,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        let v = [-0.05, 0.0, 0.05];
        let states = v
            .iter()
            .flat_map(|&p| v.iter().map(move |&q| [p, q]))
            .collect();
        Self {
            states,
            spec: PhaseSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub expansion: DtSpec,
    pub horizon: HorizonConfig,
    pub initial: InitialConfig,
    pub weights: WeightSpec,
    pub phase: PhaseConfig,
    pub seed: u64,
    /// Extra seeds run concurrently as a sweep, each into its own
    /// subdirectory.
    pub sweep_seeds: Vec<u64>,
    pub out_dir: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            model: ModelConfig::default(),
            grid: GridSpec::with_intervals(100),
            solver: SolverSpec::default(),
            expansion: DtSpec::default(),
            horizon: HorizonConfig::default(),
            initial: InitialConfig::default(),
            weights: WeightSpec::default(),
            phase: PhaseConfig::default(),
            seed: 0,
            sweep_seeds: vec![],
            out_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn scenario(&self) -> Scenario {
        self.scenario.expect("validated config names its scenario")
    }

    pub fn delta(&self) -> f64 {
        self.model.delta.expect("validated config resolves delta")
    }

    pub fn a1(&self) -> f64 {
        self.model.a1.expect("validated config resolves a1")
    }

    pub fn end(&self) -> f64 {
        self.horizon
            .end
            .expect("validated config resolves the horizon")
    }

    pub fn c_nu(&self) -> f64 {
        self.model.c_nu.unwrap_or(3.0 * self.model.k)
    }
}

/// Parses and checks a configuration. `scenario` (from the command line)
/// takes effect when the document names none and must agree otherwise.
/// Every violated constraint is reported; no partial config is returned.
pub fn validate_config(
    raw: &str,
    scenario: Option<Scenario>,
) -> Result<ScenarioConfig, Vec<String>> {
    let mut cfg: ScenarioConfig =
        serde_json::from_str(raw).map_err(|e| vec![format!("parse error: {e}")])?;
    let mut errors = vec![];
    match (cfg.scenario, scenario) {
        (Some(a), Some(b)) if a != b => {
            errors.push(format!("config names scenario {a} but {b} was requested"))
        }
        (None, None) => errors.push("no scenario given".to_string()),
        (None, Some(b)) => cfg.scenario = Some(b),
        _ => {}
    }
    let Some(kind) = cfg.scenario else {
        return Err(errors);
    };
    resolve_defaults(&mut cfg, kind);
    check(&cfg, kind, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn resolve_defaults(cfg: &mut ScenarioConfig, kind: Scenario) {
    let m = &mut cfg.model;
    let delta = *m.delta.get_or_insert(match kind {
        Scenario::Phase => -0.5,
        Scenario::EvolveSs => -0.001,
        _ => 0.0,
    });
    if m.a1.is_none() {
        m.a1 = Some(match kind {
            Scenario::EvolveSs | Scenario::Phase if delta < 0.0 => {
                (2.0 * delta.abs() / m.a0).sqrt()
            }
            _ => 1.0,
        });
    }
    if kind == Scenario::EvolveThermo || m.gas == Gas::Thermo {
        m.c_nu.get_or_insert(3.0 * m.k);
    }
    let end = *cfg.horizon.end.get_or_insert(match kind {
        Scenario::Phase => 40.0,
        Scenario::EvolveThermo => 1.0,
        _ => 10.0,
    });
    cfg.horizon.emit_every.get_or_insert(end / 20.0);
    cfg.solver.mu = m.mu;
}

fn positive(errors: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errors.push(format!("{name} > 0"));
    }
}

fn check(cfg: &ScenarioConfig, kind: Scenario, errors: &mut Vec<String>) {
    let m = &cfg.model;
    let delta = cfg.delta();
    let a1 = cfg.a1();
    if !delta.is_finite() || !a1.is_finite() {
        errors.push("delta and a1 must be finite".into());
    }
    positive(errors, "a0", m.a0);
    positive(errors, "mu", m.mu);
    positive(errors, "K", m.k);
    positive(errors, "rho_c", m.rho_c);
    if cfg.grid.intervals < 4 {
        errors.push("grid.intervals >= 4".into());
    }
    for (n, v) in [
        ("grid.rtol", cfg.grid.rtol),
        ("grid.atol", cfg.grid.atol),
        ("grid.max_step", cfg.grid.max_step),
    ] {
        positive(errors, n, v);
    }
    positive(errors, "horizon.end", cfg.end());
    if !(cfg.horizon.emit_every.unwrap_or(0.0) >= 0.0) {
        errors.push("horizon.emit_every >= 0".into());
    }
    if !(cfg.initial.amplitude >= 0.0 && cfg.initial.amplitude.is_finite()) {
        errors.push("amplitude >= 0".into());
    }
    let s = &cfg.solver;
    for (n, v) in [
        ("solver.dt_max", s.dt_max),
        ("solver.dt_min", s.dt_min),
        ("solver.cfl", s.cfl),
    ] {
        positive(errors, n, v);
    }
    if s.dt_min > s.dt_max {
        errors.push("solver.dt_min <= solver.dt_max".into());
    }
    cfg.initial.theta0.check("initial.theta0", errors);
    cfg.initial.theta1.check("initial.theta1", errors);
    cfg.initial.zeta.check("initial.zeta", errors);
    errors.extend(cfg.weights.violations());

    let thermo =
        kind == Scenario::EvolveThermo || (kind == Scenario::Profile && m.gas == Gas::Thermo);
    if thermo {
        let ek = m.epsilon * m.k;
        if !(ek > 1.0 / 6.0 && ek < 1.0) {
            errors.push("1/6 < epsilon K < 1".into());
        }
        if !thermo_expansion_gate(m.k, cfg.c_nu(), 1e-12) {
            errors.push("3K − c_ν = 0".into());
        }
    }
    let class = classify_expansion(delta, m.a0, a1).map(|p| p.classification);
    match kind {
        Scenario::EvolveSs => {
            if !(delta < 0.0) {
                errors.push("evolve-ss requires delta < 0".into());
            } else if class.ok() != Some(Classification::SelfSimilar) {
                errors.push("evolve-ss requires a1 = sqrt(2|delta|/a0)".into());
            }
        }
        Scenario::EvolveLinear => {
            if !matches!(
                class,
                Ok(Classification::Linear) | Ok(Classification::PositiveDelta)
            ) {
                errors.push("evolve-linear requires a Linear or PositiveDelta expansion".into());
            }
        }
        Scenario::EvolveThermo => {
            if delta != 0.0 {
                errors.push("evolve-thermo requires delta = 0".into());
            }
            if !(a1 > 0.0) {
                errors.push("evolve-thermo requires a1 > 0".into());
            }
        }
        Scenario::Phase => {
            if !(delta < 0.0) {
                errors.push("phase requires delta < 0".into());
            }
            if cfg.phase.states.is_empty() {
                errors.push("phase.states must not be empty".into());
            }
            for st in &cfg.phase.states {
                if !(1.0 + st[0] > 0.0) {
                    errors.push(format!("phase state {st:?}: 1 + phi > 0"));
                }
            }
        }
        _ => {}
    }
}
