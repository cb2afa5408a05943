//! Lagrangian perturbation solvers on the fixed mass-coordinate grid.
//!
//! Nodes sit at `x_i = i R0 / N`. Node `i >= 1` carries the perturbation
//! `phi_i` of the flow map (`r_i = alpha x_i (1 + phi_i)`) and its clock
//! derivative; cell `j` lies between nodes `j-1` and `j` and carries the
//! pressure. The center `r_0 = 0` is not an unknown. Gravity acts as a fixed
//! central force per node whose strength makes the unperturbed state an exact
//! discrete equilibrium, so the zero perturbation stays at zero to rounding.
//!
//! Time stepping is a symmetric splitting: an implicit two-stage SDIRK step
//! for viscosity and damping with the geometry frozen, and a velocity-Verlet
//! step for pressure and gravity. The thermodynamic solver adds an implicit
//! conduction step for the temperature perturbation.

use crate::expansion::{thermo_expansion_gate, Classification, ClockModel, ExpansionParams};
use crate::functionals::{amplitude, amplitude_thermo, chi};
use crate::numerics::{even_origin_value, solve_mmatrix};
use crate::profile::{IsentropicProfile, ThermoProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SDIRK_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const FD_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangianError {
    #[error("grid with {0} intervals is too coarse")]
    InvalidGrid(usize),
    #[error("initial data has {got} values, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("flow map degenerates in cell {cell}")]
    JacobianDegenerate { cell: usize },
    #[error("absolute temperature is not positive at node {node}")]
    TemperatureNegative { node: usize },
    #[error("lumped mass vanishes at node {0}")]
    DegenerateWeight(usize),
    #[error("expansion parameters do not match: {0}")]
    ParamMismatch(String),
    #[error("invalid solver setting: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SelfSimilar,
    LinearIsentropic,
    LinearThermo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    JacobianDegenerate,
    Growth,
    TemperatureNegative,
    CflFloor,
    StepLimit,
    /// Parameters outside the range covered by the stability theory.
    OutsideStabilityRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub kind: EventKind,
    pub clock: f64,
    pub detail: String,
}

/// Perturbation of an isentropic expanding star, `theta = phi` (clock `s`)
/// or `theta = vartheta` (clock `tau`). Arrays include the center node,
/// filled by even extrapolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationField {
    pub regime: Regime,
    pub clock: f64,
    pub x_nodes: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_t: Vec<f64>,
    /// Second clock derivative evaluated from the discrete equation.
    pub theta_tt: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoPerturbationField {
    pub clock: f64,
    pub x_nodes: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_t: Vec<f64>,
    pub xi_tt: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta_t: Vec<f64>,
    pub theta_bar: Vec<f64>,
}

impl PerturbationField {
    pub fn spacing(&self) -> f64 {
        self.x_nodes[1] - self.x_nodes[0]
    }

    pub fn r0(&self) -> f64 {
        *self.x_nodes.last().unwrap()
    }
}

impl ThermoPerturbationField {
    pub fn spacing(&self) -> f64 {
        self.x_nodes[1] - self.x_nodes[0]
    }

    pub fn r0(&self) -> f64 {
        *self.x_nodes.last().unwrap()
    }
}

/// Eulerian fields rebuilt from a Lagrangian snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerianSnapshot {
    /// Physical time of the snapshot.
    pub t: f64,
    pub r: Vec<f64>,
    /// Node densities `x^2 rho_bar / (r^2 r_x)`.
    pub rho: Vec<f64>,
    /// Cell-average densities, cell `j` between nodes `j-1` and `j`.
    pub rho_cell: Vec<f64>,
    pub u: Vec<f64>,
    pub theta_abs: Option<Vec<f64>>,
    pub r_boundary: f64,
    /// Lagrangian cell masses used for the exact mass check.
    pub cell_mass: Vec<f64>,
}

impl EulerianSnapshot {
    /// `sum rho_cell * cell volume`, equal to the profile mass.
    pub fn total_mass(&self) -> f64 {
        (1..self.r.len())
            .map(|j| {
                let (a, b) = (self.r[j], self.r[j - 1]);
                self.rho_cell[j] * (a - b) * (a * a + a * b + b * b) / 3.0
            })
            .sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub mu: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Fraction of the Verlet stability bound `2 / sqrt(lambda_max)`.
    pub cfl: f64,
    /// Largest accepted `max |dq / q|` per step.
    pub max_rel_change: f64,
    /// Bound on `dt * d ln(W) / d clock` for the viscous weight `W`.
    pub coeff_growth: f64,
    /// Snapshot cadence in clock units; zero keeps only the end points.
    pub emit_every: f64,
    /// Stop with a `Growth` event once the amplitude exceeds this.
    pub growth_threshold: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            mu: 1.0,
            dt_max: 0.05,
            dt_min: 1e-10,
            cfl: 0.5,
            max_rel_change: 1e-3,
            coeff_growth: 0.2,
            emit_every: 0.0,
            growth_threshold: None,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub clock: f64,
    pub dt: f64,
    /// Discrete physical energy (isentropic regimes).
    pub energy: Option<f64>,
    /// `(4 mu / 3) sum k_j (dpsi_j)^2` in clock units.
    pub dissipation: f64,
    /// Factor `w` in `dE/dclock = -w * dissipation`.
    pub dissipation_weight: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evolution<F> {
    pub snapshots: Vec<F>,
    pub events: Vec<RunEvent>,
    pub history: Vec<StepRecord>,
    pub steps: usize,
    pub rejected: usize,
    pub final_clock: f64,
}

impl<F> Evolution<F> {
    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    pub fn last(&self) -> &F {
        self.snapshots.last().expect("at least one snapshot")
    }
}

/// Initial data on the nodes `0..=N` (the center value is ignored).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsentropicInitial {
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoInitial {
    pub xi0: Vec<f64>,
    pub xi1: Vec<f64>,
    /// Forced to zero at `R0`.
    pub zeta0: Vec<f64>,
}

impl IsentropicInitial {
    pub fn zero(n_nodes: usize) -> Self {
        Self {
            phi0: vec![0.0; n_nodes],
            phi1: vec![0.0; n_nodes],
        }
    }

    pub fn uniform(n_nodes: usize, phi: f64, phi_t: f64) -> Self {
        Self {
            phi0: vec![phi; n_nodes],
            phi1: vec![phi_t; n_nodes],
        }
    }
}

impl IsentropicInitial {
    /// `(phi0, phi1) = c (g0, g1)` with `c` chosen so that the amplitude of
    /// the data equals `amplitude`. Zero shapes give zero data.
    pub fn scaled(x: &[f64], g0: &[f64], g1: &[f64], amp: f64) -> Self {
        let field = PerturbationField {
            regime: Regime::SelfSimilar,
            clock: 0.0,
            x_nodes: x.to_vec(),
            theta: g0.to_vec(),
            theta_t: g1.to_vec(),
            theta_tt: vec![0.0; x.len()],
        };
        let w = amplitude(&field);
        let c = if w > 0.0 { amp / w } else { 0.0 };
        Self {
            phi0: g0.iter().map(|v| c * v).collect(),
            phi1: g1.iter().map(|v| c * v).collect(),
        }
    }
}

impl ThermoInitial {
    /// Thermodynamic analogue of [`IsentropicInitial::scaled`]; `z` is
    /// multiplied by `(R0 - x) / R0` so that `zeta(R0) = 0`.
    pub fn scaled(x: &[f64], g0: &[f64], g1: &[f64], z: &[f64], amp: f64) -> Self {
        let r0 = *x.last().unwrap();
        let zeta: Vec<f64> = x
            .iter()
            .zip(z)
            .map(|(xi, zi)| zi * (r0 - xi) / r0)
            .collect();
        let field = ThermoPerturbationField {
            clock: 0.0,
            x_nodes: x.to_vec(),
            xi: g0.to_vec(),
            xi_t: g1.to_vec(),
            xi_tt: vec![0.0; x.len()],
            zeta: zeta.clone(),
            zeta_t: vec![0.0; x.len()],
            theta_bar: vec![],
        };
        let w = amplitude_thermo(&field);
        let c = if w > 0.0 { amp / w } else { 0.0 };
        let sc = |v: &[f64]| v.iter().map(|a| c * a).collect();
        Self {
            xi0: sc(g0),
            xi1: sc(g1),
            zeta0: sc(&zeta),
        }
    }

    pub fn zero(n_nodes: usize) -> Self {
        Self {
            xi0: vec![0.0; n_nodes],
            xi1: vec![0.0; n_nodes],
            zeta0: vec![0.0; n_nodes],
        }
    }
}

/// Shape families for initial perturbations, sampled with unit sup norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Constant,
    /// `(1 + cos(pi (x - c) / w)) / 2` on `|x - c| < w`; `c`, `w` are
    /// fractions of `R0`.
    Bump {
        center: f64,
        width: f64,
    },
    /// `sum_k a_k cos(k pi x / R0)`, `k <= modes`, with seeded
    /// `a_k ~ U(-1, 1) / (1 + k)^2`. Even at the center and flat at `R0`.
    RandomSmooth {
        modes: usize,
        seed: u64,
    },
    /// `RandomSmooth` multiplied by the interior cut-off, so the data vanish
    /// on `[3 R0 / 4, R0]`.
    RandomInterior {
        modes: usize,
        seed: u64,
    },
}

impl Family {
    pub fn sample(&self, x: &[f64]) -> Vec<f64> {
        let r0 = *x.last().unwrap();
        let raw: Vec<f64> = match *self {
            Family::Constant => vec![1.0; x.len()],
            Family::Bump { center, width } => {
                let (c, w) = (center * r0, width * r0);
                x.iter()
                    .map(|&xi| {
                        let d = (xi - c).abs().min((xi + c).abs());
                        if d < w {
                            0.5 * (1.0 + (std::f64::consts::PI * d / w).cos())
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            Family::RandomInterior { modes, seed } => {
                let g = Family::RandomSmooth { modes, seed }.sample(x);
                g.iter().zip(x).map(|(v, xi)| v * chi(*xi, r0)).collect()
            }
            Family::RandomSmooth { modes, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coef: Vec<f64> = (0..=modes)
                    .map(|k| rng.gen_range(-1.0..1.0) / ((1 + k) as f64).powi(2))
                    .collect();
                x.iter()
                    .map(|&xi| {
                        coef.iter()
                            .enumerate()
                            .map(|(k, a)| a * (k as f64 * std::f64::consts::PI * xi / r0).cos())
                            .sum()
                    })
                    .collect()
            }
        };
        let m = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            raw.iter().map(|v| v / m).collect()
        } else {
            raw
        }
    }
}

/// Grid, masses and reference pressures shared by all solvers.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub r0: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub rho_bar: Vec<f64>,
    /// Cell masses, index `j = 1..=N` (index 0 unused).
    pub dm: Vec<f64>,
    /// Lumped node masses, index `i = 1..=N`.
    pub node_mass: Vec<f64>,
}

impl Mesh {
    fn new(r0: f64, x: &[f64], rho_bar: &[f64], dm: Vec<f64>) -> Result<Self, LagrangianError> {
        let n = x.len() - 1;
        if n < 4 {
            return Err(LagrangianError::InvalidGrid(n));
        }
        let mut node_mass = vec![0.0; n + 1];
        node_mass[1] = dm[1] + 0.5 * dm[2];
        for i in 2..n {
            node_mass[i] = 0.5 * (dm[i] + dm[i + 1]);
        }
        node_mass[n] = 0.5 * dm[n];
        if let Some(i) = (1..=n).find(|&i| !(node_mass[i] > 0.0)) {
            return Err(LagrangianError::DegenerateWeight(i));
        }
        Ok(Self {
            r0,
            h: r0 / n as f64,
            x: x.to_vec(),
            rho_bar: rho_bar.to_vec(),
            dm,
            node_mass,
        })
    }

    pub fn isentropic(p: &IsentropicProfile) -> Result<Self, LagrangianError> {
        Self::new(p.r0, &p.y_nodes, &p.rho_bar, p.cell_masses())
    }

    pub fn thermo(p: &ThermoProfile) -> Result<Self, LagrangianError> {
        Self::new(p.r0, &p.y_nodes, &p.rho_bar, p.cell_masses())
    }

    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }
}

#[derive(Debug, Clone)]
enum Material {
    Isentropic {
        delta: f64,
    },
    Thermo {
        k: f64,
        theta_bar: Vec<f64>,
        cbar: Vec<f64>,
    },
}

/// Discrete system plus its state.
#[derive(Debug, Clone)]
struct Scheme {
    mesh: Mesh,
    material: Material,
    clock: ClockModel,
    mu: f64,
    pbar: Vec<f64>,
    phi: Vec<f64>,
    v: Vec<f64>,
    zeta: Vec<f64>,
}

struct Coeffs {
    alpha: f64,
    alpha_c: f64,
    /// Inertia, damping and viscous weights.
    a: f64,
    b: f64,
    w: f64,
    /// `p` in `d clock / dt = alpha^{-p}`.
    p: f64,
}

impl Scheme {
    fn new(mesh: Mesh, material: Material, clock: ClockModel, mu: f64) -> Self {
        let n = mesh.intervals();
        let mut s = Scheme {
            mesh,
            material,
            clock,
            mu,
            pbar: vec![],
            phi: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            zeta: vec![0.0; n + 1],
        };
        let zero = vec![0.0; n + 1];
        s.pbar = s
            .pressures(&zero, &zero)
            .expect("reference cells are non-degenerate");
        let reference = s.conduction(&s.edges(&zero));
        if let Material::Thermo { ref mut cbar, .. } = s.material {
            *cbar = reference;
        }
        s
    }

    fn n(&self) -> usize {
        self.mesh.intervals()
    }

    fn coeffs(&self, c: f64) -> Coeffs {
        let (alpha, alpha_c) = self.clock.alpha(c);
        if self.clock.is_self_similar() {
            let b = alpha_c / alpha;
            Coeffs {
                alpha,
                alpha_c,
                a: 1.0,
                b: 0.5 * b,
                w: alpha.powf(2.5),
                p: 1.5,
            }
        } else {
            Coeffs {
                alpha,
                alpha_c,
                a: alpha,
                b: alpha_c,
                w: alpha * alpha * alpha,
                p: 1.0,
            }
        }
    }

    fn delta(&self) -> f64 {
        match self.material {
            Material::Isentropic { delta } => delta,
            Material::Thermo { .. } => 0.0,
        }
    }

    /// Scaled node radii `x_i q_i`, with `e_0 = 0`.
    fn edges(&self, phi: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; phi.len()];
        for i in 1..phi.len() {
            e[i] = self.mesh.x[i] * (1.0 + phi[i]);
        }
        e
    }

    fn volumes(&self, e: &[f64]) -> Result<Vec<f64>, usize> {
        let n = self.n();
        let mut vol = vec![0.0; n + 1];
        for j in 1..=n {
            let (a, b) = (e[j], e[j - 1]);
            let d = a - b;
            if !(d > 0.0) {
                return Err(j);
            }
            vol[j] = d * (a * a + a * b + b * b) / 3.0;
        }
        Ok(vol)
    }

    fn node_temps(&self, zeta: &[f64]) -> Vec<f64> {
        match self.material {
            Material::Thermo { ref theta_bar, .. } => {
                theta_bar.iter().zip(zeta).map(|(t, z)| t + z).collect()
            }
            Material::Isentropic { .. } => vec![],
        }
    }

    /// Cell pressures, index `1..=N`, with zero at `N + 1`.
    fn pressures(&self, phi: &[f64], zeta: &[f64]) -> Result<Vec<f64>, usize> {
        let n = self.n();
        let vol = self.volumes(&self.edges(phi))?;
        let mut p = vec![0.0; n + 2];
        match self.material {
            Material::Isentropic { .. } => {
                for j in 1..=n {
                    p[j] = (self.mesh.dm[j] / vol[j]).powf(4.0 / 3.0);
                }
            }
            Material::Thermo { k, .. } => {
                let t = self.node_temps(zeta);
                for j in 1..=n {
                    let tc = if j == 1 {
                        t[1]
                    } else {
                        0.5 * (t[j - 1] + t[j])
                    };
                    p[j] = k * self.mesh.dm[j] / vol[j] * tc;
                }
            }
        }
        Ok(p)
    }

    /// Pressure and gravity forces `F_i` in `M_i x_i (A v' + B v) = F_i + visc`.
    fn forces(&self, phi: &[f64], p: &[f64]) -> Vec<f64> {
        let n = self.n();
        let delta = self.delta();
        let mut f = vec![0.0; n + 1];
        for i in 1..=n {
            let q = 1.0 + phi[i];
            let q2 = q * q;
            let x = self.mesh.x[i];
            let grav = self.mesh.node_mass[i] * x * delta * (q - 1.0 / q2);
            let press = x * x * (q2 * (p[i + 1] - p[i]) - (self.pbar[i + 1] - self.pbar[i]) / q2);
            f[i] = -grav - press;
        }
        f
    }

    /// Viscous conductances `(e_j e_{j-1})^2 / (e_j - e_{j-1})`, zero for the
    /// center cell and past `R0`.
    fn kappa_hat(&self, e: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut k = vec![0.0; n + 2];
        for j in 2..=n {
            let (a, b) = (e[j], e[j - 1]);
            k[j] = (a * b) * (a * b) / (a - b);
        }
        k
    }

    /// Heat conductances `e_j e_{j-1} / (e_j - e_{j-1})`.
    fn conduction(&self, e: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut c = vec![0.0; n + 2];
        for j in 2..=n {
            let (a, b) = (e[j], e[j - 1]);
            c[j] = a * b / (a - b);
        }
        c
    }

    fn psi(&self, phi: &[f64], v: &[f64]) -> Vec<f64> {
        let mut psi = vec![0.0; phi.len()];
        for i in 1..phi.len() {
            psi[i] = v[i] / (1.0 + phi[i]);
        }
        psi
    }

    fn dissipation(&self, phi: &[f64], v: &[f64]) -> f64 {
        let k = self.kappa_hat(&self.edges(phi));
        let psi = self.psi(phi, v);
        let s: f64 = (2..=self.n())
            .map(|j| k[j] * (psi[j] - psi[j - 1]).powi(2))
            .sum();
        4.0 * self.mu / 3.0 * s
    }

    /// Clock acceleration `phi_cc` from the full discrete equation.
    fn acceleration(
        &self,
        c: f64,
        phi: &[f64],
        v: &[f64],
        zeta: &[f64],
    ) -> Result<Vec<f64>, usize> {
        let n = self.n();
        let co = self.coeffs(c);
        let p = self.pressures(phi, zeta)?;
        let f = self.forces(phi, &p);
        let e = self.edges(phi);
        let k = self.kappa_hat(&e);
        let psi = self.psi(phi, v);
        let stress = |j: usize| {
            if j >= 2 && j <= n {
                k[j] * (psi[j] - psi[j - 1])
            } else {
                0.0
            }
        };
        let cw = 4.0 * self.mu / 3.0 * co.w;
        let mut acc = vec![0.0; n + 1];
        for i in 1..=n {
            let mx = self.mesh.node_mass[i] * self.mesh.x[i];
            let q = 1.0 + phi[i];
            let visc = cw * (stress(i + 1) - stress(i)) / (mx * self.mesh.x[i] * q);
            acc[i] = (f[i] / mx - co.b * v[i] + visc) / co.a;
        }
        Ok(acc)
    }

    /// Mass-weighted `V'/V` per node in clock units.
    fn compression(&self, phi: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let e = self.edges(phi);
        let mut rate = vec![0.0; n + 2];
        for j in 1..=n {
            let (a, b) = (e[j], e[j - 1]);
            let da = self.mesh.x[j] * v[j];
            let db = if j >= 2 {
                self.mesh.x[j - 1] * v[j - 1]
            } else {
                0.0
            };
            rate[j] = 3.0 * (a * a * da - b * b * db) / ((a - b) * (a * a + a * b + b * b));
        }
        let dm = &self.mesh.dm;
        let mut d = vec![0.0; n + 1];
        for i in 1..=n {
            let own = if i == 1 {
                dm[1] * rate[1]
            } else {
                0.5 * dm[i] * rate[i]
            };
            let next = if i < n {
                0.5 * dm[i + 1] * rate[i + 1]
            } else {
                0.0
            };
            d[i] = (own + next) / self.mesh.node_mass[i];
        }
        d
    }

    /// Viscous heating shared to nodes: `(k_i dpsi_i^2 + k_{i+1} dpsi_{i+1}^2)/2`.
    fn heating(&self, phi: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let k = self.kappa_hat(&self.edges(phi));
        let psi = self.psi(phi, v);
        let cell = |j: usize| {
            if j >= 2 && j <= n {
                k[j] * (psi[j] - psi[j - 1]).powi(2)
            } else {
                0.0
            }
        };
        let mut hgt = vec![0.0; n + 1];
        for i in 1..=n {
            hgt[i] = 0.5 * (cell(i) + cell(i + 1));
        }
        hgt
    }

    /// Temperature pieces that do not involve the conduction of `zeta`:
    /// geometric conduction source, heating and compression, per node.
    fn temperature_sources(
        &self,
        phi: &[f64],
        v: &[f64],
        zeta: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n();
        let (k, theta_bar, cbar) = match self.material {
            Material::Thermo {
                k,
                ref theta_bar,
                ref cbar,
            } => (k, theta_bar, cbar),
            Material::Isentropic { .. } => unreachable!("temperature on an isentropic run"),
        };
        let c = self.conduction(&self.edges(phi));
        let dth = |j: usize| theta_bar[j] - theta_bar[j - 1];
        let geo = |j: usize| {
            if j >= 2 && j <= n {
                (c[j] - cbar[j]) * dth(j)
            } else {
                0.0
            }
        };
        let heat = self.heating(phi, v);
        let d = self.compression(phi, v);
        let mut src = vec![0.0; n + 1];
        let mut comp = vec![0.0; n + 1];
        for i in 1..n {
            src[i] = geo(i + 1) - geo(i);
            comp[i] = -k * (theta_bar[i] + zeta[i]) * self.mesh.node_mass[i] * d[i];
        }
        (src, heat, comp)
    }

    fn zeta_rate(&self, c: f64, phi: &[f64], v: &[f64], zeta: &[f64]) -> Vec<f64> {
        let n = self.n();
        let k = match self.material {
            Material::Thermo { k, .. } => k,
            Material::Isentropic { .. } => return vec![0.0; n + 1],
        };
        let co = self.coeffs(c);
        let a2 = co.alpha * co.alpha;
        let a3 = a2 * co.alpha;
        let cond = self.conduction(&self.edges(phi));
        let (src, heat, comp) = self.temperature_sources(phi, v, zeta);
        let mut rate = vec![0.0; n + 1];
        for i in 1..n {
            let lap = cond[i + 1] * (zeta[i + 1] - zeta[i]) - cond[i] * (zeta[i] - zeta[i - 1]);
            let rhs = a2 * (lap + src[i]) + 4.0 * self.mu / 3.0 * a3 * heat[i] + comp[i];
            rate[i] = rhs / (3.0 * k * self.mesh.node_mass[i]);
        }
        rate
    }

    /// Discrete physical energy for the isentropic regimes.
    fn energy(&self, c: f64) -> Option<f64> {
        let delta = match self.material {
            Material::Isentropic { delta } => delta,
            Material::Thermo { .. } => return None,
        };
        let n = self.n();
        let co = self.coeffs(c);
        let e = self.edges(&self.phi);
        let vol = self.volumes(&e).ok()?;
        let p = self.pressures(&self.phi, &self.zeta).ok()?;
        let scale = co.alpha.powf(-co.p);
        let mut kin = 0.0;
        let mut grav = 0.0;
        for i in 1..=n {
            let x = self.mesh.x[i];
            let q = 1.0 + self.phi[i];
            let rdot = x * scale * (co.alpha_c * q + co.alpha * self.v[i]);
            kin += 0.5 * self.mesh.node_mass[i] * rdot * rdot;
            let g = -x
                * x
                * (self.mesh.node_mass[i] * delta * x + x * x * (self.pbar[i + 1] - self.pbar[i]));
            grav -= g / (x * q);
        }
        let internal: f64 = (1..=n).map(|j| 3.0 * p[j] * vol[j]).sum();
        Some(kin + (internal + grav) / co.alpha)
    }

    fn dissipation_weight(&self, c: f64) -> f64 {
        let co = self.coeffs(c);
        co.alpha.powf(3.0 - co.p)
    }

    /// Viscosity and damping over `[c0, c0 + h]` with the geometry frozen.
    fn dissipate(&mut self, c0: f64, h: f64) {
        let n = self.n();
        let e = self.edges(&self.phi);
        let k = self.kappa_hat(&e);
        let q: Vec<f64> = self.phi.iter().map(|p| 1.0 + p).collect();
        let m: Vec<f64> = (0..=n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    self.mesh.node_mass[i] * (self.mesh.x[i] * q[i]).powi(2)
                }
            })
            .collect();
        let psi0 = self.psi(&self.phi, &self.v);
        let hg = h * SDIRK_GAMMA;
        let stage = |c: f64, rhs: &[f64]| -> Vec<f64> {
            let co = self.coeffs(c);
            let cw = hg * 4.0 * self.mu / 3.0 * co.w;
            let s: Vec<f64> = (1..=n).map(|i| m[i] * (co.a + hg * co.b)).collect();
            let a: Vec<f64> = (1..=n).map(|i| cw * k[i]).collect();
            let cc: Vec<f64> = (1..=n).map(|i| cw * k[i + 1]).collect();
            let f: Vec<f64> = (1..=n).map(|i| m[i] * co.a * rhs[i]).collect();
            let y = solve_mmatrix(&s, &a, &cc, &f);
            let mut out = vec![0.0; n + 1];
            out[1..].copy_from_slice(&y);
            out
        };
        let y1 = stage(c0 + hg, &psi0);
        let rhs2: Vec<f64> = (0..=n)
            .map(|i| psi0[i] + (1.0 - SDIRK_GAMMA) * (y1[i] - psi0[i]) / SDIRK_GAMMA)
            .collect();
        let y2 = stage(c0 + h, &rhs2);
        for i in 1..=n {
            self.v[i] = q[i] * y2[i];
        }
    }

    /// Conduction with heating and compression frozen over `[c0, c0 + h]`.
    fn conduct(&mut self, c0: f64, h: f64) {
        let n = self.n();
        let k = match self.material {
            Material::Thermo { k, .. } => k,
            Material::Isentropic { .. } => return,
        };
        let cond = self.conduction(&self.edges(&self.phi));
        let (src, heat, comp) = self.temperature_sources(&self.phi, &self.v, &self.zeta);
        let m: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    3.0 * k * self.mesh.node_mass[i]
                }
            })
            .collect();
        let hg = h * SDIRK_GAMMA;
        let c43 = 4.0 * self.mu / 3.0;
        let stage = |c: f64, rhs: &[f64]| -> Vec<f64> {
            let co = self.coeffs(c);
            let a2 = co.alpha * co.alpha;
            let a3 = a2 * co.alpha;
            let s: Vec<f64> = (1..n).map(|i| m[i]).collect();
            let a: Vec<f64> = (1..n).map(|i| hg * a2 * cond[i]).collect();
            let cc: Vec<f64> = (1..n).map(|i| hg * a2 * cond[i + 1]).collect();
            let f: Vec<f64> = (1..n)
                .map(|i| m[i] * rhs[i] + hg * (a2 * src[i] + c43 * a3 * heat[i] + comp[i]))
                .collect();
            let y = solve_mmatrix(&s, &a, &cc, &f);
            let mut out = vec![0.0; n + 1];
            out[1..n].copy_from_slice(&y);
            out
        };
        let z0 = self.zeta.clone();
        let y1 = stage(c0 + hg, &z0);
        let rhs2: Vec<f64> = (0..=n)
            .map(|i| z0[i] + (1.0 - SDIRK_GAMMA) * (y1[i] - z0[i]) / SDIRK_GAMMA)
            .collect();
        let y2 = stage(c0 + h, &rhs2);
        self.zeta = y2;
        self.zeta[n] = 0.0;
    }

    fn conservative_acc(&self, a: f64, phi: &[f64]) -> Result<Vec<f64>, usize> {
        let p = self.pressures(phi, &self.zeta)?;
        let f = self.forces(phi, &p);
        let mut acc = vec![0.0; phi.len()];
        for i in 1..phi.len() {
            acc[i] = f[i] / (self.mesh.node_mass[i] * self.mesh.x[i] * a);
        }
        Ok(acc)
    }

    /// Kick-drift-kick for pressure and gravity with inertia frozen at `cm`.
    fn conserve(&mut self, cm: f64, h: f64) -> Result<(), usize> {
        let a = self.coeffs(cm).a;
        let acc = self.conservative_acc(a, &self.phi)?;
        let n = self.n();
        for i in 1..=n {
            self.v[i] += 0.5 * h * acc[i];
            self.phi[i] += h * self.v[i];
        }
        let acc = self.conservative_acc(a, &self.phi)?;
        for i in 1..=n {
            self.v[i] += 0.5 * h * acc[i];
        }
        Ok(())
    }

    /// Gershgorin bound on the spectrum of the conservative force Jacobian,
    /// from three colored finite-difference sweeps.
    fn stiffness(&self, c: f64) -> f64 {
        let n = self.n();
        let a = self.coeffs(c).a;
        let base = match self.conservative_acc(a, &self.phi) {
            Ok(b) => b,
            Err(_) => return f64::INFINITY,
        };
        let mut row = vec![0.0; n + 1];
        for color in 0..3 {
            let mut pert = self.phi.clone();
            for j in (1..=n).filter(|j| j % 3 == color) {
                pert[j] += FD_EPS * (1.0 + self.phi[j].abs());
            }
            let acc = match self.conservative_acc(a, &pert) {
                Ok(acc) => acc,
                Err(_) => return f64::INFINITY,
            };
            for i in 1..=n {
                for j in [i.saturating_sub(1), i, i + 1] {
                    if j >= 1 && j <= n && j % 3 == color {
                        let eps = pert[j] - self.phi[j];
                        row[i] += ((acc[i] - base[i]) / eps).abs();
                    }
                }
            }
        }
        row.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    fn step(&mut self, c: f64, h: f64) -> Result<(), usize> {
        let thermo = matches!(self.material, Material::Thermo { .. });
        self.dissipate(c, 0.5 * h);
        if thermo {
            self.conduct(c, 0.5 * h);
        }
        self.conserve(c + 0.5 * h, h)?;
        if thermo {
            self.conduct(c + 0.5 * h, 0.5 * h);
        }
        self.dissipate(c + 0.5 * h, 0.5 * h);
        Ok(())
    }

    fn with_center(&self, f: &[f64]) -> Vec<f64> {
        let mut out = f.to_vec();
        out[0] = even_origin_value(f[1], f[2]);
        out
    }

    fn iso_field(&self, regime: Regime, c: f64) -> PerturbationField {
        let acc = self
            .acceleration(c, &self.phi, &self.v, &self.zeta)
            .unwrap_or_else(|_| vec![f64::NAN; self.n() + 1]);
        PerturbationField {
            regime,
            clock: c,
            x_nodes: self.mesh.x.clone(),
            theta: self.with_center(&self.phi),
            theta_t: self.with_center(&self.v),
            theta_tt: self.with_center(&acc),
        }
    }

    fn thermo_field(&self, c: f64) -> ThermoPerturbationField {
        let acc = self
            .acceleration(c, &self.phi, &self.v, &self.zeta)
            .unwrap_or_else(|_| vec![f64::NAN; self.n() + 1]);
        let zr = self.zeta_rate(c, &self.phi, &self.v, &self.zeta);
        let theta_bar = match self.material {
            Material::Thermo { ref theta_bar, .. } => theta_bar.clone(),
            Material::Isentropic { .. } => vec![],
        };
        ThermoPerturbationField {
            clock: c,
            x_nodes: self.mesh.x.clone(),
            xi: self.with_center(&self.phi),
            xi_t: self.with_center(&self.v),
            xi_tt: self.with_center(&acc),
            zeta: self.with_center(&self.zeta),
            zeta_t: self.with_center(&zr),
            theta_bar,
        }
    }

    fn load(
        &mut self,
        phi0: &[f64],
        phi1: &[f64],
        zeta0: Option<&[f64]>,
    ) -> Result<(), LagrangianError> {
        let n = self.n();
        for arr in [phi0, phi1].into_iter().chain(zeta0) {
            if arr.len() != n + 1 {
                return Err(LagrangianError::LengthMismatch {
                    got: arr.len(),
                    expected: n + 1,
                });
            }
        }
        self.phi = phi0.to_vec();
        self.v = phi1.to_vec();
        self.phi[0] = 0.0;
        self.v[0] = 0.0;
        if let Some(z) = zeta0 {
            self.zeta = z.to_vec();
            self.zeta[0] = 0.0;
            self.zeta[n] = 0.0;
        }
        self.volumes(&self.edges(&self.phi))
            .map_err(|cell| LagrangianError::JacobianDegenerate { cell })?;
        if let Some(node) = self.negative_temperature() {
            return Err(LagrangianError::TemperatureNegative { node });
        }
        Ok(())
    }

    fn negative_temperature(&self) -> Option<usize> {
        match self.material {
            Material::Thermo { ref theta_bar, .. } => {
                (1..self.n()).find(|&i| !(theta_bar[i] + self.zeta[i] > 0.0))
            }
            Material::Isentropic { .. } => None,
        }
    }

    fn max_rel_change(&self, old: &[f64]) -> f64 {
        (1..old.len())
            .map(|i| ((self.phi[i] - old[i]) / (1.0 + old[i])).abs())
            .fold(0.0, f64::max)
    }
}

/// Adaptive driver shared by the three solvers.
fn drive<F: Clone>(
    scheme: &mut Scheme,
    c_end: f64,
    spec: &SolverSpec,
    build: &dyn Fn(&Scheme, f64) -> F,
    omega: &dyn Fn(&F) -> f64,
    observer: &mut dyn FnMut(&F, &StepRecord),
    mut events: Vec<RunEvent>,
) -> Evolution<F> {
    let mut c = 0.0;
    let first = build(scheme, c);
    let rec = StepRecord {
        clock: c,
        dt: 0.0,
        energy: scheme.energy(c),
        dissipation: scheme.dissipation(&scheme.phi, &scheme.v),
        dissipation_weight: scheme.dissipation_weight(c),
        omega: omega(&first),
    };
    observer(&first, &rec);
    let mut history = vec![rec];
    let mut snapshots = vec![first];
    let mut next_emit = if spec.emit_every > 0.0 {
        spec.emit_every
    } else {
        c_end
    };
    let mut last_emitted = c;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let ln_w_rate = {
        let c1 = scheme.coeffs(0.0);
        let c2 = scheme.coeffs(1e-6);
        ((c2.w.ln() - c1.w.ln()) / 1e-6).abs()
    };
    while c < c_end * (1.0 - 1e-14) {
        if steps >= spec.max_steps {
            events.push(RunEvent {
                kind: EventKind::StepLimit,
                clock: c,
                detail: format!("{steps} steps"),
            });
            break;
        }
        let lambda = scheme.stiffness(c);
        let mut h = spec.dt_max;
        if lambda > 0.0 {
            h = h.min(spec.cfl * 2.0 / lambda.sqrt());
        }
        if ln_w_rate > 0.0 {
            h = h.min(spec.coeff_growth / ln_w_rate);
        }
        let target = next_emit.min(c_end);
        if c + h >= target * (1.0 - 1e-12) {
            h = target - c;
        }
        let saved = (scheme.phi.clone(), scheme.v.clone(), scheme.zeta.clone());
        let mut failed = None;
        loop {
            if h < spec.dt_min {
                failed = Some((EventKind::CflFloor, format!("step {h:.3e} below floor")));
                break;
            }
            match scheme.step(c, h) {
                Ok(()) if scheme.max_rel_change(&saved.0) <= spec.max_rel_change => break,
                Ok(()) => {}
                Err(cell) if h * 0.5 < spec.dt_min => {
                    failed = Some((EventKind::JacobianDegenerate, format!("cell {cell}")));
                    break;
                }
                Err(_) => {}
            }
            scheme.phi.clone_from(&saved.0);
            scheme.v.clone_from(&saved.1);
            scheme.zeta.clone_from(&saved.2);
            rejected += 1;
            h *= 0.5;
        }
        if failed.is_none() {
            if let Err(cell) = scheme.volumes(&scheme.edges(&scheme.phi)) {
                failed = Some((EventKind::JacobianDegenerate, format!("cell {cell}")));
            } else if let Some(node) = scheme.negative_temperature() {
                failed = Some((EventKind::TemperatureNegative, format!("node {node}")));
            }
        }
        if let Some((kind, detail)) = failed {
            scheme.phi = saved.0;
            scheme.v = saved.1;
            scheme.zeta = saved.2;
            events.push(RunEvent {
                kind,
                clock: c,
                detail,
            });
            break;
        }
        let hit_emit = (c + h - target).abs() <= 1e-12 * target.abs().max(1.0);
        c = if hit_emit { target } else { c + h };
        steps += 1;
        let field = build(scheme, c);
        let rec = StepRecord {
            clock: c,
            dt: h,
            energy: scheme.energy(c),
            dissipation: scheme.dissipation(&scheme.phi, &scheme.v),
            dissipation_weight: scheme.dissipation_weight(c),
            omega: omega(&field),
        };
        observer(&field, &rec);
        let grown = spec.growth_threshold.is_some_and(|g| rec.omega > g);
        history.push(rec);
        if hit_emit {
            snapshots.push(field);
            last_emitted = c;
            next_emit += if spec.emit_every > 0.0 {
                spec.emit_every
            } else {
                c_end
            };
        }
        if grown {
            let om = history.last().unwrap().omega;
            events.push(RunEvent {
                kind: EventKind::Growth,
                clock: c,
                detail: format!("amplitude {om:.4e}"),
            });
            break;
        }
    }
    if last_emitted != c {
        snapshots.push(build(scheme, c));
    }
    Evolution {
        snapshots,
        events,
        history,
        steps,
        rejected,
        final_clock: c,
    }
}

fn check_spec(spec: &SolverSpec, c_end: f64) -> Result<(), LagrangianError> {
    let bad = |m: &str| Err(LagrangianError::InvalidSpec(m.to_string()));
    if !(spec.mu >= 0.0) {
        return bad("mu must be non-negative");
    }
    if !(spec.dt_max > 0.0 && spec.dt_min > 0.0 && spec.dt_min < spec.dt_max) {
        return bad("0 < dt_min < dt_max required");
    }
    if !(spec.cfl > 0.0 && spec.cfl <= 1.0) {
        return bad("cfl must lie in (0, 1]");
    }
    if !(spec.max_rel_change > 0.0 && spec.coeff_growth > 0.0) {
        return bad("step limits must be positive");
    }
    if !(c_end > 0.0 && c_end.is_finite()) {
        return bad("end clock must be positive");
    }
    Ok(())
}

fn iso_scheme(
    profile: &IsentropicProfile,
    clock: ClockModel,
    initial: &IsentropicInitial,
    mu: f64,
) -> Result<Scheme, LagrangianError> {
    let mesh = Mesh::isentropic(profile)?;
    let mut s = Scheme::new(
        mesh,
        Material::Isentropic {
            delta: profile.delta,
        },
        clock,
        mu,
    );
    s.load(&initial.phi0, &initial.phi1, None)?;
    Ok(s)
}

fn thermo_scheme(
    profile: &ThermoProfile,
    clock: ClockModel,
    initial: &ThermoInitial,
    mu: f64,
) -> Result<Scheme, LagrangianError> {
    let mesh = Mesh::thermo(profile)?;
    let material = Material::Thermo {
        k: profile.k,
        theta_bar: profile.theta_bar.clone(),
        cbar: vec![],
    };
    let mut s = Scheme::new(mesh, material, clock, mu);
    s.load(&initial.xi0, &initial.xi1, Some(&initial.zeta0))?;
    Ok(s)
}

fn check_delta(profile_delta: f64, params: &ExpansionParams) -> Result<(), LagrangianError> {
    if (profile_delta - params.delta).abs() > 1e-12 * (1.0 + params.delta.abs()) {
        return Err(LagrangianError::ParamMismatch(format!(
            "profile delta {} differs from expansion delta {}",
            profile_delta, params.delta
        )));
    }
    Ok(())
}

/// Perturbations of the self-similarly expanding solution in the clock `s`.
pub fn evolve_self_similar(
    profile: &IsentropicProfile,
    params: &ExpansionParams,
    initial: &IsentropicInitial,
    s_end: f64,
    spec: &SolverSpec,
    observer: &mut dyn FnMut(&PerturbationField, &StepRecord),
) -> Result<Evolution<PerturbationField>, LagrangianError> {
    check_spec(spec, s_end)?;
    check_delta(profile.delta, params)?;
    if params.classification != Classification::SelfSimilar {
        return Err(LagrangianError::ParamMismatch(format!(
            "{:?} is not self-similar",
            params.classification
        )));
    }
    let mut s = iso_scheme(
        profile,
        ClockModel::self_similar(params.a0, params.delta),
        initial,
        spec.mu,
    )?;
    let build = |sc: &Scheme, c: f64| sc.iso_field(Regime::SelfSimilar, c);
    Ok(drive(
        &mut s,
        s_end,
        spec,
        &build,
        &|f| amplitude(f),
        observer,
        vec![],
    ))
}

/// Perturbations of a linearly expanding isentropic solution in the clock `tau`.
pub fn evolve_linear_isentropic(
    profile: &IsentropicProfile,
    params: &ExpansionParams,
    initial: &IsentropicInitial,
    tau_end: f64,
    spec: &SolverSpec,
    observer: &mut dyn FnMut(&PerturbationField, &StepRecord),
) -> Result<Evolution<PerturbationField>, LagrangianError> {
    check_spec(spec, tau_end)?;
    check_delta(profile.delta, params)?;
    if params.classification != Classification::Linear
        && params.classification != Classification::PositiveDelta
    {
        return Err(LagrangianError::ParamMismatch(format!(
            "{:?} is not linearly expanding",
            params.classification
        )));
    }
    let clock = ClockModel::linear(params.delta, params.a0, params.a1, tau_end * 1.01 + 1e-3)
        .map_err(|e| LagrangianError::ParamMismatch(e.to_string()))?;
    let mut events = vec![];
    if !(params.delta > -params.a0 * params.a1 * params.a1 / 8.0) {
        events.push(RunEvent {
            kind: EventKind::OutsideStabilityRange,
            clock: 0.0,
            detail: "delta <= -a0 a1^2 / 8".into(),
        });
    }
    let mut s = iso_scheme(profile, clock, initial, spec.mu)?;
    let build = |sc: &Scheme, c: f64| sc.iso_field(Regime::LinearIsentropic, c);
    Ok(drive(
        &mut s,
        tau_end,
        spec,
        &build,
        &|f| amplitude(f),
        observer,
        events,
    ))
}

/// Perturbations `(xi, zeta)` of the linearly expanding thermodynamic star.
pub fn evolve_linear_thermo(
    profile: &ThermoProfile,
    params: &ExpansionParams,
    initial: &ThermoInitial,
    tau_end: f64,
    spec: &SolverSpec,
    observer: &mut dyn FnMut(&ThermoPerturbationField, &StepRecord),
) -> Result<Evolution<ThermoPerturbationField>, LagrangianError> {
    check_spec(spec, tau_end)?;
    if !thermo_expansion_gate(profile.k, profile.c_nu, 1e-12) {
        return Err(LagrangianError::ParamMismatch(
            "3K - c_nu = 0 is violated".into(),
        ));
    }
    if params.delta != 0.0 {
        return Err(LagrangianError::ParamMismatch(
            "the thermodynamic expansion has delta = 0".into(),
        ));
    }
    let clock = ClockModel::LinearExact {
        a0: params.a0,
        a1: params.a1,
    };
    let mut s = thermo_scheme(profile, clock, initial, spec.mu)?;
    let build = |sc: &Scheme, c: f64| sc.thermo_field(c);
    Ok(drive(
        &mut s,
        tau_end,
        spec,
        &build,
        &|f| amplitude_thermo(f),
        observer,
        vec![],
    ))
}

/// Second clock derivative at the initial time from the discrete equation.
pub fn initial_second_derivatives(
    profile: &IsentropicProfile,
    params: &ExpansionParams,
    initial: &IsentropicInitial,
    mu: f64,
) -> Result<Vec<f64>, LagrangianError> {
    check_delta(profile.delta, params)?;
    let clock = if params.classification == Classification::SelfSimilar {
        ClockModel::self_similar(params.a0, params.delta)
    } else {
        ClockModel::linear(params.delta, params.a0, params.a1, 0.01)
            .map_err(|e| LagrangianError::ParamMismatch(e.to_string()))?
    };
    let s = iso_scheme(profile, clock, initial, mu)?;
    let acc = s
        .acceleration(0.0, &s.phi, &s.v, &s.zeta)
        .map_err(|cell| LagrangianError::JacobianDegenerate { cell })?;
    Ok(s.with_center(&acc))
}

/// `(xi_2, zeta_1)` at the initial time from the discrete thermodynamic system.
pub fn initial_second_derivatives_thermo(
    profile: &ThermoProfile,
    params: &ExpansionParams,
    initial: &ThermoInitial,
    mu: f64,
) -> Result<(Vec<f64>, Vec<f64>), LagrangianError> {
    let clock = ClockModel::LinearExact {
        a0: params.a0,
        a1: params.a1,
    };
    let s = thermo_scheme(profile, clock, initial, mu)?;
    let acc = s
        .acceleration(0.0, &s.phi, &s.v, &s.zeta)
        .map_err(|cell| LagrangianError::JacobianDegenerate { cell })?;
    let zr = s.zeta_rate(0.0, &s.phi, &s.v, &s.zeta);
    Ok((s.with_center(&acc), s.with_center(&zr)))
}

/// Eulerian fields of an isentropic snapshot at clock `field.clock`.
pub fn reconstruct_eulerian(
    field: &PerturbationField,
    profile: &IsentropicProfile,
    clock: &ClockModel,
) -> Result<EulerianSnapshot, LagrangianError> {
    let p = if clock.is_self_similar() { 1.5 } else { 1.0 };
    eulerian(
        &field.x_nodes,
        &field.theta,
        &field.theta_t,
        &profile.rho_bar,
        &profile.cell_masses(),
        field.clock,
        clock,
        p,
        None,
    )
}

pub fn reconstruct_eulerian_thermo(
    field: &ThermoPerturbationField,
    profile: &ThermoProfile,
    clock: &ClockModel,
) -> Result<EulerianSnapshot, LagrangianError> {
    let (alpha, _) = clock.alpha(field.clock);
    let th: Vec<f64> = field
        .theta_bar
        .iter()
        .zip(&field.zeta)
        .map(|(t, z)| (t + z) / alpha)
        .collect();
    eulerian(
        &field.x_nodes,
        &field.xi,
        &field.xi_t,
        &profile.rho_bar,
        &profile.cell_masses(),
        field.clock,
        clock,
        1.0,
        Some(th),
    )
}

#[allow(clippy::too_many_arguments)]
fn eulerian(
    x: &[f64],
    phi: &[f64],
    phi_c: &[f64],
    rho_bar: &[f64],
    dm: &[f64],
    c: f64,
    clock: &ClockModel,
    p: f64,
    theta_abs: Option<Vec<f64>>,
) -> Result<EulerianSnapshot, LagrangianError> {
    let n = x.len() - 1;
    let (alpha, alpha_c) = clock.alpha(c);
    let h = x[1] - x[0];
    let mut r = vec![0.0; n + 1];
    for i in 1..=n {
        r[i] = alpha * x[i] * (1.0 + phi[i]);
    }
    let mut rho_cell = vec![0.0; n + 1];
    for j in 1..=n {
        let (a, b) = (r[j], r[j - 1]);
        if !(a > b) {
            return Err(LagrangianError::JacobianDegenerate { cell: j });
        }
        rho_cell[j] = dm[j] / ((a - b) * (a * a + a * b + b * b) / 3.0);
    }
    let phi_x = crate::numerics::ddx_even(phi, h);
    let mut rho = vec![0.0; n + 1];
    for i in 0..=n {
        let q = 1.0 + phi[i];
        let jac = q * q * (q + x[i] * phi_x[i]);
        if !(jac > 0.0) {
            return Err(LagrangianError::JacobianDegenerate { cell: i.max(1) });
        }
        rho[i] = rho_bar[i] / (alpha.powi(3) * jac);
    }
    let rate = alpha.powf(-p);
    let u: Vec<f64> = (0..=n)
        .map(|i| x[i] * rate * (alpha_c * (1.0 + phi[i]) + alpha * phi_c[i]))
        .collect();
    Ok(EulerianSnapshot {
        t: physical_time(clock, c),
        r_boundary: r[n],
        r,
        rho,
        rho_cell,
        u,
        theta_abs,
        cell_mass: dm.to_vec(),
    })
}

/// Physical time `t(c) = int_0^c alpha^p dc'` for the solver clock `c`.
pub fn physical_time(clock: &ClockModel, c: f64) -> f64 {
    match *clock {
        ClockModel::SelfSimilar { a0, b } if b > 0.0 => {
            a0.powf(1.5) * ((1.5 * b * c).exp() - 1.0) / (1.5 * b)
        }
        ClockModel::SelfSimilar { a0, .. } => a0.powf(1.5) * c,
        ClockModel::LinearExact { a0, a1 } if a1 != 0.0 => a0 * ((a1 * c).exp() - 1.0) / a1,
        ClockModel::LinearExact { a0, .. } => a0 * c,
        ClockModel::LinearTable { .. } => {
            let panels = ((c.abs() * 64.0).ceil() as usize).max(4);
            crate::numerics::CompositeGauss::new(0.0, c, panels, 4).integrate(|u| clock.alpha(u).0)
        }
    }
}

/// Discrete energy of an isentropic state; exposed for identity checks.
pub fn discrete_energy(
    profile: &IsentropicProfile,
    clock: &ClockModel,
    field: &PerturbationField,
) -> Result<(f64, f64), LagrangianError> {
    let initial = IsentropicInitial {
        phi0: field.theta.clone(),
        phi1: field.theta_t.clone(),
    };
    let s = iso_scheme(profile, clock.clone(), &initial, 1.0)?;
    let e = s
        .energy(field.clock)
        .ok_or(LagrangianError::JacobianDegenerate { cell: 0 })?;
    Ok((e, s.dissipation(&s.phi, &s.v)))
}
