//! Energies, dissipations, amplitudes and inequality checks evaluated on
//! discrete fields.
//!
//! Spatial integrals use the trapezoid rule on the field grid. Derivatives
//! use centered differences with even reflection at the center and a
//! one-sided stencil at `R0`.

use crate::expansion::ClockModel;
use crate::lagrangian::{EulerianSnapshot, PerturbationField, ThermoPerturbationField};
use crate::numerics::{d2dx2_even, ddx_even, ddx_odd, trapezoid, CompositeGauss};
use crate::profile::{IsentropicProfile, ThermoProfile};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("flow map degenerates at node {0}")]
    DomainViolation(usize),
    #[error("the Hardy inequality excludes k = 1")]
    KEqualsOne,
    #[error("field series lacks second clock derivatives")]
    MissingDerivative,
    #[error("weight constraints violated: {0:?}")]
    WeightViolation(Vec<String>),
    #[error("field series is empty")]
    EmptySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhysicalModel {
    Isentropic,
    Thermo { c_nu: f64 },
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn times_x<'a>(x: &'a [f64], f: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    x.iter().zip(f).map(|(xi, fi)| xi * fi)
}

/// `max(sup|x theta_x|, sup|theta|, sup|x theta_xt|, sup|theta_t|)`.
pub fn amplitude(field: &PerturbationField) -> f64 {
    sup_norms(&field.x_nodes, &field.theta, &field.theta_t)
}

fn sup_norms(x: &[f64], th: &[f64], th_t: &[f64]) -> f64 {
    let h = x[1] - x[0];
    let tx = ddx_even(th, h);
    let ttx = ddx_even(th_t, h);
    sup(times_x(x, &tx))
        .max(sup(th.iter().copied()))
        .max(sup(times_x(x, &ttx)))
        .max(sup(th_t.iter().copied()))
}

/// `sup |zeta / (R0 - x)|`, with the value at `R0` taken as the one-sided
/// limit `-zeta_x(R0)` using `zeta(R0) = 0`.
pub fn zeta_over_sigma(x: &[f64], zeta: &[f64]) -> f64 {
    let n = x.len() - 1;
    let r0 = x[n];
    let h = x[1] - x[0];
    let interior = sup((0..n).map(|i| zeta[i] / (r0 - x[i])));
    let edge = (4.0 * zeta[n - 1] - zeta[n - 2]) / (2.0 * h);
    interior.max(edge.abs())
}

/// Thermodynamic amplitude: the isentropic norms of `xi` plus `sup|zeta/sigma|`.
pub fn amplitude_thermo(field: &ThermoPerturbationField) -> f64 {
    sup_norms(&field.x_nodes, &field.xi, &field.xi_t)
        .max(zeta_over_sigma(&field.x_nodes, &field.zeta))
}

/// Mass coordinate at the nodes and lumped node masses from cell masses.
fn node_masses(dm: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = dm.len() - 1;
    let mut m = vec![0.0; n + 1];
    for j in 1..=n {
        m[j] = m[j - 1] + dm[j];
    }
    let mut lump = vec![0.0; n + 1];
    for i in 1..=n {
        lump[i] = 0.5 * dm[i] + if i < n { 0.5 * dm[i + 1] } else { 0.0 };
    }
    lump[1] += 0.5 * dm[1];
    (m, lump)
}

/// Physical energy and viscous dissipation of an Eulerian snapshot.
///
/// `E = (1/2) int r^2 rho u^2 + e_int - int r rho m dr` with internal energy
/// `3 int r^2 rho^{4/3}` (isentropic) or `c_nu int r^2 rho theta` (thermo), and
/// `D = (4 mu / 3) int (r u_r - u)^2 dr`.
pub fn physical_energy(snap: &EulerianSnapshot, model: PhysicalModel, mu: f64) -> (f64, f64) {
    let n = snap.r.len() - 1;
    let (m, lump) = node_masses(&snap.cell_mass);
    let dm = &snap.cell_mass;
    let mut kinetic = 0.0;
    let mut gravity = 0.0;
    for i in 1..=n {
        kinetic += 0.5 * lump[i] * snap.u[i] * snap.u[i];
        gravity += lump[i] * m[i] / snap.r[i];
    }
    let internal: f64 = match model {
        PhysicalModel::Isentropic => (1..=n).map(|j| 3.0 * dm[j] * snap.rho_cell[j].cbrt()).sum(),
        PhysicalModel::Thermo { c_nu } => {
            let th = snap
                .theta_abs
                .as_ref()
                .expect("thermo snapshot carries temperature");
            (1..=n)
                .map(|j| c_nu * dm[j] * 0.5 * (th[j - 1] + th[j]))
                .sum()
        }
    };
    let mut d = 0.0;
    for j in 2..=n {
        let (a, b) = (snap.r[j], snap.r[j - 1]);
        let dpsi = snap.u[j] / a - snap.u[j - 1] / b;
        d += (a * b) * (a * b) / (a - b) * dpsi * dpsi;
    }
    (kinetic + internal - gravity, 4.0 * mu / 3.0 * d)
}

/// Perturbation energy `E(s)` and dissipation `D(s)` of a self-similar
/// field, evaluated from the continuous integrands.
pub fn perturbation_energy_ss(
    field: &PerturbationField,
    profile: &IsentropicProfile,
    a0: f64,
    mu: f64,
) -> Result<(f64, f64), FunctionalError> {
    let x = &field.x_nodes;
    let h = field.spacing();
    let delta = profile.delta;
    let b = (2.0 * delta.abs()).sqrt();
    let alpha = a0 * (b * field.clock).exp();
    let phi = &field.theta;
    let phs = &field.theta_t;
    let px = ddx_even(phi, h);
    let psx = ddx_even(phs, h);
    let n = x.len();
    let mut kin = vec![0.0; n];
    let mut press = vec![0.0; n];
    let mut diss = vec![0.0; n];
    for i in 0..n {
        let q = 1.0 + phi[i];
        let jac = q + x[i] * px[i];
        if !(q > 0.0 && jac > 0.0) {
            return Err(FunctionalError::DomainViolation(i));
        }
        let rho = profile.rho_bar[i];
        let x2 = x[i] * x[i];
        kin[i] =
            x2 * x2 * rho * (0.5 * phs[i] * phs[i] + b * q * phs[i] - delta * q * q + delta / q);
        let p = rho.powf(4.0 / 3.0);
        press[i] = x2 * p * (3.0 / (q * q * jac).cbrt() - 3.0 / q + x[i] * px[i] / (q * q));
        let w = q * x[i] * psx[i] - x[i] * px[i] * phs[i];
        diss[i] = x2 * w * w / jac;
    }
    let e = (trapezoid(x, &kin) + trapezoid(x, &press)) / alpha;
    Ok((e, 4.0 * mu / 3.0 * trapezoid(x, &diss)))
}

/// Relative entropy `H = ln((1+h)^2 (1+h+x h_x))` and its derivative
/// `H_x = 2 h_x / (1+h) + (2 h_x + x h_xx) / (1+h+x h_x)`.
pub fn relative_entropy(x: &[f64], hf: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FunctionalError> {
    let dx = x[1] - x[0];
    let hx = ddx_even(hf, dx);
    let hxx = d2dx2_even(hf, dx);
    let mut val = vec![0.0; x.len()];
    let mut der = vec![0.0; x.len()];
    for i in 0..x.len() {
        let q = 1.0 + hf[i];
        let jac = q + x[i] * hx[i];
        if !(q > 0.0 && jac > 0.0) {
            return Err(FunctionalError::DomainViolation(i));
        }
        val[i] = (q * q * jac).ln();
        der[i] = 2.0 * hx[i] / q + (2.0 * hx[i] + x[i] * hxx[i]) / jac;
    }
    Ok((val, der))
}

/// Both sides of `int (4 h_x + x h_xx)^2 >= 12 int h_x^2 + int x^2 h_xx^2`
/// from sampled derivatives.
pub fn frak_a_sides(x: &[f64], hx: &[f64], hxx: &[f64]) -> (f64, f64) {
    let lhs: Vec<f64> = (0..x.len())
        .map(|i| (4.0 * hx[i] + x[i] * hxx[i]).powi(2))
        .collect();
    let r1: Vec<f64> = hx.iter().map(|v| 12.0 * v * v).collect();
    let r2: Vec<f64> = (0..x.len()).map(|i| (x[i] * hxx[i]).powi(2)).collect();
    (trapezoid(x, &lhs), trapezoid(x, &r1) + trapezoid(x, &r2))
}

/// Hardy inequality sides on `(0, 1)` for `k != 1`:
/// `k > 1`: `(int s^{k-2} g^2, int s^k (g^2 + g'^2))`,
/// `k < 1`: `(int s^{k-2} (g - g(0))^2, int s^k g'^2)`.
/// Returns `(lhs, rhs, lhs / rhs)` with the ratio reported as 0 when both
/// sides vanish.
pub fn hardy_check(
    k: f64,
    g: &dyn Fn(f64) -> f64,
    gp: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64, f64), FunctionalError> {
    if (k - 1.0).abs() < 1e-12 {
        return Err(FunctionalError::KEqualsOne);
    }
    // s = t^2 removes the algebraic endpoint behaviour for small k
    let rule = CompositeGauss::new(0.0, 1.0, 64, 8);
    let g0 = g(0.0);
    let lhs = rule.integrate(|t| {
        let s = t * t;
        let v = if k > 1.0 { g(s) } else { g(s) - g0 };
        2.0 * t.powf(2.0 * k - 3.0) * v * v
    });
    let rhs = rule.integrate(|t| {
        let s = t * t;
        let w = if k > 1.0 {
            g(s).powi(2) + gp(s).powi(2)
        } else {
            gp(s).powi(2)
        };
        2.0 * t.powf(2.0 * k + 1.0) * w
    });
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok((lhs, rhs, ratio))
}

/// Interior cut-off: 1 on `[0, R0/2]`, 0 on `[3R0/4, R0]`, cubic in between,
/// with `chi' = -6 t (1 - t) / (R0/4) >= -6 / R0`.
pub fn chi(x: f64, r0: f64) -> f64 {
    let t = ((x - 0.5 * r0) / (0.25 * r0)).clamp(0.0, 1.0);
    1.0 - 3.0 * t * t + 2.0 * t * t * t
}

pub fn chi_prime(x: f64, r0: f64) -> f64 {
    let t = (x - 0.5 * r0) / (0.25 * r0);
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    -6.0 * t * (1.0 - t) / (0.25 * r0)
}

/// Temporal-weight exponents of the total energy functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSpec {
    /// Isentropic decay exponent `a`.
    pub a: f64,
    pub r1: f64,
    pub r2: f64,
    pub l1: f64,
    pub l2: f64,
    /// The index written in fraktur in the dissipation functional.
    pub rr: f64,
    pub r3: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            a: 0.5,
            r1: 0.5,
            r2: -0.5,
            l1: -2.5,
            l2: -2.0,
            rr: -1.5,
            r3: -2.5,
        }
    }
}

impl WeightSpec {
    /// Names of the violated constraints; empty when all hold.
    pub fn violations(&self) -> Vec<String> {
        let w = self;
        let checks: [(&str, bool); 11] = [
            ("0 < a < 1", w.a > 0.0 && w.a < 1.0),
            ("-1 < r1 < 1", w.r1 > -1.0 && w.r1 < 1.0),
            ("r1 - 3 <= l1", w.r1 - 3.0 <= w.l1),
            ("l1 < -2", w.l1 < -2.0),
            ("r2 <= r1 - 1", w.r2 <= w.r1 - 1.0),
            ("l2 + 2 <= 0", w.l2 + 2.0 <= 0.0),
            ("l2 + 2 >= 0", w.l2 + 2.0 >= 0.0),
            (
                "0 <= r2 - l2 <= 2",
                w.r2 - w.l2 >= 0.0 && w.r2 - w.l2 <= 2.0,
            ),
            ("-3 < rr", w.rr > -3.0),
            ("rr <= r2 - 1", w.rr <= w.r2 - 1.0),
            ("r3 <= r2 - 2", w.r3 <= w.r2 - 2.0),
        ];
        checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.to_string())
            .collect()
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FunctionalError::WeightViolation(v))
        }
    }
}

/// Online trapezoid accumulation of named time integrals.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LedgerAccumulator {
    last: Option<(f64, BTreeMap<String, f64>)>,
    pub integrals: BTreeMap<String, f64>,
}

impl LedgerAccumulator {
    pub fn push(&mut self, clock: f64, rates: &BTreeMap<String, f64>) {
        if let Some((c0, ref prev)) = self.last {
            let dt = clock - c0;
            for (k, v) in rates {
                let p = prev.get(k).copied().unwrap_or(0.0);
                *self.integrals.entry(k.clone()).or_insert(0.0) += 0.5 * dt * (p + v);
            }
        } else {
            for k in rates.keys() {
                self.integrals.entry(k.clone()).or_insert(0.0);
            }
        }
        self.last = Some((clock, rates.clone()));
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub clock: f64,
    pub e_phys: f64,
    pub d_phys: f64,
    /// Perturbation energy and dissipation (self-similar regime only).
    pub e_pert: Option<f64>,
    pub d_pert: Option<f64>,
    /// `E(c) - E(0) + int w D` along the series.
    pub identity_residual: f64,
    pub omega: f64,
    /// Every energy term (prefix `E:`) and accumulated dissipation term
    /// (prefix `D:`) of the total functionals.
    pub ledger: BTreeMap<String, f64>,
    pub e0: f64,
}

impl EnergyReport {
    pub fn ledger_total(&self) -> f64 {
        self.ledger.values().sum()
    }
}

struct Grid<'a> {
    x: &'a [f64],
    h: f64,
    r0: f64,
}

impl Grid<'_> {
    fn int(&self, f: impl Fn(usize) -> f64) -> f64 {
        let v: Vec<f64> = (0..self.x.len()).map(f).collect();
        trapezoid(self.x, &v)
    }

    fn chi(&self, i: usize) -> f64 {
        chi(self.x[i], self.r0)
    }

    fn dx(&self, f: &[f64]) -> Vec<f64> {
        ddx_even(f, self.h)
    }

    fn dxx(&self, f: &[f64]) -> Vec<f64> {
        d2dx2_even(f, self.h)
    }
}

/// `(1+t) x t_xc - x t_x t_c` for a clock derivative `t_c`.
fn strain(x: &[f64], th: &[f64], tx: &[f64], tc: &[f64], tcx: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| (1.0 + th[i]) * x[i] * tcx[i] - x[i] * tx[i] * tc[i])
        .collect()
}

/// `G_x` and its clock derivative for `G = ln((1+t)^2 (1+t+x t_x))`.
fn entropy_gradients(
    x: &[f64],
    h: f64,
    th: &[f64],
    tc: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), FunctionalError> {
    let (_, gx) = relative_entropy(x, th)?;
    let tx = ddx_even(th, h);
    let tcx = ddx_even(tc, h);
    let gt: Vec<f64> = (0..x.len())
        .map(|i| {
            let q = 1.0 + th[i];
            2.0 * tc[i] / q + (tc[i] + x[i] * tcx[i]) / (q + x[i] * tx[i])
        })
        .collect();
    Ok((
        gx,
        ddx_odd(&gt, h)
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 { 0.0 } else { *v })
            .collect(),
    ))
}

struct IsoTerms {
    energy: BTreeMap<String, f64>,
    rates: BTreeMap<String, f64>,
}

fn iso_terms(
    f: &PerturbationField,
    rho: &[f64],
    alpha: f64,
    w: &WeightSpec,
) -> Result<IsoTerms, FunctionalError> {
    let g = Grid {
        x: &f.x_nodes,
        h: f.spacing(),
        r0: f.r0(),
    };
    let x = g.x;
    let (th, tt, ttt) = (&f.theta, &f.theta_t, &f.theta_tt);
    if ttt.iter().any(|v| !v.is_finite()) {
        return Err(FunctionalError::MissingDerivative);
    }
    let tx = g.dx(th);
    let txx = g.dxx(th);
    let ttx = g.dx(tt);
    let ttxx = g.dxx(tt);
    let tttx = g.dx(ttt);
    let s1 = strain(x, th, &tx, tt, &ttx);
    let s2 = strain(x, th, &tx, ttt, &tttx);
    let (gx, gxt) = entropy_gradients(x, g.h, th, tt)?;
    let a = w.a;
    let x4 = |i: usize| x[i].powi(4);
    let p43 = |i: usize| rho[i].powf(4.0 / 3.0);
    let mut e = BTreeMap::new();
    let vel = g.int(|i| x4(i) * rho[i] * tt[i] * tt[i]);
    let acc = g.int(|i| x4(i) * rho[i] * ttt[i] * ttt[i]);
    let visc = g.int(|i| x[i] * x[i] * s1[i] * s1[i]);
    let chi_vel = g.int(|i| g.chi(i) * (tt[i] * tt[i] + (x[i] * ttx[i]).powi(2)));
    let chi_acc = g.int(|i| g.chi(i) * x[i] * x[i] * rho[i] * ttt[i] * ttt[i]);
    e.insert("E:velocity".into(), (alpha + alpha.powf(1.0 + a)) * vel);
    e.insert(
        "E:pressure".into(),
        g.int(|i| x4(i) * p43(i) * tx[i] * tx[i]),
    );
    e.insert("E:x4_gradient".into(), g.int(|i| x4(i) * tx[i] * tx[i]));
    e.insert("E:mass".into(), g.int(|i| x4(i) * rho[i] * th[i] * th[i]));
    e.insert("E:acceleration".into(), alpha.powf(a - 3.0) * acc);
    e.insert("E:viscous".into(), alpha.powf(1.0 + a) * visc);
    e.insert("E:interior_velocity".into(), alpha.powf(1.0 + a) * chi_vel);
    e.insert(
        "E:interior".into(),
        g.int(|i| g.chi(i) * (th[i] * th[i] + (x[i] * tx[i]).powi(2))),
    );
    e.insert(
        "E:interior_acceleration".into(),
        alpha.powf(a - 5.0) * chi_acc,
    );
    e.insert("E:entropy".into(), g.int(|i| gx[i] * gx[i]));
    e.insert(
        "E:entropy_rate".into(),
        alpha.powf(a - 1.0) * g.int(|i| gxt[i] * gxt[i]),
    );
    e.insert("E:gradient".into(), g.int(|i| tx[i] * tx[i]));
    e.insert("E:hessian".into(), g.int(|i| (x[i] * txx[i]).powi(2)));
    e.insert(
        "E:gradient_rate".into(),
        alpha.powf(a - 1.0) * g.int(|i| ttx[i] * ttx[i]),
    );
    e.insert(
        "E:hessian_rate".into(),
        alpha.powf(a - 1.0) * g.int(|i| (x[i] * ttxx[i]).powi(2)),
    );
    let mut r = BTreeMap::new();
    r.insert("D:velocity".into(), (alpha + alpha.powf(1.0 + a)) * vel);
    r.insert(
        "D:viscous".into(),
        (alpha.powi(3) + alpha.powf(3.0 + a)) * visc,
    );
    r.insert("D:acceleration".into(), alpha.powf(a - 3.0) * acc);
    r.insert(
        "D:viscous_rate".into(),
        alpha.powf(a - 1.0) * g.int(|i| x[i] * x[i] * s2[i] * s2[i]),
    );
    r.insert("D:interior_velocity".into(), alpha.powf(1.0 + a) * chi_vel);
    r.insert(
        "D:interior_acceleration".into(),
        alpha.powf(a - 5.0) * chi_acc,
    );
    r.insert(
        "D:interior_acceleration_gradient".into(),
        alpha.powf(a - 3.0) * g.int(|i| g.chi(i) * (ttt[i] * ttt[i] + (x[i] * tttx[i]).powi(2))),
    );
    r.insert(
        "D:entropy".into(),
        alpha.powi(-3) * g.int(|i| p43(i) * gx[i] * gx[i]),
    );
    Ok(IsoTerms {
        energy: e,
        rates: r,
    })
}

/// Initial energy of the isentropic linear regime; `theta_tt` of the field
/// must hold the initial second derivative.
pub fn initial_energy_isentropic(f: &PerturbationField, rho: &[f64]) -> f64 {
    let g = Grid {
        x: &f.x_nodes,
        h: f.spacing(),
        r0: f.r0(),
    };
    let x = g.x;
    let (t0, t1, t2) = (&f.theta, &f.theta_t, &f.theta_tt);
    let tx = g.dx(t0);
    let txx = g.dxx(t0);
    let x4 = |i: usize| x[i].powi(4);
    g.int(|i| x4(i) * rho[i] * t1[i] * t1[i])
        + g.int(|i| x4(i) * rho[i] * t0[i] * t0[i])
        + g.int(|i| x4(i) * tx[i] * tx[i])
        + g.int(|i| x4(i) * rho[i].powf(4.0 / 3.0) * tx[i] * tx[i])
        + g.int(|i| x4(i) * rho[i] * t2[i] * t2[i])
        + g.int(|i| g.chi(i) * (t0[i] * t0[i] + (x[i] * tx[i]).powi(2)))
        + g.int(|i| g.chi(i) * x[i] * x[i] * rho[i] * t2[i] * t2[i])
        + g.int(|i| tx[i] * tx[i] + (x[i] * txx[i]).powi(2))
}

/// Weighted velocity energy `alpha^{1+a} int x^4 rho theta_t^2`.
pub fn weighted_velocity_energy(
    f: &PerturbationField,
    rho: &[f64],
    clock: &ClockModel,
    a: f64,
) -> f64 {
    let (alpha, _) = clock.alpha(f.clock);
    let x = &f.x_nodes;
    let v: Vec<f64> = (0..x.len())
        .map(|i| x[i].powi(4) * rho[i] * f.theta_t[i].powi(2))
        .collect();
    alpha.powf(1.0 + a) * trapezoid(x, &v)
}

/// Online evaluation of the isentropic total functionals; feed every
/// accepted step so the dissipation integrals resolve initial layers.
pub struct IsentropicLedger<'a> {
    profile: &'a IsentropicProfile,
    clock: ClockModel,
    weights: WeightSpec,
    mu: f64,
    acc: LedgerAccumulator,
    e_start: Option<f64>,
    e0: Option<f64>,
}

impl<'a> IsentropicLedger<'a> {
    pub fn new(
        profile: &'a IsentropicProfile,
        clock: &ClockModel,
        weights: &WeightSpec,
        mu: f64,
    ) -> Result<Self, FunctionalError> {
        weights.validate()?;
        Ok(Self {
            profile,
            clock: clock.clone(),
            weights: *weights,
            mu,
            acc: LedgerAccumulator::default(),
            e_start: None,
            e0: None,
        })
    }

    /// Physical energy of the unperturbed expansion at clock `c`.
    fn background_energy(&self, f: &PerturbationField) -> Result<f64, FunctionalError> {
        let n = f.x_nodes.len();
        let zero = PerturbationField {
            regime: f.regime,
            clock: f.clock,
            x_nodes: f.x_nodes.clone(),
            theta: vec![0.0; n],
            theta_t: vec![0.0; n],
            theta_tt: vec![0.0; n],
        };
        let snap = crate::lagrangian::reconstruct_eulerian(&zero, self.profile, &self.clock)
            .map_err(|_| FunctionalError::DomainViolation(0))?;
        Ok(physical_energy(&snap, PhysicalModel::Isentropic, self.mu).0)
    }

    /// Report for the next field; the first field defines the initial energy.
    pub fn observe(&mut self, f: &PerturbationField) -> Result<EnergyReport, FunctionalError> {
        let rho = &self.profile.rho_bar;
        let (alpha, _) = self.clock.alpha(f.clock);
        let e0 = *self
            .e0
            .get_or_insert_with(|| initial_energy_isentropic(f, rho));
        let terms = iso_terms(f, rho, alpha, &self.weights)?;
        let snap = crate::lagrangian::reconstruct_eulerian(f, self.profile, &self.clock)
            .map_err(|_| FunctionalError::DomainViolation(0))?;
        let (e_phys, d_phys) = physical_energy(&snap, PhysicalModel::Isentropic, self.mu);
        let (e_pert, d_pert) = match self.clock {
            ClockModel::SelfSimilar { a0, .. } => {
                let (e, d) = perturbation_energy_ss(f, self.profile, a0, self.mu)?;
                (Some(e), Some(d))
            }
            _ => (None, None),
        };
        // dE/ds = -alpha^{3/2} D(s) and dE/dtau = -alpha D(t)
        let (e_id, w_d) = match (e_pert, d_pert) {
            (Some(e), Some(d)) => (e, alpha.powf(1.5) * d),
            _ => (e_phys - self.background_energy(f)?, alpha * d_phys),
        };
        let mut rates = terms.rates;
        rates.insert("identity".into(), w_d);
        self.acc.push(f.clock, &rates);
        let base = *self.e_start.get_or_insert(e_id);
        let mut ledger = terms.energy;
        ledger.extend(
            self.acc
                .integrals
                .iter()
                .filter(|(k, _)| *k != "identity")
                .map(|(k, v)| (k.clone(), *v)),
        );
        Ok(EnergyReport {
            clock: f.clock,
            e_phys,
            d_phys,
            e_pert,
            d_pert,
            identity_residual: e_id - base + self.acc.integrals["identity"],
            omega: amplitude(f),
            ledger,
            e0,
        })
    }
}

/// Reports along an isentropic series (self-similar or linear regime).
pub fn total_energy_ledger(
    series: &[PerturbationField],
    profile: &IsentropicProfile,
    clock: &ClockModel,
    weights: &WeightSpec,
    mu: f64,
) -> Result<Vec<EnergyReport>, FunctionalError> {
    if series.is_empty() {
        return Err(FunctionalError::EmptySeries);
    }
    let mut ledger = IsentropicLedger::new(profile, clock, weights, mu)?;
    series.iter().map(|f| ledger.observe(f)).collect()
}

fn thermo_terms(
    f: &ThermoPerturbationField,
    rho: &[f64],
    a1: f64,
    tau: f64,
    w: &WeightSpec,
) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let g = Grid {
        x: &f.x_nodes,
        h: f.spacing(),
        r0: f.r0(),
    };
    let x = g.x;
    let (xi, xt, xtt) = (&f.xi, &f.xi_t, &f.xi_tt);
    let (z, zt) = (&f.zeta, &f.zeta_t);
    let xx = g.dx(xi);
    let xxx = g.dxx(xi);
    let xtx = g.dx(xt);
    let xtxx = g.dxx(xt);
    let xttx = g.dx(xtt);
    let zx = g.dx(z);
    let zxx = g.dxx(z);
    let ztx = g.dx(zt);
    let s1 = strain(x, xi, &xx, xt, &xtx);
    let s2 = strain(x, xi, &xx, xtt, &xttx);
    let ew = |k: f64| (k * a1 * tau).exp();
    let x2 = |i: usize| x[i] * x[i];
    let x4 = |i: usize| x[i].powi(4);
    let vel = g.int(|i| x4(i) * rho[i] * xt[i] * xt[i]);
    let zeta2 = g.int(|i| x2(i) * rho[i] * z[i] * z[i]);
    let acc = g.int(|i| x4(i) * rho[i] * xtt[i] * xtt[i]);
    let zeta_grad = g.int(|i| x2(i) * zx[i] * zx[i]);
    let visc = g.int(|i| x2(i) * s1[i] * s1[i]);
    let chi_vel = g.int(|i| g.chi(i) * (x2(i) * xtx[i] * xtx[i] + xt[i] * xt[i]));
    let mut e = BTreeMap::new();
    e.insert("E:velocity".into(), ew(1.0 + w.r1) * vel);
    e.insert("E:temperature".into(), ew(w.l1) * zeta2);
    e.insert("E:mass".into(), g.int(|i| x4(i) * rho[i] * xi[i] * xi[i]));
    e.insert("E:x4_gradient".into(), g.int(|i| x4(i) * xx[i] * xx[i]));
    e.insert("E:x2_value".into(), g.int(|i| x2(i) * xi[i] * xi[i]));
    e.insert("E:acceleration".into(), ew(w.r2 - 2.0) * acc);
    e.insert(
        "E:temperature_rate".into(),
        ew(w.l2 - 2.0) * g.int(|i| x2(i) * rho[i] * zt[i] * zt[i]),
    );
    e.insert(
        "E:temperature_gradient".into(),
        ew(0.5 * (w.l1 + w.l2) + 1.0) * zeta_grad,
    );
    e.insert("E:viscous".into(), ew(0.5 * (w.r1 + w.r2) + 1.5) * visc);
    e.insert(
        "E:interior".into(),
        g.int(|i| g.chi(i) * (xi[i] * xi[i] + x2(i) * xx[i] * xx[i])),
    );
    e.insert("E:interior_velocity".into(), ew(w.r2 + 2.0) * chi_vel);
    e.insert(
        "E:interior_acceleration".into(),
        ew(w.r3 - 2.0) * g.int(|i| g.chi(i) * x2(i) * rho[i] * xtt[i] * xtt[i]),
    );
    e.insert("E:gradient".into(), g.int(|i| xx[i] * xx[i]));
    e.insert("E:hessian".into(), g.int(|i| x2(i) * xxx[i] * xxx[i]));
    e.insert(
        "E:temperature_flat_gradient".into(),
        g.int(|i| zx[i] * zx[i]),
    );
    e.insert(
        "E:gradient_rate".into(),
        ew(w.r3 + 2.0) * g.int(|i| xtx[i] * xtx[i] + x2(i) * xtxx[i] * xtxx[i]),
    );
    e.insert(
        "E:temperature_hessian".into(),
        g.int(|i| x2(i) * zxx[i] * zxx[i]),
    );
    let mut r = BTreeMap::new();
    r.insert("D:velocity".into(), a1 * ew(1.0 + w.r1) * vel);
    r.insert("D:viscous".into(), ew(3.0 + w.r1) * visc);
    r.insert("D:temperature".into(), a1 * ew(w.l1) * zeta2);
    r.insert("D:temperature_gradient".into(), ew(2.0 + w.l1) * zeta_grad);
    r.insert("D:acceleration".into(), a1 * ew(w.r2 - 2.0) * acc);
    r.insert(
        "D:viscous_rate".into(),
        ew(w.r2) * g.int(|i| x2(i) * s2[i] * s2[i]),
    );
    r.insert(
        "D:temperature_rate_gradient".into(),
        ew(w.l2) * g.int(|i| x2(i) * ztx[i] * ztx[i]),
    );
    r.insert("D:interior_velocity".into(), ew(3.0 + w.rr) * chi_vel);
    r.insert(
        "D:interior_acceleration".into(),
        ew(w.r3) * g.int(|i| g.chi(i) * (x2(i) * xttx[i] * xttx[i] + xtt[i] * xtt[i])),
    );
    (e, r)
}

/// Initial energy of the thermodynamic regime from the first snapshot.
pub fn initial_energy_thermo(f: &ThermoPerturbationField, rho: &[f64]) -> f64 {
    let g = Grid {
        x: &f.x_nodes,
        h: f.spacing(),
        r0: f.r0(),
    };
    let x = g.x;
    let (xi, x1, x2f, z0, z1) = (&f.xi, &f.xi_t, &f.xi_tt, &f.zeta, &f.zeta_t);
    let xx = g.dx(xi);
    let xxx = g.dxx(xi);
    let x2 = |i: usize| x[i] * x[i];
    let x4 = |i: usize| x[i].powi(4);
    g.int(|i| x4(i) * rho[i] * x1[i] * x1[i])
        + g.int(|i| x2(i) * rho[i] * z0[i] * z0[i])
        + g.int(|i| x4(i) * rho[i] * xi[i] * xi[i])
        + g.int(|i| x4(i) * xx[i] * xx[i])
        + g.int(|i| x4(i) * rho[i] * x2f[i] * x2f[i])
        + g.int(|i| x2(i) * rho[i] * z1[i] * z1[i])
        + g.int(|i| g.chi(i) * (xi[i] * xi[i] + x2(i) * xx[i] * xx[i]))
        + g.int(|i| g.chi(i) * x2(i) * rho[i] * x2f[i] * x2f[i])
        + g.int(|i| xx[i] * xx[i] + x2(i) * xxx[i] * xxx[i])
}

/// Viscous heating density `(4 mu / 3) x^2 (1+xi)^2 J [(xi_t + x xi_xt)/J - xi_t/(1+xi)]^2`
/// at every node.
pub fn viscous_heating(f: &ThermoPerturbationField, mu: f64) -> Vec<f64> {
    let h = f.spacing();
    let x = &f.x_nodes;
    let xx = ddx_even(&f.xi, h);
    let xtx = ddx_even(&f.xi_t, h);
    (0..x.len())
        .map(|i| {
            let q = 1.0 + f.xi[i];
            let jac = q + x[i] * xx[i];
            let b = (f.xi_t[i] + x[i] * xtx[i]) / jac - f.xi_t[i] / q;
            4.0 * mu / 3.0 * x[i] * x[i] * q * q * jac * b * b
        })
        .collect()
}

/// Online evaluation of the thermodynamic total functionals.
pub struct ThermoLedger<'a> {
    profile: &'a ThermoProfile,
    clock: ClockModel,
    a1: f64,
    weights: WeightSpec,
    mu: f64,
    acc: LedgerAccumulator,
    e_start: Option<f64>,
    e0: Option<f64>,
}

impl<'a> ThermoLedger<'a> {
    pub fn new(
        profile: &'a ThermoProfile,
        clock: &ClockModel,
        weights: &WeightSpec,
        mu: f64,
    ) -> Result<Self, FunctionalError> {
        weights.validate()?;
        let a1 = match *clock {
            ClockModel::LinearExact { a1, .. } => a1,
            _ => return Err(FunctionalError::MissingDerivative),
        };
        Ok(Self {
            profile,
            clock: clock.clone(),
            a1,
            weights: *weights,
            mu,
            acc: LedgerAccumulator::default(),
            e_start: None,
            e0: None,
        })
    }

    pub fn observe(
        &mut self,
        f: &ThermoPerturbationField,
    ) -> Result<EnergyReport, FunctionalError> {
        if f.xi_tt.iter().chain(&f.zeta_t).any(|v| !v.is_finite()) {
            return Err(FunctionalError::MissingDerivative);
        }
        let rho = &self.profile.rho_bar;
        let e0 = *self.e0.get_or_insert_with(|| initial_energy_thermo(f, rho));
        let (energy, rates) = thermo_terms(f, rho, self.a1, f.clock, &self.weights);
        let model = PhysicalModel::Thermo {
            c_nu: self.profile.c_nu,
        };
        let snap = crate::lagrangian::reconstruct_eulerian_thermo(f, self.profile, &self.clock)
            .map_err(|_| FunctionalError::DomainViolation(0))?;
        let (e_phys, d_phys) = physical_energy(&snap, model, self.mu);
        let n = f.x_nodes.len();
        let zero = ThermoPerturbationField {
            xi: vec![0.0; n],
            xi_t: vec![0.0; n],
            xi_tt: vec![0.0; n],
            zeta: vec![0.0; n],
            zeta_t: vec![0.0; n],
            ..f.clone()
        };
        let bg = crate::lagrangian::reconstruct_eulerian_thermo(&zero, self.profile, &self.clock)
            .map_err(|_| FunctionalError::DomainViolation(0))?;
        let e_rel = e_phys - physical_energy(&bg, model, self.mu).0;
        self.acc.push(f.clock, &rates);
        let base = *self.e_start.get_or_insert(e_rel);
        let mut ledger = energy;
        ledger.extend(self.acc.integrals.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(EnergyReport {
            clock: f.clock,
            e_phys,
            d_phys,
            e_pert: None,
            d_pert: None,
            // heat flux and heating make the thermodynamic energy
            // non-conservative, so only the drift from the background is kept
            identity_residual: e_rel - base,
            omega: amplitude_thermo(f),
            ledger,
            e0,
        })
    }
}

/// Reports along a thermodynamic series.
pub fn total_energy_ledger_thermo(
    series: &[ThermoPerturbationField],
    profile: &ThermoProfile,
    clock: &ClockModel,
    weights: &WeightSpec,
    mu: f64,
) -> Result<Vec<EnergyReport>, FunctionalError> {
    if series.is_empty() {
        return Err(FunctionalError::EmptySeries);
    }
    let mut ledger = ThermoLedger::new(profile, clock, weights, mu)?;
    series.iter().map(|f| ledger.observe(f)).collect()
}
