//! Phase plane of x-independent perturbations on the escape branch:
//! `phi_ss + (b/2) phi_s + |delta| ((1+phi)^{-2} - (1+phi)) = 0`,
//! `b = sqrt(2|delta|)`.

use crate::ode::{integrate, Event, OdeError, OdeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `|phi|` beyond which a trajectory is labelled as escaping.
pub const ESCAPE_LEVEL: f64 = 0.5;
/// Collapsing trajectories stop at `phi = -1 + COLLAPSE_GAP`.
pub const COLLAPSE_GAP: f64 = 1e-6;
/// Distance to the zero-energy curve tolerated by the `OnCurve` label.
pub const CURVE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogeneousError {
    #[error("1 + phi = {0} is not positive")]
    DomainViolation(f64),
    #[error("delta = {0} must be negative")]
    InvalidDelta(f64),
    #[error(transparent)]
    StepFailure(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub phi: f64,
    pub phi_s: f64,
    pub delta: f64,
}

impl PhaseState {
    pub fn new(phi: f64, phi_s: f64, delta: f64) -> Self {
        Self { phi, phi_s, delta }
    }

    pub fn b(&self) -> f64 {
        (2.0 * self.delta.abs()).sqrt()
    }

    fn check(&self) -> Result<(), HomogeneousError> {
        if !(self.delta < 0.0) {
            return Err(HomogeneousError::InvalidDelta(self.delta));
        }
        if !(1.0 + self.phi > 0.0) {
            return Err(HomogeneousError::DomainViolation(1.0 + self.phi));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fate {
    Stationary,
    OnCurve,
    Expand,
    Collapse,
    /// None of the above within the integration window.
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    pub delta: f64,
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_s: Vec<f64>,
    pub fate: Fate,
    pub first_escape_s: Option<f64>,
    /// `(label, s)` for every threshold crossing.
    pub events: Vec<(String, f64)>,
}

fn rhs_raw(delta: f64, phi: f64, phi_s: f64) -> [f64; 2] {
    let b = (2.0 * delta.abs()).sqrt();
    let q = 1.0 + phi;
    [phi_s, -0.5 * b * phi_s - delta.abs() * (1.0 / (q * q) - q)]
}

pub fn phase_rhs(st: &PhaseState) -> Result<(f64, f64), HomogeneousError> {
    st.check()?;
    let r = rhs_raw(st.delta, st.phi, st.phi_s);
    Ok((r[0], r[1]))
}

/// `phi_s` on the zero-energy curve through `phi`.
pub fn curve_phi_s(phi: f64, delta: f64) -> Result<f64, HomogeneousError> {
    PhaseState::new(phi, 0.0, delta).check()?;
    let b = (2.0 * delta.abs()).sqrt();
    let q = 1.0 + phi;
    Ok(-b * q + b / q.sqrt())
}

/// `(1/2)(phi_s + b(1+phi))^2 + delta/(1+phi)`.
pub fn energy_homogeneous(st: &PhaseState) -> Result<f64, HomogeneousError> {
    st.check()?;
    let q = 1.0 + st.phi;
    let v = st.phi_s + st.b() * q;
    Ok(0.5 * v * v + st.delta / q)
}

/// `phi_s + b((1+phi) - (1+phi)^{-1/2})`; zero exactly on the curve.
pub fn bracket(st: &PhaseState) -> f64 {
    let q = 1.0 + st.phi;
    st.phi_s + st.b() * (q - 1.0 / q.sqrt())
}

/// Residual of `d/ds bracket = (b/2)(1 + (1+phi)^{-3/2}) bracket`,
/// with the left side evaluated from the vector field.
pub fn bracket_identity_residual(st: &PhaseState) -> f64 {
    let q = 1.0 + st.phi;
    let b = st.b();
    let [dphi, dphis] = rhs_raw(st.delta, st.phi, st.phi_s);
    let lhs = dphis + b * (1.0 + 0.5 * q.powf(-1.5)) * dphi;
    let rhs = 0.5 * b * (1.0 + q.powf(-1.5)) * bracket(st);
    lhs - rhs
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpec {
    pub max_step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Stop expanding trajectories once `phi` exceeds this.
    pub phi_cap: f64,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        Self {
            max_step: 0.01,
            rtol: 1e-10,
            atol: 1e-12,
            phi_cap: 1e6,
        }
    }
}

pub fn integrate_phase(
    init: &PhaseState,
    s_end: f64,
    spec: &PhaseSpec,
) -> Result<PhaseTrajectory, HomogeneousError> {
    init.check()?;
    let delta = init.delta;
    let mut tr = PhaseTrajectory {
        delta,
        s: vec![],
        phi: vec![],
        phi_s: vec![],
        fate: Fate::Undecided,
        first_escape_s: None,
        events: vec![],
    };
    if init.phi == 0.0 && init.phi_s == 0.0 {
        tr.s = vec![0.0, s_end];
        tr.phi = vec![0.0, 0.0];
        tr.phi_s = vec![0.0, 0.0];
        tr.fate = Fate::Stationary;
        return Ok(tr);
    }
    let on_curve =
        (init.phi_s - curve_phi_s(init.phi, delta)?).abs() <= 1e-12 * (1.0 + init.phi_s.abs());
    let rhs = move |_s: f64, u: &[f64; 2]| {
        if 1.0 + u[0] <= 0.0 {
            return [f64::NAN; 2];
        }
        rhs_raw(delta, u[0], u[1])
    };
    let opts = OdeOptions {
        rtol: spec.rtol,
        atol: spec.atol,
        h_init: 1e-4,
        h_max: spec.max_step,
        ..OdeOptions::default()
    };
    let cap = spec.phi_cap;
    // stop at the collapse gap or at the expansion cap
    let g = move |_s: f64, u: &[f64; 2]| {
        if u[0] < 0.0 {
            u[0] - (-1.0 + COLLAPSE_GAP)
        } else {
            cap - u[0]
        }
    };
    let ev = Event {
        g: &g,
        tol: 1e-3 * COLLAPSE_GAP,
    };
    let mut events = Vec::new();
    let mut first_escape = None;
    let mut off_curve = false;
    let mut prev: Option<f64> = None;
    let out = integrate(
        &rhs,
        0.0,
        [init.phi, init.phi_s],
        s_end,
        &opts,
        &[],
        Some(&ev),
        |s, u| {
            tr.s.push(s);
            tr.phi.push(u[0]);
            tr.phi_s.push(u[1]);
            if let Some(p) = prev {
                if p <= ESCAPE_LEVEL && u[0] > ESCAPE_LEVEL {
                    events.push(("escape_up".to_string(), s));
                    first_escape.get_or_insert(s);
                }
                if p >= -ESCAPE_LEVEL && u[0] < -ESCAPE_LEVEL {
                    events.push(("escape_down".to_string(), s));
                    first_escape.get_or_insert(s);
                }
            }
            prev = Some(u[0]);
            if on_curve && 1.0 + u[0] > 0.0 {
                let c = rhs_curve_distance(delta, u[0], u[1]);
                if c > CURVE_TOL {
                    off_curve = true;
                }
            }
        },
    )?;
    tr.first_escape_s = first_escape;
    if out.event && out.y[0] < 0.0 {
        events.push(("collapse_gap".to_string(), out.t));
    }
    tr.events = events;
    let last = *tr.phi.last().unwrap();
    tr.fate = if on_curve && !off_curve {
        Fate::OnCurve
    } else if last > ESCAPE_LEVEL {
        Fate::Expand
    } else if last < -ESCAPE_LEVEL {
        Fate::Collapse
    } else {
        Fate::Undecided
    };
    Ok(tr)
}

fn rhs_curve_distance(delta: f64, phi: f64, phi_s: f64) -> f64 {
    let b = (2.0 * delta.abs()).sqrt();
    let q = 1.0 + phi;
    (phi_s - (-b * q + b / q.sqrt())).abs()
}

/// Distance `|phi_s - curve(phi)|` of a state from the zero-energy curve.
pub fn curve_distance(st: &PhaseState) -> f64 {
    rhs_curve_distance(st.delta, st.phi, st.phi_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        assert_eq!(
            phase_rhs(&PhaseState::new(0.0, 0.0, -0.5)).unwrap(),
            (0.0, 0.0)
        );
        let (a, b) = phase_rhs(&PhaseState::new(0.0, 0.1, -0.5)).unwrap();
        assert!((a - 0.1).abs() < 1e-15 && (b + 0.05).abs() < 1e-15);
        let (a, b) = phase_rhs(&PhaseState::new(1.0, 0.0, -0.5)).unwrap();
        assert!(a == 0.0 && (b - 0.875).abs() < 1e-15);
        assert!(phase_rhs(&PhaseState::new(-1.0, 0.0, -0.5)).is_err());
    }

    #[test]
    fn curve_and_energy_examples() {
        let c = curve_phi_s(0.2, -0.5).unwrap();
        assert!((c - (-1.2 + 1.2f64.powf(-0.5))).abs() < 1e-15);
        assert!((c + 0.287_129).abs() < 1e-6);
        assert_eq!(curve_phi_s(0.0, -0.5).unwrap(), 0.0);
        let e = energy_homogeneous(&PhaseState::new(0.0, 0.1, -0.5)).unwrap();
        assert!((e - 0.105).abs() < 1e-15);
        let e = energy_homogeneous(&PhaseState::new(0.0, -0.1, -0.5)).unwrap();
        assert!((e + 0.095).abs() < 1e-15);
    }

    #[test]
    fn stationary() {
        let tr =
            integrate_phase(&PhaseState::new(0.0, 0.0, -0.5), 3.0, &PhaseSpec::default()).unwrap();
        assert_eq!(tr.fate, Fate::Stationary);
    }
}
