//! Expansion factor `alpha(t)` with `alpha^2 alpha'' = delta`, its
//! classification and the rescaled clocks
//! `s = int alpha^{-3/2} dt` and `tau = int alpha^{-1} dt`.

use crate::ode::{integrate, Event, OdeError, OdeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for deciding `a1 = a1*`.
pub const ESCAPE_TOL: f64 = 1e-12;
/// Collapse is declared once `alpha <= ALPHA_MIN_FRACTION * a0`.
pub const ALPHA_MIN_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    SelfSimilar,
    Linear,
    Collapse,
    PositiveDelta,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub delta: f64,
    pub a0: f64,
    pub a1: f64,
    pub a1_star: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub classification: Classification,
}

#[derive(Debug, Error, Clone)]
pub enum ExpansionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("collapse at T = {t_collapse}")]
    CollapseReached {
        t_collapse: f64,
        path: Box<ExpansionPath>,
    },
    #[error("operation needs a {expected:?} path, got {got:?}")]
    WrongClassification {
        expected: Classification,
        got: Classification,
    },
    #[error(transparent)]
    StepFailure(#[from] OdeError),
}

pub fn classify_expansion(delta: f64, a0: f64, a1: f64) -> Result<ExpansionParams, ExpansionError> {
    if !(a0 > 0.0) || !a0.is_finite() || !a1.is_finite() || !delta.is_finite() {
        return Err(ExpansionError::InvalidParams(format!(
            "a0 = {a0}, a1 = {a1}, delta = {delta}"
        )));
    }
    let a1_star = if delta < 0.0 {
        (2.0 * delta.abs() / a0).sqrt()
    } else {
        0.0
    };
    let classification = if delta > 0.0 {
        Classification::PositiveDelta
    } else if delta == 0.0 {
        Classification::Linear
    } else if (a1 - a1_star).abs() <= ESCAPE_TOL * a1_star {
        Classification::SelfSimilar
    } else if a1 > a1_star {
        Classification::Linear
    } else {
        Classification::Collapse
    };
    let other = (a1 * a1 + 2.0 * delta / a0).max(0.0).sqrt();
    Ok(ExpansionParams {
        delta,
        a0,
        a1,
        a1_star,
        beta1: a1.min(other),
        beta2: a1.max(other),
        classification,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtSpec {
    pub max_step: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for DtSpec {
    fn default() -> Self {
        Self {
            max_step: 0.05,
            rtol: 1e-12,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionPath {
    pub params: ExpansionParams,
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_prime: Vec<f64>,
    /// `int_0^t alpha^{-3/2}` by quadrature along the path.
    pub s: Vec<f64>,
    /// `int_0^t alpha^{-1}` by quadrature along the path.
    pub tau: Vec<f64>,
    pub t_collapse: Option<f64>,
}

/// Integrate `alpha` on `[0, t_end]`. Collapsing paths stop at
/// `alpha = 1e-6 a0`; if that happens before `t_end` the truncated path is
/// returned inside `CollapseReached`.
pub fn integrate_alpha(
    params: &ExpansionParams,
    t_end: f64,
    spec: &DtSpec,
) -> Result<ExpansionPath, ExpansionError> {
    if !(t_end > 0.0) {
        return Err(ExpansionError::InvalidParams(format!("t_end = {t_end}")));
    }
    let delta = params.delta;
    let rhs = move |_t: f64, u: &[f64; 4]| {
        let a = u[0];
        if a <= 0.0 {
            return [f64::NAN; 4];
        }
        [u[1], delta / (a * a), a.powf(-1.5), 1.0 / a]
    };
    let opts = OdeOptions {
        rtol: spec.rtol,
        atol: spec.atol,
        h_init: spec.max_step.min(1e-3),
        h_max: spec.max_step,
        h_min: 1e-300,
        max_steps: 10_000_000,
    };
    let alpha_min = ALPHA_MIN_FRACTION * params.a0;
    let g = move |_t: f64, u: &[f64; 4]| u[0] - alpha_min;
    let ev = Event {
        g: &g,
        tol: 1e-3 * alpha_min,
    };
    let mut path = ExpansionPath {
        params: *params,
        t: vec![],
        alpha: vec![],
        alpha_prime: vec![],
        s: vec![],
        tau: vec![],
        t_collapse: None,
    };
    let out = integrate(
        &rhs,
        0.0,
        [params.a0, params.a1, 0.0, 0.0],
        t_end,
        &opts,
        &[],
        if params.classification == Classification::Collapse {
            Some(&ev)
        } else {
            None
        },
        |t, u| {
            path.t.push(t);
            path.alpha.push(u[0]);
            path.alpha_prime.push(u[1]);
            path.s.push(u[2]);
            path.tau.push(u[3]);
        },
    )?;
    if out.event {
        path.t_collapse = Some(estimate_collapse_time(&path));
        let t_collapse = path.t_collapse.unwrap();
        return Err(ExpansionError::CollapseReached {
            t_collapse,
            path: Box::new(path),
        });
    }
    Ok(path)
}

/// Collapse time from the last sample: near `T`, `alpha ~ k (T - t)^{2/3}`
/// so `T - t ~ (2/3) alpha / |alpha'|`. Two samples are combined by
/// Richardson extrapolation in `alpha` (the estimate's error is
/// `O(alpha^{5/2})`).
fn estimate_collapse_time(p: &ExpansionPath) -> f64 {
    let n = p.t.len();
    let est = |i: usize| p.t[i] + (2.0 / 3.0) * p.alpha[i] / p.alpha_prime[i].abs();
    let t1 = est(n - 1);
    // earlier sample with noticeably larger alpha
    let target = 4.0 * p.alpha[n - 1];
    let j = (0..n - 1).rev().find(|&i| p.alpha[i] >= target);
    match j {
        Some(j) => {
            let t2 = est(j);
            let r = (p.alpha[j] / p.alpha[n - 1]).powf(2.5);
            (r * t1 - t2) / (r - 1.0)
        }
        None => t1,
    }
}

/// Least-squares slope of `log alpha` against `log(T - t)` over the last
/// decade of `T - t`.
pub fn collapse_exponent(p: &ExpansionPath) -> Option<f64> {
    let t_c = p.t_collapse?;
    let last = t_c - *p.t.last()?;
    let pts: Vec<(f64, f64)> =
        p.t.iter()
            .zip(&p.alpha)
            .filter(|(&t, _)| t_c - t > 0.0 && t_c - t <= 10.0 * last)
            .map(|(&t, &a)| ((t_c - t).ln(), a.ln()))
            .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `alpha(t) = (a0^{3/2} + (3/2) a0^{1/2} a1 t)^{2/3}` on the escape branch.
pub fn self_similar_alpha(a0: f64, a1: f64, t: f64) -> f64 {
    (a0.powf(1.5) + 1.5 * a0.sqrt() * a1 * t).powf(2.0 / 3.0)
}

/// `alpha_bar(s) = a0 e^{b s}` with `b = sqrt(2|delta|)`.
pub fn self_similar_alpha_of_s(a0: f64, delta: f64, s: f64) -> f64 {
    a0 * ((2.0 * delta.abs()).sqrt() * s).exp()
}

/// Self-similar clock samples in closed form `(ln alpha - ln a0)/sqrt(2|delta|)`.
pub fn self_similar_clock(p: &ExpansionPath) -> Result<Vec<f64>, ExpansionError> {
    if p.params.classification != Classification::SelfSimilar {
        return Err(ExpansionError::WrongClassification {
            expected: Classification::SelfSimilar,
            got: p.params.classification,
        });
    }
    let b = (2.0 * p.params.delta.abs()).sqrt();
    Ok(p.alpha
        .iter()
        .map(|a| (a.ln() - p.params.a0.ln()) / b)
        .collect())
}

/// `tau(t)` for `delta = 0`.
pub fn linear_clock(a0: f64, a1: f64, t: f64) -> f64 {
    if a1 == 0.0 {
        t / a0
    } else {
        (a1 * t / a0).ln_1p() / a1
    }
}

/// Inverse of [`linear_clock`].
pub fn linear_clock_inverse(a0: f64, a1: f64, tau: f64) -> f64 {
    if a1 == 0.0 {
        a0 * tau
    } else {
        a0 / a1 * (a1 * tau).exp_m1()
    }
}

/// Admissibility of the thermodynamic expanding configuration: `3K = c_nu`.
pub fn thermo_expansion_gate(k: f64, c_nu: f64, rel_tol: f64) -> bool {
    (3.0 * k - c_nu).abs() <= rel_tol * c_nu.abs().max(3.0 * k.abs())
}

/// Reported (not asserted) constants of the linear regime
/// `alpha ~ c1 + c2 t`.
pub fn linear_fit_constants(p: &ExpansionPath) -> (f64, f64) {
    let n = p.t.len();
    let c2 = p.alpha_prime[n - 1];
    (p.alpha[n - 1] - c2 * p.t[n - 1], c2)
}

/// Expansion factor and its derivatives as functions of the solver clock
/// (`s` on the escape branch, `tau` otherwise).
#[derive(Debug, Clone)]
pub enum ClockModel {
    /// `alpha = a0 e^{b s}`.
    SelfSimilar { a0: f64, b: f64 },
    /// `delta = 0`: `alpha = a0 e^{a1 tau}`.
    LinearExact { a0: f64, a1: f64 },
    /// General `delta`: tabulated `alpha(tau)`, `alpha_tau(tau)` from
    /// `alpha_tt = delta + alpha_t^2 / alpha`.
    LinearTable {
        delta: f64,
        dtau: f64,
        alpha: Vec<f64>,
        alpha_tau: Vec<f64>,
    },
}

impl ClockModel {
    pub fn self_similar(a0: f64, delta: f64) -> Self {
        ClockModel::SelfSimilar {
            a0,
            b: (2.0 * delta.abs()).sqrt(),
        }
    }

    /// Linear-regime clock for `(delta, a0, a1)` covering `[0, tau_end]`.
    pub fn linear(delta: f64, a0: f64, a1: f64, tau_end: f64) -> Result<Self, ExpansionError> {
        if delta == 0.0 {
            return Ok(ClockModel::LinearExact { a0, a1 });
        }
        let dtau = 1e-3;
        let n = (tau_end / dtau).ceil() as usize + 2;
        let rhs = move |_t: f64, u: &[f64; 2]| [u[1], delta + u[1] * u[1] / u[0]];
        let opts = OdeOptions {
            rtol: 1e-13,
            atol: 1e-14,
            h_max: dtau,
            ..OdeOptions::default()
        };
        let stops: Vec<f64> = (1..=n).map(|i| i as f64 * dtau).collect();
        let mut alpha = Vec::with_capacity(n + 1);
        let mut alpha_tau = Vec::with_capacity(n + 1);
        integrate(
            &rhs,
            0.0,
            [a0, a0 * a1],
            n as f64 * dtau,
            &opts,
            &stops,
            None,
            |t, u| {
                let k = (t / dtau).round();
                if (t - k * dtau).abs() < 1e-12 && k as usize == alpha.len() {
                    alpha.push(u[0]);
                    alpha_tau.push(u[1]);
                }
            },
        )?;
        Ok(ClockModel::LinearTable {
            delta,
            dtau,
            alpha,
            alpha_tau,
        })
    }

    /// `(alpha, d alpha / d clock)`.
    pub fn alpha(&self, c: f64) -> (f64, f64) {
        match *self {
            ClockModel::SelfSimilar { a0, b } => {
                let a = a0 * (b * c).exp();
                (a, b * a)
            }
            ClockModel::LinearExact { a0, a1 } => {
                let a = a0 * (a1 * c).exp();
                (a, a1 * a)
            }
            ClockModel::LinearTable {
                delta,
                dtau,
                ref alpha,
                ref alpha_tau,
            } => {
                let x = (c / dtau).clamp(0.0, (alpha.len() - 2) as f64);
                let i = (x.floor() as usize).min(alpha.len() - 2);
                let u = x - i as f64;
                let acc = |k: usize| delta + alpha_tau[k] * alpha_tau[k] / alpha[k];
                let a = hermite(
                    alpha[i],
                    alpha_tau[i] * dtau,
                    alpha[i + 1],
                    alpha_tau[i + 1] * dtau,
                    u,
                );
                let at = hermite(
                    alpha_tau[i],
                    acc(i) * dtau,
                    alpha_tau[i + 1],
                    acc(i + 1) * dtau,
                    u,
                );
                (a, at)
            }
        }
    }

    pub fn is_self_similar(&self) -> bool {
        matches!(self, ClockModel::SelfSimilar { .. })
    }
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, s: f64) -> f64 {
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * m1
}
