//! Stationary star profiles on `[0, R0]`.
//!
//! The isentropic profile solves `w'' + (2/y) w' + w^3/4 + 3 delta/4 = 0`
//! with `w = rho^{1/3}`, `w(0) = 1`, `w'(0) = 0`. The thermodynamic profile
//! solves the coupled hydrostatic and heat-balance system
//! `(K rho theta)' = -rho m / y^2`, `-(y^2 theta')' = eps y^2 rho`.

use crate::ode::{integrate, Event, OdeError, OdeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("no first zero of the profile before y = {y_max}")]
    NoFirstZero { y_max: f64 },
    #[error("boundary slope {slope} is not a physical vacuum")]
    NonPhysicalVacuum { slope: f64 },
    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("eps*K = {0} outside (1/6, 1)")]
    OutOfRange(f64),
    #[error("density and temperature vanish at different radii ({r_theta} vs {r_rho})")]
    ZerosDoNotCoincide { r_theta: f64, r_rho: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Output resolution and integrator controls for profile solves.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Number of uniform intervals on `[0, R0]`.
    pub intervals: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Largest integrator step (refinement knob).
    pub max_step: f64,
    /// Give up looking for the first zero beyond this radius.
    pub y_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            intervals: 200,
            rtol: 1e-10,
            atol: 1e-10,
            max_step: 0.5,
            y_max: 200.0,
        }
    }
}

impl GridSpec {
    pub fn with_intervals(intervals: usize) -> Self {
        Self {
            intervals,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), ProfileError> {
        if self.intervals < 4 {
            return Err(ProfileError::InvalidGrid(
                "need at least 4 intervals".into(),
            ));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step > 0.0 && self.y_max > 0.0) {
            return Err(ProfileError::InvalidGrid(
                "tolerances and step bounds must be positive".into(),
            ));
        }
        Ok(())
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_init: 1e-3,
            h_max: self.max_step,
            ..OdeOptions::default()
        }
    }
}

/// Isentropic profile sampled on `y_i = i R0 / N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsentropicProfile {
    pub delta: f64,
    pub r0: f64,
    pub y_nodes: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub rho_bar: Vec<f64>,
    /// `m(y_i) = int_0^{y_i} s^2 rho ds`.
    pub mass: Vec<f64>,
    /// `int_0^{R0} s^4 rho ds`.
    pub fourth_moment: f64,
    pub boundary_slope: f64,
}

/// Thermodynamic profile sampled on `y_i = i R0 / N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoProfile {
    pub k: f64,
    pub epsilon: f64,
    pub c_nu: f64,
    pub r0: f64,
    pub y_nodes: Vec<f64>,
    pub rho_bar: Vec<f64>,
    pub theta_bar: Vec<f64>,
    pub theta_prime: Vec<f64>,
    /// `A` in `rho = A theta^n`, `n = (1 - eps K)/(eps K)`.
    pub reduction_constant: f64,
    pub mass: Vec<f64>,
    pub fourth_moment: f64,
    /// `theta'(R0)`.
    pub theta_slope: f64,
    /// Slope of `rho^{1/n}` at `R0`.
    pub rho_root_slope: f64,
}

/// Second Taylor coefficient of `w` at the center.
pub fn center_c2(delta: f64) -> f64 {
    -(1.0 + 3.0 * delta) / 24.0
}

const SERIES_START: f64 = 1e-3 * 14.0;
const SLOPE_FLOOR: f64 = 1e-8;
const SLOPE_CEIL: f64 = 1e8;

fn isentropic_series(delta: f64, y: f64) -> [f64; 4] {
    let c2 = center_c2(delta);
    let c4 = -3.0 * c2 / 80.0;
    let y2 = y * y;
    let w = 1.0 + c2 * y2 + c4 * y2 * y2;
    let wp = 2.0 * c2 * y + 4.0 * c4 * y2 * y;
    // w^3 = 1 + 3 c2 y^2 + ...
    let m = y2 * y / 3.0 + 3.0 * c2 * y2 * y2 * y / 5.0;
    let m4 = y2 * y2 * y / 5.0 + 3.0 * c2 * y2 * y2 * y2 * y / 7.0;
    [w, wp, m, m4]
}

/// Solve the isentropic profile for `delta`.
pub fn solve_isentropic_profile(
    delta: f64,
    grid: &GridSpec,
) -> Result<IsentropicProfile, ProfileError> {
    grid.check()?;
    let rhs = move |y: f64, u: &[f64; 4]| {
        let w = u[0];
        let w3 = w * w * w;
        [
            u[1],
            -2.0 * u[1] / y - 0.25 * w3 - 0.75 * delta,
            y * y * w3,
            y.powi(4) * w3,
        ]
    };
    let opts = grid.ode();
    let y0 = SERIES_START;
    let u0 = isentropic_series(delta, y0);
    let g = |_y: f64, u: &[f64; 4]| u[0];
    let ev = Event { g: &g, tol: 1e-12 };
    let first = integrate(&rhs, y0, u0, grid.y_max, &opts, &[], Some(&ev), |_, _| {})?;
    if !first.event {
        return Err(ProfileError::NoFirstZero { y_max: grid.y_max });
    }
    let r0 = first.t;
    let slope = first.y[1];
    if !(slope.is_finite() && slope < -SLOPE_FLOOR && slope > -SLOPE_CEIL) {
        return Err(ProfileError::NonPhysicalVacuum { slope });
    }

    let n = grid.intervals;
    let y_nodes: Vec<f64> = (0..=n).map(|i| r0 * i as f64 / n as f64).collect();
    let marched = march_cells(
        &rhs,
        &y_nodes,
        y0,
        |y| isentropic_series(delta, y),
        &opts,
        2,
        &[],
    )?;
    let end = marched.states[n];
    if end[0].abs() > 1e-8 {
        return Err(ProfileError::ToleranceNotMet(format!(
            "re-integration misses the root: w(R0) = {:e}",
            end[0]
        )));
    }
    let mut w: Vec<f64> = marched.states.iter().map(|u| u[0]).collect();
    let wp: Vec<f64> = marched.states.iter().map(|u| u[1]).collect();
    w[n] = 0.0;
    let mass = marched.mass;
    if w[..n].iter().any(|&v| v <= 0.0) {
        return Err(ProfileError::ToleranceNotMet(
            "profile not positive inside".into(),
        ));
    }
    let rho_bar = w.iter().map(|v| v * v * v).collect();
    Ok(IsentropicProfile {
        delta,
        r0,
        y_nodes,
        w,
        w_prime: wp,
        rho_bar,
        mass,
        fourth_moment: marched.fourth_moment,
        boundary_slope: slope,
    })
}

/// Probe whether `delta` admits a compact profile.
pub fn probe_isentropic(delta: f64, y_max: f64) -> Result<f64, ProfileError> {
    let grid = GridSpec {
        intervals: 8,
        y_max,
        ..GridSpec::default()
    };
    solve_isentropic_profile(delta, &grid).map(|p| p.r0)
}

fn thermo_series(k: f64, eps: f64, rho_c: f64, y: f64) -> [f64; 5] {
    let y2 = y * y;
    let n = (1.0 - eps * k) / (eps * k);
    let theta = 1.0 - eps * rho_c * y2 / 6.0;
    let rho = rho_c * (1.0 - n * eps * rho_c * y2 / 6.0);
    let m = rho_c * y2 * y / 3.0;
    [theta, m, rho.ln(), rho_c * y2 * y2 * y / 5.0, m]
}

/// Solve the thermodynamic profile with `theta(0) = 1` and `rho(0) = rho_c`.
///
/// `rho / theta^n` is conserved along the system, so the density and the
/// temperature vanish together for every central density; `rho_c` only
/// fixes the length scale. The coincidence of the two zeros is still
/// checked numerically from independent extrapolations.
pub fn solve_thermo_profile(
    k: f64,
    epsilon: f64,
    rho_c: f64,
    grid: &GridSpec,
) -> Result<ThermoProfile, ProfileError> {
    grid.check()?;
    let ek = epsilon * k;
    if !(ek > 1.0 / 6.0 && ek < 1.0) || !(k > 0.0 && epsilon > 0.0 && rho_c > 0.0) {
        return Err(ProfileError::OutOfRange(ek));
    }
    let n_index = (1.0 - ek) / ek;
    // state: theta, m, ln rho, fourth moment, cell mass
    let rhs = move |y: f64, u: &[f64; 5]| {
        let theta = u[0];
        if theta <= 0.0 {
            return [f64::NAN; 5];
        }
        let rho = u[2].exp();
        let y2 = y * y;
        [
            -epsilon * u[1] / y2,
            y2 * rho,
            -u[1] * (1.0 - ek) / (k * theta * y2),
            y2 * y2 * rho,
            y2 * rho,
        ]
    };
    let opts = grid.ode();
    let y0 = SERIES_START / (epsilon * rho_c * 4.0).sqrt();
    let u0 = thermo_series(k, epsilon, rho_c, y0);
    let theta_stop = 1e-6;
    let g = move |_y: f64, u: &[f64; 5]| u[0] - theta_stop;
    let ev = Event { g: &g, tol: 1e-14 };
    let first = integrate(&rhs, y0, u0, grid.y_max, &opts, &[], Some(&ev), |_, _| {})?;
    if !first.event {
        return Err(ProfileError::NoFirstZero { y_max: grid.y_max });
    }
    // quadratic extrapolation of theta to zero
    let (ye, th, m) = (first.t, first.y[0], first.y[1]);
    let t1 = -epsilon * m / (ye * ye);
    let t2 = -epsilon * ((first.y[2]).exp() - 2.0 * m / (ye * ye * ye));
    let d = {
        let lin = -th / t1;
        // Newton correction for 0.5 t2 d^2
        lin - 0.5 * t2 * lin * lin / t1
    };
    let r_theta = ye + d;
    let theta_slope = t1 + t2 * d;
    if !(theta_slope.is_finite() && theta_slope < -SLOPE_FLOOR) {
        return Err(ProfileError::NonPhysicalVacuum { slope: theta_slope });
    }

    let n = grid.intervals;
    let mut y_nodes: Vec<f64> = (0..=n).map(|i| r_theta * i as f64 / n as f64).collect();
    let boundary_pts: Vec<f64> = (3..=7).map(|e| r_theta * (1.0 - 10f64.powi(-e))).collect();
    // the last cell stops just short of the edge where ln(rho) diverges
    y_nodes[n] = *boundary_pts.last().unwrap();
    let marched = march_cells(
        &rhs,
        &y_nodes,
        y0,
        |y| thermo_series(k, epsilon, rho_c, y),
        &opts,
        4,
        &boundary_pts,
    )?;
    y_nodes[n] = r_theta;

    // density root from a straight-line fit of rho^{1/n} near the edge
    let fit: Vec<(f64, f64)> = marched
        .extra
        .iter()
        .filter(|(y, _)| boundary_pts[2..].iter().any(|b| b == y))
        .map(|(y, u)| (*y, (u[2] / n_index).exp()))
        .collect();
    if fit.len() < 2 {
        return Err(ProfileError::ToleranceNotMet(
            "boundary layer not sampled".into(),
        ));
    }
    let (slope_g, icpt) = line_fit(&fit);
    let r_rho = -icpt / slope_g;
    if !(slope_g < 0.0) || (r_rho - r_theta).abs() > 1e-6 * r_theta {
        return Err(ProfileError::ZerosDoNotCoincide { r_theta, r_rho });
    }

    let mut rho_bar = vec![0.0; n + 1];
    let mut theta_bar = vec![0.0; n + 1];
    let mut theta_prime = vec![0.0; n + 1];
    for i in 0..n {
        let (y, u) = (y_nodes[i], marched.states[i]);
        theta_bar[i] = u[0];
        rho_bar[i] = u[2].exp();
        theta_prime[i] = if y > 0.0 {
            -epsilon * u[1] / (y * y)
        } else {
            0.0
        };
    }
    theta_prime[n] = theta_slope;
    let mass = marched.mass;
    let fourth_moment = marched.fourth_moment;
    Ok(ThermoProfile {
        k,
        epsilon,
        c_nu: 3.0 * k,
        r0: r_theta,
        y_nodes,
        rho_bar,
        theta_bar,
        theta_prime,
        reduction_constant: rho_c,
        mass,
        fourth_moment,
        theta_slope,
        rho_root_slope: slope_g,
    })
}

struct Marched<const N: usize> {
    /// Full state at every node (mass components cumulative).
    states: Vec<[f64; N]>,
    mass: Vec<f64>,
    fourth_moment: f64,
    /// States at the requested extra stops.
    extra: Vec<(f64, [f64; N])>,
}

/// Integrate cell by cell. Component `mi` (mass) and component 3 (fourth
/// moment) are quadratures; they restart in each cell so that the tiny
/// cells at the vacuum edge keep full relative accuracy.
fn march_cells<const N: usize, F>(
    rhs: &F,
    nodes: &[f64],
    y0: f64,
    series: impl Fn(f64) -> [f64; N],
    opts: &OdeOptions,
    mi: usize,
    extra_stops: &[f64],
) -> Result<Marched<N>, ProfileError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let m4i = 3;
    let n = nodes.len() - 1;
    let mut states = vec![series(0.0); n + 1];
    let mut mass = vec![0.0; n + 1];
    let mut m4 = 0.0;
    let mut extra = Vec::new();
    states[0][mi] = 0.0;
    states[0][m4i] = 0.0;
    for j in 1..=n {
        let (a, b) = (nodes[j - 1], nodes[j]);
        let (dm, dm4, end) = if b <= y0 {
            let (sa, sb) = (series(a), series(b));
            (sb[mi] - sa[mi], sb[m4i] - sa[m4i], sb)
        } else {
            let (start, mut u, pre_m, pre_m4) = if a < y0 {
                let (sa, s0) = (series(a), series(y0));
                (y0, s0, s0[mi] - sa[mi], s0[m4i] - sa[m4i])
            } else {
                (a, states[j - 1], 0.0, 0.0)
            };
            u[mi] = 0.0;
            u[m4i] = 0.0;
            let stops: Vec<f64> = extra_stops
                .iter()
                .copied()
                .filter(|&s| s > start && s < b)
                .collect();
            let out = integrate(rhs, start, u, b, opts, &stops, None, |y, st| {
                if stops.contains(&y) {
                    extra.push((y, *st));
                }
            })?;
            (pre_m + out.y[mi], pre_m4 + out.y[m4i], out.y)
        };
        mass[j] = mass[j - 1] + dm;
        m4 += dm4;
        states[j] = end;
    }
    for j in 0..=n {
        states[j][mi] = mass[j];
    }
    Ok(Marched {
        states,
        mass,
        fourth_moment: m4,
        extra,
    })
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Cumulative mass samples and the fourth moment.
pub fn profile_mass_moments(p: &IsentropicProfile) -> (Vec<f64>, f64) {
    (p.mass.clone(), p.fourth_moment)
}

impl IsentropicProfile {
    pub fn intervals(&self) -> usize {
        self.y_nodes.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.r0 / self.intervals() as f64
    }

    /// Mass of cell `j` (between nodes `j-1` and `j`), `j = 1..=N`.
    pub fn cell_masses(&self) -> Vec<f64> {
        cell_masses(&self.mass)
    }
}

impl ThermoProfile {
    pub fn intervals(&self) -> usize {
        self.y_nodes.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.r0 / self.intervals() as f64
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        cell_masses(&self.mass)
    }

    pub fn polytropic_index(&self) -> f64 {
        (1.0 - self.epsilon * self.k) / (self.epsilon * self.k)
    }
}

fn cell_masses(mass: &[f64]) -> Vec<f64> {
    let mut dm = vec![0.0; mass.len()];
    for j in 1..mass.len() {
        dm[j] = mass[j] - mass[j - 1];
    }
    dm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_conditions() {
        let p = solve_isentropic_profile(0.1, &GridSpec::with_intervals(50)).unwrap();
        assert_eq!(p.w[0], 1.0);
        assert_eq!(p.w_prime[0], 0.0);
        assert_eq!(p.mass[0], 0.0);
        assert_eq!(*p.w.last().unwrap(), 0.0);
    }

    #[test]
    fn below_critical_delta_has_no_zero() {
        let err = probe_isentropic(-0.05, 200.0).unwrap_err();
        assert!(matches!(err, ProfileError::NoFirstZero { .. }));
    }

    #[test]
    fn thermo_range_is_enforced() {
        let g = GridSpec::with_intervals(20);
        assert!(matches!(
            solve_thermo_profile(1.0, 0.1, 1.0, &g),
            Err(ProfileError::OutOfRange(_))
        ));
        assert!(matches!(
            solve_thermo_profile(1.0, 1.5, 1.0, &g),
            Err(ProfileError::OutOfRange(_))
        ));
    }
}
