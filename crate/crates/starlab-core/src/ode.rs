//! Adaptive Dormand–Prince 5(4) integrator with forced stop times and
//! scalar event location.
//!
//! States are fixed-size arrays. A right-hand side that produces a
//! non-finite value is treated as a rejected step, which lets callers
//! keep trial stages out of regions where the model is undefined.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("event root not converged near t = {t}")]
    EventNotConverged { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One Dormand–Prince step. Returns the new state and the scaled error
/// norm, or `None` if any stage was non-finite.
pub fn dopri_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; N],
    h: f64,
    opts: &OdeOptions,
) -> Option<([f64; N], f64)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    if !finite(&k1) {
        return None;
    }
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    if !finite(&k2) {
        return None;
    }
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    if !finite(&k3) {
        return None;
    }
    let k4 = f(
        t + C4 * h,
        &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
    );
    if !finite(&k4) {
        return None;
    }
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    if !finite(&k5) {
        return None;
    }
    let k6 = f(
        t + h,
        &axpy(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    if !finite(&k6) {
        return None;
    }
    let y_new = axpy(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = f(t + h, &y_new);
    if !finite(&y_new) || !finite(&k7) {
        return None;
    }
    let mut err = 0.0f64;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        err = err.max((e / sc).abs());
    }
    Some((y_new, err))
}

/// How an integration run ended.
#[derive(Debug, Clone)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// True when the run stopped on the event function's zero.
    pub event: bool,
    pub steps: usize,
}

/// Scalar event: the run stops where `g` changes sign along the
/// solution, located to `|g| <= tol`.
pub struct Event<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub tol: f64,
}

/// Integrate from `t0` towards `t_end`. Every step lands exactly on each
/// value of `stops` inside the interval; `on_step` sees each accepted
/// state (including the initial one).
#[allow(clippy::too_many_arguments)]
pub fn integrate<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    stops: &[f64],
    event: Option<&Event<N>>,
    mut on_step: impl FnMut(f64, &[f64; N]),
) -> Result<Outcome<N>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(opts.h_max).min(t_end - t0);
    let mut next_stop = stops
        .iter()
        .position(|&s| s > t0 + 1e-15 * t0.abs().max(1.0));
    let mut steps = 0;
    on_step(t, &y);
    let mut g_prev = event.map(|e| (e.g)(t, &y));
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        let mut target = t_end;
        if let Some(k) = next_stop {
            if stops[k] < target {
                target = stops[k];
            }
        }
        let mut h_try = h.min(opts.h_max);
        let hit = t + h_try >= target;
        if hit {
            h_try = target - t;
        }
        match dopri_step(f, t, &y, h_try, opts) {
            Some((y_new, err)) if err <= 1.0 => {
                steps += 1;
                let t_new = if hit { target } else { t + h_try };
                if let (Some(ev), Some(gp)) = (event, g_prev) {
                    let g_new = (ev.g)(t_new, &y_new);
                    if g_new == 0.0 || gp * g_new < 0.0 {
                        let (te, ye) = locate_event(f, t, &y, h_try, gp, g_new, ev, opts)?;
                        on_step(te, &ye);
                        return Ok(Outcome {
                            t: te,
                            y: ye,
                            event: true,
                            steps,
                        });
                    }
                    g_prev = Some(g_new);
                }
                t = t_new;
                y = y_new;
                on_step(t, &y);
                if hit {
                    if let Some(k) = next_stop {
                        if target == stops[k] {
                            next_stop = if k + 1 < stops.len() {
                                Some(k + 1)
                            } else {
                                None
                            };
                        }
                    }
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !hit || h_try >= h {
                    h = h_try * fac;
                }
            }
            Some((_, err)) => {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            None => {
                h = h_try * 0.5;
            }
        }
        if h < opts.h_min {
            return Err(OdeError::StepUnderflow { t });
        }
    }
    Ok(Outcome {
        t,
        y,
        event: false,
        steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn locate_event<const N: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; N],
    h: f64,
    g0: f64,
    g1: f64,
    ev: &Event<N>,
    opts: &OdeOptions,
) -> Result<(f64, [f64; N]), OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    // Illinois regula falsi on the step length; each trial is a single
    // step from the accepted state, so accuracy matches the accepted step.
    let (mut a, mut fa) = (0.0, g0);
    let (mut b, mut fb) = (h, g1);
    let mut best = (b, fb);
    let mut side = 0;
    for _ in 0..200 {
        if fb.abs() < best.1.abs() {
            best = (b, fb);
        }
        if best.1.abs() <= ev.tol || (b - a).abs() <= 1e-15 * (t.abs() + h) {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = match dopri_step(f, t, y, c, opts) {
            Some((yc, _)) => (ev.g)(t + c, &yc),
            None => f64::NAN,
        };
        if !fc.is_finite() {
            // fall back to bisection from the valid side
            let m = 0.5 * (a + c);
            let fm = dopri_step(f, t, y, m, opts).map(|(ym, _)| (ev.g)(t + m, &ym));
            match fm {
                Some(v) if v.is_finite() => {
                    b = m;
                    fb = v;
                }
                _ => return Err(OdeError::EventNotConverged { t }),
            }
            continue;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = c;
        fb = fc;
    }
    if best.1.abs() > ev.tol && best.1.is_finite() {
        // accept if the bracket collapsed to rounding
        if (b - a).abs() > 1e-13 * (t.abs() + h) {
            return Err(OdeError::EventNotConverged { t: t + best.0 });
        }
    }
    let (ye, _) = dopri_step(f, t, y, best.0, opts).ok_or(OdeError::EventNotConverged { t })?;
    Ok((t + best.0, ye))
}
