//! Independent oracles shared by the integration tests. None of them call
//! into the crate's solvers.
#![allow(dead_code)]

/// Classic fixed-step RK4 on the index-n Lane–Emden equation, started from
/// its three-term series; the first zero is refined by cubic Hermite
/// interpolation of the last bracketing step.
pub fn lane_emden_first_zero(n: f64) -> f64 {
    let f = |x: f64, u: [f64; 2]| -> [f64; 2] {
        let th = u[0].max(0.0);
        [u[1], -2.0 * u[1] / x - th.powf(n)]
    };
    let h = 2e-4;
    let mut x: f64 = 1e-3;
    let mut u = [
        1.0 - x * x / 6.0 + n * x.powi(4) / 120.0,
        -x / 3.0 + n * x.powi(3) / 30.0,
    ];
    loop {
        let k1 = f(x, u);
        let k2 = f(
            x + h / 2.0,
            [u[0] + h / 2.0 * k1[0], u[1] + h / 2.0 * k1[1]],
        );
        let k3 = f(
            x + h / 2.0,
            [u[0] + h / 2.0 * k2[0], u[1] + h / 2.0 * k2[1]],
        );
        let k4 = f(x + h, [u[0] + h * k3[0], u[1] + h * k3[1]]);
        let un = [
            u[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            u[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if un[0] <= 0.0 {
            // Hermite cubic on [x, x+h] with values and slopes, bisect
            let (p0, m0, p1, m1) = (u[0], u[1] * h, un[0], un[1] * h);
            let herm = |s: f64| {
                let (s2, s3) = (s * s, s * s * s);
                (2.0 * s3 - 3.0 * s2 + 1.0) * p0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * p1
                    + (s3 - s2) * m1
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if herm(mid) > 0.0 {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            return x + h * lo;
        }
        u = un;
        x += h;
    }
}

/// Classic RK4 on `[alpha, alpha_tau, theta, theta_tau]` for x-independent
/// data in the linear clock:
/// `alpha_tt = delta + alpha_t^2 / alpha`,
/// `alpha theta_tt + alpha_t theta_t + delta ((1+theta) - (1+theta)^{-2}) = 0`.
pub fn linear_uniform_oracle(
    delta: f64,
    a0: f64,
    a1: f64,
    th0: f64,
    th1: f64,
    tau: f64,
    steps: usize,
) -> (f64, f64) {
    let f = |u: [f64; 4]| -> [f64; 4] {
        let q = 1.0 + u[2];
        [
            u[1],
            delta + u[1] * u[1] / u[0],
            u[3],
            -(u[1] * u[3] + delta * (q - 1.0 / (q * q))) / u[0],
        ]
    };
    let h = tau / steps as f64;
    let mut u = [a0, a0 * a1, th0, th1];
    for _ in 0..steps {
        let k1 = f(u);
        let k2 = f(add(u, k1, h / 2.0));
        let k3 = f(add(u, k2, h / 2.0));
        let k4 = f(add(u, k3, h));
        for i in 0..4 {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (u[2], u[3])
}

/// Classic RK4 on the self-similar homogeneous equation
/// `phi_ss + (b/2) phi_s + |delta| ((1+phi)^{-2} - (1+phi)) = 0`.
pub fn self_similar_uniform_oracle(
    delta: f64,
    phi0: f64,
    phi1: f64,
    s: f64,
    steps: usize,
) -> (f64, f64) {
    let b = (2.0 * delta.abs()).sqrt();
    let f = |u: [f64; 4]| -> [f64; 4] {
        let q = 1.0 + u[0];
        [
            u[1],
            -0.5 * b * u[1] - delta.abs() * (1.0 / (q * q) - q),
            0.0,
            0.0,
        ]
    };
    let h = s / steps as f64;
    let mut u = [phi0, phi1, 0.0, 0.0];
    for _ in 0..steps {
        let k1 = f(u);
        let k2 = f(add(u, k1, h / 2.0));
        let k3 = f(add(u, k2, h / 2.0));
        let k4 = f(add(u, k3, h));
        for i in 0..2 {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (u[0], u[1])
}

fn add(u: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [
        u[0] + h * k[0],
        u[1] + h * k[1],
        u[2] + h * k[2],
        u[3] + h * k[3],
    ]
}

/// Simpson's rule on a uniform grid with an even number of intervals.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len() - 1;
    assert!(n.is_multiple_of(2));
    let h = x[1] - x[0];
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * h / 3.0
}
