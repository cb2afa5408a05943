//! Small numerical kernels shared by the solvers: a row-sum tridiagonal
//! solver for M-matrices, quadrature rules and grid derivatives.

/// Solve `d_i y_i - a_i y_{i-1} - c_i y_{i+1} = f_i` where
/// `d_i = s_i + a_i + c_i` and all of `s, a, c` are non-negative.
///
/// The diagonal is never formed from the off-diagonals by subtraction, so
/// the elimination stays accurate when the couplings are many orders of
/// magnitude larger than the row sums.
pub fn solve_mmatrix(s: &[f64], a: &[f64], c: &[f64], f: &[f64]) -> Vec<f64> {
    let n = s.len();
    debug_assert!(a.len() == n && c.len() == n && f.len() == n);
    let mut dp = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut sp_prev = 0.0;
    for i in 0..n {
        let (sp, fpi) = if i == 0 {
            (s[0], f[0])
        } else {
            let w = a[i] / dp[i - 1];
            (s[i] + w * sp_prev, f[i] + w * fp[i - 1])
        };
        dp[i] = sp + c[i];
        fp[i] = fpi;
        sp_prev = sp;
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let next = if i + 1 < n { c[i] * y[i + 1] } else { 0.0 };
        y[i] = (fp[i] + next) / dp[i];
    }
    y
}

/// Trapezoid rule on arbitrary nodes.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xs, fs)| 0.5 * (xs[1] - xs[0]) * (fs[0] + fs[1]))
        .sum()
}

/// Cumulative trapezoid integral starting from zero.
pub fn cumulative_trapezoid(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = z;
        ws[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (xs, ws)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub struct CompositeGauss {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeGauss {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(lo + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// First derivative on a uniform grid `x_i = i h`, `i = 0..=n`. The left
/// end uses the even reflection `f(-x) = f(x)`; the right end a one-sided
/// second-order stencil.
pub fn ddx_even(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    d[0] = 0.0;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * (f[n - 1] - f[n - 2]) - (f[n - 2] - f[n - 3])) / (2.0 * h);
    d
}

/// First derivative of an odd function (e.g. the derivative of an even
/// one) on the same grid.
pub fn ddx_odd(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    // f(-h) = -f(h)
    d[0] = (f[1] - (-f[1])) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * (f[n - 1] - f[n - 2]) - (f[n - 2] - f[n - 3])) / (2.0 * h);
    d
}

/// Second derivative of an even function on a uniform grid.
pub fn d2dx2_even(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 4 {
        return d;
    }
    d[0] = 2.0 * (f[1] - f[0]) / (h * h);
    for i in 1..n - 1 {
        d[i] = ((f[i + 1] - f[i]) - (f[i] - f[i - 1])) / (h * h);
    }
    d[n - 1] = (2.0 * (f[n - 1] - f[n - 2]) - 3.0 * (f[n - 2] - f[n - 3]) + (f[n - 3] - f[n - 4]))
        / (h * h);
    d
}

/// Value at `x = 0` of an even function sampled at `h, 2h, ...`.
pub fn even_origin_value(f1: f64, f2: f64) -> f64 {
    (4.0 * f1 - f2) / 3.0
}
