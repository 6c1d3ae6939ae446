//! Gauss-Legendre rules and the variable substitutions used on the star.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term recurrence. Nodes come out in
    /// increasing order.
    pub fn new(n: usize) -> Self {
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, t);
                dp = d;
                let dt = p / d;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, t);
            if d.is_finite() {
                dp = d;
            }
            let wt = 2.0 / ((1.0 - t * t) * dp * dp);
            x[i] = -t;
            x[n - 1 - i] = t;
            w[i] = wt;
            w[n - 1 - i] = wt;
        }
        Self { x, w }
    }

    /// Shared copy of the `n`-point rule.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().expect("quadrature cache poisoned");
        g.entry(n).or_insert_with(|| Arc::new(Self::new(n))).clone()
    }

    /// `int_a^b f` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.x
            .iter()
            .zip(&self.w)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights mapped to `[0, 1]`.
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x
            .iter()
            .zip(&self.w)
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
}

/// Grading map of `[0, 1]` onto itself that clusters nodes at both ends:
/// `u^p / (u^p + (1-u)^p)` and its derivative.
pub fn graded(u: f64, p: f64) -> (f64, f64) {
    let a = u.powf(p);
    let b = (1.0 - u).powf(p);
    let s = a + b;
    let da = p * u.powf(p - 1.0);
    let db = -p * (1.0 - u).powf(p - 1.0);
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// Grading that clusters nodes only at `u = 0`: `u^p`.
pub fn graded_left(u: f64, p: f64) -> (f64, f64) {
    (u.powf(p), p * u.powf(p - 1.0))
}

/// Weighted nodes `(s, weight)` for `int_0^L f(s) ds` with nodes clustered at 0.
pub fn left_graded_nodes(len: f64, n: usize, p: f64) -> Vec<(f64, f64)> {
    GaussLegendre::cached(n)
        .unit()
        .map(|(u, w)| {
            let (g, dg) = graded_left(u, p);
            (len * g, len * dg * w)
        })
        .collect()
}
