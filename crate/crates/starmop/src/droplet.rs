//! The droplet `Omega` bounded by `psi(|w| = 1)`: boundary samples, harmonic
//! moments, the Schwarz-function identity and the exterior Cauchy transform of
//! the normalized area measure.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::MeasureFamily;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::surface::Surface;

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 512;
/// Samples used for the exterior Cauchy integral.
pub const CAUCHY_SAMPLES: usize = 2048;
/// Relative size of `r - d a` below which `psi'` vanishes on the unit circle.
const CUSP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropletBoundary {
    pub theta: Vec<f64>,
    pub points: Vec<C64>,
    pub closed: bool,
}

impl DropletBoundary {
    /// Winding number of the sampled closed polygon around `z`.
    pub fn winding(&self, z: C64) -> i32 {
        let n = self.points.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = self.points[i] - z;
            let b = self.points[(i + 1) % n] - z;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i32
    }

    pub fn contains(&self, z: C64) -> bool {
        self.winding(z) != 0
    }

    /// Distance from `z` to the polygon.
    pub fn distance(&self, z: C64) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| segment_distance(z, self.points[i], self.points[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// First pair of non-adjacent polygon edges that cross, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let p = &self.points;
        let n = p.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Droplet {
    pub surface: Surface,
}

impl Droplet {
    /// Accepts the critical time as well; the boundary then reports its cusps.
    pub fn new(p: &ModelParams) -> Result<Self> {
        Ok(Self {
            surface: Surface::new(p)?,
        })
    }

    pub fn from_surface(surface: Surface) -> Self {
        Self { surface }
    }

    /// `psi(e^{i theta})`.
    pub fn boundary_point(&self, theta: f64) -> C64 {
        let w = C64::from_polar(1.0, theta);
        self.surface.r * w + self.surface.a * w.powi(-(self.surface.d as i32))
    }

    /// Angles where `psi'` vanishes on the unit circle; empty below the critical time.
    pub fn cusp_angles(&self) -> Vec<f64> {
        let s = &self.surface;
        if s.r - s.d as f64 * s.a > CUSP_TOL * s.r {
            return Vec::new();
        }
        let d1 = s.d as f64 + 1.0;
        (0..=s.d).map(|l| 2.0 * PI * l as f64 / d1).collect()
    }

    /// Samples `psi(e^{i theta})` on the given grid (taken as a closed curve).
    pub fn boundary(&self, theta: &[f64]) -> Result<DropletBoundary> {
        let cusps = self.cusp_angles();
        if !cusps.is_empty() {
            return Err(Error::SelfIntersection(format!(
                "psi' vanishes on the unit circle at theta = {cusps:?}"
            )));
        }
        let b = DropletBoundary {
            theta: theta.to_vec(),
            points: theta.iter().map(|&t| self.boundary_point(t)).collect(),
            closed: true,
        };
        if let Some((i, j)) = b.self_intersection() {
            return Err(Error::SelfIntersection(format!(
                "edges at theta = {} and {} cross",
                theta[i], theta[j]
            )));
        }
        let s = &self.surface;
        for l in 0..=s.d {
            let end = C64::from_polar(s.x_star, 2.0 * PI * l as f64 / (s.d as f64 + 1.0));
            if b.winding(end) != 1 {
                return Err(Error::SelfIntersection(format!(
                    "star endpoint {end} is not enclosed once"
                )));
            }
        }
        Ok(b)
    }

    pub fn uniform_boundary(&self, n: usize) -> Result<DropletBoundary> {
        self.boundary(&uniform_grid(n))
    }

    /// `(1/2 pi i) oint conj(z) z^{-k} dz` by the trapezoid rule on `n` samples.
    pub fn harmonic_moment(&self, k: i32, n: usize) -> C64 {
        let s = &self.surface;
        let mut acc = C64::new(0.0, 0.0);
        for th in uniform_grid(n) {
            let w = C64::from_polar(1.0, th);
            let z = self.boundary_point(th);
            acc += z.conj() * z.powi(-k) * w * s.psi_prime(w);
        }
        acc / n as f64
    }

    /// Moments `k = 0..=kmax`.
    pub fn harmonic_moments(&self, kmax: usize, n: usize) -> Vec<C64> {
        (0..=kmax as i32)
            .map(|k| self.harmonic_moment(k, n))
            .collect()
    }

    pub fn area(&self, n: usize) -> f64 {
        PI * self.harmonic_moment(0, n).re
    }

    /// `|xi_1(psi(e^{i theta})) - conj(psi(e^{i theta}))|`.
    pub fn schwarz_residual(&self, theta: f64) -> f64 {
        let z = self.boundary_point(theta);
        (self.surface.branches(z).xi[0] - z.conj()).norm()
    }

    pub fn max_schwarz_residual(&self, n: usize) -> f64 {
        uniform_grid(n)
            .into_iter()
            .map(|t| self.schwarz_residual(t))
            .fold(0.0, f64::max)
    }

    /// `(1/(2 pi i t0)) oint conj(zeta)/(z - zeta) d zeta` for `z` outside the droplet.
    pub fn exterior_cauchy(&self, z: C64, n: usize) -> Result<C64> {
        let b = self.uniform_boundary(n)?;
        if b.contains(z) || b.distance(z) == 0.0 {
            return Err(Error::InsideDomain);
        }
        let s = &self.surface;
        let mut acc = C64::new(0.0, 0.0);
        for (&th, &zeta) in b.theta.iter().zip(&b.points) {
            let w = C64::from_polar(1.0, th);
            acc += zeta.conj() / (z - zeta) * w * s.psi_prime(w);
        }
        Ok(acc / (n as f64 * s.t0))
    }

    /// `|F_1(z) - exterior_cauchy(z)|`.
    pub fn exterior_cauchy_residual(&self, fam: &MeasureFamily, z: C64) -> Result<f64> {
        let rhs = self.exterior_cauchy(z, CAUCHY_SAMPLES)?;
        Ok((fam.cauchy(1, z)? - rhs).norm())
    }

    /// Whether this droplet's sampled boundary lies strictly inside `other`'s.
    pub fn inside_of(&self, other: &Droplet, n: usize) -> Result<bool> {
        let inner = self.uniform_boundary(n)?;
        let outer = other.uniform_boundary(n)?;
        Ok(inner
            .points
            .iter()
            .all(|&z| outer.winding(z) == 1 && outer.distance(z) > 0.0))
    }
}

/// `theta_j = 2 pi j / n`, `j = 0..n`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}
