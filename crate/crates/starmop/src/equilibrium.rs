//! Densities, masses, potentials and Cauchy transforms of the minimizing
//! vector measure `(mu_1, ..., mu_d)`, the variational conditions, `g_1` and `phi_1`.
//!
//! Every measure is rotation invariant, so it is stored on one reference ray
//! (angle 0 for odd `k`, `pi/(d+1)` for even `k`) and the other `d` copies are
//! produced by rotation when integrating.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::{graded, GaussLegendre};
use crate::surface::{Side, Surface};

/// Nodes of the `mu_1` rule on `[0, x*]`.
pub const MU1_NODES: usize = 200;
/// Nodes per piece of the unbounded rules (`[0, x*]` and `[x*, inf)`).
pub const RAY_NODES: usize = 200;
/// Nodes per piece when a rule is split at the projection of an evaluation point.
pub const SPLIT_NODES: usize = 120;
/// Relative distance to a ray below which the potential switches to split rules.
const NEAR_RAY: f64 = 0.25;
/// Distance to a support below which Cauchy transforms and `g_1` refuse to evaluate.
pub const SUPPORT_GUARD: f64 = 1e-6;

/// Quadrature weights carrying the density: `(s, w_i * mu_k(s_i))`.
pub type WeightedNodes = Vec<(f64, f64)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayMeasure {
    pub k: usize,
    /// Angle of the reference ray.
    pub angle: f64,
    /// End of the support on the reference ray (`x*` for `k = 1`, infinite otherwise).
    pub truncation: f64,
    pub mass: f64,
    /// Difference between the full rule and a half-size rule.
    pub mass_error: f64,
    #[serde(skip)]
    nodes: WeightedNodes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialEval {
    pub z: C64,
    pub u: Vec<f64>,
    pub f: Vec<C64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalReport {
    pub ell1: f64,
    /// Max deviation of the `mu_1` condition from `ell1` on `[0.05, 0.95] x*`.
    pub mu1_residual: f64,
    /// Max of `|2U_k - U_{k-1} - U_{k+1}|` on `[0.05, 5] x*` of each reference ray, `k = 2..d`.
    pub muk_residuals: Vec<f64>,
    /// Max of `LHS - ell1` on `(x*, x_hat]`; must be negative.
    pub inequality_max: f64,
    pub grid: usize,
}

impl VariationalReport {
    pub fn max_equality_residual(&self) -> f64 {
        self.muk_residuals
            .iter()
            .fold(self.mu1_residual, |a, &b| a.max(b))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFamily {
    pub surface: Surface,
    pub x_hat: f64,
    pub rays: Vec<RayMeasure>,
}

/// `[a, b]` with nodes clustered at both ends.
fn finite_piece(a: f64, b: f64, n: usize, p: f64) -> Vec<(f64, f64)> {
    GaussLegendre::cached(n)
        .unit()
        .map(|(u, w)| {
            let (g, dg) = graded(u, p);
            (a + (b - a) * g, (b - a) * dg * w)
        })
        .collect()
}

/// `[0, b]` through `s = b v^d`: near the origin the `k >= 2` densities are
/// analytic functions plus a multiple of `s^{1/d}`, both smooth in `v`.
fn power_piece(b: f64, d: usize, n: usize, p: f64) -> Vec<(f64, f64)> {
    let di = d as i32;
    GaussLegendre::cached(n)
        .unit()
        .map(|(u, w)| {
            let (v, dv) = graded(u, p);
            (b * v.powi(di), b * d as f64 * v.powi(di - 1) * dv * w)
        })
        .collect()
}

/// `[a, inf)` through `s = a v^{-d}`: the densities are analytic in `s^{-1/d}`
/// at infinity, so the integrand becomes a smooth function of `v`.
fn tail_piece(a: f64, d: usize, n: usize, p: f64) -> Vec<(f64, f64)> {
    let df = d as f64;
    GaussLegendre::cached(n)
        .unit()
        .map(|(u, w)| {
            let (v, dv) = graded(u, p);
            (a * v.powf(-df), a * df * v.powf(-df - 1.0) * dv * w)
        })
        .collect()
}

/// `x = x* sin^2(pi u / 2)`: removes the square-root edge.
fn sin2_piece(x_star: f64, n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::cached(n)
        .unit()
        .map(|(u, w)| {
            let (s, c) = (0.5 * PI * u).sin_cos();
            (x_star * s * s, x_star * PI * s * c * w)
        })
        .collect()
}

impl MeasureFamily {
    pub fn new(p: &ModelParams) -> Result<Self> {
        if !p.is_subcritical() {
            return Err(Error::Domain(
                "the equilibrium measures need subcritical t0".into(),
            ));
        }
        let surface = Surface::new(p)?;
        let mut fam = Self {
            surface,
            x_hat: p.x_hat,
            rays: Vec::new(),
        };
        for k in 1..=p.d {
            let (nodes, half) = if k == 1 {
                (
                    sin2_piece(fam.surface.x_star, MU1_NODES),
                    sin2_piece(fam.surface.x_star, MU1_NODES / 2),
                )
            } else {
                (fam.ray_pieces(RAY_NODES), fam.ray_pieces(RAY_NODES / 2))
            };
            let nodes = fam.weigh(k, nodes)?;
            let half = fam.weigh(k, half)?;
            let m1 = nodes.iter().map(|x| x.1).sum::<f64>() * (p.d as f64 + 1.0);
            let m2 = half.iter().map(|x| x.1).sum::<f64>() * (p.d as f64 + 1.0);
            fam.rays.push(RayMeasure {
                k,
                angle: fam.ray_angle(k),
                truncation: if k == 1 {
                    fam.surface.x_star
                } else {
                    f64::INFINITY
                },
                mass: m1,
                mass_error: (m1 - m2).abs(),
                nodes,
            });
        }
        Ok(fam)
    }

    pub fn d(&self) -> usize {
        self.surface.d
    }

    fn ray_pieces(&self, n: usize) -> Vec<(f64, f64)> {
        let xs = self.surface.x_star;
        let mut v = power_piece(xs, self.d(), n, 3.0);
        v.extend(tail_piece(xs, self.d(), n, 3.0));
        v
    }

    fn weigh(&self, k: usize, pieces: Vec<(f64, f64)>) -> Result<WeightedNodes> {
        // mu_1 vanishes at x*; a rounded node just past it carries no mass
        let end = if k == 1 {
            self.surface.x_star
        } else {
            f64::INFINITY
        };
        pieces
            .into_iter()
            .filter(|(s, w)| *s > 0.0 && *s < end && *w > 0.0)
            .map(|(s, w)| Ok((s, w * self.density(k, s)?)))
            .collect()
    }

    /// Angle of the reference ray carrying `mu_k`.
    pub fn ray_angle(&self, k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            PI / (self.d() as f64 + 1.0)
        }
    }

    pub fn density(&self, k: usize, s: f64) -> Result<f64> {
        if k == 1 {
            self.density_mu1(s)
        } else {
            self.density_muk(k, s)
        }
    }

    /// `Im xi_{1,-}(x) / (pi t0)` on `(0, x*)`.
    pub fn density_mu1(&self, x: f64) -> Result<f64> {
        let s = &self.surface;
        if !(x > 0.0 && x < s.x_star) {
            return Err(Error::Domain(format!("x = {x} outside (0, x*)")));
        }
        let b = s.branches(C64::new(x, 0.0));
        let (a, c) = (b.xi[0], b.xi[1]);
        let xi = if a.im >= c.im { a } else { c };
        if xi.im <= 0.0 && x < s.x_star * (1.0 - 1e-6) {
            return Err(Error::BoundaryResolution(x));
        }
        Ok(xi.im.max(0.0) / (PI * s.t0))
    }

    /// `e^{i theta}(eta_{k,-} - eta_{k,+}) / (2 pi i t0)` on the reference ray;
    /// complex so that callers can look at the (vanishing) imaginary part.
    pub fn density_muk_complex(&self, k: usize, s_coord: f64) -> Result<C64> {
        let sf = &self.surface;
        if k < 2 || k > sf.d {
            return Err(Error::Domain(format!("k = {k} outside 2..=d")));
        }
        if !(s_coord > 0.0) {
            return Err(Error::Domain(format!("s = {s_coord} must be positive")));
        }
        let dir = C64::from_polar(1.0, self.ray_angle(k));
        let z = dir * s_coord;
        let kt = sf.kappa_table();
        let side = |sd: Side| -> Result<C64> {
            let w = sf.boundary_roots(z, sd)[k - 1];
            let kap = kt.get(k, sf.side_sector(z, sd)?);
            Ok(sf.eta_from_root(z, w, kap))
        };
        let (ep, em) = (side(Side::Plus)?, side(Side::Minus)?);
        Ok(dir * (em - ep) / (C64::new(0.0, 2.0 * PI) * sf.t0))
    }

    /// Radial CDF of `mu_1` over all rays: `(d+1) int_0^s mu_1`, reaching 1 at `x*`.
    pub fn mu1_cdf(&self, s: f64) -> Result<f64> {
        let xs = self.surface.x_star;
        if s <= 0.0 {
            return Ok(0.0);
        }
        if s >= xs {
            return Ok(1.0);
        }
        // sin^2 map on [0, s]; it also absorbs the edge when s is close to x*
        let mut acc = 0.0;
        for (x, w) in sin2_piece(s, 160) {
            if x > 0.0 && x < xs {
                acc += w * self.density_mu1(x)?;
            }
        }
        Ok(((self.d() as f64 + 1.0) * acc).clamp(0.0, 1.0))
    }

    pub fn density_muk(&self, k: usize, s: f64) -> Result<f64> {
        Ok(self.density_muk_complex(k, s)?.re)
    }

    pub fn mass(&self, k: usize) -> Result<(f64, f64)> {
        let r = self.ray(k)?;
        Ok((r.mass, r.mass_error))
    }

    pub fn ray(&self, k: usize) -> Result<&RayMeasure> {
        self.rays
            .get(k.wrapping_sub(1))
            .ok_or_else(|| Error::Domain(format!("k = {k} outside 1..=d")))
    }

    /// Weighted nodes of `mu_k` with the rule refined around `s0`.
    fn split_nodes(&self, k: usize, s0: f64) -> Result<WeightedNodes> {
        let xs = self.surface.x_star;
        let n = SPLIT_NODES;
        let mut pieces = Vec::new();
        if k == 1 {
            if s0 <= 0.0 || s0 >= xs {
                return Ok(self.ray(1)?.nodes.clone());
            }
            pieces.extend(finite_piece(0.0, s0, n, 3.0));
            pieces.extend(finite_piece(s0, xs, n, 3.0));
        } else if s0 < xs {
            pieces.extend(power_piece(s0, self.d(), n, 3.0));
            pieces.extend(finite_piece(s0, xs, n, 3.0));
            pieces.extend(tail_piece(xs, self.d(), n, 3.0));
        } else {
            pieces.extend(power_piece(xs, self.d(), n, 3.0));
            pieces.extend(finite_piece(xs, s0, n, 3.0));
            pieces.extend(tail_piece(s0, self.d(), n, 3.0));
        }
        self.weigh(k, pieces)
    }

    fn copies(&self, k: usize) -> impl Iterator<Item = C64> + '_ {
        let d1 = self.d() as f64 + 1.0;
        let base = self.ray_angle(k);
        (0..=self.d()).map(move |l| C64::from_polar(1.0, base + 2.0 * PI * l as f64 / d1))
    }

    /// Rule for the copy of `mu_k` seen from `zeta` (coordinates rotated so the
    /// copy lies on the positive axis): the cached one, or a split one when
    /// `zeta` is close to the ray.
    fn nodes_for(&self, k: usize, zeta: C64) -> Result<Cow<'_, WeightedNodes>> {
        let near = zeta.re > 0.0
            && zeta.im.abs() < NEAR_RAY * zeta.re
            && (k > 1 || zeta.re < 1.5 * self.surface.x_star);
        Ok(if near {
            Cow::Owned(self.split_nodes(k, zeta.re)?)
        } else {
            Cow::Borrowed(&self.ray(k)?.nodes)
        })
    }

    /// `U^{mu_k}(z) = -int log|z - t| dmu_k(t)`; fine on the supports too.
    pub fn potential(&self, k: usize, z: C64) -> Result<f64> {
        let mut total = 0.0;
        for dir in self.copies(k) {
            let zeta = z * dir.conj();
            total -= self
                .nodes_for(k, zeta)?
                .iter()
                .map(|&(s, w)| {
                    // a node rounded onto the split point; its weight is negligible
                    let r = (zeta - s).norm();
                    if r > 0.0 {
                        w * r.ln()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>();
        }
        Ok(total)
    }

    /// Distance from `z` to the support of `mu_k`.
    pub fn support_distance(&self, k: usize, z: C64) -> f64 {
        let end = if k == 1 {
            self.surface.x_star
        } else {
            f64::INFINITY
        };
        self.copies(k)
            .map(|dir| {
                let zeta = z * dir.conj();
                let s = zeta.re.clamp(0.0, end);
                (zeta - s).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `F_k(z) = int dmu_k(t) / (z - t)`.
    pub fn cauchy(&self, k: usize, z: C64) -> Result<C64> {
        let dist = self.support_distance(k, z);
        if dist < SUPPORT_GUARD {
            return Err(Error::Proximity {
                dist,
                min: SUPPORT_GUARD,
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for dir in self.copies(k) {
            let zeta = z * dir.conj();
            // 1/(z - dir s) = conj(dir) / (zeta - s)
            acc += dir.conj()
                * self
                    .nodes_for(k, zeta)?
                    .iter()
                    .map(|&(s, w)| w / (zeta - s))
                    .sum::<C64>();
        }
        Ok(acc)
    }

    pub fn potential_and_cauchy(&self, z: C64) -> Result<PotentialEval> {
        let d = self.d();
        Ok(PotentialEval {
            z,
            u: (1..=d)
                .map(|k| self.potential(k, z))
                .collect::<Result<_>>()?,
            f: (1..=d).map(|k| self.cauchy(k, z)).collect::<Result<_>>()?,
        })
    }

    /// Boundary values `F_{1..d, side}` on a reference ray, from the branch
    /// functions: `F_1 = (xi_1 - t z^d)/t0`, `F_k = F_{k-1} + (xi_k - kappa z^{1/d})/t0`.
    pub fn cauchy_boundary(&self, z: C64, side: Side) -> Result<Vec<C64>> {
        let sf = &self.surface;
        let w = sf.boundary_roots(z, side);
        let sector = sf.side_sector(z, side)?;
        let kt = sf.kappa_table();
        let zr = z.powf(1.0 / sf.d as f64);
        let mut f = Vec::with_capacity(sf.d);
        f.push((sf.xi_of_w(w[0]) - sf.t_top * z.powi(sf.d as i32)) / sf.t0);
        for k in 2..=sf.d {
            let eta = sf.xi_of_w(w[k - 1]) - kt.get(k, sector) * zr;
            let prev = f[k - 2];
            f.push(prev + eta / sf.t0);
        }
        Ok(f)
    }

    /// Least-squares slope of `log mu_1(x)` against `log(x* - x)` on
    /// `[0.95, 0.999] x*` with `points` log-spaced samples; 1/2 for a square-root edge.
    pub fn edge_exponent(&self, points: usize) -> Result<f64> {
        let xs = self.surface.x_star;
        let n = points.max(3);
        let (lo, hi) = ((0.001f64).ln(), (0.05f64).ln());
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let gap = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let dens = self.density_mu1(xs * (1.0 - gap))?;
            pts.push(((xs * gap).ln(), dens.ln()));
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    /// Largest violation of the balayage relations between boundary values of
    /// the `F_k` on the supports, sampled at `grid` points per reference ray
    /// (`(0, x*)` for `k = 1`, `(0, 5x*]` otherwise).
    pub fn balayage_residual(&self, grid: usize) -> Result<f64> {
        let sf = &self.surface;
        let d = sf.d;
        let xs = sf.x_star;
        let g = grid.max(2);
        let mut worst: f64 = 0.0;
        for k in 1..=d {
            let dir = C64::from_polar(1.0, self.ray_angle(k));
            for i in 1..=g {
                let s = if k == 1 {
                    xs * i as f64 / (g + 1) as f64
                } else {
                    5.0 * xs * i as f64 / g as f64
                };
                let z = dir * s;
                let fp = self.cauchy_boundary(z, Side::Plus)?;
                let fm = self.cauchy_boundary(z, Side::Minus)?;
                let lhs = fp[k - 1] + fm[k - 1];
                let mut rhs = if k < d {
                    self.cauchy(k + 1, z)?
                } else {
                    C64::new(0.0, 0.0)
                };
                if k == 1 {
                    let df = d as f64;
                    rhs += (sf.t_top.powf(-1.0 / df) * s.powf(1.0 / df) - sf.t_top * s.powf(df))
                        / sf.t0;
                } else {
                    rhs += self.cauchy(k - 1, z)?;
                }
                worst = worst.max((lhs - rhs).norm());
            }
        }
        Ok(worst)
    }

    /// External field term of the `mu_1` condition at `x >= 0` on ray 0.
    fn field(&self, x: f64) -> f64 {
        let sf = &self.surface;
        let d = sf.d as f64;
        (d / ((d + 1.0) * sf.t_top.powf(1.0 / d)) * x.powf((d + 1.0) / d)
            - sf.t_top / (d + 1.0) * x.powf(d + 1.0))
            / sf.t0
    }

    /// Left side of the `mu_1` condition, `-2U_1 + U_2 - field`, at `x` on ray 0.
    pub fn mu1_condition(&self, x: f64) -> Result<f64> {
        let z = C64::new(x, 0.0);
        Ok(-2.0 * self.potential(1, z)? + self.potential(2, z)? - self.field(x))
    }

    /// `2U_k - U_{k-1} - U_{k+1}` at `s` on the reference ray of `mu_k` (`U_{d+1} = 0`).
    pub fn muk_condition(&self, k: usize, s: f64) -> Result<f64> {
        let z = C64::from_polar(s, self.ray_angle(k));
        let next = if k < self.d() {
            self.potential(k + 1, z)?
        } else {
            0.0
        };
        Ok(2.0 * self.potential(k, z)? - self.potential(k - 1, z)? - next)
    }

    /// The `mu_1` constant, taken at `x*/2`.
    pub fn ell1(&self) -> Result<f64> {
        self.mu1_condition(0.5 * self.surface.x_star)
    }

    pub fn variational_residual(&self, grid: usize) -> Result<VariationalReport> {
        let xs = self.surface.x_star;
        let ell1 = self.ell1()?;
        let g = grid.max(2);
        let lin = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (g - 1) as f64;
        let mut mu1_residual: f64 = 0.0;
        for i in 0..g {
            let x = lin(0.05 * xs, 0.95 * xs, i);
            mu1_residual = mu1_residual.max((self.mu1_condition(x)? - ell1).abs());
        }
        let mut muk_residuals = Vec::new();
        for k in 2..=self.d() {
            let mut m: f64 = 0.0;
            for i in 0..g {
                let s = lin(0.05 * xs, 5.0 * xs, i);
                m = m.max(self.muk_condition(k, s)?.abs());
            }
            muk_residuals.push(m);
        }
        let mut inequality_max = f64::NEG_INFINITY;
        for i in 1..=g {
            let x = xs + (self.x_hat - xs) * i as f64 / g as f64;
            inequality_max = inequality_max.max(self.mu1_condition(x)? - ell1);
        }
        Ok(VariationalReport {
            ell1,
            mu1_residual,
            muk_residuals,
            inequality_max,
            grid: g,
        })
    }

    /// `g_1(z) = Log z + sum_l int Log(1 - omega^l s / z) dmu_1(s)`; cut along
    /// the star and the negative axis.
    pub fn g1(&self, z: C64) -> Result<C64> {
        let dist = self.support_distance(1, z);
        if dist < SUPPORT_GUARD {
            return Err(Error::Proximity {
                dist,
                min: SUPPORT_GUARD,
            });
        }
        let mut acc = z.ln();
        for dir in self.copies(1) {
            let zeta = z * dir.conj();
            // 1 - dir s / z = 1 - s / zeta
            acc += self
                .nodes_for(1, zeta)?
                .iter()
                .map(|&(s, w)| w * (1.0 - s / zeta).ln())
                .sum::<C64>();
        }
        Ok(acc)
    }

    /// Star endpoint `omega^l x*` of the sector containing `z`.
    fn nearest_endpoint(&self, z: C64) -> C64 {
        let d1 = self.d() as f64 + 1.0;
        let l = (crate::surface::arg(z) * d1 / (2.0 * PI)).round();
        C64::from_polar(self.surface.x_star, 2.0 * PI * l / d1)
    }

    /// `phi_1(z) = (1/(2 t0)) int_{omega^l x*}^z (xi_1 - xi_2) ds` along
    /// `s = b + (z - b) tau^2`, which turns the square-root start into a smooth integrand.
    pub fn phi1(&self, z: C64) -> Result<C64> {
        let sf = &self.surface;
        for k in [1, 2] {
            let dist = self.support_distance(k, z);
            let end = if k == 1 { sf.x_star } else { f64::INFINITY };
            let on = self
                .copies(k)
                .any(|dir| (z * dir.conj()).re <= end && dist < SUPPORT_GUARD);
            if on {
                return Err(Error::Proximity {
                    dist,
                    min: SUPPORT_GUARD,
                });
            }
        }
        let b = self.nearest_endpoint(z);
        self.phi1_path(b, z, |s| {
            let br = sf.branches(s);
            br.xi[0] - br.xi[1]
        })
    }

    /// `phi_1` at `x` in `(0, x*)` on ray 0 using boundary values from `side`.
    pub fn phi1_on_star(&self, x: f64, side: Side) -> Result<C64> {
        let sf = &self.surface;
        if !(x > 0.0 && x < sf.x_star) {
            return Err(Error::Domain(format!("x = {x} outside (0, x*)")));
        }
        self.phi1_path(C64::new(sf.x_star, 0.0), C64::new(x, 0.0), |s| {
            let w = sf.boundary_roots(s, side);
            sf.xi_of_w(w[0]) - sf.xi_of_w(w[1])
        })
    }

    fn phi1_path(&self, b: C64, z: C64, diff: impl Fn(C64) -> C64) -> Result<C64> {
        let g = GaussLegendre::cached(80);
        let acc: C64 = g
            .unit()
            .map(|(tau, w)| {
                let s = b + (z - b) * tau * tau;
                diff(s) * (z - b) * 2.0 * tau * w
            })
            .sum();
        Ok(acc / (2.0 * self.surface.t0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn fam3() -> &'static MeasureFamily {
        static F: OnceLock<MeasureFamily> = OnceLock::new();
        F.get_or_init(|| MeasureFamily::new(&ModelParams::new(3, 0.05, 2.0).unwrap()).unwrap())
    }

    #[test]
    fn masses_d3() {
        let f = fam3();
        for (k, want) in [(1, 1.0), (2, 2.0 / 3.0), (3, 1.0 / 3.0)] {
            let (m, e) = f.mass(k).unwrap();
            assert!((m - want).abs() < 1e-8, "k={k} m={m} err={e}");
        }
    }

    #[test]
    fn densities_positive_and_real() {
        let f = fam3();
        let xs = f.surface.x_star;
        for i in 1..100 {
            let x = xs * i as f64 / 100.0;
            assert!(f.density_mu1(x).unwrap() > 0.0);
        }
        for k in 2..=3 {
            for i in 1..=100 {
                let s = 10.0 * xs * i as f64 / 100.0;
                let v = f.density_muk_complex(k, s).unwrap();
                assert!(v.re > 0.0, "k={k} s={s} {v}");
                assert!(v.im.abs() <= 1e-10 * v.re.max(1.0), "k={k} s={s} {v}");
            }
        }
    }

    #[test]
    fn muk_tail_decay() {
        let f = fam3();
        let xs = f.surface.x_star;
        for k in 2..=3 {
            let c1 = f.density_muk(k, 1e3 * xs).unwrap() * (1e3 * xs).powf(2.0 + 1.0 / 3.0);
            let c2 = f.density_muk(k, 1e6 * xs).unwrap() * (1e6 * xs).powf(2.0 + 1.0 / 3.0);
            assert!(c1 > 0.0 && (c1 / c2 - 1.0).abs() < 1e-2, "k={k} {c1} {c2}");
        }
    }

    #[test]
    fn cauchy_relations_with_branches() {
        let f = fam3();
        let sf = &f.surface;
        let kt = sf.kappa_table();
        for &z in &[
            C64::new(0.4, 0.13),
            C64::new(-0.2, 0.5),
            C64::new(1.0, -0.7),
        ] {
            let pe = f.potential_and_cauchy(z).unwrap();
            let b = sf.branches(z);
            let xi1 = sf.t_top * z.powi(3) + sf.t0 * pe.f[0];
            assert!((xi1 - b.xi[0]).norm() < 1e-8, "{z}");
            let sec = sf.sector(z).unwrap();
            let zr = z.powf(1.0 / 3.0);
            for k in 2..=4 {
                let fk = if k <= 3 {
                    pe.f[k - 1]
                } else {
                    C64::new(0.0, 0.0)
                };
                let xik = sf.t0 * (fk - pe.f[k - 2]) + kt.get(k, sec) * zr;
                assert!((xik - b.xi[k - 1]).norm() < 1e-8, "{z} k={k}");
            }
        }
    }

    #[test]
    fn mu1_cdf_shape() {
        let f = fam3();
        let xs = f.surface.x_star;
        assert_eq!(f.mu1_cdf(0.0).unwrap(), 0.0);
        assert_eq!(f.mu1_cdf(2.0 * xs).unwrap(), 1.0);
        assert!((f.mu1_cdf(xs * (1.0 - 1e-9)).unwrap() - 1.0).abs() < 1e-8);
        let mut last = 0.0;
        for i in 1..20 {
            let s = xs * i as f64 / 20.0;
            let c = f.mu1_cdf(s).unwrap();
            assert!(c > last);
            last = c;
            // derivative is (d+1) times the density
            let h = 1e-5 * xs;
            let fd = (f.mu1_cdf(s + h).unwrap() - f.mu1_cdf(s - h).unwrap()) / (2.0 * h);
            let dens = 4.0 * f.density_mu1(s).unwrap();
            assert!((fd - dens).abs() < 1e-5 * dens, "s = {s}: {fd} vs {dens}");
        }
    }

    #[test]
    fn g1_symmetries() {
        let f = fam3();
        let z = C64::new(0.5, 0.1);
        let om = f.surface.omega();
        let g = f.g1(z).unwrap();
        let gr = f.g1(om * z).unwrap();
        assert!((gr - g - C64::new(0.0, 2.0 * PI / 4.0)).norm() < 1e-12);
        assert!((g.re + f.potential(1, z).unwrap()).abs() < 1e-12);
        let big = C64::new(30.0, 20.0);
        assert!((f.g1(big).unwrap() - big.ln()).norm() < 1e-7);
    }

    #[test]
    fn phi1_properties() {
        let f = fam3();
        let xs = f.surface.x_star;
        for i in 1..10 {
            let v = f.phi1_on_star(xs * i as f64 / 10.0, Side::Plus).unwrap();
            assert!(v.re.abs() < 1e-12, "{v}");
        }
        let at = f.phi1(C64::new(f.x_hat, 0.0)).unwrap();
        assert!(at.re < 0.0 && at.im.abs() < 1e-12);
    }

    #[test]
    fn square_root_edge() {
        let e = fam3().edge_exponent(40).unwrap();
        assert!((e - 0.5).abs() < 0.05, "{e}");
    }

    #[test]
    fn balayage_relations() {
        let r = fam3().balayage_residual(12).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn variational_conditions() {
        let rep = fam3().variational_residual(40).unwrap();
        assert!(rep.max_equality_residual() < 1e-6, "{rep:?}");
        assert!(rep.inequality_max < 0.0, "{rep:?}");
    }

    #[test]
    fn cauchy_at_infinity() {
        let f = fam3();
        let z = C64::new(40.0, 25.0);
        let f1 = f.cauchy(1, z).unwrap();
        // next Laurent term is O(z^{-d-2})
        assert!((f1 - 1.0 / z).norm() < 1e-8 * (1.0 / z).norm());
        let pe = f.potential_and_cauchy(C64::new(0.3, 0.2)).unwrap();
        let pc = f.potential_and_cauchy(C64::new(0.3, -0.2)).unwrap();
        for k in 0..3 {
            assert!((pe.f[k] - pc.f[k].conj()).norm() < 1e-13);
        }
    }
}
