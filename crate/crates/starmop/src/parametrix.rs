//! The Szegő-type prefactor `M_11(z) = exp(int_{inf_1}^{z} eta)`.
//!
//! On the genus-zero surface the uniformizing coordinate is `w`, with `z = psi(w)`,
//! sheet 1 the exterior `|w| > w*`, the branch points at `w = omega^l w*` and
//! the point over infinity on the lower sheets at `w = 0`. The differential with
//! residue `-1/2` at each branch point, `(d+1)/2` at `w = 0` and no pole at
//! `w = inf` is
//!
//! `eta = [(d+1)/(2w) - ((d+1)/2) w^d / (w^{d+1} - w*^{d+1})] dw`,
//!
//! which integrates to `M_11 = (1 - (w*/w_1)^{d+1})^{-1/2}`. The principal square
//! root jumps only where `w^{d+1}` lies in `(0, w*^{d+1})`. Those segments map to
//! `(x*, inf)` on the lower sheets, never to sheet 1, so on sheet 1 the principal
//! branch is the one continued from 1 at infinity. Note that sheet 1 is not
//! `|w| > w*`: next to the star `|w_1|` dips below `w*`.
//! [`M11Evaluator::m11_path`] integrates `eta` numerically as a cross-check.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::GaussLegendre;
use crate::surface::{Side, Surface};

/// Closest approach to `Sigma_1*` accepted by [`M11Evaluator::m11`].
pub const PROXIMITY: f64 = 1e-6;
const RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M11Evaluator {
    pub surface: Surface,
    pub w_star: f64,
}

/// Residues of `eta`, found by integrating around small circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueReport {
    /// At `w = omega^l w*`, `l = 0..=d`.
    pub branch_points: Vec<C64>,
    /// At `w = 0`, the point over infinity on sheets `2..d+1`.
    pub infinity_2: C64,
    pub sum: C64,
    pub max_error: f64,
}

impl M11Evaluator {
    pub fn new(p: &ModelParams) -> Result<Self> {
        Ok(Self::from_surface(Surface::new(p)?))
    }

    pub fn from_surface(surface: Surface) -> Self {
        let w_star = surface.rho;
        Self { surface, w_star }
    }

    fn d1(&self) -> f64 {
        self.surface.d as f64 + 1.0
    }

    /// Coefficient of `dw` in `eta`.
    pub fn eta(&self, w: C64) -> C64 {
        let d1 = self.d1();
        let wd = w.powu(self.surface.d as u32);
        0.5 * d1 / w - 0.5 * d1 * wd / (wd * w - self.w_star.powf(d1))
    }

    fn check(&self, z: C64) -> Result<()> {
        let dist = self.surface.star_distance(z);
        if dist < PROXIMITY {
            return Err(Error::Proximity {
                dist,
                min: PROXIMITY,
            });
        }
        Ok(())
    }

    /// Sheet-1 preimage `w_1(z)`.
    pub fn w1(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        Ok(self.surface.branches(z).w[0])
    }

    pub fn m11(&self, z: C64) -> Result<C64> {
        let w = self.w1(z)?;
        Ok(self.m11_of_w(w))
    }

    fn m11_of_w(&self, w: C64) -> C64 {
        (1.0 - (self.w_star / w).powf(self.d1())).sqrt().inv()
    }

    /// Boundary value on side `side` of the ray through `x`, for `0 < x < x*`.
    pub fn m11_boundary(&self, x: f64, side: Side) -> Result<C64> {
        if !(x > 0.0 && x < self.surface.x_star) {
            return Err(Error::Domain(format!("x = {x} outside (0, x*)")));
        }
        let w = self.surface.boundary_roots(C64::new(x, 0.0), side)[0];
        Ok(self.m11_of_w(w))
    }

    /// `exp(u_1(z))` with `u_1` integrated in the `z`-plane along `s = z / v`,
    /// `v` from 0 to 1, as `int eta(w_1(s)) / psi'(w_1(s)) ds`. A radial path
    /// never meets the star unless `z` is on it, and `w_1(s)` is re-read from
    /// the root ordering at every node, so no branch is assumed.
    pub fn m11_path(&self, z: C64) -> Result<C64> {
        self.check(z)?;
        let sf = &self.surface;
        let f = |v: f64| -> Result<C64> {
            if v == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            let s = z / v;
            if sf.star_distance(s) < PROXIMITY {
                return Err(Error::BranchContinuation(format!(
                    "integration path meets the star at {s}"
                )));
            }
            let w = sf.branches(s).w[0];
            Ok(-self.eta(w) / sf.psi_prime(w) * z / (v * v))
        };
        let u = adaptive(&f, 0.0, 1.0, 1e-14, 40)?;
        Ok(u.exp())
    }

    /// Contour integrals of `eta` around each pole.
    pub fn eta_residue_check(&self) -> Result<ResidueReport> {
        let d1 = self.d1();
        let ws = self.w_star;
        // the branch points are 2 w* sin(pi/(d+1)) apart
        let eps = 0.25 * ws * (PI / d1).sin();
        let around = |c: C64, rad: f64| {
            let m = 256;
            (0..m)
                .map(|i| {
                    let e = C64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64);
                    self.eta(c + rad * e) * rad * e
                })
                .sum::<C64>()
                / m as f64
        };
        let branch_points: Vec<C64> = (0..=self.surface.d)
            .map(|l| around(C64::from_polar(ws, 2.0 * PI * l as f64 / d1), eps))
            .collect();
        let infinity_2 = around(C64::new(0.0, 0.0), 0.5 * ws);
        let sum = branch_points.iter().sum::<C64>() + infinity_2;
        let mut max_error = (infinity_2 - 0.5 * d1).norm().max(sum.norm());
        for (l, r) in branch_points.iter().enumerate() {
            let e = (r + 0.5).norm();
            max_error = max_error.max(e);
            if e > RESIDUE_TOL {
                return Err(Error::ResidueMismatch {
                    at: format!("w = omega^{l} w*"),
                    got: r.re,
                    expected: -0.5,
                });
            }
        }
        if (infinity_2 - 0.5 * d1).norm() > RESIDUE_TOL {
            return Err(Error::ResidueMismatch {
                at: "w = 0".into(),
                got: infinity_2.re,
                expected: 0.5 * d1,
            });
        }
        if sum.norm() > RESIDUE_TOL {
            return Err(Error::ResidueMismatch {
                at: "sum".into(),
                got: sum.re,
                expected: 0.0,
            });
        }
        Ok(ResidueReport {
            branch_points,
            infinity_2,
            sum,
            max_error,
        })
    }

    /// Largest `|closed form - path integral| / |closed form|` over `points`.
    pub fn cross_check(&self, points: &[C64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &z in points {
            let a = self.m11(z)?;
            let b = self.m11_path(z)?;
            worst = worst.max((a - b).norm() / a.norm());
        }
        Ok(worst)
    }
}

/// Adaptive Gauss-Legendre: 15 against 30 nodes, bisecting where they disagree.
fn adaptive(f: &impl Fn(f64) -> Result<C64>, a: f64, b: f64, tol: f64, depth: u32) -> Result<C64> {
    let rule = |n: usize| -> Result<C64> {
        let g = GaussLegendre::cached(n);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in g.unit() {
            acc += f(a + (b - a) * x)? * w;
        }
        Ok(acc * (b - a))
    };
    let coarse = rule(15)?;
    let fine = rule(30)?;
    if (fine - coarse).norm() <= tol * (1.0 + fine.norm()) {
        return Ok(fine);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "eta path integral on [{a}, {b}] did not settle"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive(f, a, m, tol, depth - 1)? + adaptive(f, m, b, tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(d: usize) -> M11Evaluator {
        M11Evaluator::from_surface(Surface::from_parts(d, 0.05, 2.0).unwrap())
    }

    fn eval_half_critical(d: usize) -> M11Evaluator {
        let t0 = 0.5 * crate::model::critical_time(d, 2.0).unwrap();
        M11Evaluator::from_surface(Surface::from_parts(d, t0, 2.0).unwrap())
    }

    #[test]
    fn residues() {
        for d in 2..=5 {
            let m = eval_half_critical(d);
            let rep = m.eta_residue_check().unwrap();
            assert!(rep.max_error < 1e-10, "d = {d}: {rep:?}");
            assert!((rep.infinity_2.re - 0.5 * (d as f64 + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_path_integral() {
        let m = eval(3);
        let xs = m.surface.x_star;
        let mut pts = Vec::new();
        for i in 0..50 {
            let r = xs * (0.3 + 0.1 * i as f64);
            let th = 0.37 + 2.0 * PI * i as f64 / 17.0;
            pts.push(C64::from_polar(r, th));
        }
        // right next to the star and its tips
        pts.push(C64::new(0.5 * xs, 1e-3 * xs));
        pts.push(C64::new(1.001 * xs, 0.0));
        let e = m.cross_check(&pts).unwrap();
        assert!(e < 1e-9, "{e:e}");
    }

    #[test]
    fn normalized_at_infinity_and_real() {
        let m = eval(3);
        let big = C64::new(1e4, 3e3);
        assert!((m.m11(big).unwrap() - 1.0).norm() < 1e-12);
        for z in [C64::new(0.3, 0.2), C64::new(-0.1, 0.4), C64::new(0.5, 0.0)] {
            let a = m.m11(z).unwrap();
            let b = m.m11(z.conj()).unwrap();
            assert!((a - b.conj()).norm() < 1e-13);
        }
        // real and above 1 on the real axis past the tip
        let v = m.m11(C64::new(0.5, 0.0)).unwrap();
        assert!(v.im.abs() < 1e-14 && v.re > 1.0);
    }

    #[test]
    fn quarter_power_blowup_at_tips() {
        // |m11| |z - x*|^{1/4} settles; the next term is O(|z - x*|^{1/2}),
        // so successive changes shrink by about sqrt(10) per decade
        let m = eval(3);
        let xs = m.surface.x_star;
        for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-0.6, 0.8)] {
            let vals: Vec<f64> = (1..=5)
                .map(|k| {
                    let eps = 10f64.powi(-k) * xs;
                    m.m11(xs + dir * eps).unwrap().norm() * eps.powf(0.25)
                })
                .collect();
            assert!(vals.iter().all(|v| *v < 1.0 && *v > 0.1), "{vals:?}");
            for w in vals.windows(3) {
                assert!((w[2] - w[1]).abs() < 0.5 * (w[1] - w[0]).abs(), "{vals:?}");
            }
        }
    }

    #[test]
    fn modulus_continuous_across_star() {
        let m = eval(3);
        let xs = m.surface.x_star;
        for i in 1..20 {
            let x = xs * i as f64 / 20.0;
            let p = m.m11_boundary(x, Side::Plus).unwrap();
            let q = m.m11_boundary(x, Side::Minus).unwrap();
            assert!((p.norm() - q.norm()).abs() < 1e-10 * p.norm(), "x = {x}");
            let near = m.m11(C64::new(x, 1e-5 * xs)).unwrap();
            assert!(
                (near - p).norm() < 1e-3 * p.norm(),
                "x = {x}: {near} vs {p}"
            );
        }
    }

    #[test]
    fn no_zeros_off_the_star() {
        let m = eval(4);
        let xs = m.surface.x_star;
        for i in 0..40 {
            for j in 0..40 {
                let z = C64::new(
                    xs * (-2.0 + 0.1 * i as f64 + 0.013),
                    xs * (-2.0 + 0.1 * j as f64 + 0.007),
                );
                match m.m11(z) {
                    Ok(v) => assert!(v.norm() > 0.1, "{z}: {v}"),
                    Err(e) => panic!("{z}: {e}"),
                }
            }
        }
        assert!(matches!(
            m.m11(C64::new(0.5 * xs, 0.0)),
            Err(Error::Proximity { .. })
        ));
    }
}
