//! The algebraic equation `xi^{d+1} + z^{d+1} - sum_k c_k z^k xi^k + beta = 0`
//! satisfied by the branches `xi_k`.
//!
//! Coefficients are found by substituting `z = psi(w)`, `xi = psi(1/w)` and
//! asking every coefficient of the resulting Laurent polynomial in `w` to vanish.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Surface;

/// Relative residual accepted for the overdetermined coefficient system.
pub const FIT_TOL: f64 = 1e-10;
/// Samples on the circle used to extract Laurent coefficients at infinity.
pub const FOURIER_SAMPLES: usize = 1024;
/// Radius of that circle in units of `x*`. The functions are analytic outside
/// the star, and rounding in `b_{j,k}` grows like this factor to the power
/// `j(d+1)`, so the circle hugs the star.
pub const FOURIER_RADIUS: f64 = 1.25;

/// Laurent polynomial `sum_i c[i] w^{lo + i}`.
#[derive(Debug, Clone)]
struct Laurent {
    lo: i32,
    c: Vec<f64>,
}

impl Laurent {
    fn one() -> Self {
        Self {
            lo: 0,
            c: vec![1.0],
        }
    }

    fn mul(&self, o: &Laurent) -> Laurent {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Laurent {
            lo: self.lo + o.lo,
            c,
        }
    }

    fn pow(&self, k: usize) -> Laurent {
        (0..k).fold(Laurent::one(), |acc, _| acc.mul(self))
    }

    fn coeff(&self, e: i32) -> f64 {
        let i = e - self.lo;
        if i < 0 || i as usize >= self.c.len() {
            0.0
        } else {
            self.c[i as usize]
        }
    }

    fn hi(&self) -> i32 {
        self.lo + self.c.len() as i32 - 1
    }
}

/// `z(w) = r w + a w^{-d}` and `xi(w) = r w^{-1} + a w^d`.
fn parametrization(d: usize, r: f64, a: f64) -> (Laurent, Laurent) {
    let di = d as i32;
    let mut z = vec![0.0; d + 2];
    z[0] = a;
    z[d + 1] = r;
    let mut xi = vec![0.0; d + 2];
    xi[0] = r;
    xi[d + 1] = a;
    (Laurent { lo: -di, c: z }, Laurent { lo: -1, c: xi })
}

/// Least squares with row and column equilibration; returns the solution and the
/// largest equation residual relative to the largest right-hand side entry.
fn solve_scaled(cols: &[Laurent], rhs: &Laurent) -> Result<(Vec<f64>, f64)> {
    let lo = cols.iter().map(|c| c.lo).chain([rhs.lo]).min().unwrap_or(0);
    let hi = cols
        .iter()
        .map(|c| c.hi())
        .chain([rhs.hi()])
        .max()
        .unwrap_or(0);
    let m = (hi - lo + 1) as usize;
    let n = cols.len();
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| {
            c.c.iter()
                .fold(0.0f64, |a, b| a.max(b.abs()))
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    let mut a = DMatrix::from_fn(m, n, |i, j| cols[j].coeff(lo + i as i32) / scale[j]);
    let mut b = DVector::from_fn(m, |i, _| rhs.coeff(lo + i as i32));
    // the system is consistent, so equilibrating rows changes only the conditioning
    for i in 0..m {
        let s = a.row(i).amax().max(b[i].abs());
        if s > 0.0 {
            a.row_mut(i).scale_mut(1.0 / s);
            b[i] /= s;
        }
    }
    let svd = a.clone().svd(true, true);
    let y = svd
        .solve(&b, 1e-14 * svd.singular_values.max())
        .map_err(|e| Error::RootFinding(format!("least squares failed: {e}")))?;
    let res = (&a * &y - &b).amax() / b.amax().max(f64::MIN_POSITIVE);
    Ok(((0..n).map(|j| y[j] / scale[j]).collect(), res))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub d: usize,
    pub r: f64,
    pub t_top: f64,
    /// `c_1 ..= c_d`.
    pub c: Vec<f64>,
    pub beta: f64,
    /// Relative residual of the coefficient system.
    pub fit_residual: f64,
}

/// `((r^2 - a^2)/r)^{d+1} r/a` with `a = t_top r^d`.
pub fn beta_closed_form(d: usize, r: f64, t_top: f64) -> Result<f64> {
    let a = t_top * r.powi(d as i32);
    if !(r > 0.0 && a > 0.0 && a < r) {
        return Err(Error::Domain(format!(
            "need 0 < a < r, got a = {a}, r = {r}"
        )));
    }
    Ok(((r * r - a * a) / r).powi(d as i32 + 1) * r / a)
}

impl SpectralCurve {
    pub fn compute(d: usize, r: f64, t_top: f64) -> Result<Self> {
        if d < 2 || !(r > 0.0) || !(t_top > 0.0) {
            return Err(Error::Domain(format!(
                "bad curve inputs d = {d}, r = {r}, t_top = {t_top}"
            )));
        }
        let a = t_top * r.powi(d as i32);
        let (z, xi) = parametrization(d, r, a);
        let mut cols: Vec<Laurent> = (1..=d)
            .map(|k| {
                let mut p = z.pow(k).mul(&xi.pow(k));
                p.c.iter_mut().for_each(|x| *x = -*x);
                p
            })
            .collect();
        cols.push(Laurent::one());
        let mut rhs = add(&z.pow(d + 1), &xi.pow(d + 1));
        rhs.c.iter_mut().for_each(|v| *v = -*v);
        let (sol, res) = solve_scaled(&cols, &rhs)?;
        if res > FIT_TOL {
            return Err(Error::Inconsistent(res));
        }
        Ok(Self {
            d,
            r,
            t_top,
            c: sol[..d].to_vec(),
            beta: sol[d],
            fit_residual: res,
        })
    }

    pub fn from_surface(s: &Surface) -> Result<Self> {
        Self::compute(s.d, s.r, s.t_top)
    }

    /// `P(z, xi)`.
    pub fn eval(&self, z: C64, xi: C64) -> C64 {
        let d1 = self.d as i32 + 1;
        let mut p = xi.powi(d1) + z.powi(d1) + self.beta;
        let zx = z * xi;
        let mut pw = C64::new(1.0, 0.0);
        for c in &self.c {
            pw *= zx;
            p -= c * pw;
        }
        p
    }

    /// `|P(z, xi)| / (1 + |z|)^{d+1}`.
    pub fn residual_at(&self, z: C64, xi: C64) -> f64 {
        self.eval(z, xi).norm() / (1.0 + z.norm()).powi(self.d as i32 + 1)
    }

    /// Normalized residual at `(z, xi_k(z))`.
    pub fn curve_residual(&self, s: &Surface, z: C64, k: usize) -> Result<f64> {
        Ok(self.residual_at(z, s.xi(z, k)?))
    }

    /// Every coefficient is positive.
    pub fn all_positive(&self) -> bool {
        self.beta > 0.0 && self.c.iter().all(|&c| c > 0.0)
    }
}

fn add(p: &Laurent, q: &Laurent) -> Laurent {
    let lo = p.lo.min(q.lo);
    let hi = p.hi().max(q.hi());
    Laurent {
        lo,
        c: (lo..=hi).map(|e| p.coeff(e) + q.coeff(e)).collect(),
    }
}

/// Unstructured fit of `P(z, xi) = sum_{j,k <= d+1} a_{jk} z^j xi^k` with
/// `a_{0,d+1} = 1`; returns the `(d+2) x (d+2)` matrix and the fit residual.
/// Used to confirm the symmetry and the sparsity pattern of the curve.
pub fn general_coefficients(d: usize, r: f64, t_top: f64) -> Result<(Vec<Vec<f64>>, f64)> {
    let a = t_top * r.powi(d as i32);
    let (z, xi) = parametrization(d, r, a);
    let zp: Vec<Laurent> = (0..=d + 1).map(|j| z.pow(j)).collect();
    let xp: Vec<Laurent> = (0..=d + 1).map(|k| xi.pow(k)).collect();
    let mut idx = Vec::new();
    let mut cols = Vec::new();
    for j in 0..=d + 1 {
        for k in 0..=d + 1 {
            if (j, k) != (0, d + 1) {
                idx.push((j, k));
                cols.push(zp[j].mul(&xp[k]));
            }
        }
    }
    let mut rhs = xp[d + 1].clone();
    rhs.c.iter_mut().for_each(|v| *v = -*v);
    let (sol, res) = solve_scaled(&cols, &rhs)?;
    let mut m = vec![vec![0.0; d + 2]; d + 2];
    m[0][d + 1] = 1.0;
    for ((j, k), v) in idx.into_iter().zip(sol) {
        m[j][k] = v;
    }
    Ok((m, res))
}

/// `b_{j,k}` for `j <= jmax`, `k = 1..=d-1`, from the expansion
/// `(-1)^k e_k(xi_2, ..., xi_{d+1}) = z^{-k} sum_j b_{j,k} z^{-j(d+1)}`,
/// by sampling a circle of radius `1.25 x*` and inverting the Fourier series.
/// Row `k - 1` of the result holds `b_{0..=jmax, k}`.
pub fn laurent_b(s: &Surface, jmax: usize) -> Vec<Vec<f64>> {
    let d = s.d;
    let rad = FOURIER_RADIUS * s.x_star;
    let n = FOURIER_SAMPLES;
    let mut acc = vec![vec![C64::new(0.0, 0.0); jmax + 1]; d.saturating_sub(1)];
    for i in 0..n {
        let th = 2.0 * PI * i as f64 / n as f64;
        let z = C64::from_polar(rad, th);
        let xi = s.branches(z).xi;
        // e_k of xi_2..xi_{d+1} by the usual recurrence
        let mut e = vec![C64::new(0.0, 0.0); d + 1];
        e[0] = C64::new(1.0, 0.0);
        for x in &xi[1..] {
            for k in (1..=d).rev() {
                let prev = e[k - 1];
                e[k] += prev * x;
            }
        }
        for k in 1..d {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let g = sign * e[k] * z.powi(k as i32);
            for (j, slot) in acc[k - 1].iter_mut().enumerate() {
                let m = (j * (d + 1)) as f64;
                *slot += g * C64::from_polar(1.0, m * th);
            }
        }
    }
    acc.into_iter()
        .map(|row| {
            row.into_iter()
                .enumerate()
                .map(|(j, v)| (v / n as f64).re * rad.powi((j * (d + 1)) as i32))
                .collect()
        })
        .collect()
}

/// Worst relative violation of `c_{d+1-k} = b_{0,k-1} c_d` (`k = 2..d-1`) and
/// `c_1 = 1/c_d + b_{0,d-1} c_d`.
pub fn recursion_residual(curve: &SpectralCurve, b: &[Vec<f64>]) -> f64 {
    let d = curve.d;
    let c = |k: usize| curve.c[k - 1];
    let mut worst: f64 = 0.0;
    for k in 2..d {
        let want = b[k - 2][0] * c(d);
        worst = worst.max((c(d + 1 - k) - want).abs() / want.abs());
    }
    let want = 1.0 / c(d) + b[d - 2][0] * c(d);
    worst.max((c(1) - want).abs() / want.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{critical_time, ModelParams};
    use proptest::prelude::*;

    fn surf(d: usize, t0: f64, t: f64) -> Surface {
        Surface::new(&ModelParams::new(d, t0, t).unwrap()).unwrap()
    }

    #[test]
    fn reference_coefficients_d3() {
        let s = surf(3, 0.05, 2.0);
        let c = SpectralCurve::from_surface(&s).unwrap();
        assert!((c.c[2] - 2.0).abs() < 1e-10);
        assert!((c.c[1] - 0.1).abs() < 1e-10);
        // closed form evaluated at 30 digits
        assert!(
            (c.beta - 0.024_741_888_205_306_4).abs() < 1e-12,
            "{}",
            c.beta
        );
        let bc = beta_closed_form(3, s.r, 2.0).unwrap();
        assert!((c.beta - bc).abs() < 1e-10 * bc);
        assert!(c.all_positive());
        assert!(c.fit_residual < FIT_TOL);
    }

    #[test]
    fn quadratic_case() {
        for t3 in [0.5, 1.0, 1.7] {
            let t0 = critical_time(2, t3).unwrap() * 0.4;
            let s = surf(2, t0, t3);
            let c = SpectralCurve::from_surface(&s).unwrap();
            assert!((c.c[0] - (t0 * t3 + 1.0 / t3)).abs() < 1e-10 * c.c[0]);
            assert!((c.c[1] - t3).abs() < 1e-10 * t3);
        }
        assert!(beta_closed_form(2, 1.0, 2.0).is_err());
    }

    #[test]
    fn residual_on_surface_and_boundary() {
        for d in 2..=5 {
            let s = surf(d, critical_time(d, 1.0).unwrap() / 2.0, 1.0);
            let c = SpectralCurve::from_surface(&s).unwrap();
            for i in 0..10 {
                let z = C64::from_polar(3.0 * s.x_star * (i as f64 + 0.5) / 10.0, 0.37 + i as f64);
                for k in 1..=d + 1 {
                    assert!(c.curve_residual(&s, z, k).unwrap() < 1e-8);
                }
            }
            for i in 0..16 {
                let w = C64::from_polar(1.0, 0.4 * i as f64);
                let z = s.psi(w).unwrap();
                assert!(c.residual_at(z, z.conj()) < 1e-8);
            }
        }
    }

    #[test]
    fn general_fit_is_symmetric_and_sparse() {
        for d in 2..=4 {
            let s = surf(d, critical_time(d, 1.0).unwrap() / 3.0, 1.0);
            let (m, res) = general_coefficients(d, s.r, 1.0).unwrap();
            assert!(res < 1e-10, "d={d} {res}");
            let c = SpectralCurve::from_surface(&s).unwrap();
            for j in 0..=d + 1 {
                for k in 0..=d + 1 {
                    assert!((m[j][k] - m[k][j]).abs() < 1e-8, "d={d} {j} {k}");
                    let want = if j == k && j == 0 {
                        c.beta
                    } else if j == k && j <= d {
                        -c.c[j - 1]
                    } else if (j, k) == (0, d + 1) || (j, k) == (d + 1, 0) {
                        1.0
                    } else {
                        0.0
                    };
                    assert!(
                        (m[j][k] - want).abs() < 1e-8,
                        "d={d} a[{j}][{k}] = {}",
                        m[j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn laurent_coefficients_and_recursions() {
        for d in 2..=5 {
            let s = surf(d, critical_time(d, 1.3).unwrap() / 2.0, 1.3);
            let c = SpectralCurve::from_surface(&s).unwrap();
            let b = laurent_b(&s, 3);
            for row in &b {
                for v in row {
                    assert!(*v > 0.0, "d={d} {b:?}");
                }
            }
            // k = 1 leading coefficient is the mass of mu_1 times t0
            assert!((b[0][0] - s.t0).abs() < 1e-10);
            assert!(recursion_residual(&c, &b) < 1e-8, "d={d}");
        }
    }

    proptest! {
        #[test]
        fn rotation_symmetry(re in -0.5f64..0.5, im in -0.5f64..0.5, xr in -0.5f64..0.5, xim in -0.5f64..0.5) {
            let s = surf(3, 0.05, 2.0);
            let c = SpectralCurve::from_surface(&s).unwrap();
            let (z, xi) = (C64::new(re, im), C64::new(xr, xim));
            let om = s.omega();
            let a = c.eval(z, xi);
            let b = c.eval(om * z, xi / om);
            prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
        }
    }
}
