//! The genus-zero surface `z = psi(w) = r w + a w^{-d}`: ordered branches,
//! the functions `xi_k`, sectors and the constants `kappa`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SubcriticalData};

/// Relative modulus gap below which two branches count as tied.
pub const TIE_TOL: f64 = 1e-10;
/// Angular distance (radians) from a sector boundary that is treated as "on" it.
pub const SECTOR_TOL: f64 = 1e-12;
/// Angular offset used to pick up one-sided labels on a cut.
pub const SIDE_DELTA: f64 = 1e-7;
/// Beyond this multiple of `x*` the roots are seeded from their large-z expansions.
const COMPANION_RADIUS: f64 = 30.0;
/// Beyond this multiple of `x*` cut labels come from the `kappa` asymptotics.
const KAPPA_LABEL_RADIUS: f64 = 50.0;

/// The `d+1` roots of `r w^{d+1} - z w^d + a = 0` at one point, by non-increasing modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    pub z: C64,
    pub w: Vec<C64>,
    pub xi: Vec<C64>,
    /// Two neighbouring moduli agree to `TIE_TOL`: the point sits on a cut and
    /// the labels of the tied pair are a convention.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Half-sector `S_ell^+` (`arg z` in `(2 ell, 2 ell + 1) pi/(d+1)`) or
/// `S_ell^-` (`arg z` in `(2 ell - 1, 2 ell) pi/(d+1)`).
///
/// `ell` is not reduced: it is read off the principal argument, so it runs over
/// a window around zero. That keeps `kappa z^{1/d}` continuous inside each sector
/// even though `z^{1/d}` uses the principal branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub ell: i32,
    pub sign: Sign,
}

/// Side of an outward-oriented ray: `Plus` is the left side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaTable {
    pub d: usize,
    pub t_top: f64,
}

impl KappaTable {
    pub fn new(d: usize, t_top: f64) -> Self {
        Self { d, t_top }
    }

    /// `kappa_{k,ell}^{+-} = omega_d^{-ell +- (-1)^k floor((k-1)/2)} t_top^{-1/d}`, `k >= 2`.
    pub fn get(&self, k: usize, s: Sector) -> C64 {
        let d = self.d as f64;
        let shift = ((k as i64 - 1) / 2) * if k.is_multiple_of(2) { 1 } else { -1 };
        let e = match s.sign {
            Sign::Plus => -(s.ell as i64) + shift,
            Sign::Minus => -(s.ell as i64) - shift,
        };
        C64::from_polar(self.t_top.powf(-1.0 / d), 2.0 * PI * e as f64 / d)
    }
}

/// Principal argument in `(-pi, pi]`.
pub fn arg(z: C64) -> f64 {
    let a = z.arg();
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Sort by non-increasing modulus; near-ties go by increasing argument.
pub fn sort_branches(w: &mut [C64]) {
    w.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut i = 0;
    while i < w.len() {
        let mut j = i + 1;
        while j < w.len() && (w[j - 1].norm() - w[j].norm()).abs() <= TIE_TOL * w[i].norm() {
            j += 1;
        }
        w[i..j].sort_by(|a, b| arg(*a).total_cmp(&arg(*b)));
        i = j;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub d: usize,
    pub t0: f64,
    pub t_top: f64,
    pub r: f64,
    pub a: f64,
    pub rho: f64,
    pub x_star: f64,
}

impl Surface {
    pub fn new(p: &ModelParams) -> Result<Self> {
        Self::from_parts(p.d, p.t0, p.t_top)
    }

    pub fn from_parts(d: usize, t0: f64, t_top: f64) -> Result<Self> {
        let SubcriticalData {
            r, x_star, rho, a, ..
        } = SubcriticalData::new(d, t0, t_top)?;
        if r == 0.0 {
            return Err(Error::Domain("t0 = 0 gives a degenerate surface".into()));
        }
        Ok(Self {
            d,
            t0,
            t_top,
            r,
            a,
            rho,
            x_star,
        })
    }

    /// `omega = e^{2 pi i/(d+1)}`.
    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * PI / (self.d as f64 + 1.0))
    }

    pub fn psi(&self, w: C64) -> Result<C64> {
        if w == C64::new(0.0, 0.0) {
            return Err(Error::Pole);
        }
        Ok(self.r * w + self.a * w.powi(-(self.d as i32)))
    }

    pub fn psi_prime(&self, w: C64) -> C64 {
        self.r - self.d as f64 * self.a * w.powi(-(self.d as i32) - 1)
    }

    /// `xi = psi(1/w) = r/w + a w^d`.
    pub fn xi_of_w(&self, w: C64) -> C64 {
        self.r / w + self.a * w.powi(self.d as i32)
    }

    /// Cleared polynomial and its derivative at `w`.
    fn poly(&self, z: C64, w: C64) -> (C64, C64) {
        let d = self.d as i32;
        let wd1 = w.powi(d - 1);
        let wd = wd1 * w;
        (
            wd * (self.r * w - z) + self.a,
            wd1 * ((d as f64 + 1.0) * self.r * w - d as f64 * z),
        )
    }

    /// Distance from `z` to the star `Sigma_1*` (segments `[0, omega^l x*]`).
    pub fn star_distance(&self, z: C64) -> f64 {
        let w = self.omega();
        (0..=self.d)
            .map(|l| {
                let zeta = z * w.powu(l as u32).conj();
                (zeta - zeta.re.clamp(0.0, self.x_star)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Unordered roots, polished.
    pub fn roots(&self, z: C64) -> Vec<C64> {
        let seeds = if z.norm() <= COMPANION_RADIUS * self.x_star {
            self.companion_roots(z)
        } else {
            None
        }
        .unwrap_or_else(|| self.asymptotic_seeds(z));
        self.aberth(z, seeds)
    }

    fn companion_roots(&self, z: C64) -> Option<Vec<C64>> {
        let n = self.d + 1;
        // monic: w^{d+1} - (z/r) w^d + a/r
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        m[(0, n - 1)] = C64::new(-self.a / self.r, 0.0);
        m[(n - 1, n - 1)] = z / self.r;
        let ev = m.schur().eigenvalues()?;
        let v: Vec<C64> = ev.iter().copied().collect();
        if v.iter().all(|x| x.is_finite()) && v.len() == n {
            Some(v)
        } else {
            None
        }
    }

    fn asymptotic_seeds(&self, z: C64) -> Vec<C64> {
        let d = self.d as i32;
        let df = self.d as f64;
        let mut out = Vec::with_capacity(self.d + 1);
        out.push(z / self.r - self.t_top * self.r.powi(2 * d - 1) / z.powi(d));
        let base = (self.a / z).powf(1.0 / df);
        for m in 0..self.d {
            let w0 = base * C64::from_polar(1.0, 2.0 * PI * m as f64 / df);
            let q = self.r * w0 / z;
            out.push(w0 * (1.0 + q / df));
        }
        out
    }

    /// Aberth iteration, Gauss-Seidel ordering.
    fn aberth(&self, z: C64, mut w: Vec<C64>) -> Vec<C64> {
        let n = w.len();
        for _ in 0..100 {
            let mut done = true;
            for i in 0..n {
                let (p, dp) = self.poly(z, w[i]);
                if p == C64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp;
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let diff = w[i] - w[j];
                        if diff.norm() > 0.0 {
                            s += 1.0 / diff;
                        }
                    }
                }
                let step = ratio / (1.0 - ratio * s);
                if step.is_finite() {
                    w[i] -= step;
                    if step.norm() > 4.0 * f64::EPSILON * w[i].norm() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        w
    }

    pub fn branches(&self, z: C64) -> BranchSet {
        let mut w = self.roots(z);
        sort_branches(&mut w);
        let ambiguous = w
            .windows(2)
            .any(|p| (p[0].norm() - p[1].norm()).abs() <= TIE_TOL * p[0].norm());
        let xi = w.iter().map(|&x| self.xi_of_w(x)).collect();
        BranchSet {
            z,
            w,
            xi,
            ambiguous,
        }
    }

    /// `xi_k(z)`, `k` counted from 1.
    pub fn xi(&self, z: C64, k: usize) -> Result<C64> {
        self.check_k(k, 1)?;
        Ok(self.branches(z).xi[k - 1])
    }

    fn check_k(&self, k: usize, lo: usize) -> Result<()> {
        if k < lo || k > self.d + 1 {
            return Err(Error::Domain(format!(
                "branch index {k} outside {lo}..={}",
                self.d + 1
            )));
        }
        Ok(())
    }

    pub fn sector(&self, z: C64) -> Result<Sector> {
        let h = PI / (self.d as f64 + 1.0);
        let u = arg(z) / h;
        if z.norm() == 0.0 || (u - u.round()).abs() * h < SECTOR_TOL {
            return Err(Error::SectorResolution {
                re: z.re,
                im: z.im,
                tol: SECTOR_TOL,
            });
        }
        let m = u.floor() as i32;
        Ok(if m.rem_euclid(2) == 0 {
            Sector {
                ell: m.div_euclid(2),
                sign: Sign::Plus,
            }
        } else {
            Sector {
                ell: (m + 1).div_euclid(2),
                sign: Sign::Minus,
            }
        })
    }

    pub fn kappa_table(&self) -> KappaTable {
        KappaTable::new(self.d, self.t_top)
    }

    /// `eta_k(z) = xi_k(z) - kappa z^{1/d}`, `k >= 2`.
    pub fn eta(&self, z: C64, k: usize) -> Result<C64> {
        self.check_k(k, 2)?;
        let s = self.sector(z)?;
        let kap = self.kappa_table().get(k, s);
        let w = self.branches(z).w[k - 1];
        Ok(self.eta_from_root(z, w, kap))
    }

    /// `eta` from a known root `w` of the small family. Deflated so that the
    /// `O(1/z)` result does not come out of cancelling two `O(z^{1/d})` terms.
    pub fn eta_from_root(&self, z: C64, w: C64, kappa: C64) -> C64 {
        let d = self.d as i32;
        let zr = z.powf(1.0 / self.d as f64);
        let lead = kappa * zr;
        let w0 = self.r / lead;
        let q = self.r * w0 / z;
        let mut eps = w / w0 - 1.0;
        if eps.norm() >= 0.3 {
            return self.xi_of_w(w) - lead;
        }
        let binom = binomials(self.d);
        for _ in 0..8 {
            // g = (1+eps)^d - 1 - q (1+eps)^{d+1}, expanded to avoid the cancellation in (1+eps)^d - 1
            let mut g = C64::new(0.0, 0.0);
            let mut dg = C64::new(0.0, 0.0);
            let mut p = C64::new(1.0, 0.0);
            for (j, b) in binom.iter().enumerate().skip(1) {
                dg += *b * j as f64 * p;
                p *= eps;
                g += *b * p;
            }
            let one = 1.0 + eps;
            g -= q * one.powi(d + 1);
            dg -= q * (d as f64 + 1.0) * one.powi(d);
            let step = g / dg;
            if !step.is_finite() {
                break;
            }
            eps -= step;
            if step.norm() <= 1e-17 * eps.norm().max(1e-300) {
                break;
            }
        }
        let one = 1.0 + eps;
        -lead * eps / one + self.a * self.a / z * one.powi(d)
    }

    /// Roots at a point of a cut, labelled by the side: the root that is the
    /// continuation of branch `k` from the `side` of the outward ray through `z`.
    ///
    /// Close in, the labels are read off the modulus order at `z e^{+-i delta}`,
    /// with `delta` growing like `1/|z|` towards the origin.
    /// Far out the modulus gap across the cut shrinks like `|z|^{-1-1/d}` and
    /// drowns in rounding, so there the small roots are matched to their
    /// leading terms `r / (kappa z^{1/d})` instead.
    pub fn boundary_roots(&self, z: C64, side: Side) -> Vec<C64> {
        let on = self.roots(z);
        if z.norm() > KAPPA_LABEL_RADIUS * self.x_star {
            if let Some(v) = self.kappa_labels(z, side, &on) {
                return v;
            }
        }
        // near the origin the modulus gap opened by the rotation is only
        // about delta |z|, so widen the angle; a quarter of a half-sector
        // still stays clear of the neighbouring rays
        let delta =
            (SIDE_DELTA * (self.x_star / z.norm()).max(1.0)).min(0.25 * PI / (self.d as f64 + 1.0));
        let rot = C64::from_polar(
            1.0,
            match side {
                Side::Plus => delta,
                Side::Minus => -delta,
            },
        );
        let mut near = self.roots(z * rot);
        near.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        match_labels(&on, &near)
    }

    fn kappa_labels(&self, z: C64, side: Side, on: &[C64]) -> Option<Vec<C64>> {
        let sector = self.side_sector(z, side).ok()?;
        let kt = self.kappa_table();
        let zr = z.powf(1.0 / self.d as f64);
        let mut targets = Vec::with_capacity(self.d + 1);
        let top = on
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        targets.push(top);
        for k in 2..=self.d + 1 {
            targets.push(self.r / (kt.get(k, sector) * zr));
        }
        let out = match_labels(on, &targets);
        let ok = out
            .iter()
            .zip(&targets)
            .skip(1)
            .all(|(w, t)| (w - t).norm() < 0.1 * t.norm());
        ok.then_some(out)
    }

    /// Sector containing the `side` of the ray through `z`.
    pub fn side_sector(&self, z: C64, side: Side) -> Result<Sector> {
        let delta = match side {
            Side::Plus => SIDE_DELTA,
            Side::Minus => -SIDE_DELTA,
        };
        self.sector(z * C64::from_polar(1.0, delta))
    }
}

/// Greedy nearest matching of `targets` (in label order) to the unordered roots `on`.
fn match_labels(on: &[C64], targets: &[C64]) -> Vec<C64> {
    let mut used = vec![false; on.len()];
    targets
        .iter()
        .map(|t| {
            let (idx, _) = on
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, x)| (i, (x - t).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("as many roots as labels");
            used[idx] = true;
            on[idx]
        })
        .collect()
}

fn binomials(d: usize) -> Vec<f64> {
    let mut b = vec![1.0; d + 1];
    for j in 1..=d {
        b[j] = b[j - 1] * (d + 1 - j) as f64 / j as f64;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> Surface {
        Surface::from_parts(3, 0.05, 2.0).unwrap()
    }

    fn residual(s: &Surface, z: C64, w: C64) -> f64 {
        s.poly(z, w).0.norm() / (1.0 + z.norm().powi(s.d as i32 + 1))
    }

    #[test]
    fn psi_at_branch_point() {
        let s = s3();
        let x = s.psi(C64::new(s.rho, 0.0)).unwrap();
        assert!((x.re - s.x_star).abs() < 1e-14 && x.im.abs() < 1e-16);
        assert!(s.psi_prime(C64::new(s.rho, 0.0)).norm() < 1e-12);
        assert!(matches!(s.psi(C64::new(0.0, 0.0)), Err(Error::Pole)));
        let one = s.psi(C64::new(1.0, 0.0)).unwrap();
        assert!((one.re - (s.r + s.a)).abs() < 1e-15);
    }

    #[test]
    fn branches_residual_and_vieta() {
        let s = s3();
        for &z in &[
            C64::new(0.1, 0.05),
            C64::new(-0.3, 0.2),
            C64::new(5.0, -3.0),
            C64::new(1e4, 2e3),
        ] {
            let b = s.branches(z);
            for &w in &b.w {
                assert!(residual(&s, z, w) < 1e-12, "{z} {w}");
            }
            let prod: C64 = b.w.iter().product();
            let want = s.t_top * s.r.powi(2); // (-1)^{d+1} t r^{d-1}, d = 3
            assert!((prod - want).norm() < 1e-10 * want, "{prod}");
            for p in b.w.windows(2) {
                assert!(p[0].norm() >= p[1].norm() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn double_root_at_x_star() {
        let s = s3();
        let b = s.branches(C64::new(s.x_star, 0.0));
        assert!((b.w[0] - s.rho).norm() < 1e-7);
        assert!((b.w[1] - s.rho).norm() < 1e-7);
    }

    #[test]
    fn large_z_top_branch() {
        let s = s3();
        let z = C64::new(300.0, 120.0);
        let w1 = s.branches(z).w[0];
        let approx = z / s.r - s.t_top * s.r.powi(5) / z.powi(3);
        assert!((w1 - approx).norm() < 1e-9 * w1.norm());
    }

    #[test]
    fn sectors_and_kappa() {
        let s = s3();
        let h = PI / 4.0;
        let at = |t: f64| s.sector(C64::from_polar(1.0, t)).unwrap();
        assert_eq!(
            at(0.1),
            Sector {
                ell: 0,
                sign: Sign::Plus
            }
        );
        assert_eq!(
            at(-0.1),
            Sector {
                ell: 0,
                sign: Sign::Minus
            }
        );
        assert_eq!(
            at(h + 0.1),
            Sector {
                ell: 1,
                sign: Sign::Minus
            }
        );
        assert_eq!(
            at(PI - 0.1),
            Sector {
                ell: 2,
                sign: Sign::Minus
            }
        );
        assert_eq!(
            at(-PI + 0.1),
            Sector {
                ell: -2,
                sign: Sign::Plus
            }
        );
        assert!(s.sector(C64::from_polar(1.0, h)).is_err());
        let kt = s.kappa_table();
        let plus = kt.get(
            2,
            Sector {
                ell: 0,
                sign: Sign::Plus,
            },
        );
        let minus = kt.get(
            2,
            Sector {
                ell: 0,
                sign: Sign::Minus,
            },
        );
        assert!((plus - minus).norm() < 1e-15);
        assert!((plus - 2f64.powf(-1.0 / 3.0)).norm() < 1e-15);
        for k in 2..=4 {
            for ell in -2..=2 {
                for sign in [Sign::Plus, Sign::Minus] {
                    let v = kt.get(k, Sector { ell, sign });
                    assert!((v.norm() - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn eta_decay_in_every_half_sector() {
        for d in 2..=5 {
            let s = Surface::from_parts(d, 0.3 * crate::model::critical_time(d, 1.3).unwrap(), 1.3)
                .unwrap();
            let h = PI / (d as f64 + 1.0);
            for m in -(d as i32 + 1)..(d as i32 + 1) {
                let th = (m as f64 + 0.37) * h;
                for k in 2..=d + 1 {
                    let z1 = C64::from_polar(1e3, th);
                    let z2 = C64::from_polar(1e4, th);
                    let e1 = (s.eta(z1, k).unwrap() * z1 + s.t0 / d as f64).norm();
                    let e2 = (s.eta(z2, k).unwrap() * z2 + s.t0 / d as f64).norm();
                    assert!(e1 < 1e-2 * s.t0, "d={d} m={m} k={k} {e1}");
                    assert!(e2 < e1, "d={d} m={m} k={k} {e1} {e2}");
                }
            }
        }
    }

    #[test]
    fn on_cut_moduli_tie() {
        let s = s3();
        for i in 1..20 {
            let x = s.x_star * i as f64 / 20.0;
            let b = s.branches(C64::new(x, 0.0));
            assert!((b.w[0].norm() - b.w[1].norm()).abs() < 1e-10 * b.w[0].norm());
            assert!(b.ambiguous);
        }
    }

    #[test]
    fn boundary_values_conjugate_on_star() {
        let s = s3();
        for i in 1..10 {
            let z = C64::new(s.x_star * i as f64 / 10.0, 0.0);
            let p = s.boundary_roots(z, Side::Plus);
            let m = s.boundary_roots(z, Side::Minus);
            assert!((p[0] - m[0].conj()).norm() < 1e-12);
            assert!((p[0] - m[1]).norm() < 1e-12);
        }
    }
}
