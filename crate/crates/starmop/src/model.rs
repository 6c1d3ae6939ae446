//! Problem parameters and the scalar critical quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative window around the critical time inside which `solve_r` snaps to `r_crit`.
/// The defining equation has a double root there, so bisection alone only gets
/// half the digits.
const CRIT_SNAP: f64 = 1e-13;

/// Default excess of the star endpoint `x_hat` over `x*`.
pub const DEFAULT_X_HAT_FACTOR: f64 = 1.02;
/// Largest `x_hat / x*` accepted by [`ModelParams::with_x_hat`].
pub const MAX_X_HAT_FACTOR: f64 = 1.1;

/// Inputs of the model: degree `d`, time `t0`, top coefficient `t_top` of the
/// potential and the truncation point `x_hat` of the star.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub t0: f64,
    pub t_top: f64,
    pub x_hat: f64,
}

/// Derived scalars. `rho` is the branch point `w*` of the conformal map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalData {
    pub r: f64,
    pub x_star: f64,
    pub rho: f64,
    pub a: f64,
    pub t0_crit: f64,
}

fn check_d_t(d: usize, t_top: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("d must be at least 2, got {d}")));
    }
    if !(t_top > 0.0) || !t_top.is_finite() {
        return Err(Error::Domain(format!(
            "t_top must be positive, got {t_top}"
        )));
    }
    Ok(())
}

/// `(d^{-2/(d-1)} - d^{-(d+1)/(d-1)}) t_top^{-2/(d-1)}`.
pub fn critical_time(d: usize, t_top: f64) -> Result<f64> {
    check_d_t(d, t_top)?;
    let df = d as f64;
    let e = 1.0 / (df - 1.0);
    Ok((df.powf(-2.0 * e) - df.powf(-(df + 1.0) * e)) * t_top.powf(-2.0 * e))
}

/// `(d t_top)^{-1/(d-1)}`, the right end of the increasing branch.
pub fn r_crit(d: usize, t_top: f64) -> Result<f64> {
    check_d_t(d, t_top)?;
    Ok((d as f64 * t_top).powf(-1.0 / (d as f64 - 1.0)))
}

/// Smallest positive root of `t0 = r^2 - d t_top^2 r^{2d}`.
///
/// Bisection on `[0, r_crit]` (where the right side is increasing), then a
/// guarded Newton polish.
pub fn solve_r(d: usize, t0: f64, t_top: f64) -> Result<f64> {
    let tc = critical_time(d, t_top)?;
    if !(t0 >= 0.0) || !t0.is_finite() {
        return Err(Error::Domain(format!("t0 must be non-negative, got {t0}")));
    }
    if t0 > tc * (1.0 + CRIT_SNAP) {
        return Err(Error::Supercritical { t0, t0_crit: tc });
    }
    let rc = r_crit(d, t_top)?;
    if t0 == 0.0 {
        return Ok(0.0);
    }
    if t0 >= tc * (1.0 - CRIT_SNAP) {
        return Ok(rc);
    }
    let k = d as f64 * t_top * t_top;
    let two_d = 2 * d as i32;
    let f = |r: f64| r * r - k * r.powi(two_d) - t0;
    let (mut lo, mut hi) = (0.0_f64, rc);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..4 {
        let fp = 2.0 * r - 2.0 * d as f64 * k * r.powi(two_d - 1);
        if fp <= 0.0 {
            break;
        }
        let next = r - f(r) / fp;
        if !(next > 0.0 && next <= rc) || f(next).abs() >= f(r).abs() {
            break;
        }
        r = next;
    }
    Ok(r)
}

/// `(d+1) d^{-d/(d+1)} t_top^{1/(d+1)} r^{2d/(d+1)}`.
pub fn x_star(d: usize, t0: f64, t_top: f64) -> Result<f64> {
    let r = solve_r(d, t0, t_top)?;
    Ok(x_star_from_r(d, r, t_top))
}

fn x_star_from_r(d: usize, r: f64, t_top: f64) -> f64 {
    let df = d as f64;
    let e = 1.0 / (df + 1.0);
    (df + 1.0) * df.powf(-df * e) * t_top.powf(e) * r.powf(2.0 * df * e)
}

/// `(d t_top r^{d-1})^{1/(d+1)}`; equals 1 exactly at the critical time.
pub fn rho(d: usize, t0: f64, t_top: f64) -> Result<f64> {
    let r = solve_r(d, t0, t_top)?;
    Ok(rho_from_r(d, r, t_top))
}

fn rho_from_r(d: usize, r: f64, t_top: f64) -> f64 {
    (d as f64 * t_top * r.powi(d as i32 - 1)).powf(1.0 / (d as f64 + 1.0))
}

impl SubcriticalData {
    pub fn new(d: usize, t0: f64, t_top: f64) -> Result<Self> {
        let t0_crit = critical_time(d, t_top)?;
        let r = solve_r(d, t0, t_top)?;
        Ok(Self {
            r,
            x_star: x_star_from_r(d, r, t_top),
            rho: rho_from_r(d, r, t_top),
            a: t_top * r.powi(d as i32),
            t0_crit,
        })
    }
}

impl ModelParams {
    /// Validated parameters with the default `x_hat = 1.02 x*`.
    /// The critical time itself is accepted; anything above it is not.
    pub fn new(d: usize, t0: f64, t_top: f64) -> Result<Self> {
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
        }
        let data = SubcriticalData::new(d, t0, t_top)?;
        Ok(Self {
            d,
            t0,
            t_top,
            x_hat: DEFAULT_X_HAT_FACTOR * data.x_star,
        })
    }

    pub fn with_x_hat(mut self, x_hat: f64) -> Result<Self> {
        let xs = self.data()?.x_star;
        if !(x_hat > xs && x_hat <= MAX_X_HAT_FACTOR * xs) {
            return Err(Error::Domain(format!(
                "x_hat = {x_hat} must lie in (x*, {MAX_X_HAT_FACTOR} x*] = ({xs}, {}]",
                MAX_X_HAT_FACTOR * xs
            )));
        }
        self.x_hat = x_hat;
        Ok(self)
    }

    pub fn data(&self) -> Result<SubcriticalData> {
        SubcriticalData::new(self.d, self.t0, self.t_top)
    }

    pub fn is_subcritical(&self) -> bool {
        critical_time(self.d, self.t_top)
            .map(|tc| self.t0 < tc * (1.0 - CRIT_SNAP))
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_time_values() {
        assert!((critical_time(3, 2.0).unwrap() - 1.0 / 9.0).abs() < 1e-16);
        let t3 = 0.7;
        let c = critical_time(2, t3).unwrap();
        assert!((c - 1.0 / (8.0 * t3 * t3)).abs() < 1e-15 * c);
        // 4^{-2/3} - 4^{-5/3}, 30-digit reference
        let c4 = critical_time(4, 1.0).unwrap();
        assert!((c4 - 0.297_637_697_244_037_4).abs() < 1e-15, "{c4}");
        assert!(critical_time(1, 1.0).is_err());
        assert!(critical_time(3, 0.0).is_err());
    }

    #[test]
    fn solve_r_reference_points() {
        let r = solve_r(3, 1.0 / 9.0, 2.0).unwrap();
        assert!((r - 6f64.powf(-0.5)).abs() < 1e-15);
        let r = solve_r(3, 0.05, 2.0).unwrap();
        assert!((r - 0.227_274_770_785_799_66).abs() < 1e-14, "{r}");
        assert!(solve_r(3, 0.0, 2.0).unwrap() == 0.0);
        assert!(matches!(
            solve_r(3, 0.12, 2.0),
            Err(Error::Supercritical { .. })
        ));
        // residual within a few ulps of t0
        let f = r * r - 3.0 * 4.0 * r.powi(6);
        assert!((f - 0.05).abs() <= 10.0 * f64::EPSILON * 0.05);
    }

    #[test]
    fn derived_scalars() {
        let s = SubcriticalData::new(3, 0.05, 2.0).unwrap();
        assert!((s.x_star - 0.226_101_473_090_688_44).abs() < 1e-14);
        assert!((s.rho - 0.746_128_152_419_686).abs() < 1e-14);
        assert!(s.a < s.r / 3.0);
        let c = SubcriticalData::new(3, 1.0 / 9.0, 2.0).unwrap();
        assert!((c.rho - 1.0).abs() < 1e-15);
        assert!((c.x_star - 0.544_331_054_2).abs() < 1e-9);
    }

    #[test]
    fn x_hat_validation() {
        let p = ModelParams::new(3, 0.05, 2.0).unwrap();
        let xs = p.data().unwrap().x_star;
        assert!((p.x_hat / xs - 1.02).abs() < 1e-15);
        assert!(p.with_x_hat(0.9 * xs).is_err());
        assert!(p.with_x_hat(1.2 * xs).is_err());
        assert!(p.with_x_hat(1.05 * xs).is_ok());
        assert!(p.is_subcritical());
        assert!(!ModelParams::new(3, 1.0 / 9.0, 2.0)
            .unwrap()
            .is_subcritical());
    }

    proptest::proptest! {
        #[test]
        fn r_solves_its_equation(d in 2usize..6, t in 0.2f64..4.0, frac in 0.01f64..0.99) {
            let t0 = frac * critical_time(d, t).unwrap();
            let r = solve_r(d, t0, t).unwrap();
            let lhs = r * r - d as f64 * t * t * r.powi(2 * d as i32);
            proptest::prop_assert!((lhs - t0).abs() <= 1e-14 * t0.max(1e-300) + 1e-17);
            proptest::prop_assert!(r > 0.0 && r < r_crit(d, t).unwrap());
            let r2 = solve_r(d, t0 * 1.01_f64.min(1.0 / frac), t).unwrap();
            proptest::prop_assert!(r2 >= r);
        }
    }
}
