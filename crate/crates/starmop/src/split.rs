//! Complex numbers with a separate binary exponent, for quantities like
//! `e^{n V / t0}` that leave the double range long before the algebra is done.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest exponent magnitude the type promises to handle.
pub const MAX_EXPONENT: i64 = 1 << 30;

/// `mantissa * 2^exponent` with `|mantissa|` in `[1, 2)`, or zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitValue {
    pub mantissa: C64,
    pub exponent: i64,
}

fn pow2(e: i64) -> f64 {
    // exact for the ranges used here; split large shifts
    let mut out = 1.0;
    let mut e = e;
    while e > 1000 {
        out *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        out *= 2f64.powi(-1000);
        e += 1000;
    }
    out * 2f64.powi(e as i32)
}

impl SplitValue {
    pub const ZERO: SplitValue = SplitValue {
        mantissa: C64::new(0.0, 0.0),
        exponent: 0,
    };

    pub fn new(mantissa: C64, exponent: i64) -> Self {
        Self { mantissa, exponent }.normalized()
    }

    pub fn from_c64(z: C64) -> Self {
        Self::new(z, 0)
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(C64::new(x, 0.0), 0)
    }

    /// `e^h` without forming it.
    pub fn exp(h: C64) -> Self {
        let k = h.re / std::f64::consts::LN_2;
        let e = k.floor();
        let frac = (k - e) * std::f64::consts::LN_2;
        Self::new(C64::from_polar(frac.exp(), h.im), e as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    fn normalized(mut self) -> Self {
        let n = self.mantissa.norm();
        if n == 0.0 || !n.is_finite() {
            if n == 0.0 {
                return Self::ZERO;
            }
            return self;
        }
        let mut e = n.log2().floor() as i64;
        let mut m = self.mantissa * pow2(-e);
        // guard against log2 rounding at exact powers of two
        let mn = m.norm();
        if mn >= 2.0 {
            m *= 0.5;
            e += 1;
        } else if mn < 1.0 {
            m *= 2.0;
            e -= 1;
        }
        self.mantissa = m;
        self.exponent += e;
        self
    }

    /// Plain complex value; overflows to infinity or underflows to zero.
    pub fn to_c64(&self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        self.mantissa * pow2(self.exponent)
    }

    /// `log2 |value|`, `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().log2() + self.exponent as f64
        }
    }

    pub fn ln_abs(&self) -> f64 {
        self.log2_abs() * std::f64::consts::LN_2
    }

    /// Multiply by `2^k`.
    pub fn scale2(&self, k: i64) -> Self {
        if self.is_zero() {
            return *self;
        }
        Self {
            mantissa: self.mantissa,
            exponent: self.exponent + k,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            mantissa: self.mantissa.conj(),
            exponent: self.exponent,
        }
    }

    /// Error if the exponent left the supported range.
    pub fn checked(self) -> Result<Self> {
        if self.exponent.abs() > MAX_EXPONENT || !self.mantissa.is_finite() {
            Err(Error::Overflow)
        } else {
            Ok(self)
        }
    }

    /// Ratio as a plain complex number; fine whenever the two are of comparable size.
    pub fn ratio(&self, other: &Self) -> C64 {
        (*self / *other).to_c64()
    }
}

impl Add for SplitValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= o.exponent {
            (self, o)
        } else {
            (o, self)
        };
        let shift = big.exponent - small.exponent;
        if shift > 110 {
            return big;
        }
        Self::new(big.mantissa + small.mantissa * pow2(-shift), big.exponent)
    }
}

impl Neg for SplitValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Sub for SplitValue {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for SplitValue {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.mantissa * o.mantissa, self.exponent + o.exponent)
    }
}

impl Mul<C64> for SplitValue {
    type Output = Self;
    fn mul(self, o: C64) -> Self {
        self * SplitValue::from_c64(o)
    }
}

impl Div for SplitValue {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.mantissa / o.mantissa, self.exponent - o.exponent)
    }
}

impl fmt::Display for SplitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})*2^{}", self.mantissa, self.exponent)
    }
}
