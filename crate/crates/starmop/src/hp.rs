//! Thin arbitrary-precision layer over `astro-float`: a real type with
//! operator overloads, a complex pair, Gamma at rational points and
//! Gauss-Legendre rules.
//!
//! Binary operations run at the larger precision of the two operands.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64 as C64;

use crate::quad::GaussLegendre;
use crate::split::SplitValue;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_cc<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Arbitrary-precision real.
#[derive(Debug, Clone)]
pub struct Hf(pub BigFloat);

impl Hf {
    pub fn from_f64(x: f64, p: usize) -> Self {
        Hf(BigFloat::from_f64(x, p))
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Hf(BigFloat::from_i64(x, p))
    }

    pub fn zero(p: usize) -> Self {
        Self::from_f64(0.0, p)
    }

    pub fn one(p: usize) -> Self {
        Self::from_f64(1.0, p)
    }

    /// `2^e`, exact for any exponent the backend can hold (an f64 would underflow).
    pub fn pow2(e: i64, p: usize) -> Self {
        let mut x = BigFloat::from_f64(1.0, p);
        x.set_exponent(
            x.exponent()
                .unwrap_or(1)
                .saturating_add(e.clamp(-(1 << 30), 1 << 30) as i32),
        );
        Hf(x)
    }

    pub fn pi(p: usize) -> Self {
        Hf(with_cc(|cc| cc.pi(p, RM)))
    }

    pub fn prec(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(64).max(64)
    }

    pub fn with_prec(&self, p: usize) -> Self {
        let mut x = self.0.clone();
        // only fails for NaN/inf, which are left as they are
        let _ = x.set_precision(p, RM);
        Hf(x)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn abs(&self) -> Self {
        Hf(self.0.abs())
    }

    pub fn sqrt(&self) -> Self {
        Hf(self.0.sqrt(self.prec(), RM))
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        Hf(with_cc(|cc| self.0.exp(p, RM, cc)))
    }

    pub fn ln(&self) -> Self {
        let p = self.prec();
        Hf(with_cc(|cc| self.0.ln(p, RM, cc)))
    }

    pub fn sin(&self) -> Self {
        let p = self.prec();
        Hf(with_cc(|cc| self.0.sin(p, RM, cc)))
    }

    pub fn cos(&self) -> Self {
        let p = self.prec();
        Hf(with_cc(|cc| self.0.cos(p, RM, cc)))
    }

    pub fn powi(&self, n: usize) -> Self {
        Hf(self.0.powi(n, self.prec(), RM))
    }

    /// `self^e` for positive `self`.
    pub fn powf(&self, e: &Hf) -> Self {
        (e * &self.ln()).exp()
    }

    pub fn mul_i(&self, k: i64) -> Self {
        self * &Hf::from_i64(k, 64)
    }

    pub fn div_i(&self, k: i64) -> Self {
        self / &Hf::from_i64(k, 64)
    }

    /// Binary exponent `e` with `|self| = 0.1xxx_2 * 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            self.0.exponent().map(|e| e as i64)
        }
    }

    /// Mantissa in `[0.5, 1)` (signed) and binary exponent.
    pub fn to_parts(&self) -> (f64, i64) {
        match self.0.as_raw_parts() {
            Some((m, _, s, e, _)) if !m.is_empty() && !self.is_zero() => {
                let top = *m.last().unwrap() as f64;
                let next = if m.len() > 1 {
                    m[m.len() - 2] as f64
                } else {
                    0.0
                };
                let two64 = 18_446_744_073_709_551_616.0_f64;
                let mut f = (top + next / two64) / two64;
                if matches!(s, Sign::Neg) {
                    f = -f;
                }
                (f, e as i64)
            }
            _ => {
                if self.0.is_nan() {
                    (f64::NAN, 0)
                } else if self.0.is_inf_pos() {
                    (f64::INFINITY, 0)
                } else if self.0.is_inf_neg() {
                    (f64::NEG_INFINITY, 0)
                } else {
                    (0.0, 0)
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        let (m, e) = self.to_parts();
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        if e > 1100 {
            return m.signum() * f64::INFINITY;
        }
        if e < -1200 {
            return 0.0;
        }
        // two steps keep the intermediate in range
        let h = e / 2;
        m * 2f64.powi(h as i32) * 2f64.powi((e - h) as i32)
    }

    pub fn max_abs<'a>(xs: impl IntoIterator<Item = &'a Hf>) -> Option<Hf> {
        let mut best: Option<Hf> = None;
        for x in xs {
            let a = x.abs();
            if best.as_ref().is_none_or(|b| a > *b) {
                best = Some(a);
            }
        }
        best
    }
}

impl PartialEq for Hf {
    fn eq(&self, o: &Self) -> bool {
        self.0.cmp(&o.0) == Some(0)
    }
}

impl PartialOrd for Hf {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.0.cmp(&o.0).map(|c| c.cmp(&0))
    }
}

macro_rules! hf_binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl $tr<&Hf> for &Hf {
            type Output = Hf;
            fn $m(self, o: &Hf) -> Hf {
                let p = self.prec().max(o.prec());
                Hf(self.0.$call(&o.0, p, RM))
            }
        }
        impl $tr<Hf> for Hf {
            type Output = Hf;
            fn $m(self, o: Hf) -> Hf {
                (&self).$m(&o)
            }
        }
        impl $tr<&Hf> for Hf {
            type Output = Hf;
            fn $m(self, o: &Hf) -> Hf {
                (&self).$m(o)
            }
        }
        impl $tr<Hf> for &Hf {
            type Output = Hf;
            fn $m(self, o: Hf) -> Hf {
                self.$m(&o)
            }
        }
    };
}

hf_binop!(Add, add, add);
hf_binop!(Sub, sub, sub);
hf_binop!(Mul, mul, mul);
hf_binop!(Div, div, div);

impl Neg for Hf {
    type Output = Hf;
    fn neg(self) -> Hf {
        Hf(self.0.neg())
    }
}

impl Neg for &Hf {
    type Output = Hf;
    fn neg(self) -> Hf {
        let mut x = self.0.clone();
        x.inv_sign();
        Hf(x)
    }
}

/// Arbitrary-precision complex.
#[derive(Debug, Clone)]
pub struct Hc {
    pub re: Hf,
    pub im: Hf,
}

impl Hc {
    pub fn new(re: Hf, im: Hf) -> Self {
        Self { re, im }
    }

    pub fn from_c64(z: C64, p: usize) -> Self {
        Self::new(Hf::from_f64(z.re, p), Hf::from_f64(z.im, p))
    }

    pub fn real(x: Hf) -> Self {
        let p = x.prec();
        Self::new(x, Hf::zero(p))
    }

    pub fn zero(p: usize) -> Self {
        Self::new(Hf::zero(p), Hf::zero(p))
    }

    pub fn one(p: usize) -> Self {
        Self::new(Hf::one(p), Hf::zero(p))
    }

    pub fn norm_sqr(&self) -> Hf {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn norm(&self) -> Hf {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -&self.im)
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Overflow-free conversion.
    pub fn to_split(&self) -> SplitValue {
        let (mr, er) = self.re.to_parts();
        let (mi, ei) = self.im.to_parts();
        let e = match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => return SplitValue::ZERO,
            (false, true) => er,
            (true, false) => ei,
            (false, false) => er.max(ei),
        };
        let scale = |m: f64, ex: i64, zero: bool| {
            if zero || ex - e < -1000 {
                0.0
            } else {
                m * 2f64.powi((ex - e) as i32)
            }
        };
        SplitValue::new(
            C64::new(
                scale(mr, er, self.re.is_zero()),
                scale(mi, ei, self.im.is_zero()),
            ),
            e,
        )
    }
}

impl Add<&Hc> for &Hc {
    type Output = Hc;
    fn add(self, o: &Hc) -> Hc {
        Hc::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub<&Hc> for &Hc {
    type Output = Hc;
    fn sub(self, o: &Hc) -> Hc {
        Hc::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul<&Hc> for &Hc {
    type Output = Hc;
    fn mul(self, o: &Hc) -> Hc {
        Hc::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Mul<&Hf> for &Hc {
    type Output = Hc;
    fn mul(self, o: &Hf) -> Hc {
        Hc::new(&self.re * o, &self.im * o)
    }
}

impl Div<&Hc> for &Hc {
    type Output = Hc;
    fn div(self, o: &Hc) -> Hc {
        let den = o.norm_sqr();
        Hc::new(
            (&self.re * &o.re + &self.im * &o.im) / &den,
            (&self.im * &o.re - &self.re * &o.im) / &den,
        )
    }
}

/// `Gamma(num/den)` for `0 < num/den <= 1`, at `p` bits.
///
/// Lower incomplete gamma series up to `X = p ln 2 + 50`; the dropped upper
/// tail is below `X^{a-1} e^{-X} < 2^{-p}`. The series terms grow to about
/// `e^X` before decaying, so it runs with `p + X/ln 2` extra guard bits.
pub fn gamma_rational(num: i64, den: i64, p: usize) -> Hf {
    assert!(
        num > 0 && den > 0 && num <= den,
        "gamma_rational wants a in (0, 1]"
    );
    let xf = p as f64 * std::f64::consts::LN_2 + 50.0;
    let wp = p + (xf / std::f64::consts::LN_2) as usize + 64;
    let a = Hf::from_i64(num, wp) / Hf::from_i64(den, wp);
    let x = Hf::from_f64(xf.ceil(), wp);
    let mut term = Hf::one(wp) / &a;
    let mut sum = term.clone();
    let eps = Hf::pow2(8 - wp as i64, wp);
    let mut k = 1i64;
    loop {
        term = &term * &x / (&a + Hf::from_i64(k, wp));
        sum = &sum + &term;
        if k as f64 > xf && term < &sum * &eps {
            break;
        }
        k += 1;
    }
    let pref = (&a * &x.ln() - &x).exp();
    (pref * sum).with_prec(p)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` at `p` bits.
#[derive(Debug, Clone)]
pub struct HpGaussLegendre {
    pub x: Vec<Hf>,
    pub w: Vec<Hf>,
}

impl HpGaussLegendre {
    pub fn new(n: usize, p: usize) -> Self {
        let seed = GaussLegendre::new(n);
        let tol = Hf::pow2(6 - p as i64, p);
        let mut x = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for &t0 in &seed.x {
            let mut t = Hf::from_f64(t0, p);
            let mut dp = Hf::one(p);
            for _ in 0..20 {
                let (pn, d) = legendre_hp(n, &t);
                let dt = &pn / &d;
                t = &t - &dt;
                dp = d;
                if dt.abs() < tol {
                    break;
                }
            }
            let (_, d) = legendre_hp(n, &t);
            if d.is_finite() {
                dp = d;
            }
            let one = Hf::one(p);
            w.push(Hf::from_i64(2, p) / ((&one - &t * &t) * &dp * &dp));
            x.push(t);
        }
        Self { x, w }
    }

    pub fn cached(n: usize, p: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<HpGaussLegendre>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().expect("cache poisoned").get(&(n, p)) {
            return v.clone();
        }
        let v = Arc::new(Self::new(n, p));
        cache
            .lock()
            .expect("cache poisoned")
            .insert((n, p), v.clone());
        v
    }
}

fn legendre_hp(n: usize, t: &Hf) -> (Hf, Hf) {
    let p = t.prec();
    let mut p0 = Hf::one(p);
    let mut p1 = t.clone();
    for k in 2..=n as i64 {
        let p2 = (t * &p1).mul_i(2 * k - 1) - p0.mul_i(k - 1);
        p0 = p1;
        p1 = p2.div_i(k);
    }
    let d = (t * &p1 - &p0).mul_i(n as i64) / (t * t - Hf::one(p));
    (p1, d)
}
