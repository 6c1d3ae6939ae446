//! Monic polynomials `P_{n,n}` with multiple orthogonality on the star
//! against the generalized Airy weights, their zeros and strong asymptotics.
//!
//! On ray `l` the weight is `v_j(w^l x) = e^{nV(x)/t0} w^{-l(j+1)} p_0^{(j)}(c_n x)`,
//! so every ray moment reduces to one real integral over `[0, x_hat]`:
//! `int_Sigma z^m v_j dz = (d+1) int_0^{x_hat} x^m e^{nV/t0} p_0^{(j)}(c_n x) dx`
//! when `m = j mod (d+1)` and zero otherwise. The system is therefore real and
//! assembled in high precision from the Taylor series of `p_0`.

use std::f64::consts::{LN_10, LN_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::MeasureFamily;
use crate::error::{Error, Result};
use crate::gen_airy::{
    p0_taylor_real, series_precision, taylor_coefficients, GenAiry, DEFAULT_R_MAX,
};
use crate::hp::{Hc, Hf, HpGaussLegendre};
use crate::model::ModelParams;
use crate::parametrix::M11Evaluator;
use crate::split::SplitValue;
use crate::surface::{arg, Surface};

pub const BASE_BITS: usize = 128;
pub const BITS_PER_N: usize = 8;
/// Extra bits for the precision-adequacy comparison.
pub const PRECISION_STEP: usize = 64;
pub const MAX_BITS: usize = 4096;
/// Largest allowed zero movement (relative to `x*`) between `P` and `P + 64` bits.
pub const ZERO_TOL: f64 = 1e-8;
/// Largest allowed relative moment change when the node count doubles.
pub const DOUBLING_TOL: f64 = 1e-3;
/// `strong_ratio` needs this distance (in units of `x*`) from the star.
pub const STRONG_MIN_DIST: f64 = 0.2;
const RAY_TOL: f64 = 1e-12;

pub fn default_precision(n: usize) -> usize {
    BASE_BITS + BITS_PER_N * n
}

pub fn default_nodes(n: usize) -> usize {
    40 + 4 * n
}

/// Number of orthogonality conditions, `sum_j ceil((n-j)/d)`.
pub fn row_count(d: usize, n: usize) -> usize {
    (0..d).map(|j| (n.saturating_sub(j)).div_ceil(d)).sum()
}

fn conditions(d: usize, n: usize) -> Vec<(usize, usize)> {
    let mut rows = Vec::new();
    for j in 0..d {
        for k in 0..(n.saturating_sub(j)).div_ceil(d) {
            rows.push((j, k));
        }
    }
    rows
}

/// Row-scaled moment system `sum_c A[i][c] p_c = rhs[i]` for the
/// non-leading coefficients of `P_{n,n}`.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub d: usize,
    pub n: usize,
    pub precision_bits: usize,
    pub nodes: usize,
    /// `(j, k)` of each row: `int P z^k v_j = 0`.
    pub rows: Vec<(usize, usize)>,
    pub matrix: Vec<Vec<Hf>>,
    pub rhs: Vec<Hf>,
    /// Divisor applied to each row.
    pub row_scale: Vec<Hf>,
    /// Largest relative entry change under node doubling, when it was checked.
    pub quadrature_change: Option<f64>,
}

impl MomentSystem {
    pub fn entry(&self, i: usize, c: usize) -> SplitValue {
        Hc::real(self.matrix[i][c].clone()).to_split()
    }

    pub fn is_finite(&self) -> bool {
        self.matrix
            .iter()
            .flatten()
            .chain(&self.rhs)
            .all(Hf::is_finite)
    }
}

#[derive(Debug, Clone)]
pub struct MonicPolynomial {
    pub n: usize,
    pub precision_bits: usize,
    /// `p_0..p_n`, with `p_n = 1`.
    pub coeffs: Vec<Hf>,
    /// Worst relative residual of the orthogonality conditions.
    pub residual: f64,
}

impl MonicPolynomial {
    pub fn eval_hp(&self, z: &Hc) -> Hc {
        let mut acc = Hc::zero(self.precision_bits);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + &Hc::real(c.clone());
        }
        acc
    }

    pub fn eval(&self, z: C64) -> SplitValue {
        self.eval_hp(&Hc::from_c64(z, self.precision_bits))
            .to_split()
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(Hf::to_f64).collect()
    }

    /// Value and derivative.
    fn eval_with_derivative(&self, z: &Hc) -> (Hc, Hc) {
        let p = self.precision_bits;
        let mut v = Hc::zero(p);
        let mut dv = Hc::zero(p);
        for c in self.coeffs.iter().rev() {
            dv = &(&dv * z) + &v;
            v = &(&v * z) + &Hc::real(c.clone());
        }
        (v, dv)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroSet {
    pub zeros: Vec<C64>,
    /// Distance from each zero to the star.
    pub distances: Vec<f64>,
    /// `(|z|, fraction of zeros with modulus <= |z|)`, sorted by modulus.
    pub radial_cdf: Vec<(f64, f64)>,
}

impl ZeroSet {
    pub fn new(zeros: Vec<C64>, surface: &Surface) -> Self {
        let distances = zeros.iter().map(|&z| surface.star_distance(z)).collect();
        let mut moduli: Vec<f64> = zeros.iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        let n = moduli.len() as f64;
        let radial_cdf = moduli
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, (i + 1) as f64 / n))
            .collect();
        Self {
            zeros,
            distances,
            radial_cdf,
        }
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }

    /// Largest displacement in a greedy matching of `{map(z)}` to the zeros.
    fn matching_defect(&self, map: impl Fn(C64) -> C64) -> f64 {
        let mut free: Vec<C64> = self.zeros.clone();
        let mut worst: f64 = 0.0;
        for &z in &self.zeros {
            let target = map(z);
            let (idx, dist) = free
                .iter()
                .enumerate()
                .map(|(i, &u)| (i, (u - target).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("as many candidates as zeros");
            worst = worst.max(dist);
            free.swap_remove(idx);
        }
        worst
    }

    /// Defect of closure under `z -> w z`, `w = e^{2 pi i/(d+1)}`.
    pub fn rotation_defect(&self, d: usize) -> f64 {
        let w = C64::from_polar(1.0, 2.0 * PI / (d as f64 + 1.0));
        self.matching_defect(|z| w * z)
    }

    pub fn conjugation_defect(&self) -> f64 {
        self.matching_defect(|z| z.conj())
    }

    /// Matched distance to another zero set of the same size.
    pub fn max_shift(&self, other: &ZeroSet) -> f64 {
        let mut free = other.zeros.clone();
        let mut worst: f64 = 0.0;
        for &z in &self.zeros {
            let Some((idx, dist)) = free
                .iter()
                .enumerate()
                .map(|(i, &u)| (i, (u - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                return f64::INFINITY;
            };
            worst = worst.max(dist);
            free.swap_remove(idx);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MopOptions {
    /// Starting precision; `128 + 8n` when absent.
    pub precision_bits: Option<usize>,
    /// Node count; `40 + 4n` when absent.
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MopSolution {
    pub n: usize,
    pub precision_bits: usize,
    pub nodes: usize,
    pub polynomial: MonicPolynomial,
    pub zeros: ZeroSet,
    pub quadrature_change: f64,
    /// Zero movement (relative to `x*`) between `precision_bits` and 64 bits more.
    pub precision_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopReport {
    pub n: usize,
    pub precision_bits: usize,
    pub nodes: usize,
    pub residual: f64,
    pub quadrature_change: f64,
    pub precision_change: f64,
    pub max_distance: f64,
    pub ks_distance: f64,
    pub rotation_defect: f64,
    pub conjugation_defect: f64,
}

pub struct MopSolver {
    pub params: ModelParams,
    pub surface: Surface,
    pub family: MeasureFamily,
    pub m11: M11Evaluator,
}

impl MopSolver {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let surface = Surface::new(p)?;
        Ok(Self {
            params: *p,
            family: MeasureFamily::new(p)?,
            m11: M11Evaluator::from_surface(surface.clone()),
            surface,
        })
    }

    fn d(&self) -> usize {
        self.params.d
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || !n.is_multiple_of(self.d()) {
            return Err(Error::Domain(format!(
                "n = {n} must be a positive multiple of d = {}",
                self.d()
            )));
        }
        Ok(())
    }

    /// `c_n = (n^d / (t0^d t))^{1/(d+1)}`.
    pub fn c_n(&self, n: usize) -> f64 {
        let d = self.d() as f64;
        let p = &self.params;
        ((n as f64).powf(d) / (p.t0.powf(d) * p.t_top)).powf(1.0 / (d + 1.0))
    }

    fn c_n_hp(&self, n: usize, prec: usize) -> Hf {
        let d = self.d();
        let p = &self.params;
        let num = Hf::from_i64(n as i64, prec).powi(d);
        let den = Hf::from_f64(p.t0, prec).powi(d) * Hf::from_f64(p.t_top, prec);
        let e = Hf::one(prec) / Hf::from_i64(d as i64 + 1, prec);
        (num / den).powf(&e)
    }

    /// `v_{j,n}(z) = e^{nV(z)/t0} p_{-l}^{(j)}(c_n z)` for `z` on ray `l`.
    pub fn weight_v(&self, j: usize, n: usize, z: C64) -> Result<SplitValue> {
        self.check_n(n)?;
        let d = self.d();
        if j >= d {
            return Err(Error::Domain(format!("j = {j} must be below d = {d}")));
        }
        let x = z.norm();
        if !(x > 0.0 && x <= self.params.x_hat * (1.0 + RAY_TOL)) {
            return Err(Error::Domain(format!(
                "|z| = {x} outside (0, x_hat = {}]",
                self.params.x_hat
            )));
        }
        let step = 2.0 * PI / (d as f64 + 1.0);
        let a = arg(z).rem_euclid(2.0 * PI);
        let ell = (a / step).round() as i64 % (d as i64 + 1);
        let off = (a - ell as f64 * step).abs().min((a - 2.0 * PI).abs());
        if off > RAY_TOL.max(1e-15 / x) {
            return Err(Error::Domain(format!(
                "z = {z} is not on a ray of the star"
            )));
        }
        let p = &self.params;
        let y = self.c_n(n) * z;
        let airy = GenAiry::new(d)?.with_r_max(DEFAULT_R_MAX.max(1.0001 * y.norm()));
        let stack = airy.p_eval(-ell, y, j)?;
        let expo = n as f64 * p.t_top * z.powu(d as u32 + 1) / ((d as f64 + 1.0) * p.t0);
        (SplitValue::exp(expo) * stack.value(j)).checked()
    }

    /// `M[j][m] = int_Sigma z^m v_j dz` for `m <= m_max` (zero unless `m = j mod (d+1)`).
    fn moments(&self, n: usize, prec: usize, nodes: usize, m_max: usize) -> Vec<Vec<Hf>> {
        let d = self.d();
        let d1 = d + 1;
        let p = &self.params;
        let cn = self.c_n_hp(n, prec);
        let y_max = self.c_n(n) * p.x_hat;
        let pm = prec + series_precision(d, y_max);
        let coeffs = taylor_coefficients(d, y_max.max(1e-3), pm);
        let gl = HpGaussLegendre::cached(nodes, pm);
        let half = Hf::from_f64(p.x_hat, pm).div_i(2);
        // n t / ((d+1) t0)
        let vscale = Hf::from_i64(n as i64, pm) * Hf::from_f64(p.t_top, pm)
            / (Hf::from_i64(d1 as i64, pm) * Hf::from_f64(p.t0, pm));
        let cn = cn.with_prec(pm);

        let per_node: Vec<Vec<Vec<Hf>>> = (0..nodes)
            .into_par_iter()
            .map(|i| {
                let x = &half * &(&gl.x[i] + &Hf::one(pm));
                let w = (&half * &gl.w[i]).mul_i(d1 as i64);
                let e = (&vscale * &x.powi(d1)).exp();
                let vals = p0_taylor_real(&coeffs, &(&cn * &x), d - 1);
                (0..d)
                    .map(|j| {
                        let base = &(&w * &e) * &vals[j];
                        let mut out = vec![Hf::zero(pm); m_max + 1];
                        let mut xm = x.powi(j);
                        let step = x.powi(d1);
                        let mut m = j;
                        while m <= m_max {
                            out[m] = &base * &xm;
                            xm = &xm * &step;
                            m += d1;
                        }
                        out
                    })
                    .collect()
            })
            .collect();

        let mut acc = vec![vec![Hf::zero(pm); m_max + 1]; d];
        for node in &per_node {
            for j in 0..d {
                for m in (j..=m_max).step_by(d1) {
                    acc[j][m] = &acc[j][m] + &node[j][m];
                }
            }
        }
        acc.into_iter()
            .map(|row| row.into_iter().map(|v| v.with_prec(prec)).collect())
            .collect()
    }

    fn build(&self, n: usize, prec: usize, nodes: usize, mo: &[Vec<Hf>]) -> Result<MomentSystem> {
        let rows = conditions(self.d(), n);
        let mut matrix = Vec::with_capacity(rows.len());
        let mut rhs = Vec::with_capacity(rows.len());
        let mut row_scale = Vec::with_capacity(rows.len());
        for &(j, k) in &rows {
            let raw: Vec<Hf> = (0..n).map(|c| mo[j][c + k].clone()).collect();
            let scale = Hf::max_abs(&raw)
                .filter(|s| !s.is_zero())
                .ok_or(Error::Singular {
                    n,
                    detail: format!("condition (j={j}, k={k}) has no nonzero moment"),
                })?;
            rhs.push(-(&mo[j][n + k] / &scale));
            matrix.push(raw.iter().map(|v| v / &scale).collect());
            row_scale.push(scale);
        }
        let sys = MomentSystem {
            d: self.d(),
            n,
            precision_bits: prec,
            nodes,
            rows,
            matrix,
            rhs,
            row_scale,
            quadrature_change: None,
        };
        if !sys.is_finite() {
            return Err(Error::Overflow);
        }
        Ok(sys)
    }

    fn m_max(&self, n: usize) -> usize {
        n + n.div_ceil(self.d()) - 1
    }

    /// Moment system with a fixed node count and no doubling check.
    pub fn assemble_with_nodes(&self, n: usize, prec: usize, nodes: usize) -> Result<MomentSystem> {
        self.check_n(n)?;
        let mo = self.moments(n, prec, nodes, self.m_max(n));
        self.build(n, prec, nodes, &mo)
    }

    /// Moment system at `40 + 4n` nodes, checked against twice as many.
    pub fn assemble_moments(&self, n: usize, prec: usize) -> Result<MomentSystem> {
        self.assemble_checked(n, prec, default_nodes(n))
    }

    fn assemble_checked(&self, n: usize, prec: usize, nodes: usize) -> Result<MomentSystem> {
        self.check_n(n)?;
        let m_max = self.m_max(n);
        let a = self.moments(n, prec, nodes, m_max);
        let b = self.moments(n, prec, 2 * nodes, m_max);
        let mut change: f64 = 0.0;
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                if !y.is_zero() {
                    change = change.max(((x - y).abs() / y.abs()).to_f64());
                }
            }
        }
        if !(change <= DOUBLING_TOL) {
            return Err(Error::Quadrature(format!(
                "moments changed by {change:e} when doubling {nodes} nodes (n = {n})"
            )));
        }
        let mut sys = self.build(n, prec, nodes, &a)?;
        sys.quadrature_change = Some(change);
        Ok(sys)
    }

    /// All `n` zeros of `P` (companion eigenvalues polished by Aberth iteration).
    pub fn zeros(&self, poly: &MonicPolynomial) -> Result<ZeroSet> {
        let z = polish_zeros(poly, self.surface.x_star)?;
        Ok(ZeroSet::new(z, &self.surface))
    }

    /// Kolmogorov-Smirnov distance between the radial zero CDF and the
    /// radial CDF of `mu_1`.
    pub fn ks_distance(&self, zeros: &ZeroSet) -> Result<f64> {
        let n = zeros.radial_cdf.len() as f64;
        let mut worst: f64 = 0.0;
        for (i, &(s, f)) in zeros.radial_cdf.iter().enumerate() {
            let g = self.family.mu1_cdf(s)?;
            worst = worst.max((f - g).abs()).max((g - i as f64 / n).abs());
        }
        Ok(worst)
    }

    /// Solve at adaptive precision: accept once the zeros at `P` and `P + 64`
    /// bits agree to `1e-8 x*`.
    pub fn solve(&self, n: usize, opts: &MopOptions) -> Result<MopSolution> {
        self.check_n(n)?;
        let nodes = opts.nodes.unwrap_or_else(|| default_nodes(n));
        let mut bits = opts.precision_bits.unwrap_or_else(|| default_precision(n));
        let xs = self.surface.x_star;
        let sys = self.assemble_checked(n, bits, nodes)?;
        let quadrature_change = sys.quadrature_change.unwrap_or(f64::NAN);
        let mut poly = solve_p(&sys)?;
        let mut zeros = self.zeros(&poly)?;
        loop {
            let hi = bits + PRECISION_STEP;
            let sys_hi = self.assemble_with_nodes(n, hi, nodes)?;
            let poly_hi = solve_p(&sys_hi)?;
            let zeros_hi = self.zeros(&poly_hi)?;
            let change = zeros.max_shift(&zeros_hi) / xs;
            if change <= ZERO_TOL {
                return Ok(MopSolution {
                    n,
                    precision_bits: bits,
                    nodes,
                    polynomial: poly,
                    zeros,
                    quadrature_change,
                    precision_change: change,
                });
            }
            if hi >= MAX_BITS {
                return Err(Error::Precision { bits: hi, change });
            }
            bits = hi;
            poly = poly_hi;
            zeros = zeros_hi;
        }
    }

    pub fn report(&self, sol: &MopSolution) -> Result<MopReport> {
        let xs = self.surface.x_star;
        Ok(MopReport {
            n: sol.n,
            precision_bits: sol.precision_bits,
            nodes: sol.nodes,
            residual: sol.polynomial.residual,
            quadrature_change: sol.quadrature_change,
            precision_change: sol.precision_change,
            max_distance: sol.zeros.max_distance(),
            ks_distance: self.ks_distance(&sol.zeros)?,
            rotation_defect: sol.zeros.rotation_defect(self.d()) / xs,
            conjugation_defect: sol.zeros.conjugation_defect() / xs,
        })
    }

    /// `P_{n,n}(z) e^{-n g_1(z)} / M_{1,1}(z)`.
    pub fn strong_ratio(&self, sol: &MopSolution, z: C64) -> Result<C64> {
        let xs = self.surface.x_star;
        let dist = self.surface.star_distance(z);
        let min = STRONG_MIN_DIST * xs;
        if !(dist >= min) {
            return Err(Error::Proximity { dist, min });
        }
        let g = self.family.g1(z)?;
        let m = self.m11.m11(z)?;
        let v = sol.polynomial.eval(z) * SplitValue::exp(-(sol.n as f64) * g);
        Ok(v.checked()?.to_c64() / m)
    }
}

/// Gaussian elimination with partial pivoting, then a residual check of every
/// condition against `10^{-digits/2}`.
pub fn solve_p(sys: &MomentSystem) -> Result<MonicPolynomial> {
    let n = sys.n;
    let prec = sys.precision_bits;
    if sys.rows.len() != n {
        return Err(Error::Singular {
            n,
            detail: format!("{} conditions for {n} unknowns", sys.rows.len()),
        });
    }
    let mut a: Vec<Vec<Hf>> = sys.matrix.clone();
    let mut b: Vec<Hf> = sys.rhs.clone();
    let tiny = Hf::pow2(-(prec as i64 - 8), prec);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &k| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[k][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty range");
        if !(a[piv][col].abs() > tiny) {
            return Err(Error::Singular {
                n,
                detail: format!("pivot {} in column {col}", a[piv][col].to_f64()),
            });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            if a[i][col].is_zero() {
                continue;
            }
            let f = &a[i][col] / &a[col][col];
            for c in col..n {
                let t = &f * &a[col][c];
                a[i][c] = &a[i][c] - &t;
            }
            let t = &f * &b[col];
            b[i] = &b[i] - &t;
        }
    }
    let mut x = vec![Hf::zero(prec); n];
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for c in i + 1..n {
            s = &s - &(&a[i][c] * &x[c]);
        }
        x[i] = &s / &a[i][i];
    }

    let residual = condition_residual(sys, &x);
    let digits = prec as f64 * LN_2 / LN_10;
    let tol = 10f64.powf(-digits / 2.0);
    if !(residual <= tol) {
        return Err(Error::Singular {
            n,
            detail: format!("condition residual {residual:e} above {tol:e}"),
        });
    }
    x.push(Hf::one(prec));
    Ok(MonicPolynomial {
        n,
        precision_bits: prec,
        coeffs: x,
        residual,
    })
}

/// Worst `|sum_c A p_c - b| / max(|b|, max_c |A p_c|)` over the rows.
pub fn condition_residual(sys: &MomentSystem, p: &[Hf]) -> f64 {
    let mut worst: f64 = 0.0;
    for (row, rhs) in sys.matrix.iter().zip(&sys.rhs) {
        let terms: Vec<Hf> = row.iter().zip(p).map(|(a, x)| a * x).collect();
        let mut s = -rhs.clone();
        for t in &terms {
            s = &s + t;
        }
        let scale = Hf::max_abs(terms.iter().chain(std::iter::once(rhs)))
            .filter(|v| !v.is_zero())
            .unwrap_or_else(|| Hf::one(sys.precision_bits));
        worst = worst.max((s.abs() / scale).to_f64());
    }
    worst
}

/// Eigenvalues of the companion matrix of `P(scale u) / scale^n`.
fn companion_seeds(poly: &MonicPolynomial, scale: f64) -> Option<Vec<C64>> {
    let n = poly.n;
    let mut q = Vec::with_capacity(n);
    for (c, v) in poly.coeffs.iter().take(n).enumerate() {
        let s = Hf::from_f64(scale, poly.precision_bits).powi(n - c);
        q.push((v / &s).to_f64());
    }
    if q.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for (c, v) in q.iter().enumerate() {
        m[(c, n - 1)] = -v;
    }
    // the unbounded Schur iteration can spin on nilpotent matrices
    let ev = m.try_schur(f64::EPSILON, 10_000)?.complex_eigenvalues();
    let out: Vec<C64> = ev.iter().map(|e| C64::new(e.re, e.im) * scale).collect();
    out.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then_some(out)
}

/// Aberth-Ehrlich iteration at the working precision of `poly`.
fn polish_zeros(poly: &MonicPolynomial, scale: f64) -> Result<Vec<C64>> {
    let n = poly.n;
    let prec = poly.precision_bits;
    let seeds = companion_seeds(poly, scale).unwrap_or_else(|| {
        (0..n)
            .map(|k| C64::from_polar(scale, (2.0 * PI * k as f64 + 0.5) / n as f64))
            .collect()
    });
    // nudge coincident seeds apart
    let mut z: Vec<Hc> = seeds
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let jitter = C64::from_polar(1e-9 * scale, 0.7 + k as f64);
            Hc::from_c64(s + jitter, prec)
        })
        .collect();
    // a root is settled once |P(z)| is at rounding level of sum |p_c| |z|^c
    let eps = Hf::pow2(-(prec as i64) + 16, prec);
    // exact multiple roots only converge linearly and never meet the test above
    let floor = Hf::from_f64(scale, prec) * Hf::pow2(-(prec as i64) / 2, prec);
    let mut done = vec![false; n];
    let max_iter = 200 + 4 * prec;
    for _ in 0..max_iter {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, dv) = poly.eval_with_derivative(&z[i]);
            let r = z[i].norm();
            let mut bound = Hf::zero(prec);
            for c in poly.coeffs.iter().rev() {
                bound = &(&bound * &r) + &c.abs();
            }
            if v.norm() <= &eps * &bound {
                done[i] = true;
                continue;
            }
            let ratio = &v / &dv;
            let mut s = Hc::zero(prec);
            for (k, zk) in z.iter().enumerate() {
                if k != i {
                    s = &s + &(&Hc::one(prec) / &(&z[i] - zk));
                }
            }
            let den = &Hc::one(prec) - &(&ratio * &s);
            let step = &ratio / &den;
            if !step.norm().is_finite() {
                return Err(Error::RootFinding(format!(
                    "non-finite Aberth step for n = {n}"
                )));
            }
            if step.norm() <= floor {
                done[i] = true;
            }
            z[i] = &z[i] - &step;
        }
        if done.iter().all(|&b| b) {
            return Ok(z.iter().map(Hc::to_c64).collect());
        }
    }
    Err(Error::RootFinding(format!(
        "Aberth iteration did not settle in {max_iter} sweeps (n = {n})"
    )))
}
