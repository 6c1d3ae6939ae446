//! Acceptance checks, one per criterion, shared by the integration tests and
//! the command-line `verify` runner.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::droplet::{Droplet, DEFAULT_SAMPLES};
use crate::equilibrium::MeasureFamily;
use crate::error::Result;
use crate::gen_airy::GenAiry;
use crate::model::{critical_time, ModelParams};
use crate::mop::{MopOptions, MopReport, MopSolution, MopSolver};
use crate::parametrix::M11Evaluator;
use crate::spectral_curve::{beta_closed_form, SpectralCurve};
use crate::surface::Surface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    /// Wall time; kept out of the serialized form so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub budget_seconds: f64,
}

impl CriterionResult {
    fn new(id: u8, name: &str, budget: f64) -> Self {
        Self {
            id,
            name: name.to_string(),
            status: Status::Skip,
            detail: String::new(),
            metrics: BTreeMap::new(),
            seconds: 0.0,
            budget_seconds: budget,
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    /// Record the outcome; exceeding the time budget is a failure as well.
    fn finish(mut self, ok: bool, detail: String, elapsed: Duration) -> Self {
        self.seconds = elapsed.as_secs_f64();
        let in_time = self.seconds <= self.budget_seconds;
        self.status = Status::of(ok && in_time);
        self.detail = if in_time {
            detail
        } else {
            format!(
                "{detail}; took {:.3} s, budget {} s",
                self.seconds, self.budget_seconds
            )
        };
        self
    }

    fn error(mut self, e: impl std::fmt::Display, elapsed: Duration) -> Self {
        self.seconds = elapsed.as_secs_f64();
        self.status = Status::Fail;
        self.detail = format!("error: {e}");
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.2} s)",
            self.status.label(),
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Run `f` and turn its outcome into a result for criterion `id`.
fn timed(
    id: u8,
    name: &str,
    budget: f64,
    f: impl FnOnce(&mut CriterionResult) -> Result<(bool, String)>,
) -> CriterionResult {
    let mut res = CriterionResult::new(id, name, budget);
    let t = Instant::now();
    match f(&mut res) {
        Ok((ok, detail)) => res.finish(ok, detail, t.elapsed()),
        Err(e) => res.error(e, t.elapsed()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub params: ModelParams,
    /// Degrees for the polynomial sweep; empty skips criteria 8 and 9.
    pub ns: Vec<usize>,
    pub precision_bits: Option<usize>,
    pub grid: usize,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            ns: Vec::new(),
            precision_bits: None,
            grid: 40,
            seed: 1,
        }
    }

    /// The setting of the zero-convergence criteria: d = 3, t0 = 1/20,
    /// t_top = 2, n in {6, 12, 18, 24}.
    pub fn reference() -> Result<Self> {
        let mut c = Self::new(ModelParams::new(3, 0.05, 2.0)?);
        c.ns = vec![6, 12, 18, 24];
        Ok(c)
    }
}

pub fn critical_time_check() -> CriterionResult {
    timed(1, "critical time", 1e-3, |r| {
        let tc = critical_time(3, 2.0)?;
        let rel = (tc - 1.0 / 9.0).abs() * 9.0;
        r.metric("t0_crit", tc);
        r.metric("rel_error", rel);
        Ok((
            rel <= 1e-14,
            format!("t0_crit(3, 2) = {tc}, relative error {rel:.1e}"),
        ))
    })
}

pub fn masses_check(t_top: f64) -> CriterionResult {
    timed(2, "masses", 40.0, |r| {
        let mut worst: f64 = 0.0;
        for d in 2..=5 {
            let t = Instant::now();
            let p = ModelParams::new(d, critical_time(d, t_top)? / 2.0, t_top)?;
            let fam = MeasureFamily::new(&p)?;
            let mut dw: f64 = 0.0;
            for k in 1..=d {
                let expect = 1.0 - (k as f64 - 1.0) / d as f64;
                dw = dw.max((fam.mass(k)?.0 - expect).abs());
            }
            let secs = t.elapsed().as_secs_f64();
            r.metric(&format!("d{d}_max_error"), dw);
            if secs > 10.0 {
                return Ok((false, format!("d = {d} took {secs:.1} s")));
            }
            worst = worst.max(dw);
        }
        Ok((
            worst <= 1e-8,
            format!("max |mass - expected| = {worst:.2e} over d = 2..5"),
        ))
    })
}

pub fn edge_check(fam: &MeasureFamily) -> CriterionResult {
    timed(3, "square-root edge", 5.0, |r| {
        let e = fam.edge_exponent(40)?;
        r.metric("edge_exponent", e);
        Ok(((e - 0.5).abs() <= 0.05, format!("fitted exponent {e:.4}")))
    })
}

pub fn variational_check(fam: &MeasureFamily, grid: usize) -> CriterionResult {
    timed(4, "variational conditions", 30.0, |r| {
        let v = fam.variational_residual(grid)?;
        let eq = v.max_equality_residual();
        r.metric("equality_residual", eq);
        r.metric("inequality_max", v.inequality_max);
        Ok((
            eq <= 1e-6 && v.inequality_max < 0.0,
            format!(
                "equality residual {eq:.2e}, inequality max {:.3e} on (x*, x_hat]",
                v.inequality_max
            ),
        ))
    })
}

pub fn droplet_check(p: &ModelParams, fam: &MeasureFamily, seed: u64) -> CriterionResult {
    timed(5, "droplet", 30.0, |r| {
        let d = p.d;
        let dr = Droplet::new(p)?;
        let moments = dr.harmonic_moments(2 * d + 3, DEFAULT_SAMPLES);
        let mut bad = Vec::new();
        let mut other: f64 = 0.0;
        for (k, m) in moments.iter().enumerate() {
            let (target, rel) = match k {
                0 => (p.t0, true),
                k if k == d + 1 => (p.t_top, true),
                _ => (0.0, false),
            };
            let err = (m - target).norm() / if rel { target } else { 1.0 };
            if !rel {
                other = other.max(err);
            }
            if err > 1e-10 {
                bad.push(k);
            }
        }
        let schwarz = dr.max_schwarz_residual(512);
        let outer = dr
            .uniform_boundary(DEFAULT_SAMPLES)?
            .points
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cauchy: f64 = 0.0;
        for _ in 0..20 {
            let z = C64::from_polar(
                outer * rng.gen_range(1.2..3.0),
                rng.gen_range(0.0..2.0 * PI),
            );
            cauchy = cauchy.max(dr.exterior_cauchy_residual(fam, z)?);
        }
        r.metric("moment_k0", moments[0].re);
        r.metric("moment_top", moments[d + 1].re);
        r.metric("other_moments_max", other);
        r.metric("schwarz_residual", schwarz);
        r.metric("exterior_cauchy_residual", cauchy);
        Ok((
            bad.is_empty() && schwarz <= 1e-9 && cauchy <= 1e-6,
            format!(
                "moments off at k = {bad:?}, others max {other:.1e}, Schwarz {schwarz:.1e}, exterior Cauchy {cauchy:.1e}"
            ),
        ))
    })
}

pub fn spectral_check(p: &ModelParams, seed: u64) -> CriterionResult {
    timed(6, "spectral curve", 5.0, |r| {
        let d = p.d;
        let s = Surface::new(p)?;
        let c = SpectralCurve::from_surface(&s)?;
        let mut errs = vec![(c.c[d - 1] - p.t_top).abs()];
        if d >= 3 {
            errs.push((c.c[d - 2] - p.t0 * p.t_top).abs());
        } else {
            errs.push((c.c[0] - (p.t0 * p.t_top + 1.0 / p.t_top)).abs());
        }
        let beta = beta_closed_form(d, s.r, p.t_top)?;
        errs.push((c.beta - beta).abs());
        let coeff = errs.iter().copied().fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut on_surface: f64 = 0.0;
        for _ in 0..50 {
            let z = C64::from_polar(
                s.x_star * rng.gen_range(0.1..3.0),
                rng.gen_range(0.0..2.0 * PI),
            );
            let k = rng.gen_range(1..=d + 1);
            on_surface = on_surface.max(c.curve_residual(&s, z, k)?);
        }
        r.metric("coefficient_error", coeff);
        r.metric("beta", c.beta);
        r.metric("on_surface_residual", on_surface);
        let positive = c.all_positive();
        Ok((
            coeff <= 1e-10 && positive && on_surface <= 1e-8,
            format!(
                "coefficient error {coeff:.1e}, beta {:.15}, all positive {positive}, on-surface residual {on_surface:.1e}",
                c.beta
            ),
        ))
    })
}

/// `Ai(x)` from its Maclaurin series; accurate to about 1e-15 on `[-2, 2]`.
fn airy_ai_series(x: f64) -> f64 {
    let c1 = 0.355_028_053_887_817_2;
    let c2 = 0.258_819_403_792_806_8;
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    let x3 = x * x * x;
    for k in 1..60 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
    }
    c1 * f - c2 * g
}

pub fn airy_check(seed: u64) -> CriterionResult {
    timed(7, "generalized Airy", 60.0, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut disk =
            |rad: f64| C64::from_polar(rad * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
        let (mut ode, mut sum, mut oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for d in 2..=4 {
            let ga = GenAiry::new(d)?;
            let d1 = d as i64 + 1;
            for i in 0..100 {
                let s = ga.p_eval(i % d1, disk(10.0), d)?;
                ode = ode.max(s.ode_residual().unwrap_or(f64::INFINITY));
            }
            for _ in 0..20 {
                sum = sum.max(ga.branch_sum_residual(disk(10.0))?);
            }
            for i in 0..20 {
                let z = disk(10.0);
                let a = ga.p_eval(i % d1, z, d - 1)?;
                let b = ga.p_series(i % d1, z, d - 1)?;
                oracle = oracle.max(a.max_rel_diff(&b));
            }
        }
        let ga = GenAiry::new(2)?;
        let mut classical: f64 = 0.0;
        for i in 0..=40 {
            let x = -2.0 + 0.1 * i as f64;
            let v = ga.p_eval(0, C64::new(x, 0.0), 0)?.value(0).to_c64();
            let ai = airy_ai_series(x);
            classical = classical.max((v - ai).norm() / ai.abs().max(1e-3));
        }
        r.metric("ode_residual", ode);
        r.metric("branch_sum", sum);
        r.metric("classical_airy", classical);
        r.metric("series_oracle", oracle);
        Ok((
            ode <= 1e-10 && sum <= 1e-12 && classical <= 1e-10 && oracle <= 1e-10,
            format!(
                "ODE {ode:.1e}, branch sum {sum:.1e}, Ai on [-2, 2] {classical:.1e}, series oracle {oracle:.1e}"
            ),
        ))
    })
}

pub fn parametrix_check(p: &ModelParams, seed: u64) -> CriterionResult {
    timed(10, "parametrix", 10.0, |r| {
        let m = M11Evaluator::new(p)?;
        let res = m.eta_residue_check()?;
        let xs = m.surface.x_star;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(50);
        while pts.len() < 50 {
            let z = C64::from_polar(xs * rng.gen_range(0.2..3.0), rng.gen_range(0.0..2.0 * PI));
            if m.surface.star_distance(z) > 0.05 * xs {
                pts.push(z);
            }
        }
        let cross = m.cross_check(&pts)?;
        r.metric("residue_error", res.max_error);
        r.metric("cross_check", cross);
        Ok((
            res.max_error <= 1e-10 && cross <= 1e-9,
            format!(
                "residue error {:.1e}, closed form vs path {cross:.1e}",
                res.max_error
            ),
        ))
    })
}

/// Solutions of the polynomial sweep, shared by criteria 8 and 9.
pub struct Sweep {
    pub solver: MopSolver,
    pub runs: Vec<(MopSolution, MopReport)>,
    pub seconds: f64,
}

pub fn mop_sweep(p: &ModelParams, ns: &[usize], precision_bits: Option<usize>) -> Result<Sweep> {
    let t = Instant::now();
    let solver = MopSolver::new(p)?;
    let opts = MopOptions {
        precision_bits,
        nodes: None,
    };
    let mut runs = Vec::with_capacity(ns.len());
    for &n in ns {
        let sol = solver.solve(n, &opts)?;
        let rep = solver.report(&sol)?;
        runs.push((sol, rep));
    }
    Ok(Sweep {
        solver,
        runs,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn zero_convergence_check(sweep: &Sweep) -> CriterionResult {
    let name = "polynomial zero convergence";
    if sweep.runs.len() < 2 {
        let mut r = CriterionResult::new(8, name, 600.0);
        r.detail = "needs at least two degrees".into();
        return r;
    }
    let mut res = timed(8, name, 600.0, |r| {
        let xs = sweep.solver.surface.x_star;
        let dist: Vec<f64> = sweep
            .runs
            .iter()
            .map(|(_, rep)| rep.max_distance / xs)
            .collect();
        let ks: Vec<f64> = sweep.runs.iter().map(|(_, rep)| rep.ks_distance).collect();
        for ((s, _), (dv, kv)) in sweep.runs.iter().zip(dist.iter().zip(&ks)) {
            r.metric(&format!("n{}_max_distance_over_xstar", s.n), *dv);
            r.metric(&format!("n{}_ks_distance", s.n), *kv);
        }
        let (d_last, k_last) = (dist[dist.len() - 1], ks[ks.len() - 1]);
        let d_ok = strictly_decreasing(&dist) && d_last <= 0.05;
        let k_ok = strictly_decreasing(&ks) && k_last <= 0.1;
        let ok = d_ok && k_ok && sweep.seconds <= 600.0;
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        Ok((
            ok,
            format!(
                "max distance / x* [{}] (decreasing and <= 0.05: {d_ok}); KS [{}] (decreasing and <= 0.1: {k_ok})",
                fmt(&dist),
                fmt(&ks)
            ),
        ))
    });
    res.seconds += sweep.seconds;
    res
}

/// Points where the strong asymptotics are compared.
pub fn strong_points(x_star: f64, d: usize) -> [C64; 3] {
    [
        C64::new(2.0 * x_star, 0.0),
        C64::from_polar(2.0 * x_star, PI / (d as f64 + 1.0)),
        C64::new(0.0, 3.0 * x_star),
    ]
}

pub fn strong_asymptotics_check(sweep: &Sweep) -> CriterionResult {
    let name = "strong asymptotics";
    let hi = sweep.runs.last();
    let lo = hi.and_then(|(h, _)| sweep.runs.iter().find(|(s, _)| 2 * s.n == h.n));
    let (Some((hi, _)), Some((lo, _))) = (hi, lo) else {
        let mut r = CriterionResult::new(9, name, 600.0);
        r.detail = "needs degrees n and 2n".into();
        return r;
    };
    let mut res = timed(9, name, 600.0, |r| {
        let s = &sweep.solver;
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for z in strong_points(s.surface.x_star, s.params.d) {
            let e_lo = (s.strong_ratio(lo, z)? - 1.0).norm();
            let e_hi = (s.strong_ratio(hi, z)? - 1.0).norm();
            let q = e_hi / e_lo;
            r.metric(
                &format!("error_n{}_at_{:.4}{:+.4}i", lo.n, z.re, z.im),
                e_lo,
            );
            r.metric(
                &format!("error_n{}_at_{:.4}{:+.4}i", hi.n, z.re, z.im),
                e_hi,
            );
            worst = worst.max(q);
            parts.push(format!("{q:.3}"));
        }
        Ok((
            worst <= 0.7,
            format!(
                "error ratio n = {} over n = {}: [{}] (each <= 0.7)",
                hi.n,
                lo.n,
                parts.join(", ")
            ),
        ))
    });
    res.seconds += sweep.seconds;
    if sweep.seconds > 600.0 {
        res.status = Status::Fail;
    }
    res
}

/// Every criterion for `cfg`. The polynomial criteria run only when `cfg.ns`
/// is non-empty.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionResult> {
    let p = &cfg.params;
    let mut out = vec![critical_time_check(), masses_check(p.t_top)];
    match MeasureFamily::new(p) {
        Ok(fam) => {
            out.push(edge_check(&fam));
            out.push(variational_check(&fam, cfg.grid));
            out.push(droplet_check(p, &fam, cfg.seed));
        }
        Err(e) => {
            for (id, name) in [
                (3, "square-root edge"),
                (4, "variational conditions"),
                (5, "droplet"),
            ] {
                out.push(CriterionResult::new(id, name, 0.0).error(&e, Duration::ZERO));
            }
        }
    }
    out.push(spectral_check(p, cfg.seed));
    out.push(airy_check(cfg.seed));
    if cfg.ns.is_empty() {
        for (id, name) in [
            (8, "polynomial zero convergence"),
            (9, "strong asymptotics"),
        ] {
            let mut r = CriterionResult::new(id, name, 0.0);
            r.detail = "no degrees requested".into();
            out.push(r);
        }
    } else {
        match mop_sweep(p, &cfg.ns, cfg.precision_bits) {
            Ok(sweep) => {
                out.push(zero_convergence_check(&sweep));
                out.push(strong_asymptotics_check(&sweep));
            }
            Err(e) => {
                for (id, name) in [
                    (8, "polynomial zero convergence"),
                    (9, "strong asymptotics"),
                ] {
                    out.push(CriterionResult::new(id, name, 0.0).error(&e, Duration::ZERO));
                }
            }
        }
    }
    out.push(parametrix_check(p, cfg.seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ai_series_reference() {
        assert!((airy_ai_series(0.0) - 0.355_028_053_887_817_2).abs() < 1e-16);
        assert!((airy_ai_series(1.0) - 0.135_292_416_312_881_4).abs() < 1e-15);
        assert!((airy_ai_series(-2.0) - 0.227_407_428_201_685_6).abs() < 1e-14);
    }

    #[test]
    fn status_and_lines() {
        let r = critical_time_check();
        assert_eq!(r.status, Status::Pass);
        assert!(r.line().starts_with("PASS [1]"));
        assert!(r.metrics.contains_key("t0_crit"));
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
    }
}
