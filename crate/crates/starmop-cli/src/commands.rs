//! One function per subcommand. Each returns its outputs, the diagnostics
//! backing them and a table for CSV export.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use starmop::droplet::{uniform_grid, Droplet, DEFAULT_SAMPLES};
use starmop::equilibrium::MeasureFamily;
use starmop::gen_airy::GenAiry;
use starmop::model::SubcriticalData;
use starmop::mop::{MopOptions, MopSolver};
use starmop::spectral_curve::{beta_closed_form, SpectralCurve};
use starmop::surface::Surface;
use starmop::verify::{self, CriterionResult, VerifyConfig};

use crate::config::RunConfig;

/// Plain rows for CSV export.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn key_values(pairs: &[(&str, f64)]) -> Self {
        let mut t = Self::new(&["key", "value"]);
        for (k, v) in pairs {
            t.push(vec![k.to_string(), fmt(*v)]);
        }
        t
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub struct Outcome {
    pub outputs: Value,
    pub diagnostics: Value,
    pub table: Table,
    /// False when a numerical check failed.
    pub passed: bool,
    /// Per-criterion wall times for `verify`.
    pub timings: BTreeMap<String, f64>,
}

impl Outcome {
    fn ok(outputs: Value, diagnostics: Value, table: Table) -> Self {
        Self {
            outputs,
            diagnostics,
            table,
            passed: true,
            timings: BTreeMap::new(),
        }
    }
}

pub type CmdResult = Result<Outcome, starmop::Error>;

pub fn params(cfg: &RunConfig) -> CmdResult {
    let data: SubcriticalData = cfg.params.data()?;
    let s = Surface::new(&cfg.params)?;
    let rho = C64::new(data.rho, 0.0);
    let edge = (s.psi(rho)?.re - data.x_star).abs();
    let crit = s.psi_prime(rho).norm();
    let subcritical = cfg.params.is_subcritical();
    let table = Table::key_values(&[
        ("r", data.r),
        ("x_star", data.x_star),
        ("rho", data.rho),
        ("a", data.a),
        ("t0_crit", data.t0_crit),
        ("x_hat", cfg.x_hat),
    ]);
    Ok(Outcome::ok(
        json!({
            "r": data.r,
            "x_star": data.x_star,
            "rho": data.rho,
            "a": data.a,
            "t0_crit": data.t0_crit,
            "x_hat": cfg.x_hat,
            "subcritical": subcritical,
        }),
        json!({
            "x_star_vs_psi_at_rho": edge,
            "psi_prime_at_rho": crit,
        }),
        table,
    ))
}

pub fn density(cfg: &RunConfig) -> CmdResult {
    let fam = MeasureFamily::new(&cfg.params)?;
    let xs = fam.surface.x_star;
    let d = cfg.d;
    let mut table = Table::new(&["k", "s", "density"]);
    let mut grids = Vec::new();
    for k in 1..=d {
        // mu_1 lives on (0, x*); the others on the whole ray, sampled up to 5 x*
        let top = if k == 1 { xs } else { 5.0 * xs };
        let mut pts = Vec::with_capacity(cfg.grid);
        for i in 0..cfg.grid {
            let s = top * (i as f64 + 0.5) / cfg.grid as f64;
            let v = fam.density(k, s)?;
            table.push(vec![k.to_string(), fmt(s), fmt(v)]);
            pts.push([s, v]);
        }
        grids.push(json!({"k": k, "samples": pts}));
    }
    let mut masses = Vec::new();
    let mut mass_errors = Vec::new();
    for k in 1..=d {
        let (m, e) = fam.mass(k)?;
        masses.push(m);
        mass_errors.push(e);
    }
    let var = fam.variational_residual(cfg.grid)?;
    let edge = fam.edge_exponent(40)?;
    Ok(Outcome::ok(
        json!({
            "x_star": xs,
            "masses": masses,
            "edge_exponent": edge,
            "densities": grids,
        }),
        json!({
            "mass_quadrature_errors": mass_errors,
            "variational": var,
        }),
        table,
    ))
}

pub fn droplet(cfg: &RunConfig) -> CmdResult {
    let dr = Droplet::new(&cfg.params)?;
    let moments = dr.harmonic_moments(cfg.moments, DEFAULT_SAMPLES);
    let theta = uniform_grid(cfg.grid);
    let b = dr.boundary(&theta)?;
    let mut table = Table::new(&["theta", "re", "im"]);
    for (t, z) in b.theta.iter().zip(&b.points) {
        table.push(vec![fmt(*t), fmt(z.re), fmt(z.im)]);
    }
    let schwarz = theta
        .iter()
        .map(|&t| dr.schwarz_residual(t))
        .fold(0.0, f64::max);
    let coarse = dr.harmonic_moments(cfg.moments, DEFAULT_SAMPLES / 2);
    let moment_change = moments
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(Outcome::ok(
        json!({
            "moments": moments.iter().map(|m| [m.re, m.im]).collect::<Vec<_>>(),
            "area": dr.area(DEFAULT_SAMPLES),
            "cusp_angles": dr.cusp_angles(),
            "boundary": b.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        }),
        json!({
            "schwarz_residual": schwarz,
            "moment_sample_halving_change": moment_change,
            "self_intersection": b.self_intersection(),
        }),
        table,
    ))
}

pub fn curve(cfg: &RunConfig) -> CmdResult {
    let s = Surface::new(&cfg.params)?;
    let c = SpectralCurve::from_surface(&s)?;
    let beta = beta_closed_form(cfg.d, s.r, cfg.t_top)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let z = C64::from_polar(
            s.x_star * rng.gen_range(0.1..3.0),
            rng.gen_range(0.0..2.0 * PI),
        );
        let k = rng.gen_range(1..=cfg.d + 1);
        worst = worst.max(c.curve_residual(&s, z, k)?);
    }
    let mut pairs: Vec<(String, f64)> =
        c.c.iter()
            .enumerate()
            .map(|(i, v)| (format!("c{}", i + 1), *v))
            .collect();
    pairs.push(("beta".into(), c.beta));
    let mut table = Table::new(&["key", "value"]);
    for (k, v) in &pairs {
        table.push(vec![k.clone(), fmt(*v)]);
    }
    Ok(Outcome::ok(
        json!({
            "c": c.c,
            "beta": c.beta,
            "beta_closed_form": beta,
            "all_positive": c.all_positive(),
        }),
        json!({
            "fit_residual": c.fit_residual,
            "on_surface_residual": worst,
        }),
        table,
    ))
}

pub fn airy(cfg: &RunConfig) -> CmdResult {
    let d = cfg.d;
    let ga = GenAiry::new(d)?;
    let mut table = Table::new(&["x", "j", "re", "im"]);
    let mut samples = Vec::new();
    let (mut ode, mut sum): (f64, f64) = (0.0, 0.0);
    for i in 0..cfg.grid {
        let x = -5.0 + 10.0 * i as f64 / (cfg.grid - 1) as f64;
        let z = C64::new(x, 0.0);
        let st = ga.p_eval(0, z, d)?;
        ode = ode.max(st.ode_residual().unwrap_or(f64::INFINITY));
        sum = sum.max(ga.branch_sum_residual(z)?);
        let vals = st.to_c64();
        for (j, v) in vals.iter().enumerate().take(d) {
            table.push(vec![fmt(x), j.to_string(), fmt(v.re), fmt(v.im)]);
        }
        samples.push(json!({
            "x": x,
            "values": vals[..d].iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
        }));
    }
    Ok(Outcome::ok(
        json!({"ell": 0, "derivatives": d, "samples": samples}),
        json!({"ode_residual": ode, "branch_sum_residual": sum}),
        table,
    ))
}

pub fn mop(cfg: &RunConfig) -> CmdResult {
    let solver = MopSolver::new(&cfg.params)?;
    let opts = MopOptions {
        precision_bits: cfg.precision_bits,
        nodes: None,
    };
    let xs = solver.surface.x_star;
    let mut table = Table::new(&["n", "re", "im", "modulus", "ray_angle"]);
    let mut runs = Vec::new();
    let mut diags = Vec::new();
    for n in cfg.degrees() {
        let sol = solver.solve(n, &opts)?;
        let rep = solver.report(&sol)?;
        for z in &sol.zeros.zeros {
            table.push(vec![
                n.to_string(),
                fmt(z.re),
                fmt(z.im),
                fmt(z.norm()),
                fmt(z.arg()),
            ]);
        }
        let mut ratios = Vec::new();
        for z in verify::strong_points(xs, cfg.d) {
            let q = solver.strong_ratio(&sol, z)?;
            ratios.push(json!({"z": [z.re, z.im], "ratio": [q.re, q.im]}));
        }
        runs.push(json!({
            "n": n,
            "coefficients": sol.polynomial.coefficients_f64(),
            "zeros": sol.zeros.zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "max_distance": rep.max_distance,
            "ks_distance": rep.ks_distance,
            "strong_ratio": ratios,
        }));
        diags.push(rep);
    }
    Ok(Outcome::ok(
        json!({"x_star": xs, "runs": runs}),
        json!({"runs": diags}),
        table,
    ))
}

pub fn verify(cfg: &RunConfig) -> CmdResult {
    let vc = VerifyConfig {
        params: cfg.params,
        ns: cfg.n.clone(),
        precision_bits: cfg.precision_bits,
        grid: cfg.grid,
        seed: cfg.seed,
    };
    let results: Vec<CriterionResult> = verify::run_all(&vc);
    let passed = results.iter().all(|r| r.passed());
    let mut table = Table::new(&["id", "name", "status", "detail"]);
    let mut timings = BTreeMap::new();
    for r in &results {
        eprintln!("{}", r.line());
        table.push(vec![
            r.id.to_string(),
            r.name.clone(),
            r.status.label().to_string(),
            r.detail.clone(),
        ]);
        timings.insert(format!("criterion_{}", r.id), r.seconds);
    }
    Ok(Outcome {
        outputs: json!({"passed": passed, "criteria": results}),
        diagnostics: json!({
            "failed": results.iter().filter(|r| !r.passed()).map(|r| r.id).collect::<Vec<_>>(),
        }),
        table,
        passed,
        timings,
    })
}
