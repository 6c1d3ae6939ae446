//! Python bindings. Every function takes plain numbers and returns floats,
//! complex numbers, lists or dicts.

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use starmop::droplet::{Droplet, DEFAULT_SAMPLES};
use starmop::equilibrium::MeasureFamily;
use starmop::gen_airy::GenAiry;
use starmop::model::{self, ModelParams};
use starmop::mop::{MopOptions, MopSolver};
use starmop::parametrix::M11Evaluator;
use starmop::spectral_curve::SpectralCurve;
use starmop::surface::Surface;
use starmop::verify::{run_all, VerifyConfig};
use starmop::Error;

create_exception!(
    starmop,
    NumericalError,
    PyRuntimeError,
    "A computation did not meet its accuracy target."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Supercritical { .. } => PyValueError::new_err(e.to_string()),
        other => NumericalError::new_err(other.to_string()),
    }
}

fn model_params(d: usize, t0: f64, t_top: f64, x_hat: Option<f64>) -> PyResult<ModelParams> {
    let p = ModelParams::new(d, t0, t_top).map_err(to_py)?;
    match x_hat {
        Some(x) => p.with_x_hat(x).map_err(to_py),
        None => Ok(p),
    }
}

/// r, x_star, rho, a, t0_crit and x_hat as a dict.
#[pyfunction]
#[pyo3(signature = (d, t0, t_top, x_hat=None))]
fn params<'py>(
    py: Python<'py>,
    d: usize,
    t0: f64,
    t_top: f64,
    x_hat: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = model_params(d, t0, t_top, x_hat)?;
    let data = p.data().map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("r", data.r)?;
    out.set_item("x_star", data.x_star)?;
    out.set_item("rho", data.rho)?;
    out.set_item("a", data.a)?;
    out.set_item("t0_crit", data.t0_crit)?;
    out.set_item("x_hat", p.x_hat)?;
    Ok(out)
}

#[pyfunction]
fn critical_time(d: usize, t_top: f64) -> PyResult<f64> {
    model::critical_time(d, t_top).map_err(to_py)
}

/// Density of the first measure at each point of `xs`.
#[pyfunction]
fn density_mu1(d: usize, t0: f64, t_top: f64, xs: Vec<f64>) -> PyResult<Vec<f64>> {
    let fam = MeasureFamily::new(&model_params(d, t0, t_top, None)?).map_err(to_py)?;
    xs.iter()
        .map(|&x| fam.density_mu1(x).map_err(to_py))
        .collect()
}

/// Total masses of the d measures.
#[pyfunction]
fn masses(d: usize, t0: f64, t_top: f64) -> PyResult<Vec<f64>> {
    let fam = MeasureFamily::new(&model_params(d, t0, t_top, None)?).map_err(to_py)?;
    (1..=d)
        .map(|k| fam.mass(k).map(|m| m.0).map_err(to_py))
        .collect()
}

/// Harmonic moments `k = 0..=kmax` of the droplet.
#[pyfunction]
fn droplet_moments(d: usize, t0: f64, t_top: f64, kmax: usize) -> PyResult<Vec<C64>> {
    let dr = Droplet::new(&model_params(d, t0, t_top, None)?).map_err(to_py)?;
    Ok(dr.harmonic_moments(kmax, DEFAULT_SAMPLES))
}

/// `p_ell` and its derivatives up to `max_deriv` at `z`.
#[pyfunction]
#[pyo3(signature = (d, z, ell=0, max_deriv=0))]
fn airy(d: usize, z: C64, ell: i64, max_deriv: usize) -> PyResult<Vec<C64>> {
    let ga = GenAiry::new(d).map_err(to_py)?;
    Ok(ga.p_eval(ell, z, max_deriv).map_err(to_py)?.to_c64())
}

/// Coefficients `c_1..c_d` and `beta` of the spectral curve.
#[pyfunction]
fn spectral_curve(d: usize, t0: f64, t_top: f64) -> PyResult<(Vec<f64>, f64)> {
    let s = Surface::new(&model_params(d, t0, t_top, None)?).map_err(to_py)?;
    let c = SpectralCurve::from_surface(&s).map_err(to_py)?;
    Ok((c.c, c.beta))
}

/// Zeros of the degree-n polynomial.
#[pyfunction]
#[pyo3(signature = (d, t0, t_top, n, precision_bits=None, x_hat=None))]
fn mop_zeros(
    py: Python<'_>,
    d: usize,
    t0: f64,
    t_top: f64,
    n: usize,
    precision_bits: Option<usize>,
    x_hat: Option<f64>,
) -> PyResult<Vec<C64>> {
    let p = model_params(d, t0, t_top, x_hat)?;
    let opts = MopOptions {
        precision_bits,
        nodes: None,
    };
    let sol = py
        .detach(|| MopSolver::new(&p).and_then(|s| s.solve(n, &opts)))
        .map_err(to_py)?;
    Ok(sol.zeros.zeros)
}

/// The (1,1) entry of the outer parametrix at `z`.
#[pyfunction]
fn m11(d: usize, t0: f64, t_top: f64, z: C64) -> PyResult<C64> {
    let m = M11Evaluator::new(&model_params(d, t0, t_top, None)?).map_err(to_py)?;
    m.m11(z).map_err(to_py)
}

/// Runs the acceptance checks and returns one dict per criterion.
#[pyfunction]
#[pyo3(signature = (d, t0, t_top, ns=Vec::new(), seed=1))]
fn verify<'py>(
    py: Python<'py>,
    d: usize,
    t0: f64,
    t_top: f64,
    ns: Vec<usize>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = VerifyConfig::new(model_params(d, t0, t_top, None)?);
    cfg.ns = ns;
    cfg.seed = seed;
    let results = py.detach(|| run_all(&cfg));
    results
        .iter()
        .map(|r| {
            let out = PyDict::new(py);
            out.set_item("id", r.id)?;
            out.set_item("name", &r.name)?;
            out.set_item("status", r.status.label())?;
            out.set_item("detail", &r.detail)?;
            out.set_item("metrics", r.metrics.clone())?;
            out.set_item("seconds", r.seconds)?;
            Ok(out)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "starmop")]
fn starmop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(params, m)?)?;
    m.add_function(wrap_pyfunction!(critical_time, m)?)?;
    m.add_function(wrap_pyfunction!(density_mu1, m)?)?;
    m.add_function(wrap_pyfunction!(masses, m)?)?;
    m.add_function(wrap_pyfunction!(droplet_moments, m)?)?;
    m.add_function(wrap_pyfunction!(airy, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_curve, m)?)?;
    m.add_function(wrap_pyfunction!(mop_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(m11, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
