//! Python bindings. Inputs are the JSON documents the CLI reads, passed as a
//! string or as the equivalent dict.

use fwv::germs::{GermJson, ToricGermData};
use fwv::minimize::{minimize_w, DEFAULT_MAX_ITER, DEFAULT_TOL};
use fwv::okounkov::{growth_and_body, Semigroup};
use fwv::weights::{dh_m, from_polytope, Convention, FibrationData, FibrationJson, ReebVector};
use fwv::wvol::{grad_w, hess_w, w_exact, w_lattice_toric, w_monte_carlo, DEFAULT_BUDGET};
use fwv::FwvError;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

create_exception!(fwv_py, Error, PyValueError);
create_exception!(fwv_py, DivergentError, Error);
create_exception!(fwv_py, NotConvergedError, Error);

fn err(e: FwvError) -> PyErr {
    match e {
        FwvError::Divergent(_) => DivergentError::new_err(e.to_string()),
        FwvError::NotConverged(_) | FwvError::BudgetOverflow { .. } => NotConvergedError::new_err(e.to_string()),
        _ => Error::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    Error::new_err(format!("invalid input: {e}"))
}

fn document(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    let mut v: Value = serde_json::from_str(&text).map_err(json_err)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("xi");
    }
    Ok(v)
}

fn germ_of(obj: &Bound<'_, PyAny>) -> PyResult<ToricGermData> {
    let g: GermJson = serde_json::from_value(document(obj)?).map_err(json_err)?;
    g.into_germ().map_err(err)
}

/// Fibrations directly; germs through their identity fibration.
fn fibration_of(obj: &Bound<'_, PyAny>) -> PyResult<FibrationData> {
    let v = document(obj)?;
    if v.get("sigma_rays").is_some() {
        let g: GermJson = serde_json::from_value(v).map_err(json_err)?;
        return g.into_germ().and_then(|g| g.to_fibration()).map_err(err);
    }
    let f: FibrationJson = serde_json::from_value(v).map_err(json_err)?;
    f.into_fibration().map_err(err)
}

fn reeb(f: &FibrationData, xi: Option<Vec<f64>>) -> PyResult<ReebVector> {
    let r = match xi {
        Some(x) => {
            if x.len() != f.rank() || x.iter().any(|c| !c.is_finite()) {
                return Err(Error::new_err(format!("xi must be {} finite numbers", f.rank())));
            }
            f.reeb(x).map_err(err)?
        }
        None => f.default_reeb(),
    };
    r.require_interior().map_err(err)?;
    Ok(r)
}

/// Weighted volume by `method` in {"exact", "lattice", "monte-carlo"}.
#[pyfunction]
#[pyo3(signature = (fibration, xi=None, method="exact", m=100, samples=1_000_000, seed=0))]
fn wvol(fibration: &Bound<'_, PyAny>, xi: Option<Vec<f64>>, method: &str, m: u32, samples: u64, seed: u64) -> PyResult<f64> {
    let f = fibration_of(fibration)?;
    let r = reeb(&f, xi)?;
    let out = match method {
        "exact" => w_exact(&f, &r),
        "lattice" => w_lattice_toric(&f, &r, m, None),
        "monte-carlo" => w_monte_carlo(&f, &r, samples, seed, DEFAULT_BUDGET),
        other => return Err(Error::new_err(format!("unknown method {other:?}"))),
    };
    Ok(out.map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (fibration, xi=None))]
fn grad(fibration: &Bound<'_, PyAny>, xi: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let f = fibration_of(fibration)?;
    grad_w(&f, &reeb(&f, xi)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (fibration, xi=None))]
fn hess(fibration: &Bound<'_, PyAny>, xi: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let f = fibration_of(fibration)?;
    let h = hess_w(&f, &reeb(&f, xi)?).map_err(err)?;
    Ok(h.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Minimization report as a dict, same fields as `fwv minimize`.
#[pyfunction]
#[pyo3(signature = (fibration, start=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER))]
fn minimize<'py>(
    py: Python<'py>,
    fibration: &Bound<'py, PyAny>,
    start: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = fibration_of(fibration)?;
    let report = minimize_w(&f, &reeb(&f, start)?, tol, max_iter).map_err(err)?;
    let text = serde_json::to_string(&report).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Atoms `(location, mass)` of the level-`m` Duistermaat–Heckman measure.
#[pyfunction]
#[pyo3(signature = (fibration, xi, m))]
fn dhm(fibration: &Bound<'_, PyAny>, xi: Vec<f64>, m: u32) -> PyResult<Vec<(f64, f64)>> {
    let f = fibration_of(fibration)?;
    if !f.is_bounded() {
        return Err(Error::new_err("dhm needs a bounded polytope; use the CLI with --truncation"));
    }
    let r = reeb(&f, Some(xi))?;
    let t = from_polytope(&f, m, None).map_err(err)?;
    Ok(dh_m(&t, &r, m, Convention::WeightCentered, 0.0).map_err(err)?.atoms)
}

#[pyfunction]
#[pyo3(signature = (germ, xi=None))]
fn nvol(germ: &Bound<'_, PyAny>, xi: Option<Vec<f64>>) -> PyResult<f64> {
    let g = germ_of(germ)?;
    let xi = match xi {
        Some(x) => g.valuation(x).map_err(err)?,
        None => g.to_fibration().map_err(err)?.default_reeb(),
    };
    g.nvol(&xi).map_err(err)
}

#[pyfunction]
fn gorenstein_index(germ: &Bound<'_, PyAny>) -> PyResult<u32> {
    Ok(germ_of(germ)?.gorenstein_index())
}

/// `([count(m)/mⁿ for m = 1..=m_max], vol(Δ))` for a semigroup.
#[pyfunction]
#[pyo3(signature = (semigroup, m=50))]
fn okounkov(semigroup: &Bound<'_, PyAny>, m: u32) -> PyResult<(Vec<f64>, f64)> {
    let s: Semigroup = serde_json::from_value(document(semigroup)?).map_err(json_err)?;
    let s = Semigroup::new(s.generators).map_err(err)?;
    let g = growth_and_body(&s, m).map_err(err)?;
    Ok((g.sequence.iter().map(|p| p.ratio).collect(), g.body_volume))
}

#[pymodule]
fn fwv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Error", m.py().get_type::<Error>())?;
    m.add("DivergentError", m.py().get_type::<DivergentError>())?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add_function(wrap_pyfunction!(wvol, m)?)?;
    m.add_function(wrap_pyfunction!(grad, m)?)?;
    m.add_function(wrap_pyfunction!(hess, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(dhm, m)?)?;
    m.add_function(wrap_pyfunction!(nvol, m)?)?;
    m.add_function(wrap_pyfunction!(gorenstein_index, m)?)?;
    m.add_function(wrap_pyfunction!(okounkov, m)?)?;
    Ok(())
}
