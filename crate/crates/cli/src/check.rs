//! Invariant battery behind the `check` subcommand.

use fwv::rational::{rat, RatVec};
use fwv::weights::{
    dh_joint_m, dh_m, filtration_profile, from_polytope_levels, Convention, FibrationData, ReebVector, Truncation,
    WeightTable,
};
use fwv::wvol::{grad_w, hess_w, w_exact, w_lattice_toric, w_monte_carlo, DEFAULT_BUDGET};
use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::output::CliResult;

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub pass: bool,
    /// Distance to the threshold; negative when the check fails.
    pub slack: f64,
    pub detail: String,
}

fn item(name: &'static str, slack: f64, detail: String) -> CheckItem {
    CheckItem { name, pass: slack >= 0.0, slack, detail }
}

const FD_STEP: f64 = 1e-5;
/// Budget used when an unbounded polyhedron must be cut for table-based checks.
const CHECK_BUDGET: f64 = 5.0;

pub fn fibration_battery(f: &FibrationData, xi: &ReebVector, samples: u64, seed: u64) -> CliResult<Vec<CheckItem>> {
    xi.require_interior()?;
    let n = f.rank();
    let w = |x: &[f64]| w_exact(f, &ReebVector::unconstrained(x.to_vec())).map(|r| r.value);
    let g = grad_w(f, xi)?;
    let h = hess_w(f, xi)?;
    let mut out = Vec::new();

    let mut gerr: f64 = 0.0;
    let mut herr: f64 = 0.0;
    for j in 0..n {
        let mut p = xi.coords.clone();
        let mut q = xi.coords.clone();
        p[j] += FD_STEP;
        q[j] -= FD_STEP;
        gerr = gerr.max((g[j] - (w(&p)? - w(&q)?) / (2.0 * FD_STEP)).abs());
        let gp = grad_w(f, &ReebVector::unconstrained(p))?;
        let gq = grad_w(f, &ReebVector::unconstrained(q))?;
        for i in 0..n {
            herr = herr.max((h[(i, j)] - (gp[i] - gq[i]) / (2.0 * FD_STEP)).abs());
        }
    }
    let gnorm = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let grel = if gnorm > 0.0 { gerr / gnorm } else { gerr };
    out.push(item("gradient-vs-fd", 1e-6 - grel, format!("relative error {grel:.3e} (threshold 1e-6)")));

    let hnorm = h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let hrel = herr / hnorm;
    let asym = (&h - h.transpose()).abs().max();
    let min_eig = SymmetricEigen::new(h.clone()).eigenvalues.min();
    let slack = (1e-4 - hrel).min(if asym == 0.0 { min_eig / hnorm } else { -asym });
    out.push(item(
        "hessian-pd",
        slack,
        format!("FD relative error {hrel:.3e} (threshold 1e-4), min eigenvalue {min_eig:.6e}, asymmetry {asym:.1e}"),
    ));

    let exact = w(&xi.coords)?;
    let lat = |m: u32| w_lattice_toric(f, xi, m, None).map(|r| r.value);
    let c = [25u32, 50].iter().map(|&m| lat(m).map(|v| m as f64 * (v - exact).abs())).collect::<Result<Vec<_>, _>>()?;
    let c = c.into_iter().fold(0.0, f64::max) * 1.1 + 1e-12 * exact;
    let mut slack = f64::INFINITY;
    for m in [100u32, 200] {
        slack = slack.min(c / m as f64 - (lat(m)? - exact).abs());
    }
    let mc = w_monte_carlo(f, xi, samples, seed, DEFAULT_BUDGET)?;
    let mc_slack = 4.0 * mc.error_estimate + 1e-12 * exact - (mc.value - exact).abs();
    out.push(item(
        "three-way-agreement",
        slack.min(mc_slack / exact),
        format!(
            "exact {exact:.12}, lattice error ≤ {c:.3e}/m at m = 100, 200; Monte Carlo {:.12} ± {:.2e} ({samples} samples)",
            mc.value, mc.error_estimate
        ),
    ));

    // shifting P by a lattice vector t multiplies W by e^{-⟨t, ξ⟩/r}
    let mut t = vec![0i64; n];
    t[0] = 1;
    let shifted = FibrationData::new(f.polytope().scale_translate(&rat(1), &RatVec::from_ints(&t))?, f.cartier_index(), "shifted")?;
    let ws = w_exact(&shifted, &ReebVector::unconstrained(xi.coords.clone()))?.value;
    let expected = exact * (-xi.coords[0] / f.cartier_index() as f64).exp();
    let rel = (ws - expected).abs() / expected;
    out.push(item("w-translation", 1e-12 - rel, format!("relative deviation {rel:.3e} (threshold 1e-12)")));

    let trunc = if f.is_bounded() { None } else { Some(Truncation { xi_ref: xi.coords.clone(), budget: CHECK_BUDGET }) };
    let levels: Vec<u32> = (1..=16).collect();
    let table = from_polytope_levels(f, &levels, trunc)?;
    out.extend(table_battery(&table, xi)?);
    Ok(out)
}

pub fn table_battery(t: &WeightTable, xi: &ReebVector) -> CliResult<Vec<CheckItem>> {
    let levels: Vec<u32> = t.levels().keys().copied().filter(|&m| m > 0).collect();
    let mut out = Vec::new();
    let Some(&top) = levels.last() else {
        return Ok(out);
    };

    let other = ReebVector::unconstrained(xi.coords.iter().enumerate().map(|(i, x)| 2.0 * x + 0.5 + i as f64).collect());
    // the summation order follows the atom locations, so allow the N·ε rounding of an N-term sum
    let mut worst: f64 = 0.0;
    let mut slack = f64::INFINITY;
    for &m in &levels {
        let a = dh_m(t, xi, m, Convention::WeightCentered, 0.0)?.total_mass();
        let b = dh_m(t, &other, m, Convention::WeightCentered, 0.0)?.total_mass();
        let rel = (a - b).abs() / a.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        slack = slack.min(t.level(m)?.len() as f64 * f64::EPSILON - rel);
    }
    out.push(item("total-mass-invariance", slack, format!("max relative deviation {worst:.3e} (bound N·ε for N weights)")));

    let shift = 1.5;
    let c = dh_m(t, xi, top, Convention::WeightCentered, shift)?;
    let s = dh_m(t, xi, top, Convention::ValuationShifted, shift)?;
    let exact = c.atoms.len() == s.atoms.len() && c.atoms.iter().zip(&s.atoms).all(|(p, q)| p.0 + shift == q.0 && p.1 == q.1);
    out.push(item(
        "translation-identity",
        if exact { 0.0 } else { -1.0 },
        format!("valuation-shifted atoms equal weight-centered atoms + {shift} at m = {top}"),
    ));

    let cone_ok = match t.reeb_cone() {
        Some(cone) => ReebVector::new(xi.coords.clone(), cone)?.require_interior().is_ok(),
        None => xi.require_interior().is_ok(),
    };
    if cone_ok {
        let joint = dh_joint_m(t, xi, xi, top)?;
        let same = joint.y_marginal()? == dh_m(t, xi, top, Convention::WeightCentered, 0.0)?;
        out.push(item(
            "pushforward-identity",
            if same { 0.0 } else { -1.0 },
            format!("y-marginal of the joint measure with η = ξ equals DH_m at m = {top}"),
        ));
    }

    let lmax = levels
        .iter()
        .map(|&m| dh_m(t, xi, m, Convention::WeightCentered, 0.0).map(|mu| mu.atoms.last().map_or(0.0, |a| a.0)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lmax = match t.truncation() {
        Some(tr) => lmax.min(tr.budget),
        None => lmax,
    };
    let grid: Vec<f64> = (0..40).map(|i| lmax * i as f64 / 39.0).collect();
    let half = levels.len().div_ceil(2);
    let n = t.rank() as i32;
    let ratio = |m: u32| -> CliResult<f64> {
        let prof = filtration_profile(t, xi, m, &grid)?;
        Ok(prof.into_iter().zip(&grid).map(|(d, l)| d as f64 / ((m as f64).powi(n) * (l + 1.0).powi(n))).fold(0.0, f64::max))
    };
    let mut fitted: f64 = 0.0;
    for &m in &levels[..half] {
        fitted = fitted.max(ratio(m)?);
    }
    let mut observed: f64 = 0.0;
    for &m in &levels {
        observed = observed.max(ratio(m)?);
    }
    out.push(item(
        "dimension-estimate",
        (fitted - observed) / fitted.max(f64::MIN_POSITIVE),
        format!("C = {fitted:.6} fitted on m ≤ {}, max observed {observed:.6} for m ≤ {top}", levels[half - 1]),
    ));
    Ok(out)
}
