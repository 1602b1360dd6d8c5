//! Damped Newton minimization of `W` over the open Reeb cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::futaki::k_semistable_torus;
use crate::polyhedra::Membership;
use crate::weights::{FibrationData, ReebVector};
use crate::wvol::integrals;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    DivergedToBoundary,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub xi: Vec<f64>,
    pub w: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizationReport {
    pub xi_star: ReebVector,
    pub w_star: f64,
    pub grad_norm: f64,
    pub hess_min_eig: f64,
    pub hess_spectrum: Vec<f64>,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub status: Status,
    /// All product Futaki invariants along `±e_i` vanish within the tolerance.
    pub semistable: bool,
}

pub const ARMIJO: f64 = 1e-4;
/// Iterates keep `⟨u, ξ⟩ ≥ FRACTION_TO_BOUNDARY · ⟨u, ξ_k⟩` on every recession ray.
pub const FRACTION_TO_BOUNDARY: f64 = 0.05;
pub const BOUNDARY_EPS: f64 = 1e-8;
pub const BOUNDARY_PATIENCE: usize = 5;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Newton direction, falling back to steepest descent when `H` is not positive definite.
fn direction(g: &[f64], h: &DMatrix<f64>) -> Vec<f64> {
    let gv = DVector::from_column_slice(g);
    if let Some(ch) = h.clone().cholesky() {
        let d = -ch.solve(&gv);
        if d.dot(&gv) < 0.0 {
            return d.as_slice().to_vec();
        }
    }
    g.iter().map(|x| -x).collect()
}

pub fn minimize_w(f: &FibrationData, xi0: &ReebVector, tol: f64, max_iter: usize) -> Result<MinimizationReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    if max_iter == 0 {
        return invalid("max_iter must be positive");
    }
    let start = f.reeb(xi0.coords.clone())?;
    if start.membership != Membership::StrictInterior {
        return invalid(format!("starting point {:?} is not strictly inside the Reeb cone", xi0.coords));
    }
    let rays: Vec<Vec<f64>> = f
        .normalized_polytope()
        .rays()
        .iter()
        .map(|u| {
            let v = u.to_f64();
            let n = norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();

    let mut xi = start.coords;
    let mut cur = integrals(f, &xi, 2)?;
    let mut trace = Vec::new();
    let mut near_boundary = 0;
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    loop {
        let gn = norm(&cur.grad);
        trace.push(TraceEntry { xi: xi.clone(), w: cur.value, grad_norm: gn });
        if gn <= tol {
            status = Status::Converged;
            break;
        }
        let margin = rays.iter().map(|u| dot(u, &xi)).fold(f64::INFINITY, f64::min);
        if margin < BOUNDARY_EPS * norm(&xi).max(1.0) {
            near_boundary += 1;
            if near_boundary >= BOUNDARY_PATIENCE {
                status = Status::DivergedToBoundary;
                break;
            }
        } else {
            near_boundary = 0;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let d = direction(&cur.grad, &cur.hess);
        let mut s: f64 = 1.0;
        for u in &rays {
            let ud = dot(u, &d);
            if ud < 0.0 {
                s = s.min((1.0 - FRACTION_TO_BOUNDARY) * dot(u, &xi) / -ud);
            }
        }
        let slope = dot(&cur.grad, &d);
        let slack = 8.0 * f64::EPSILON * cur.value.abs();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = xi.iter().zip(&d).map(|(x, di)| x + s * di).collect();
            if let Ok(v) = integrals(f, &trial, 2) {
                if v.value <= cur.value + ARMIJO * s * slope + slack {
                    accepted = Some((trial, v));
                    break;
                }
            }
            s *= 0.5;
        }
        match accepted {
            Some((trial, v)) => {
                xi = trial;
                cur = v;
            }
            // no decrease is representable any more
            None => break,
        }
    }

    let eig = SymmetricEigen::new(cur.hess.clone());
    let mut spectrum: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);
    let hess_min_eig = spectrum.first().copied().unwrap_or(f64::NAN);
    let xi_star = f.reeb(xi)?;
    let semistable = k_semistable_torus(f, &xi_star, tol).map(|v| v.semistable_in_torus_directions).unwrap_or(false);
    Ok(MinimizationReport {
        xi_star,
        w_star: cur.value,
        grad_norm: norm(&cur.grad),
        hess_min_eig,
        hess_spectrum: spectrum,
        iterations,
        trace,
        status,
        semistable,
    })
}
