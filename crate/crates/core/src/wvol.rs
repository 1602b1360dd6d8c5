//! Weighted volume `W(ξ) = ∫_P e^{-⟨x, ξ⟩} dx` and its derivatives.
//!
//! Three evaluators: normalized lattice sums over a weight table (or streamed
//! directly over `m·P`), closed forms per triangulation cell, and Monte Carlo
//! over the same cells. A cell `conv(v_0..v_k) + cone(u_1..u_l)` contributes
//! `D · φ(s) · Π 1/r_j` with `s_i = ⟨v_i, ξ⟩`, `r_j = ⟨u_j, ξ⟩`, `D` the lifted
//! determinant and `φ` the exponential integral over the standard simplex.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divdiff::simplex_exp;
use crate::error::{invalid, FwvError, Result};
use crate::polyhedra::{Constraint, HalfSpace, LatticeRegion, Triangulation};
use crate::rational::{from_f64, rat, RatVec};
use crate::weights::{pairwise_sum, FibrationData, ReebVector, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lattice,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WvolResult {
    pub value: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_used: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub error_estimate: f64,
}

/// Triangulation cell in floating point.
#[derive(Clone, Debug)]
pub struct FloatCell {
    pub vertices: Vec<Vec<f64>>,
    pub rays: Vec<Vec<f64>>,
    pub det: f64,
}

pub(crate) fn float_cells(t: &Triangulation) -> Vec<FloatCell> {
    t.cells()
        .iter()
        .map(|c| FloatCell {
            vertices: c.vertices.iter().map(RatVec::to_f64).collect(),
            rays: c.rays.iter().map(RatVec::to_f64).collect(),
            det: crate::rational::to_f64(&c.abs_det),
        })
        .collect()
}

/// Relative threshold for `⟨u, ξ⟩ > 0` on recession rays.
pub const RAY_EPS: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(f: &FibrationData, xi: &[f64]) -> Result<()> {
    if xi.len() != f.rank() {
        return invalid(format!("Reeb vector has length {}, polytope rank is {}", xi.len(), f.rank()));
    }
    if xi.iter().any(|x| !x.is_finite()) {
        return invalid("Reeb vector has non-finite coordinates");
    }
    Ok(())
}

/// Fails unless `⟨u, ξ⟩` is safely positive on every recession ray.
pub fn check_rays(f: &FibrationData, xi: &[f64]) -> Result<()> {
    check_dim(f, xi)?;
    let xn = norm(xi);
    for u in f.normalized_polytope().rays() {
        let uf = u.to_f64();
        let r = dot(&uf, xi);
        if r <= RAY_EPS * norm(&uf) * xn.max(1.0) {
            return Err(FwvError::Divergent(format!(
                "⟨u, ξ⟩ = {r:e} on recession ray {u}: ξ is not in the open Reeb cone"
            )));
        }
    }
    Ok(())
}

/// Value, gradient and Hessian of the exact integral.
#[derive(Clone, Debug)]
pub struct Integrals {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Evaluates `∫_P e^{-⟨x, ξ⟩} dx` with derivatives up to `order` (0, 1 or 2).
pub fn integrals(f: &FibrationData, xi: &[f64], order: u8) -> Result<Integrals> {
    check_rays(f, xi)?;
    let n = f.rank();
    let parts: Vec<Integrals> = f.float_cells().iter().map(|c| cell_integrals(c, xi, n, order)).collect();
    let value = pairwise_sum(&parts.iter().map(|p| p.value).collect::<Vec<_>>());
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    if order >= 1 {
        for (a, g) in grad.iter_mut().enumerate() {
            *g = pairwise_sum(&parts.iter().map(|p| p.grad[a]).collect::<Vec<_>>());
        }
    }
    if order >= 2 {
        // per-cell accumulation order differs between (a, b) and (b, a); average so H is exactly symmetric
        for a in 0..n {
            for b in a..n {
                let h = pairwise_sum(&parts.iter().map(|p| 0.5 * (p.hess[(a, b)] + p.hess[(b, a)])).collect::<Vec<_>>());
                hess[(a, b)] = h;
                hess[(b, a)] = h;
            }
        }
    }
    Ok(Integrals { value, grad, hess })
}

fn cell_integrals(c: &FloatCell, xi: &[f64], n: usize, order: u8) -> Integrals {
    let s: Vec<f64> = c.vertices.iter().map(|v| dot(v, xi)).collect();
    let r: Vec<f64> = c.rays.iter().map(|u| dot(u, xi)).collect();
    let phi = simplex_exp(&s, order);
    let psi: f64 = c.det / r.iter().product::<f64>();
    let value = psi * phi.value;
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    if order >= 1 {
        // ∂ψ/∂r_j = −ψ/r_j
        for (i, v) in c.vertices.iter().enumerate() {
            for a in 0..n {
                grad[a] += psi * phi.grad[i] * v[a];
            }
        }
        for (j, u) in c.rays.iter().enumerate() {
            let psi_j = -psi / r[j];
            for a in 0..n {
                grad[a] += phi.value * psi_j * u[a];
            }
        }
    }
    if order >= 2 {
        for (i, vi) in c.vertices.iter().enumerate() {
            for (l, vl) in c.vertices.iter().enumerate() {
                let w = psi * phi.hess[i][l];
                for a in 0..n {
                    for b in 0..n {
                        hess[(a, b)] += w * vi[a] * vl[b];
                    }
                }
            }
        }
        for (i, vi) in c.vertices.iter().enumerate() {
            for (j, uj) in c.rays.iter().enumerate() {
                let w = phi.grad[i] * (-psi / r[j]);
                for a in 0..n {
                    for b in 0..n {
                        hess[(a, b)] += w * (vi[a] * uj[b] + uj[a] * vi[b]);
                    }
                }
            }
        }
        for (j, uj) in c.rays.iter().enumerate() {
            for (l, ul) in c.rays.iter().enumerate() {
                let psi_jl = if j == l { 2.0 * psi / (r[j] * r[j]) } else { psi / (r[j] * r[l]) };
                let w = phi.value * psi_jl;
                for a in 0..n {
                    for b in 0..n {
                        hess[(a, b)] += w * uj[a] * ul[b];
                    }
                }
            }
        }
    }
    Integrals { value, grad, hess }
}

/// Exact weighted volume from per-cell closed forms.
pub fn w_exact(f: &FibrationData, xi: &ReebVector) -> Result<WvolResult> {
    let v = integrals(f, &xi.coords, 0)?;
    Ok(WvolResult {
        value: v.value,
        method: Method::Exact,
        m_used: None,
        cells_used: Some(f.float_cells().len()),
        samples: None,
        error_estimate: 1e-14 * v.value.abs(),
    })
}

/// `∂W/∂ξ_j = −∫_P x_j e^{-⟨x, ξ⟩} dx`.
pub fn grad_w(f: &FibrationData, xi: &ReebVector) -> Result<Vec<f64>> {
    Ok(integrals(f, &xi.coords, 1)?.grad)
}

/// `∂²W/∂ξ_i∂ξ_j = ∫_P x_i x_j e^{-⟨x, ξ⟩} dx`.
pub fn hess_w(f: &FibrationData, xi: &ReebVector) -> Result<DMatrix<f64>> {
    Ok(integrals(f, &xi.coords, 2)?.hess)
}

fn lattice_level_sum(w: &WeightTable, xi: &[f64], m: u32) -> Result<f64> {
    let level = w.level(m)?;
    let s = w.cartier_index() as f64 * m as f64;
    let terms: Vec<f64> = level
        .iter(w.rank())
        .map(|(alpha, d)| {
            let x: f64 = alpha.iter().zip(xi).map(|(&a, &b)| a as f64 * b).sum::<f64>() / s;
            d as f64 * (-x).exp()
        })
        .collect();
    Ok(pairwise_sum(&terms) / s.powi(w.rank() as i32))
}

/// `e^A (rm)^{-n} Σ_α dim R_{m,α} e^{-⟨α, ξ⟩/(rm)}`; the error estimate compares with level `⌊m/2⌋`.
pub fn w_lattice(w: &WeightTable, xi: &ReebVector, m: u32, a: f64) -> Result<WvolResult> {
    if xi.dim() != w.rank() {
        return invalid("Reeb vector length differs from the table rank");
    }
    if m == 0 {
        return invalid("w_lattice needs m ≥ 1");
    }
    if let Some(cone) = w.reeb_cone() {
        if !cone.is_full_space() {
            ReebVector::new(xi.coords.clone(), cone)?.require_interior()?;
        }
    }
    let value = a.exp() * lattice_level_sum(w, &xi.coords, m)?;
    let half = m / 2;
    let error_estimate = if half >= 1 && w.levels().contains_key(&half) {
        (value - a.exp() * lattice_level_sum(w, &xi.coords, half)?).abs()
    } else {
        0.0
    };
    if !value.is_finite() {
        return Err(FwvError::Divergent("lattice sum overflowed".into()));
    }
    Ok(WvolResult { value, method: Method::Lattice, m_used: Some(m), cells_used: None, samples: None, error_estimate })
}

/// Default truncation budget for streamed lattice sums over unbounded polytopes.
pub const DEFAULT_BUDGET: f64 = 40.0;

/// Lattice sum over `m·P` streamed fiber by fiber, without building a table.
///
/// Along the last coordinate the exponential sum is geometric and summed in
/// closed form. Unbounded polytopes are truncated at `⟨x, ξ⟩ ≤ budget`
/// (discarded tail `O(e^{-budget} budgetⁿ)`).
pub fn w_lattice_toric(f: &FibrationData, xi: &ReebVector, m: u32, budget: Option<f64>) -> Result<WvolResult> {
    check_dim(f, &xi.coords)?;
    if m == 0 {
        return invalid("w_lattice needs m ≥ 1");
    }
    let value = streamed_sum(f, &xi.coords, m, budget)?;
    let error_estimate = if m >= 2 { (value - streamed_sum(f, &xi.coords, m / 2, budget)?).abs() } else { 0.0 };
    Ok(WvolResult { value, method: Method::Lattice, m_used: Some(m), cells_used: None, samples: None, error_estimate })
}

fn streamed_sum(f: &FibrationData, xi: &[f64], m: u32, budget: Option<f64>) -> Result<f64> {
    let extra = if f.is_bounded() {
        vec![]
    } else {
        check_rays(f, xi)?;
        let t = budget.unwrap_or(DEFAULT_BUDGET);
        if !(t.is_finite() && t > 0.0) {
            return invalid("truncation budget must be positive");
        }
        let normal = RatVec(xi.iter().map(|&x| from_f64(x)).collect::<Result<Vec<_>>>()?);
        let bound = from_f64(t)? * rat(f.cartier_index() as i64);
        vec![Constraint::closed(HalfSpace::upper(normal, bound)?)]
    };
    let region = LatticeRegion::new(f.polytope(), m, &extra)?;
    let n = f.rank();
    let s = f.cartier_index() as f64 * m as f64;
    let c = xi[n - 1] / s;
    let slab_sums: Vec<f64> = region
        .slabs()
        .into_par_iter()
        .map(|x0| {
            let mut terms = Vec::new();
            region.for_each_fiber_in_slab(x0, &mut |prefix, lo, hi| {
                let a: f64 = prefix.iter().zip(xi).map(|(&p, &x)| p as f64 * x).sum::<f64>() / s;
                let len = (hi - lo + 1) as f64;
                // anchor at the largest term so the geometric factor stays ≤ len
                let anchor = if c >= 0.0 { lo } else { hi } as f64;
                let geo = if c == 0.0 { len } else { (-c.abs() * len).exp_m1() / (-c.abs()).exp_m1() };
                terms.push((-(a + anchor * c)).exp() * geo);
            });
            pairwise_sum(&terms)
        })
        .collect();
    let total = pairwise_sum(&slab_sums) / s.powi(n as i32);
    if !total.is_finite() {
        return Err(FwvError::Divergent("lattice sum overflowed".into()));
    }
    Ok(total)
}

/// Samples per RNG stream; streams are independent of the thread count.
const CHUNK: u64 = 1 << 16;

/// Monte Carlo estimate stratified by triangulation cell.
///
/// The simplex part of a cell is sampled uniformly; each ray parameter is
/// drawn from an exponential of half the integrand's rate, truncated where
/// the integrand has decayed by `e^{-truncation}`. Samples are allocated in
/// proportion to a per-cell magnitude bound (at least two per cell).
pub fn w_monte_carlo(f: &FibrationData, xi: &ReebVector, samples: u64, seed: u64, truncation: f64) -> Result<WvolResult> {
    check_rays(f, &xi.coords)?;
    if samples == 0 {
        return invalid("samples must be positive");
    }
    if !(truncation.is_finite() && truncation > 0.0) {
        return invalid("truncation must be positive");
    }
    let cells = f.float_cells();
    let bounds: Vec<f64> = cells
        .iter()
        .map(|c| {
            let s_min = c.vertices.iter().map(|v| dot(v, &xi.coords)).fold(f64::INFINITY, f64::min);
            let fact: f64 = (1..c.vertices.len()).map(|k| k as f64).product();
            c.det / fact * (-s_min).exp() * c.rays.iter().map(|u| 2.0 / dot(u, &xi.coords)).product::<f64>()
        })
        .collect();
    let total_bound: f64 = bounds.iter().sum();
    let alloc: Vec<u64> = bounds
        .iter()
        .map(|b| ((samples as f64 * b / total_bound).round() as u64).max(2))
        .collect();

    let mut jobs = Vec::new();
    for (ci, &k) in alloc.iter().enumerate() {
        let mut start = 0;
        while start < k {
            jobs.push((ci, start / CHUNK, (k - start).min(CHUNK)));
            start += CHUNK;
        }
    }
    let partial: Vec<(usize, f64, f64)> = jobs
        .par_iter()
        .map(|&(ci, chunk, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((ci as u64) << 32) | chunk);
            let (s1, s2) = sample_cell(&cells[ci], &xi.coords, truncation, count, &mut rng);
            (ci, s1, s2)
        })
        .collect();
    let mut sums = vec![(0.0, 0.0); cells.len()];
    for (ci, s1, s2) in partial {
        sums[ci].0 += s1;
        sums[ci].1 += s2;
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for (ci, &(s1, s2)) in sums.iter().enumerate() {
        let k = alloc[ci] as f64;
        let mean = s1 / k;
        let v = ((s2 / k - mean * mean) * k / (k - 1.0)).max(0.0);
        value += mean;
        var += v / k;
    }
    Ok(WvolResult {
        value,
        method: Method::MonteCarlo,
        m_used: None,
        cells_used: Some(cells.len()),
        samples: Some(alloc.iter().sum()),
        error_estimate: var.sqrt(),
    })
}

/// Returns `(Σ w, Σ w²)` for `count` importance-weighted samples of one cell.
fn sample_cell(c: &FloatCell, xi: &[f64], truncation: f64, count: u64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let k = c.vertices.len();
    let s: Vec<f64> = c.vertices.iter().map(|v| dot(v, xi)).collect();
    let r: Vec<f64> = c.rays.iter().map(|u| dot(u, xi)).collect();
    let fact: f64 = (1..k).map(|i| i as f64).product();
    let simplex_vol = c.det / fact;
    let mut e = vec![0.0; k];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..count {
        // uniform point of the simplex via normalized exponentials
        let mut tot = 0.0;
        for ei in e.iter_mut() {
            *ei = -(1.0 - rng.random::<f64>()).ln();
            tot += *ei;
        }
        let mut expo: f64 = e.iter().zip(&s).map(|(l, si)| l / tot * si).sum();
        let mut weight = simplex_vol;
        for &rj in &r {
            let rho = 0.5 * rj;
            let len = truncation / rj;
            let mass = -(-rho * len).exp_m1();
            let u: f64 = rng.random();
            let mu = -(-u * mass).ln_1p() / rho;
            expo += mu * rj;
            // divide by the proposal density ρ e^{-ρμ} / mass
            weight *= mass / rho * (rho * mu).exp();
        }
        let w = weight * (-expo).exp();
        s1 += w;
        s2 += w * w;
    }
    (s1, s2)
}
