//! Weighted and normalized volumes of toric klt germs `(U_σ, 0)`.
//!
//! A monomial valuation is a vector `ξ` in the interior of `σ`; its log
//! discrepancy is `⟨m_σ, ξ⟩` where `⟨m_σ, u⟩ = 1` on every primitive ray.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FwvError, Result};
use crate::linalg::{rank, solve};
use crate::minimize::{minimize_w, MinimizationReport, DEFAULT_MAX_ITER};
use crate::polyhedra::{dual_cone, Cone, Constraint, HalfSpace, LatticeRegion, Membership, Polyhedron};
use crate::rational::{from_f64, parse_rat, rat, format_rat, Rat, RatVec};
use crate::weights::{from_polytope, FibrationData, ReebVector, Truncation, WeightTable, MEMBERSHIP_EPS};

#[derive(Clone, Debug)]
pub struct ToricGermData {
    sigma: Cone,
    dual: Cone,
    m_sigma: RatVec,
    /// `σ∨` as a polyhedron with apex at the origin.
    dual_polyhedron: Polyhedron,
    label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    Lattice,
    Polytope,
}

impl ToricGermData {
    pub fn new(sigma_rays: &[Vec<i64>], label: impl Into<String>) -> Result<Self> {
        let n = match sigma_rays.first() {
            Some(r) => r.len(),
            None => return invalid("σ needs at least one ray"),
        };
        if n == 0 || sigma_rays.iter().any(|r| r.len() != n) {
            return invalid("rays of σ must share a positive length");
        }
        if sigma_rays.iter().any(|r| r.iter().all(|&x| x == 0)) {
            return invalid("rays of σ must be nonzero");
        }
        let gens: Vec<RatVec> = sigma_rays.iter().map(|r| RatVec::from_ints(r)).collect();
        let sigma = Cone::from_rays(n, &gens)?;
        if !sigma.is_pointed() || !sigma.is_full_dimensional() {
            return Err(FwvError::Degenerate("σ must be pointed and full-dimensional".into()));
        }
        let rays = sigma.rays();
        let mut basis: Vec<RatVec> = Vec::new();
        for r in rays {
            let mut trial: Vec<&RatVec> = basis.iter().collect();
            trial.push(r);
            if rank(&trial) == trial.len() {
                basis.push(r.clone());
            }
        }
        let ones = vec![Rat::one(); n];
        let m_sigma = solve(&basis, &ones).ok_or_else(|| FwvError::Degenerate("rays of σ do not span".into()))?;
        if rays.iter().any(|u| m_sigma.dot(u) != Rat::one()) {
            return invalid("σ is not ℚ-Gorenstein: no m_σ with ⟨m_σ, u⟩ = 1 on every primitive ray");
        }
        let dual = dual_cone(&sigma);
        let hs = rays.iter().map(|u| HalfSpace::new(u.clone(), Rat::zero())).collect::<Result<Vec<_>>>()?;
        let dual_polyhedron = Polyhedron::new(n, hs)?;
        Ok(ToricGermData { sigma, dual, m_sigma, dual_polyhedron, label: label.into() })
    }

    /// `ℂⁿ`: σ is the positive orthant.
    pub fn smooth(n: usize) -> Self {
        let rays: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        Self::new(&rays, format!("C{n}")).expect("orthant is smooth")
    }

    pub fn rank(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &Cone {
        &self.sigma
    }

    pub fn dual(&self) -> &Cone {
        &self.dual
    }

    pub fn m_sigma(&self) -> &RatVec {
        &self.m_sigma
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Smallest `r` with `r·m_σ` integral.
    pub fn gorenstein_index(&self) -> u32 {
        let mut l = num_bigint::BigInt::one();
        for c in &self.m_sigma.0 {
            l = l.lcm(c.denom());
        }
        num_traits::ToPrimitive::to_u32(&l).unwrap_or(u32::MAX)
    }

    pub fn valuation(&self, xi: Vec<f64>) -> Result<ReebVector> {
        ReebVector::new(xi, &self.sigma)
    }

    fn interior(&self, xi: &ReebVector) -> Result<()> {
        if xi.dim() != self.rank() {
            return invalid("ξ has the wrong length");
        }
        match self.sigma.membership_f64(&xi.coords, MEMBERSHIP_EPS) {
            Membership::StrictInterior => Ok(()),
            m => Err(FwvError::Divergent(format!("ξ = {:?} is {:?} relative to σ", xi.coords, m))),
        }
    }

    /// `A(v_ξ) = ⟨m_σ, ξ⟩`.
    pub fn log_discrepancy(&self, xi: &ReebVector) -> Result<f64> {
        self.interior(xi)?;
        Ok(self.m_sigma.dot_f64(&xi.coords))
    }

    /// `vol(v_ξ)`: `n!/mⁿ · #{α ∈ σ∨ ∩ M : ⟨α, ξ⟩ < m}` or `n!·vol{x ∈ σ∨ : ⟨x, ξ⟩ ≤ 1}`.
    pub fn vol_valuation(&self, xi: &ReebVector, method: VolumeMethod, m: u32) -> Result<f64> {
        self.interior(xi)?;
        let n = self.rank();
        match method {
            VolumeMethod::Polytope => {
                let tri = self.dual_polyhedron.triangulate(None)?;
                let mut total = 0.0;
                for c in tri.cells() {
                    let d = crate::rational::to_f64(&c.abs_det);
                    total += d / c.rays.iter().map(|u| u.dot_f64(&xi.coords)).product::<f64>();
                }
                Ok(total)
            }
            VolumeMethod::Lattice => {
                if m == 0 {
                    return invalid("m must be positive");
                }
                let neg = RatVec(xi.coords.iter().map(|&x| from_f64(-x)).collect::<Result<Vec<_>>>()?);
                let cut = Constraint::strict(HalfSpace::new(neg, rat(-1))?);
                let region = LatticeRegion::new(&self.dual_polyhedron, m, &[cut])?;
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                Ok(fact * region.count() as f64 / (m as f64).powi(n as i32))
            }
        }
    }

    /// `W(v_ξ) = e^{A(ξ)} vol(ξ)`.
    pub fn w_germ(&self, xi: &ReebVector) -> Result<f64> {
        Ok(self.log_discrepancy(xi)?.exp() * self.vol_valuation(xi, VolumeMethod::Polytope, 1)?)
    }

    /// `A(ξ)ⁿ vol(ξ)`.
    pub fn nvol(&self, xi: &ReebVector) -> Result<f64> {
        let a = self.log_discrepancy(xi)?;
        Ok(a.powi(self.rank() as i32) * self.vol_valuation(xi, VolumeMethod::Polytope, 1)?)
    }

    /// The identity fibration `U_σ → U_σ`: moment polyhedron `σ∨ − m_σ`, stored as `r(σ∨ − m_σ)`.
    pub fn to_fibration(&self) -> Result<FibrationData> {
        let r = self.gorenstein_index();
        let hs = self
            .sigma
            .rays()
            .iter()
            .map(|u| HalfSpace::new(u.clone(), rat(-(r as i64))))
            .collect::<Result<Vec<_>>>()?;
        FibrationData::new(Polyhedron::new(self.rank(), hs)?, r, self.label.clone())
    }

    /// Weights of `𝒪(U_σ)` (lattice points of `σ∨`), truncated along `ξ_ref`.
    ///
    /// With the valuation-shifted convention and `A = A(ξ)` these tables give `DH(v_ξ)`.
    pub fn weight_table(&self, m_max: u32, truncation: Truncation) -> Result<WeightTable> {
        let f = FibrationData::new(self.dual_polyhedron.clone(), 1, self.label.clone())?;
        from_polytope(&f, m_max, Some(truncation))
    }

    pub fn to_json(&self) -> GermJson {
        GermJson {
            label: self.label.clone(),
            sigma_rays: self.sigma.rays().iter().map(|r| r.to_i64().expect("primitive rays are integral")).collect(),
            m_sigma: Some(self.m_sigma.0.iter().map(format_rat).collect()),
        }
    }
}

/// `{"sigma_rays": [[ints]], "m_sigma": ["p/q", …]}`; `m_sigma` is optional and checked when given.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermJson {
    #[serde(default)]
    pub label: String,
    pub sigma_rays: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_sigma: Option<Vec<String>>,
}

impl GermJson {
    pub fn into_germ(self) -> Result<ToricGermData> {
        let g = ToricGermData::new(&self.sigma_rays, self.label)?;
        if let Some(ms) = self.m_sigma {
            let given = RatVec(ms.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?);
            if &given != g.m_sigma() {
                return invalid(format!("m_sigma {given} does not match the computed {}", g.m_sigma()));
            }
        }
        Ok(g)
    }
}

pub fn minimize_w_germ(g: &ToricGermData, xi0: &ReebVector, tol: f64) -> Result<MinimizationReport> {
    let f = g.to_fibration()?;
    minimize_w(&f, xi0, tol, DEFAULT_MAX_ITER)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub germ_w_star: f64,
    pub global_w_star: f64,
    pub holds: bool,
    pub tolerance: f64,
}

/// Checks `W(germ) ≥ W(fibration) − tol` between the two minimal weighted volumes.
pub fn compare_local_global(f: &FibrationData, g: &ToricGermData, tol: f64) -> Result<Comparison> {
    let global = minimize_w(f, &f.default_reeb(), tol.min(1e-9), DEFAULT_MAX_ITER)?;
    let gf = g.to_fibration()?;
    let local = minimize_w(&gf, &gf.default_reeb(), tol.min(1e-9), DEFAULT_MAX_ITER)?;
    for r in [&global, &local] {
        if r.status != crate::minimize::Status::Converged {
            return Err(FwvError::NotConverged(format!("minimization ended with {:?}", r.status)));
        }
    }
    Ok(Comparison {
        germ_w_star: local.w_star,
        global_w_star: global.w_star,
        holds: local.w_star >= global.w_star - tol,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{dh_m, Convention};
    use crate::wvol::w_lattice;
    use std::f64::consts::E;

    #[test]
    fn smooth_plane() {
        let g = ToricGermData::smooth(2);
        assert_eq!(g.m_sigma(), &RatVec::from_ints(&[1, 1]));
        let xi = g.valuation(vec![1.0, 1.0]).unwrap();
        assert_eq!(g.log_discrepancy(&xi).unwrap(), 2.0);
        assert_eq!(g.log_discrepancy(&g.valuation(vec![3.0, 5.0]).unwrap()).unwrap(), 8.0);
        assert!((g.vol_valuation(&xi, VolumeMethod::Polytope, 1).unwrap() - 1.0).abs() < 1e-15);
        // 2/m² · m(m+1)/2
        let lat = g.vol_valuation(&xi, VolumeMethod::Lattice, 40).unwrap();
        assert!((lat - 41.0 / 40.0).abs() < 1e-15);
        assert!((g.w_germ(&xi).unwrap() - E * E).abs() < 1e-13);
        let xi2 = g.valuation(vec![2.0, 2.0]).unwrap();
        assert!((g.w_germ(&xi2).unwrap() - E.powi(4) / 4.0).abs() < 1e-12);
        assert!((g.nvol(&g.valuation(vec![1.0, 4.0]).unwrap()).unwrap() - 6.25).abs() < 1e-14);
    }

    #[test]
    fn germ_fibration_matches_closed_form() {
        let g = ToricGermData::smooth(2);
        let f = g.to_fibration().unwrap();
        for xi in [[1.0, 1.0], [0.4, 1.9], [2.5, 0.7]] {
            let v = g.valuation(xi.to_vec()).unwrap();
            let w = crate::wvol::w_exact(&f, &f.reeb(xi.to_vec()).unwrap()).unwrap().value;
            assert!((w - g.w_germ(&v).unwrap()).abs() < 1e-12 * w);
        }
    }

    #[test]
    fn a1_singularity_normalized_volume() {
        // σ = cone((1,0),(1,2)); min nvol = 4/|ℤ/2| = 2 at ξ = (1,1)
        let g = ToricGermData::new(&[vec![1, 0], vec![1, 2]], "A1").unwrap();
        assert_eq!(g.m_sigma(), &RatVec::from_ints(&[1, 0]));
        let v = g.nvol(&g.valuation(vec![1.0, 1.0]).unwrap()).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!(g.nvol(&g.valuation(vec![1.0, 0.6]).unwrap()).unwrap() > 2.0);
    }

    #[test]
    fn non_gorenstein_index_and_rejection() {
        let g = ToricGermData::new(&[vec![0, 1], vec![3, 2]], "Q").unwrap();
        assert_eq!(g.gorenstein_index(), 3);
        let f = g.to_fibration().unwrap();
        assert_eq!(f.cartier_index(), 3);
        let bad = ToricGermData::new(&[vec![1, 0, 1], vec![0, 1, 1], vec![-1, 0, 1], vec![0, -1, 2]], "bad");
        assert!(matches!(bad, Err(FwvError::Invalid(_))));
    }

    #[test]
    fn line_germ_shifted_measure() {
        let g = ToricGermData::smooth(1);
        let t = g.weight_table(400, Truncation { xi_ref: vec![1.0], budget: 45.0 }).unwrap();
        let xi = g.valuation(vec![1.0]).unwrap();
        let a = g.log_discrepancy(&xi).unwrap();
        let mu = dh_m(&t, &xi, 4, Convention::ValuationShifted, a).unwrap();
        assert_eq!(&mu.atoms[..3], &[(1.0, 0.25), (1.25, 0.25), (1.5, 0.25)]);
        let w = w_lattice(&t, &xi, 400, a).unwrap();
        assert!((w.value - E).abs() < 5e-3, "{w:?}");
    }

    #[test]
    fn minimizers() {
        let g = ToricGermData::smooth(2);
        let r = minimize_w_germ(&g, &g.valuation(vec![0.4, 1.9]).unwrap(), 1e-11).unwrap();
        assert!((r.w_star - E * E).abs() < 1e-12);
        let g1 = ToricGermData::smooth(1);
        let r1 = minimize_w_germ(&g1, &g1.valuation(vec![3.0]).unwrap(), 1e-11).unwrap();
        assert!((r1.xi_star.coords[0] - 1.0).abs() < 1e-10);
        assert!((r1.w_star - E).abs() < 1e-12);
    }

    #[test]
    fn comparisons() {
        let c = compare_local_global(&crate::fixtures::blowup_c2(), &ToricGermData::smooth(2), 1e-9).unwrap();
        assert!(c.holds);
        let c = compare_local_global(&crate::fixtures::p1(), &ToricGermData::smooth(1), 1e-9).unwrap();
        assert!(c.holds && (c.global_w_star - 2.0).abs() < 1e-12);
        let id = compare_local_global(&crate::fixtures::affine_space(2), &ToricGermData::smooth(2), 1e-9).unwrap();
        assert!(id.holds && (id.germ_w_star - id.global_w_star).abs() < 1e-9);
    }
}
