use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{nullspace, rank};
use crate::polyhedra::HalfSpace;
use crate::rational::{Rat, RatVec};

/// Polyhedral cone, stored in both representations.
///
/// `rays` and `lineality` generate the cone; `facets` are inward normals with
/// `C = {x : ⟨f, x⟩ ≥ 0 for all f}`. Equations appear as opposite normal pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cone {
    dim: usize,
    rays: Vec<RatVec>,
    lineality: Vec<RatVec>,
    facets: Vec<RatVec>,
}

/// Position of a real vector relative to a cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    StrictInterior,
    Boundary,
    Outside,
}

/// Extreme rays and a lineality basis of `{x : ⟨a, x⟩ ≥ 0 for a in normals}`.
///
/// Rays are found by basic-solution enumeration: every extreme ray of the
/// pointed part is the one-dimensional solution of a subsystem of tight rows
/// of rank `dim - 1` together with the lineality equations.
pub(crate) fn extreme_rays(normals: &[RatVec], n: usize) -> (Vec<RatVec>, Vec<RatVec>) {
    let mut uniq: BTreeSet<RatVec> = BTreeSet::new();
    for a in normals {
        if !a.is_zero() {
            uniq.insert(a.primitive());
        }
    }
    let normals: Vec<RatVec> = uniq.into_iter().collect();
    let refs: Vec<&RatVec> = normals.iter().collect();
    let lineality: Vec<RatVec> = canonical_basis(nullspace(&refs, n));
    let d = n - lineality.len();
    if d == 0 {
        return (Vec::new(), lineality);
    }
    let mut rays: BTreeSet<RatVec> = BTreeSet::new();
    let feasible = |x: &RatVec| normals.iter().all(|a| !a.dot(x).is_negative());
    let mut consider = |tight: &[&RatVec]| {
        let mut rows: Vec<&RatVec> = tight.to_vec();
        rows.extend(lineality.iter());
        let ns = nullspace(&rows, n);
        if ns.len() != 1 {
            return;
        }
        for cand in [ns[0].clone(), ns[0].neg()] {
            if feasible(&cand) {
                rays.insert(cand.primitive());
            }
        }
    };
    for_each_subset(normals.len(), d - 1, |idx| {
        let tight: Vec<&RatVec> = idx.iter().map(|&i| &normals[i]).collect();
        consider(&tight);
    });
    (rays.into_iter().collect(), lineality)
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        f(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Reduced echelon basis: a canonical representative of a subspace.
fn canonical_basis(basis: Vec<RatVec>) -> Vec<RatVec> {
    if basis.is_empty() {
        return basis;
    }
    let mut rows: Vec<Vec<Rat>> = basis.into_iter().map(|v| v.0).collect();
    let piv = crate::linalg::rref(&mut rows);
    rows.truncate(piv.len());
    rows.into_iter().map(|r| RatVec(r).primitive()).collect()
}

fn hrep_of(rays: &[RatVec], lineality: &[RatVec], n: usize) -> Vec<RatVec> {
    let mut gens: Vec<RatVec> = rays.to_vec();
    for l in lineality {
        gens.push(l.clone());
        gens.push(l.neg());
    }
    let (drays, dlin) = extreme_rays(&gens, n);
    with_both_signs(drays, &dlin)
}

fn with_both_signs(mut rays: Vec<RatVec>, lin: &[RatVec]) -> Vec<RatVec> {
    for l in lin {
        rays.push(l.clone());
        rays.push(l.neg());
    }
    rays
}

impl Cone {
    /// `{x : ⟨a, x⟩ ≥ 0}` for the given normals.
    pub fn from_halfspaces(dim: usize, normals: &[RatVec]) -> Result<Self> {
        if normals.iter().any(|a| a.len() != dim) {
            return invalid("cone normal has wrong length");
        }
        let (rays, lineality) = extreme_rays(normals, dim);
        let facets = hrep_of(&rays, &lineality, dim);
        Ok(Cone { dim, rays, lineality, facets })
    }

    /// Conic hull of the given generators (the empty list gives `{0}`).
    pub fn from_rays(dim: usize, gens: &[RatVec]) -> Result<Self> {
        if gens.iter().any(|g| g.len() != dim) {
            return invalid("cone generator has wrong length");
        }
        let facets = hrep_of(gens, &[], dim);
        let (rays, lineality) = extreme_rays(&facets, dim);
        Ok(Cone { dim, rays, lineality, facets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[RatVec] {
        &self.rays
    }

    pub fn lineality(&self) -> &[RatVec] {
        &self.lineality
    }

    pub fn facets(&self) -> &[RatVec] {
        &self.facets
    }

    pub fn is_pointed(&self) -> bool {
        self.lineality.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.rays.is_empty() && self.lineality.is_empty()
    }

    pub fn is_full_space(&self) -> bool {
        self.lineality.len() == self.dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        let mut gens: Vec<&RatVec> = self.rays.iter().collect();
        gens.extend(self.lineality.iter());
        rank(&gens) == self.dim
    }

    pub fn contains(&self, x: &RatVec) -> bool {
        self.facets.iter().all(|f| !f.dot(x).is_negative())
    }

    pub fn contains_in_interior(&self, x: &RatVec) -> bool {
        self.facets.iter().all(|f| f.dot(x) > Rat::zero())
    }

    /// Membership of a float vector; pairings within `eps·|f|·|x|` of zero count as boundary.
    pub fn membership_f64(&self, x: &[f64], eps: f64) -> Membership {
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut on_boundary = false;
        for f in &self.facets {
            let ff = f.to_f64();
            let fnorm = ff.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s: f64 = ff.iter().zip(x).map(|(a, b)| a * b).sum();
            let scale = eps * fnorm * xn.max(1.0);
            if s < -scale {
                return Membership::Outside;
            }
            if s <= scale {
                on_boundary = true;
            }
        }
        if on_boundary {
            Membership::Boundary
        } else {
            Membership::StrictInterior
        }
    }

    pub fn membership_exact(&self, x: &RatVec) -> Membership {
        if !self.contains(x) {
            Membership::Outside
        } else if self.contains_in_interior(x) {
            Membership::StrictInterior
        } else {
            Membership::Boundary
        }
    }

    /// Set equality of two cones.
    pub fn same_set(&self, other: &Cone) -> bool {
        if self.dim != other.dim || self.lineality.len() != other.lineality.len() {
            return false;
        }
        self.rays.iter().all(|r| other.contains(r))
            && other.rays.iter().all(|r| self.contains(r))
            && self.lineality.iter().all(|l| other.contains(l) && other.contains(&l.neg()))
            && other.lineality.iter().all(|l| self.contains(l) && self.contains(&l.neg()))
    }

    /// Sum of unit-normalized generators; a strictly interior point of a
    /// full-dimensional pointed cone.
    pub fn ray_center_f64(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for r in &self.rays {
            let v = r.to_f64();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci += vi / norm;
            }
        }
        c
    }

    pub fn to_json(&self) -> ConeJson {
        ConeJson::Rays {
            rays: self.rays.iter().map(|r| r.to_i64().unwrap_or_default()).collect(),
        }
    }
}

/// `dual_cone(C) = {η : ⟨α, η⟩ ≥ 0 for all α in C}`.
pub fn dual_cone(c: &Cone) -> Cone {
    let normals = with_both_signs(c.rays.clone(), &c.lineality);
    Cone::from_halfspaces(c.dim, &normals).expect("normals share the cone's dimension")
}

/// JSON form of a cone: primitive integer rays, or halfspaces through the origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConeJson {
    Rays { rays: Vec<Vec<i64>> },
    Halfspaces { halfspaces: Vec<HalfSpace> },
}

impl ConeJson {
    pub fn into_cone(self) -> Result<Cone> {
        match self {
            ConeJson::Rays { rays } => {
                let dim = rays.first().map_or(0, Vec::len);
                if dim == 0 {
                    return invalid("cone needs at least one ray to fix its dimension");
                }
                let gens: Vec<RatVec> = rays.iter().map(|r| RatVec::from_ints(r)).collect();
                Cone::from_rays(dim, &gens)
            }
            ConeJson::Halfspaces { halfspaces } => {
                let dim = halfspaces.first().map_or(0, |h| h.normal.len());
                if dim == 0 {
                    return invalid("cone needs at least one halfspace to fix its dimension");
                }
                if halfspaces.iter().any(|h| !h.offset.is_zero()) {
                    return invalid("cone halfspaces must pass through the origin");
                }
                let normals: Vec<RatVec> = halfspaces.into_iter().map(|h| h.normal).collect();
                Cone::from_halfspaces(dim, &normals)
            }
        }
    }
}

/// Smallest pairing `⟨f, x⟩ / |f|` over the facets (infinite for the full space).
pub fn min_facet_pairing(c: &Cone, x: &[f64]) -> f64 {
    c.facets
        .iter()
        .map(|f| {
            let ff = f.to_f64();
            let n = ff.iter().map(|v| v * v).sum::<f64>().sqrt();
            ff.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n
        })
        .fold(f64::INFINITY, f64::min)
}
