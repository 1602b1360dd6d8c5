//! Exact rational polyhedral geometry.
//!
//! Polyhedra are given by halfspaces `⟨x, normal⟩ ≥ offset`. Vertices and the
//! extreme rays of the recession cone are computed once, at construction, by
//! basic-solution enumeration; inputs are small (rank ≤ 6, a few dozen facets).

mod cone;
mod lattice;
mod triangulate;

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use cone::{dual_cone, min_facet_pairing, Cone, ConeJson, Membership};
pub(crate) use cone::for_each_subset;
pub use lattice::{Constraint, LatticeRegion};
pub use triangulate::{Cell, CellKind, Triangulation};

use crate::error::{invalid, FwvError, Result};
use crate::linalg::{nullspace, solve};
use crate::rational::{rat, rat_string, Rat, RatVec};

/// Closed halfspace `{x : ⟨x, normal⟩ ≥ offset}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: RatVec,
    #[serde(with = "rat_string")]
    pub offset: Rat,
}

impl HalfSpace {
    pub fn new(normal: RatVec, offset: Rat) -> Result<Self> {
        if normal.is_zero() {
            return invalid("halfspace normal must be nonzero");
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn from_ints(normal: &[i64], offset: i64) -> Self {
        HalfSpace { normal: RatVec::from_ints(normal), offset: rat(offset) }
    }

    /// `{x : ⟨x, normal⟩ ≤ bound}` rewritten in the `≥` form.
    pub fn upper(normal: RatVec, bound: Rat) -> Result<Self> {
        Self::new(normal.neg(), -bound)
    }

    pub fn slack(&self, x: &RatVec) -> Rat {
        self.normal.dot(x) - &self.offset
    }

    pub fn contains(&self, x: &RatVec) -> bool {
        !self.slack(x).is_negative()
    }
}

/// Pointed rational polyhedron with its vertices and recession rays.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    rank: usize,
    halfspaces: Vec<HalfSpace>,
    vertices: Vec<RatVec>,
    rays: Vec<RatVec>,
    interior_point: RatVec,
    full_dimensional: bool,
}

impl Polyhedron {
    pub fn new(rank: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if rank == 0 {
            return invalid("lattice rank must be positive");
        }
        for h in &halfspaces {
            if h.normal.len() != rank {
                return invalid(format!("halfspace normal {} has wrong length", h.normal));
            }
            if h.normal.is_zero() {
                return invalid("halfspace normal must be nonzero");
            }
        }
        let normals: Vec<&RatVec> = halfspaces.iter().map(|h| &h.normal).collect();
        if !nullspace(&normals, rank).is_empty() {
            return Err(FwvError::Degenerate("polyhedron contains a line (recession cone not pointed)".into()));
        }
        let vertices = enumerate_vertices(rank, &halfspaces);
        if vertices.is_empty() {
            return Err(FwvError::Empty);
        }
        let owned: Vec<RatVec> = halfspaces.iter().map(|h| h.normal.clone()).collect();
        let (rays, _) = cone::extreme_rays(&owned, rank);

        let mut p = RatVec::zeros(rank);
        for v in &vertices {
            p = p.add(v);
        }
        p = p.scale(&Rat::new(1.into(), (vertices.len() as i64).into()));
        for r in &rays {
            p = p.add(r);
        }
        let full_dimensional = halfspaces.iter().all(|h| h.slack(&p) > Rat::zero());
        Ok(Polyhedron { rank, halfspaces, vertices, rays, interior_point: p, full_dimensional })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[RatVec] {
        &self.vertices
    }

    /// Extreme rays of the recession cone.
    pub fn rays(&self) -> &[RatVec] {
        &self.rays
    }

    /// A relative-interior point (strictly interior when full-dimensional).
    pub fn interior_point(&self) -> &RatVec {
        &self.interior_point
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.full_dimensional
    }

    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn contains(&self, x: &RatVec) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x))
    }

    /// Adds halfspaces, recomputing vertices and rays.
    pub fn intersect(&self, extra: &[HalfSpace]) -> Result<Polyhedron> {
        let mut hs = self.halfspaces.clone();
        hs.extend_from_slice(extra);
        Polyhedron::new(self.rank, hs)
    }

    /// Image under `x ↦ s·x + t` for rational `s > 0`.
    pub fn scale_translate(&self, s: &Rat, t: &RatVec) -> Result<Polyhedron> {
        if !s.is_positive() {
            return invalid("scale factor must be positive");
        }
        let hs = self
            .halfspaces
            .iter()
            .map(|h| HalfSpace { normal: h.normal.clone(), offset: &h.offset * s + h.normal.dot(t) })
            .collect();
        Polyhedron::new(self.rank, hs)
    }

    /// Exact volume (bounded, full-dimensional polyhedra).
    pub fn volume(&self) -> Result<Rat> {
        if !self.is_bounded() {
            return invalid("volume of an unbounded polyhedron");
        }
        let tri = self.triangulate(None)?;
        Ok(tri.cells().iter().map(Cell::simplex_volume).sum())
    }

    pub fn to_json(&self) -> PolyhedronJson {
        PolyhedronJson { rank: self.rank, halfspaces: self.halfspaces.clone() }
    }

    /// Integer points of `m·P` (intersected with `m·truncation`) in lexicographic order.
    pub fn lattice_points(&self, m: u32, truncation: Option<&HalfSpace>) -> Result<Vec<Vec<i64>>> {
        let extra: Vec<Constraint> = truncation.map(|h| Constraint::closed(h.clone())).into_iter().collect();
        let region = LatticeRegion::new(self, m, &extra)?;
        region.points()
    }

    pub fn triangulate(&self, truncation: Option<&HalfSpace>) -> Result<Triangulation> {
        triangulate::triangulate(self, truncation)
    }
}

/// `{u : ⟨u, normal_i⟩ ≥ 0 for all facets i}`.
pub fn recession_cone(p: &Polyhedron) -> Cone {
    let normals: Vec<RatVec> = p.halfspaces.iter().map(|h| h.normal.clone()).collect();
    Cone::from_halfspaces(p.rank, &normals).expect("normals have the polyhedron's rank")
}

fn enumerate_vertices(rank: usize, hs: &[HalfSpace]) -> Vec<RatVec> {
    let mut out: BTreeSet<RatVec> = BTreeSet::new();
    for_each_subset(hs.len(), rank, |idx| {
        let a: Vec<RatVec> = idx.iter().map(|&i| hs[i].normal.clone()).collect();
        let b: Vec<Rat> = idx.iter().map(|&i| hs[i].offset.clone()).collect();
        if let Some(x) = solve(&a, &b) {
            if hs.iter().all(|h| h.contains(&x)) {
                out.insert(x);
            }
        }
    });
    out.into_iter().collect()
}

/// JSON form: `{"rank": n, "halfspaces": [{"normal": ["p/q", ..], "offset": "p/q"}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronJson {
    pub rank: usize,
    pub halfspaces: Vec<HalfSpace>,
}

impl PolyhedronJson {
    pub fn into_polyhedron(self) -> Result<Polyhedron> {
        Polyhedron::new(self.rank, self.halfspaces)
    }
}
