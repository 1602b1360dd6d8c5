//! Pulling triangulation of a pointed polyhedron.
//!
//! The polyhedron is homogenized to the cone over `P × {1}`, generated by
//! `(v, 1)` for vertices and `(u, 0)` for recession rays. That cone is
//! triangulated by pulling the lowest-indexed generator of every face, and
//! each simplicial cone is cut back at height one. A cell is therefore
//! `conv(vertices) + cone(rays)` with affinely independent data: a simplex
//! when it has no rays, a simplicial cone when it has one vertex.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{FwvError, Result};
use crate::linalg::{det, rank};
use crate::polyhedra::{HalfSpace, Polyhedron};
use crate::rational::{rat, Rat, RatVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Simplex,
    SimplicialCone,
    Mixed,
}

/// `conv(vertices) + cone(rays)`, with `abs_det = |det[v_i − v_0, u_j]|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub vertices: Vec<RatVec>,
    pub rays: Vec<RatVec>,
    pub abs_det: Rat,
}

impl Cell {
    pub fn kind(&self) -> CellKind {
        if self.rays.is_empty() {
            CellKind::Simplex
        } else if self.vertices.len() == 1 {
            CellKind::SimplicialCone
        } else {
            CellKind::Mixed
        }
    }

    /// Euclidean volume of a simplex cell; zero for unbounded cells.
    pub fn simplex_volume(&self) -> Rat {
        if !self.rays.is_empty() {
            return Rat::zero();
        }
        let n = self.vertices.len() - 1;
        let fact: i64 = (1..=n as i64).product();
        &self.abs_det / rat(fact)
    }
}

#[derive(Clone, Debug)]
pub struct Triangulation {
    rank: usize,
    cells: Vec<Cell>,
}

impl Triangulation {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.kind() == CellKind::Simplex)
    }

    pub fn cones(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.kind() == CellKind::SimplicialCone)
    }

    /// Sum of simplex volumes.
    pub fn bounded_volume(&self) -> Rat {
        self.cells.iter().map(Cell::simplex_volume).sum()
    }
}

struct Homogenized {
    gens: Vec<RatVec>,
    /// `zero[h][g]`: generator `g` lies on inequality `h`.
    zero: Vec<Vec<bool>>,
}

impl Homogenized {
    fn facets_of(&self, face: &[usize], k: usize) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        for row in &self.zero {
            let sub: Vec<usize> = face.iter().copied().filter(|&g| row[g]).collect();
            if sub.len() < face.len() && sub.len() + 1 >= k && !out.contains(&sub) {
                let refs: Vec<&RatVec> = sub.iter().map(|&g| &self.gens[g]).collect();
                if rank(&refs) + 1 == k {
                    out.insert(sub);
                }
            }
        }
        out
    }

    fn pull(&self, face: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
        if face.len() == k {
            out.push(face.to_vec());
            return;
        }
        let apex = face[0];
        for facet in self.facets_of(face, k) {
            if facet.contains(&apex) {
                continue;
            }
            let mut sub = Vec::new();
            self.pull(&facet, k - 1, &mut sub);
            for mut cell in sub {
                cell.insert(0, apex);
                out.push(cell);
            }
        }
    }
}

pub(crate) fn triangulate(p: &Polyhedron, truncation: Option<&HalfSpace>) -> Result<Triangulation> {
    if !p.is_full_dimensional() {
        return Err(FwvError::Degenerate("triangulation needs a full-dimensional polyhedron".into()));
    }
    let owned;
    let p = match truncation {
        Some(h) => {
            owned = p.intersect(std::slice::from_ref(h))?;
            if !owned.is_full_dimensional() {
                return Err(FwvError::Degenerate("truncation leaves a lower-dimensional piece".into()));
            }
            &owned
        }
        None => p,
    };
    let n = p.rank();
    let lift = |v: &RatVec, t: i64| {
        let mut w = v.0.clone();
        w.push(rat(t));
        RatVec(w)
    };
    let nv = p.vertices().len();
    let mut gens: Vec<RatVec> = p.vertices().iter().map(|v| lift(v, 1)).collect();
    gens.extend(p.rays().iter().map(|u| lift(u, 0)));

    let mut ineqs: Vec<RatVec> = p
        .halfspaces()
        .iter()
        .map(|h| {
            let mut a = h.normal.0.clone();
            a.push(-h.offset.clone());
            RatVec(a)
        })
        .collect();
    if !p.rays().is_empty() {
        ineqs.push(RatVec::unit(n + 1, n));
    }
    let zero: Vec<Vec<bool>> = ineqs.iter().map(|a| gens.iter().map(|g| a.dot(g).is_zero()).collect()).collect();
    let hom = Homogenized { gens, zero };

    let all: Vec<usize> = (0..hom.gens.len()).collect();
    let mut raw = Vec::new();
    hom.pull(&all, n + 1, &mut raw);

    let cells = raw
        .into_iter()
        .map(|idx| {
            let mat: Vec<RatVec> = idx.iter().map(|&g| hom.gens[g].clone()).collect();
            let abs_det = det(&mat).abs();
            let vertices = idx.iter().filter(|&&g| g < nv).map(|&g| p.vertices()[g].clone()).collect();
            let rays = idx.iter().filter(|&&g| g >= nv).map(|&g| p.rays()[g - nv].clone()).collect();
            Cell { vertices, rays, abs_det }
        })
        .collect();
    Ok(Triangulation { rank: n, cells })
}
