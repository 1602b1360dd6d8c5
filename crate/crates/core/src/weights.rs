//! Graded weight tables `dim R_{m,α}` and the discrete Duistermaat–Heckman
//! measures built from them.
//!
//! Tables store the weights of `−rK` (Cartier index `r`); every public measure
//! is rescaled by `1/r`, so locations and masses refer to `−K`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FwvError, Result};
use crate::polyhedra::{
    dual_cone, recession_cone, Cone, HalfSpace, Membership, Polyhedron, PolyhedronJson, Triangulation,
};
use crate::rational::{from_f64, rat, Rat, RatVec};
use crate::wvol::{float_cells, FloatCell};

/// Toric presentation of a polarized Fano fibration.
#[derive(Clone, Debug)]
pub struct FibrationData {
    polytope: Polyhedron,
    normalized: Polyhedron,
    cartier_index: u32,
    recession: Cone,
    reeb_cone: Cone,
    label: String,
    triangulation: Triangulation,
    cells: Vec<FloatCell>,
}

impl FibrationData {
    /// `polytope` is the moment polyhedron of `−rK` for `r = cartier_index`.
    pub fn new(polytope: Polyhedron, cartier_index: u32, label: impl Into<String>) -> Result<Self> {
        if cartier_index == 0 {
            return invalid("Cartier index must be positive");
        }
        if !polytope.is_full_dimensional() {
            return Err(FwvError::Degenerate("moment polyhedron must be full-dimensional".into()));
        }
        let recession = recession_cone(&polytope);
        let reeb_cone = dual_cone(&recession);
        let inv = Rat::new(1.into(), (cartier_index as i64).into());
        let normalized = polytope.scale_translate(&inv, &RatVec::zeros(polytope.rank()))?;
        let triangulation = normalized.triangulate(None)?;
        let cells = float_cells(&triangulation);
        Ok(FibrationData {
            polytope,
            normalized,
            cartier_index,
            recession,
            reeb_cone,
            label: label.into(),
            triangulation,
            cells,
        })
    }

    pub fn polytope(&self) -> &Polyhedron {
        &self.polytope
    }

    /// Moment polyhedron of `−K` (the stored polytope divided by `r`).
    pub fn normalized_polytope(&self) -> &Polyhedron {
        &self.normalized
    }

    pub fn cartier_index(&self) -> u32 {
        self.cartier_index
    }

    /// Triangulation of the normalized polytope.
    pub fn triangulation(&self) -> &Triangulation {
        &self.triangulation
    }

    pub fn float_cells(&self) -> &[FloatCell] {
        &self.cells
    }

    pub fn recession(&self) -> &Cone {
        &self.recession
    }

    pub fn reeb_cone(&self) -> &Cone {
        &self.reeb_cone
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rank(&self) -> usize {
        self.polytope.rank()
    }

    pub fn is_bounded(&self) -> bool {
        self.polytope.is_bounded()
    }

    pub fn reeb(&self, coords: Vec<f64>) -> Result<ReebVector> {
        ReebVector::new(coords, &self.reeb_cone)
    }

    /// Default starting point: sum of unit Reeb-cone rays (the origin for bounded polytopes).
    pub fn default_reeb(&self) -> ReebVector {
        let c = self.reeb_cone.ray_center_f64();
        ReebVector::new(c, &self.reeb_cone).expect("ray center has the right length")
    }

    pub fn to_json(&self) -> FibrationJson {
        FibrationJson {
            label: self.label.clone(),
            cartier_index: self.cartier_index,
            polytope: self.polytope.to_json(),
        }
    }
}

fn default_r() -> u32 {
    1
}

/// `{"label": …, "cartier_index": r, "polytope": {polyhedron}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibrationJson {
    #[serde(default)]
    pub label: String,
    #[serde(default = "default_r")]
    pub cartier_index: u32,
    pub polytope: PolyhedronJson,
}

impl FibrationJson {
    pub fn into_fibration(self) -> Result<FibrationData> {
        FibrationData::new(self.polytope.into_polyhedron()?, self.cartier_index, self.label)
    }
}

/// Element of `Lie(T)` with its position relative to the Reeb cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebVector {
    pub coords: Vec<f64>,
    pub membership: Membership,
}

/// Relative tolerance for classifying float Reeb vectors against cone facets.
pub const MEMBERSHIP_EPS: f64 = 1e-12;

impl ReebVector {
    pub fn new(coords: Vec<f64>, cone: &Cone) -> Result<Self> {
        if coords.len() != cone.dim() {
            return invalid(format!("Reeb vector has length {}, expected {}", coords.len(), cone.dim()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return invalid("Reeb vector has non-finite coordinates");
        }
        let membership = cone.membership_f64(&coords, MEMBERSHIP_EPS);
        Ok(ReebVector { coords, membership })
    }

    /// Exact classification for rational coordinates.
    pub fn from_rational(coords: &RatVec, cone: &Cone) -> Result<Self> {
        if coords.len() != cone.dim() {
            return invalid("Reeb vector has wrong length");
        }
        Ok(ReebVector { coords: coords.to_f64(), membership: cone.membership_exact(coords) })
    }

    /// A vector with no cone constraint (used with user-supplied tables).
    pub fn unconstrained(coords: Vec<f64>) -> Self {
        ReebVector { coords, membership: Membership::StrictInterior }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn require_interior(&self) -> Result<()> {
        match self.membership {
            Membership::StrictInterior => Ok(()),
            m => Err(FwvError::Divergent(format!("Reeb vector {:?} is {:?} relative to the Reeb cone", self.coords, m))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableSource {
    #[serde(rename = "toric")]
    Toric,
    #[serde(rename = "user")]
    User,
}

/// Weights `α` (row-major, `rank` entries each) and multiplicities of one level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightLevel {
    pub alphas: Vec<i64>,
    pub dims: Vec<u64>,
}

impl WeightLevel {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn iter(&self, rank: usize) -> impl Iterator<Item = (&[i64], u64)> + '_ {
        self.alphas.chunks(rank.max(1)).zip(self.dims.iter().copied())
    }

    pub fn total_dim(&self) -> u64 {
        self.dims.iter().sum()
    }
}

/// Truncation `⟨α/m, ξ_ref⟩ ≤ budget` applied to unbounded tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub xi_ref: Vec<f64>,
    pub budget: f64,
}

/// Graded table of weight-space dimensions.
#[derive(Clone, Debug)]
pub struct WeightTable {
    rank: usize,
    cartier_index: u32,
    levels: BTreeMap<u32, WeightLevel>,
    source: TableSource,
    reeb_cone: Option<Cone>,
    truncation: Option<Truncation>,
}

impl WeightTable {
    pub fn from_user(rank: usize, levels: BTreeMap<u32, Vec<(Vec<i64>, u64)>>) -> Result<Self> {
        if rank == 0 {
            return invalid("rank must be positive");
        }
        let mut out = BTreeMap::new();
        for (m, entries) in levels {
            let mut seen = std::collections::BTreeSet::new();
            let mut level = WeightLevel::default();
            for (alpha, dim) in entries {
                if alpha.len() != rank {
                    return invalid(format!("weight {alpha:?} at level {m} has wrong length"));
                }
                if dim == 0 {
                    return invalid(format!("weight {alpha:?} at level {m} has zero dimension"));
                }
                if !seen.insert(alpha.clone()) {
                    return invalid(format!("weight {alpha:?} repeated at level {m}"));
                }
                level.alphas.extend_from_slice(&alpha);
                level.dims.push(dim);
            }
            out.insert(m, level);
        }
        Ok(WeightTable {
            rank,
            cartier_index: 1,
            levels: out,
            source: TableSource::User,
            reeb_cone: None,
            truncation: None,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cartier_index(&self) -> u32 {
        self.cartier_index
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn reeb_cone(&self) -> Option<&Cone> {
        self.reeb_cone.as_ref()
    }

    pub fn levels(&self) -> &BTreeMap<u32, WeightLevel> {
        &self.levels
    }

    pub fn level(&self, m: u32) -> Result<&WeightLevel> {
        self.levels.get(&m).ok_or(FwvError::MissingLevel(m))
    }

    /// Normalizing factor `r·m` for level `m`.
    fn scale(&self, m: u32) -> f64 {
        self.cartier_index as f64 * m as f64
    }

    pub fn to_json(&self) -> WeightTableJson {
        let levels = self
            .levels
            .iter()
            .map(|(m, lvl)| {
                let entries = lvl.iter(self.rank).map(|(a, d)| WeightEntry { alpha: a.to_vec(), dim: d as i64 }).collect();
                (m.to_string(), entries)
            })
            .collect();
        WeightTableJson {
            rank: self.rank,
            levels,
            source: self.source,
        }
    }
}

/// Builds the toric table `α ∈ m·P ∩ ℤⁿ` (each of dimension one) for `m = 0..=m_max`.
///
/// Unbounded polytopes need a truncation along a strictly interior reference
/// Reeb vector; the budget is in `−K` normalization.
pub fn from_polytope(f: &FibrationData, m_max: u32, truncation: Option<Truncation>) -> Result<WeightTable> {
    let levels: Vec<u32> = (1..=m_max).collect();
    from_polytope_levels(f, &levels, truncation)
}

/// Like [`from_polytope`] but only for the listed levels (level 0 is always present).
pub fn from_polytope_levels(f: &FibrationData, ms: &[u32], truncation: Option<Truncation>) -> Result<WeightTable> {
    let n = f.rank();
    let trunc_h = match (&truncation, f.is_bounded()) {
        (None, true) => None,
        (None, false) => {
            return Err(FwvError::Unbounded("unbounded moment polyhedron needs a truncation budget".into()));
        }
        (Some(t), _) => {
            let xi = f.reeb(t.xi_ref.clone())?;
            if xi.membership != Membership::StrictInterior {
                return invalid("reference Reeb vector for truncation must be strictly interior");
            }
            if !(t.budget.is_finite() && t.budget > 0.0) {
                return invalid("truncation budget must be positive");
            }
            let normal = RatVec(t.xi_ref.iter().map(|&x| from_f64(x)).collect::<Result<Vec<_>>>()?);
            let bound = from_f64(t.budget)? * rat(f.cartier_index() as i64);
            if normal.is_zero() {
                None
            } else {
                Some(HalfSpace::upper(normal, bound)?)
            }
        }
    };
    let mut levels = BTreeMap::new();
    levels.insert(0, WeightLevel { alphas: vec![0; n], dims: vec![1] });
    let built: Vec<(u32, Result<Vec<Vec<i64>>>)> = ms
        .par_iter()
        .filter(|&&m| m > 0)
        .map(|&m| (m, f.polytope().lattice_points(m, trunc_h.as_ref())))
        .collect();
    for (m, pts) in built {
        let pts = pts?;
        let dims = vec![1; pts.len()];
        let alphas = pts.into_iter().flatten().collect();
        levels.insert(m, WeightLevel { alphas, dims });
    }
    Ok(WeightTable {
        rank: n,
        cartier_index: f.cartier_index(),
        levels,
        source: TableSource::Toric,
        reeb_cone: Some(f.reeb_cone().clone()),
        truncation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub alpha: Vec<i64>,
    pub dim: i64,
}

/// `{"rank": n, "levels": {"1": [{"alpha": [..], "dim": k}, …]}, "source": "user"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightTableJson {
    pub rank: usize,
    pub levels: BTreeMap<String, Vec<WeightEntry>>,
    pub source: TableSource,
}

impl WeightTableJson {
    pub fn into_table(self) -> Result<WeightTable> {
        let mut levels = BTreeMap::new();
        for (k, entries) in self.levels {
            let m: u32 = k.parse().map_err(|_| FwvError::Invalid(format!("level key {k:?} is not an integer")))?;
            let mut out = Vec::with_capacity(entries.len());
            for e in entries {
                if e.dim <= 0 {
                    return invalid(format!("weight {:?} at level {m} has non-positive dimension {}", e.alpha, e.dim));
                }
                out.push((e.alpha, e.dim as u64));
            }
            levels.insert(m, out);
        }
        WeightTable::from_user(self.rank, levels)
    }
}

/// Finite atomic measure on ℝ.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Sorts by location and merges atoms at identical locations.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(x, w)| !x.is_finite() || !w.is_finite() || *w < 0.0) {
            return invalid("measure atoms must be finite with nonnegative mass");
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|a| a.1).collect::<Vec<_>>())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|&(x, w)| w * f(x)).collect::<Vec<_>>())
    }

    /// `μ((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.0 <= x).map(|a| a.1).sum()
    }

    /// `sup_x |μ((−∞, x]) − F(x)|` against a continuous CDF `F`.
    pub fn cdf_sup_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for &(x, w) in &self.atoms {
            let fx = f(x);
            worst = worst.max((acc - fx).abs());
            acc += w;
            worst = worst.max((acc - fx).abs());
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("location,mass\n");
        for (x, w) in &self.atoms {
            s.push_str(&format!("{},{}\n", fmt12(*x), fmt12(*w)));
        }
        s
    }
}

/// Finite atomic measure on ℝ².
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiscreteMeasure2D {
    pub atoms: Vec<(f64, f64, f64)>,
}

impl DiscreteMeasure2D {
    pub fn from_atoms(mut atoms: Vec<(f64, f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(x, y, w)| !x.is_finite() || !y.is_finite() || !w.is_finite() || *w < 0.0) {
            return invalid("measure atoms must be finite with nonnegative mass");
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, y, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x && last.1 == y => last.2 += w,
                _ => merged.push((x, y, w)),
            }
        }
        Ok(DiscreteMeasure2D { atoms: merged })
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|a| a.2).collect::<Vec<_>>())
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|&(x, y, w)| w * f(x, y)).collect::<Vec<_>>())
    }

    /// Pushforward to the second coordinate.
    pub fn y_marginal(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_atoms(self.atoms.iter().map(|&(_, y, w)| (y, w)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,mass\n");
        for (x, y, w) in &self.atoms {
            s.push_str(&format!("{},{},{}\n", fmt12(*x), fmt12(*y), fmt12(*w)));
        }
        s
    }
}

/// Decimal with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{r}")
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// How `dh_m` places atoms: at `⟨α/m, ξ⟩`, or translated by the log discrepancy `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    WeightCentered,
    ValuationShifted,
}

fn check_xi(w: &WeightTable, xi: &ReebVector) -> Result<()> {
    if xi.dim() != w.rank {
        return invalid(format!("Reeb vector has length {}, table rank is {}", xi.dim(), w.rank));
    }
    Ok(())
}

/// Discrete DH measure at level `m`: atoms at `⟨α, ξ⟩/(rm)` (plus `A` when
/// valuation-shifted) with mass `dim/(rm)ⁿ`.
pub fn dh_m(w: &WeightTable, xi: &ReebVector, m: u32, convention: Convention, a: f64) -> Result<DiscreteMeasure> {
    check_xi(w, xi)?;
    if m == 0 {
        return invalid("dh_m needs m ≥ 1");
    }
    let level = w.level(m)?;
    let s = w.scale(m);
    let mass_scale = s.powi(w.rank as i32);
    let shift = match convention {
        Convention::WeightCentered => 0.0,
        Convention::ValuationShifted => a,
    };
    let atoms: Vec<(f64, f64)> = level
        .iter(w.rank)
        .map(|(alpha, d)| (dot_i(alpha, &xi.coords) / s + shift, d as f64 / mass_scale))
        .collect();
    if atoms.iter().any(|a| !a.0.is_finite()) {
        return invalid("non-finite atom location");
    }
    DiscreteMeasure::from_atoms(atoms)
}

/// Joint measure with atoms at `(⟨α, ξ⟩, ⟨α, η⟩)/(rm)` and mass `dim/(rm)ⁿ`.
pub fn dh_joint_m(w: &WeightTable, xi: &ReebVector, eta: &ReebVector, m: u32) -> Result<DiscreteMeasure2D> {
    check_xi(w, xi)?;
    check_xi(w, eta)?;
    if let Some(cone) = &w.reeb_cone {
        let fresh = ReebVector::new(xi.coords.clone(), cone)?;
        fresh.require_interior()?;
    } else {
        xi.require_interior()?;
    }
    if m == 0 {
        return invalid("dh_joint_m needs m ≥ 1");
    }
    let level = w.level(m)?;
    let s = w.scale(m);
    let mass_scale = s.powi(w.rank as i32);
    let atoms = level
        .iter(w.rank)
        .map(|(alpha, d)| (dot_i(alpha, &xi.coords) / s, dot_i(alpha, &eta.coords) / s, d as f64 / mass_scale))
        .collect();
    DiscreteMeasure2D::from_atoms(atoms)
}

/// `Σ dim R_{m,α}` over weights with `⟨α, ξ⟩/(rm) ≤ λ`.
pub fn filtration_codim(w: &WeightTable, xi: &ReebVector, m: u32, lambda: f64) -> Result<u64> {
    check_xi(w, xi)?;
    let level = w.level(m)?;
    let s = w.scale(m).max(1.0);
    let tol = 1e-12 * (1.0 + lambda.abs());
    Ok(level
        .iter(w.rank)
        .filter(|(alpha, _)| dot_i(alpha, &xi.coords) / s <= lambda + tol)
        .map(|(_, d)| d)
        .sum())
}

/// `filtration_codim` at every `λ` of a grid, sorting the level once.
pub fn filtration_profile(w: &WeightTable, xi: &ReebVector, m: u32, lambdas: &[f64]) -> Result<Vec<u64>> {
    check_xi(w, xi)?;
    let level = w.level(m)?;
    let s = w.scale(m).max(1.0);
    let mut locs: Vec<(f64, u64)> = level.iter(w.rank).map(|(a, d)| (dot_i(a, &xi.coords) / s, d)).collect();
    locs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = Vec::with_capacity(locs.len() + 1);
    prefix.push(0u64);
    for (_, d) in &locs {
        prefix.push(prefix.last().unwrap() + d);
    }
    Ok(lambdas
        .iter()
        .map(|&l| {
            let tol = 1e-12 * (1.0 + l.abs());
            prefix[locs.partition_point(|p| p.0 <= l + tol)]
        })
        .collect())
}

/// Smallest `C` with `codim(m, λ) ≤ C·mⁿ(λ+1)ⁿ` on the given levels and grid (λ ≥ 0).
pub fn fit_dimension_constant(w: &WeightTable, xi: &ReebVector, ms: &[u32], lambdas: &[f64]) -> Result<f64> {
    let n = w.rank as i32;
    let mut c: f64 = 0.0;
    if lambdas.iter().any(|&l| l < 0.0) {
        return invalid("dimension estimate is stated for λ ≥ 0");
    }
    for &m in ms {
        for (d, &l) in filtration_profile(w, xi, m, lambdas)?.into_iter().zip(lambdas) {
            c = c.max(d as f64 / ((m as f64).powi(n) * (l + 1.0).powi(n)));
        }
    }
    Ok(c)
}

fn dot_i(alpha: &[i64], xi: &[f64]) -> f64 {
    alpha.iter().zip(xi).map(|(&a, &x)| a as f64 * x).sum()
}

/// Region `{x ≥ −A, |y| ≤ A·x + B}` bounding the support of joint measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBound {
    pub a: f64,
    pub b: f64,
}

impl SupportBound {
    /// Constants derived from the vertices and recession rays of the moment polyhedron.
    pub fn from_fibration(f: &FibrationData, xi: &ReebVector, eta: &ReebVector) -> Result<Self> {
        xi.require_interior()?;
        let p = f.normalized_polytope();
        let xs: Vec<f64> = p.vertices().iter().map(|v| v.dot_f64(&xi.coords)).collect();
        let ys: Vec<f64> = p.vertices().iter().map(|v| v.dot_f64(&eta.coords).abs()).collect();
        let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().copied().fold(0.0, f64::max);
        let mut kappa: f64 = 0.0;
        for u in p.rays() {
            let ux = u.dot_f64(&xi.coords);
            if ux <= 0.0 {
                return Err(FwvError::Divergent("ray pairs non-positively with ξ".into()));
            }
            kappa = kappa.max(u.dot_f64(&eta.coords).abs() / ux);
        }
        let neg = (-x_min).max(0.0);
        // |y| ≤ κ(x − x_min) + y_max on P, then relax the slope to A ≥ κ
        let a = kappa.max(neg).max(f64::MIN_POSITIVE);
        let b = y_max + kappa * neg + (a - kappa) * neg;
        Ok(SupportBound { a, b })
    }

    /// Tightest constants covering the given atoms for a fixed slope floor.
    pub fn fit(measures: &[DiscreteMeasure2D]) -> Self {
        let mut a: f64 = 0.0;
        for mu in measures {
            for &(x, _, _) in &mu.atoms {
                a = a.max(-x);
            }
        }
        let a = a.max(1.0);
        let mut b: f64 = 0.0;
        for mu in measures {
            for &(x, y, _) in &mu.atoms {
                b = b.max(y.abs() - a * x);
            }
        }
        SupportBound { a, b }
    }

    pub fn contains(&self, x: f64, y: f64, slack: f64) -> bool {
        x >= -self.a - slack && y.abs() <= self.a * x + self.b + slack
    }

    pub fn contains_measure(&self, mu: &DiscreteMeasure2D, slack: f64) -> bool {
        mu.atoms.iter().all(|&(x, y, _)| self.contains(x, y, slack))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn projective_line_levels() {
        let t = from_polytope(&fixtures::p1(), 2, None).unwrap();
        assert_eq!(t.level(0).unwrap().len(), 1);
        assert_eq!(t.level(1).unwrap().len(), 3);
        assert_eq!(t.level(2).unwrap().len(), 5);
        assert!(t.level(2).unwrap().dims.iter().all(|&d| d == 1));
    }

    #[test]
    fn m_max_zero_is_constants() {
        let t = from_polytope(&fixtures::p2(), 0, None).unwrap();
        assert_eq!(t.levels().len(), 1);
        assert_eq!(t.level(0).unwrap().alphas, vec![0, 0]);
        assert_eq!(t.level(0).unwrap().dims, vec![1]);
    }

    #[test]
    fn blowup_truncated_table_matches_box_oracle() {
        let f = fixtures::blowup_c2();
        let t = from_polytope(&f, 1, Some(Truncation { xi_ref: vec![1.0, 1.0], budget: 6.0 })).unwrap();
        let got: Vec<Vec<i64>> = t.level(1).unwrap().iter(2).map(|(a, _)| a.to_vec()).collect();
        let mut oracle = Vec::new();
        for x in -1..=7i64 {
            for y in -1..=7i64 {
                if x + y >= -1 && x + y <= 6 {
                    oracle.push(vec![x, y]);
                }
            }
        }
        assert_eq!(got, oracle);
    }

    #[test]
    fn truncation_requires_interior_reference() {
        let f = fixtures::blowup_c2();
        let bad = from_polytope(&f, 1, Some(Truncation { xi_ref: vec![1.0, 0.0], budget: 6.0 }));
        assert!(matches!(bad, Err(FwvError::Invalid(_))));
        assert!(matches!(from_polytope(&f, 1, None), Err(FwvError::Unbounded(_))));
    }

    #[test]
    fn dh_m_projective_line() {
        let t = from_polytope(&fixtures::p1(), 2, None).unwrap();
        let mu = dh_m(&t, &ReebVector::unconstrained(vec![1.0]), 2, Convention::WeightCentered, 0.0).unwrap();
        let locs: Vec<f64> = mu.atoms.iter().map(|a| a.0).collect();
        assert_eq!(locs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(mu.atoms.iter().all(|a| a.1 == 0.5));
        let collapsed = dh_m(&t, &ReebVector::unconstrained(vec![0.0]), 1, Convention::WeightCentered, 0.0).unwrap();
        assert_eq!(collapsed.atoms, vec![(0.0, 3.0)]);
    }

    #[test]
    fn dh_m_germ_table_shifted() {
        let levels = BTreeMap::from([(4u32, (0..40).map(|k| (vec![k], 1u64)).collect::<Vec<_>>())]);
        let t = WeightTable::from_user(1, levels).unwrap();
        let mu = dh_m(&t, &ReebVector::unconstrained(vec![1.0]), 4, Convention::ValuationShifted, 1.0).unwrap();
        assert_eq!(mu.atoms[0], (1.0, 0.25));
        assert_eq!(mu.atoms[1], (1.25, 0.25));
        assert_eq!(mu.atoms[2], (1.5, 0.25));
        assert!(matches!(
            dh_m(&t, &ReebVector::unconstrained(vec![1.0]), 3, Convention::WeightCentered, 0.0),
            Err(FwvError::MissingLevel(3))
        ));
    }

    #[test]
    fn joint_measure_diagonals() {
        let t = from_polytope(&fixtures::p1(), 1, None).unwrap();
        let one = ReebVector::unconstrained(vec![1.0]);
        let mu = dh_joint_m(&t, &one, &one, 1).unwrap();
        assert_eq!(mu.atoms, vec![(-1.0, -1.0, 1.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]);
        let anti = dh_joint_m(&t, &one, &ReebVector::unconstrained(vec![-1.0]), 1).unwrap();
        assert_eq!(anti.atoms, vec![(-1.0, 1.0, 1.0), (0.0, 0.0, 1.0), (1.0, -1.0, 1.0)]);
    }

    #[test]
    fn joint_support_on_blowup() {
        let f = fixtures::blowup_c2();
        let xi = f.reeb(vec![1.0, 1.0]).unwrap();
        let eta = ReebVector::unconstrained(vec![1.0, 0.0]);
        let t = from_polytope(&f, 1, Some(Truncation { xi_ref: vec![1.0, 1.0], budget: 6.0 })).unwrap();
        let mu = dh_joint_m(&t, &xi, &eta, 1).unwrap();
        let fitted = SupportBound::fit(std::slice::from_ref(&mu));
        assert!(fitted.contains_measure(&mu, 0.0));
        let derived = SupportBound::from_fibration(&f, &xi, &eta).unwrap();
        assert!(derived.contains_measure(&mu, 1e-12));
    }

    #[test]
    fn codim_examples() {
        let t = from_polytope(&fixtures::p1(), 3, None).unwrap();
        let one = ReebVector::unconstrained(vec![1.0]);
        assert_eq!(filtration_codim(&t, &one, 3, 0.0).unwrap(), 4);
        assert_eq!(filtration_codim(&t, &one, 3, -1.5).unwrap(), 0);
        // weights of ℂ²: the closed orthant, truncated along (1,1)
        let orthant = Polyhedron::new(2, vec![HalfSpace::from_ints(&[1, 0], 0), HalfSpace::from_ints(&[0, 1], 0)]).unwrap();
        let f = FibrationData::new(orthant, 1, "C2").unwrap();
        let tg = from_polytope(&f, 5, Some(Truncation { xi_ref: vec![1.0, 1.0], budget: 3.0 })).unwrap();
        let xi = f.reeb(vec![1.0, 1.0]).unwrap();
        assert_eq!(filtration_codim(&tg, &xi, 5, 1.0).unwrap(), 21);
        assert_eq!(filtration_codim(&tg, &xi, 5, 0.0).unwrap(), 1);
    }

    #[test]
    fn user_table_validation() {
        let dup = BTreeMap::from([(1u32, vec![(vec![0], 1u64), (vec![0], 2)])]);
        assert!(WeightTable::from_user(1, dup).is_err());
        let json = r#"{"rank":1,"levels":{"1":[{"alpha":[0],"dim":-1}]},"source":"user"}"#;
        let tj: WeightTableJson = serde_json::from_str(json).unwrap();
        assert!(tj.into_table().is_err());
    }

    #[test]
    fn total_mass_invariant_under_xi() {
        let t = from_polytope(&fixtures::p2(), 4, None).unwrap();
        let base = t.level(4).unwrap().total_dim() as f64 / 16.0;
        for xi in [[0.0, 0.0], [0.3, -1.2], [5.0, 2.0]] {
            let mu = dh_m(&t, &ReebVector::unconstrained(xi.to_vec()), 4, Convention::WeightCentered, 0.0).unwrap();
            assert!(approx(mu.total_mass(), base));
        }
    }
}
