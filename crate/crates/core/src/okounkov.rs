//! Finitely generated semigroups `Γ ⊂ ℕⁿ⁺¹` and the growth `#Γ_m / mⁿ`.
//!
//! The last coordinate of a generator is its level. Saturation is
//! level-synchronous: `Γ_m` is the union of `Γ_{m−ℓ} + g` over generators `g` of
//! level `ℓ ≥ 1`, closed under the level-zero generators.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FwvError, Result};
use crate::polyhedra::{Cone, HalfSpace, Polyhedron};
use crate::rational::{format_rat, to_f64, Rat, RatVec};
use crate::weights::WeightTable;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Semigroup {
    pub generators: Vec<Vec<i64>>,
}

impl Semigroup {
    pub fn new(generators: Vec<Vec<i64>>) -> Result<Self> {
        let len = match generators.first() {
            Some(g) => g.len(),
            None => return invalid("semigroup needs at least one generator"),
        };
        if len < 2 {
            return invalid("generators need n ≥ 1 coordinates plus a level");
        }
        for g in &generators {
            if g.len() != len {
                return invalid("generators have different lengths");
            }
            if g.iter().any(|&x| x < 0) {
                return invalid(format!("generator {g:?} has a negative coordinate"));
            }
            if g.iter().all(|&x| x == 0) {
                return invalid("generators must be nonzero");
            }
        }
        let mut seen = BTreeSet::new();
        let generators = generators.into_iter().filter(|g| seen.insert(g.clone())).collect();
        Ok(Semigroup { generators })
    }

    /// Semigroup generated by `(α + m·shift, m)` for the weights of levels `1..=max_level`.
    pub fn from_table(w: &WeightTable, shift: &[i64], max_level: u32) -> Result<Self> {
        if shift.len() != w.rank() {
            return invalid("shift has the wrong length");
        }
        let mut gens = Vec::new();
        for m in 1..=max_level {
            for (alpha, _) in w.level(m)?.iter(w.rank()) {
                let mut g: Vec<i64> = alpha.iter().zip(shift).map(|(a, s)| a + m as i64 * s).collect();
                g.push(m as i64);
                gens.push(g);
            }
        }
        Semigroup::new(gens)
    }

    /// `n`, the dimension of the level slices.
    pub fn n(&self) -> usize {
        self.generators[0].len() - 1
    }

    fn level(g: &[i64]) -> i64 {
        g[g.len() - 1]
    }
}

type Level = BTreeSet<Vec<i64>>;

/// Closes `set` under the level-zero generators, dropping points past the budget.
fn close_level(set: &mut Level, zero_gens: &[Vec<i64>], budget: i64) -> bool {
    let mut overflow = false;
    let mut frontier: Vec<Vec<i64>> = set.iter().cloned().collect();
    while let Some(p) = frontier.pop() {
        for g in zero_gens {
            let q: Vec<i64> = p.iter().zip(g).map(|(a, b)| a + b).collect();
            if q.iter().any(|&x| x > budget) {
                overflow = true;
                continue;
            }
            if set.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    overflow
}

/// Visits `(m, Γ_m)` for `m = 0..=m_max`, keeping only the levels still needed.
fn saturate_with(s: &Semigroup, m_max: u32, budget: i64, mut visit: impl FnMut(u32, &Level)) -> Result<()> {
    if budget <= 0 {
        return invalid("coordinate budget must be positive");
    }
    let n = s.n();
    let zero_gens: Vec<Vec<i64>> =
        s.generators.iter().filter(|g| Semigroup::level(g) == 0).map(|g| g[..n].to_vec()).collect();
    let pos: Vec<(usize, Vec<i64>)> = s
        .generators
        .iter()
        .filter(|g| Semigroup::level(g) > 0)
        .map(|g| (Semigroup::level(g) as usize, g[..n].to_vec()))
        .collect();
    let window = pos.iter().map(|p| p.0).max().unwrap_or(0);
    let mut recent: VecDeque<Level> = VecDeque::new();
    for m in 0..=m_max as usize {
        let mut cur = Level::new();
        let mut overflow = false;
        if m == 0 {
            cur.insert(vec![0; n]);
        }
        for (l, g) in &pos {
            if *l > m {
                continue;
            }
            // recent.back() is level m−1
            let prev = &recent[recent.len() - l];
            for p in prev {
                let q: Vec<i64> = p.iter().zip(g).map(|(a, b)| a + b).collect();
                if q.iter().any(|&x| x > budget) {
                    overflow = true;
                } else {
                    cur.insert(q);
                }
            }
        }
        overflow |= close_level(&mut cur, &zero_gens, budget);
        if overflow {
            return Err(FwvError::BudgetOverflow { level: m as u32 });
        }
        visit(m as u32, &cur);
        recent.push_back(cur);
        if recent.len() > window.max(1) {
            recent.pop_front();
        }
    }
    Ok(())
}

/// `Γ_m` for `m ≤ m_max`, with every coordinate at most `coord_budget`.
pub fn saturate(s: &Semigroup, m_max: u32, coord_budget: i64) -> Result<BTreeMap<u32, BTreeSet<Vec<i64>>>> {
    let mut out = BTreeMap::new();
    saturate_with(s, m_max, coord_budget, |m, lvl| {
        out.insert(m, lvl.clone());
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    /// `Γ₀ = {0}`.
    pub c1: bool,
    /// `Γ` lies in the semigroup spanned by finitely many `(v, 1)`.
    pub c2: bool,
    /// `Γ` generates `ℤⁿ⁺¹`.
    pub c3: bool,
    /// Smallest `N` with `|x|₁ ≤ N·m` on the generators, when it exists.
    pub fitted_n: Option<i64>,
    /// Index of the generated subgroup (absent when it has lower rank).
    pub group_index: Option<String>,
}

/// Index `[ℤᵏ : ⟨rows⟩]` via integer Hermite reduction; `None` when the rank is below `k`.
pub fn lattice_index(rows: &[Vec<i64>]) -> Option<BigInt> {
    let k = rows.first()?.len();
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut index = BigInt::from(1);
    let mut row = 0;
    for col in 0..k {
        // Euclid on column `col` among rows `row..`
        loop {
            let piv = (row..m.len()).filter(|&i| !m[i][col].is_zero()).min_by_key(|&i| m[i][col].abs());
            let p = piv?;
            m.swap(row, p);
            let mut done = true;
            for i in row + 1..m.len() {
                if m[i][col].is_zero() {
                    continue;
                }
                let q = m[i][col].div_floor(&m[row][col]);
                let (top, bottom) = m.split_at_mut(i);
                for (x, y) in bottom[0].iter_mut().zip(&top[row]) {
                    *x -= &q * y;
                }
                if !m[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        index *= m[row][col].abs();
        row += 1;
    }
    Some(index)
}

pub fn check_conditions(s: &Semigroup, m_max: u32) -> Result<Conditions> {
    let n = s.n();
    let c1 = s.generators.iter().all(|g| Semigroup::level(g) > 0);
    // every element is a sum of generators, so the ratio |x|₁/m is maximized on them
    let fitted_n = if c1 {
        s.generators
            .iter()
            .map(|g| {
                let l = Semigroup::level(g);
                let norm: i64 = g[..n].iter().sum();
                Integer::div_ceil(&norm, &l)
            })
            .max()
    } else {
        None
    };
    let mut c2 = fitted_n.is_some();
    if let Some(nn) = fitted_n {
        let budget = (nn.max(1)).saturating_mul(m_max.max(1) as i64);
        saturate_with(s, m_max, budget, |m, lvl| {
            if lvl.iter().any(|x| x.iter().sum::<i64>() > nn * m as i64) {
                c2 = false;
            }
        })?;
    }
    let idx = lattice_index(&s.generators);
    let c3 = idx.as_ref().is_some_and(|i| *i == BigInt::from(1));
    Ok(Conditions { c1, c2, c3, fitted_n, group_index: idx.map(|i| i.to_string()) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub m: u32,
    pub count: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct Growth {
    pub sequence: Vec<GrowthPoint>,
    pub body: Polyhedron,
    pub body_volume: f64,
    pub body_volume_exact: Rat,
    /// `max m·|ratio − volume|` over the second half of the sequence.
    pub fitted_c: f64,
    pub conditions: Conditions,
}

/// Okounkov body `conv{x/ℓ : (x, ℓ) generator}` as a polyhedron.
pub fn okounkov_body(s: &Semigroup) -> Result<Polyhedron> {
    let n = s.n();
    let gens: Vec<RatVec> = s.generators.iter().map(|g| RatVec::from_ints(g)).collect();
    let cone = Cone::from_rays(n + 1, &gens)?;
    let mut hs = Vec::new();
    for f in cone.facets() {
        let a = RatVec(f.0[..n].to_vec());
        if a.is_zero() {
            continue;
        }
        hs.push(HalfSpace::new(a, -f.0[n].clone())?);
    }
    Polyhedron::new(n, hs)
}

pub fn growth_and_body(s: &Semigroup, m_max: u32) -> Result<Growth> {
    if m_max == 0 {
        return invalid("m_max must be positive");
    }
    let conditions = check_conditions(s, m_max)?;
    if !(conditions.c1 && conditions.c2 && conditions.c3) {
        return Err(FwvError::Conditions(format!(
            "(1) Γ₀ = {{0}}: {}, (2) linear bound: {}, (3) generates ℤⁿ⁺¹: {} (index {})",
            conditions.c1,
            conditions.c2,
            conditions.c3,
            conditions.group_index.as_deref().unwrap_or("infinite")
        )));
    }
    let n = s.n();
    let budget = conditions.fitted_n.unwrap_or(1).max(1) * m_max as i64;
    let mut sequence = Vec::new();
    saturate_with(s, m_max, budget, |m, lvl| {
        if m > 0 {
            let count = lvl.len() as u64;
            sequence.push(GrowthPoint { m, count, ratio: count as f64 / (m as f64).powi(n as i32) });
        }
    })?;
    let body = okounkov_body(s)?;
    let exact = body.volume()?;
    let vol = to_f64(&exact);
    let fitted_c = sequence
        .iter()
        .filter(|p| 2 * p.m >= m_max)
        .map(|p| p.m as f64 * (p.ratio - vol).abs())
        .fold(0.0, f64::max);
    Ok(Growth { sequence, body, body_volume: vol, body_volume_exact: exact, fitted_c, conditions })
}

impl Growth {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,count,ratio\n");
        for p in &self.sequence {
            out.push_str(&format!("{},{},{}\n", p.m, p.count, crate::weights::fmt12(p.ratio)));
        }
        out
    }

    pub fn body_volume_string(&self) -> String {
        format_rat(&self.body_volume_exact)
    }

    pub fn last_ratio(&self) -> Option<f64> {
        self.sequence.last().map(|p| p.ratio)
    }
}
