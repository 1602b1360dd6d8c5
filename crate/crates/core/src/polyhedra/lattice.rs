//! Integer points of dilated polyhedra.
//!
//! The region `m·(P ∩ extra)` is scanned over a bounding box in the first
//! `n − 1` coordinates; the last coordinate is solved exactly as an integer
//! interval ("fiber"), so callers can sum closed forms along it.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{FwvError, Result};
use crate::polyhedra::{HalfSpace, Polyhedron};
use crate::rational::{ceil_i128, floor_i128, Rat};

/// Extra cut applied before dilation; `strict` turns `≥` into `>`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub halfspace: HalfSpace,
    pub strict: bool,
}

impl Constraint {
    pub fn closed(halfspace: HalfSpace) -> Self {
        Constraint { halfspace, strict: false }
    }

    pub fn strict(halfspace: HalfSpace) -> Self {
        Constraint { halfspace, strict: true }
    }
}

#[derive(Clone, Debug)]
struct IntCons {
    a: Vec<i128>,
    rhs: i128,
}

/// Bounded integer region ready for enumeration.
#[derive(Clone, Debug)]
pub struct LatticeRegion {
    n: usize,
    cons: Vec<IntCons>,
    lo: Vec<i128>,
    hi: Vec<i128>,
    empty: bool,
}

fn to_int_cons(h: &HalfSpace, strict: bool, m: u32) -> Result<IntCons> {
    let mut l = BigInt::one();
    for a in &h.normal.0 {
        l = l.lcm(a.denom());
    }
    let lr = Rat::from_integer(l);
    let a = h
        .normal
        .0
        .iter()
        .map(|x| (x * &lr).to_integer().to_i128().ok_or(FwvError::Overflow("lattice normal")))
        .collect::<Result<Vec<_>>>()?;
    let c = &h.offset * &lr * Rat::from_integer(BigInt::from(m));
    let rhs = if strict { floor_i128(&c)? + 1 } else { ceil_i128(&c)? };
    Ok(IntCons { a, rhs })
}

impl LatticeRegion {
    pub fn new(p: &Polyhedron, m: u32, extra: &[Constraint]) -> Result<Self> {
        if m == 0 {
            return Err(FwvError::Invalid("dilation factor must be positive".into()));
        }
        let n = p.rank();
        let closure = match p.intersect(&extra.iter().map(|c| c.halfspace.clone()).collect::<Vec<_>>()) {
            Ok(c) => c,
            Err(FwvError::Empty) => {
                return Ok(LatticeRegion { n, cons: vec![], lo: vec![], hi: vec![], empty: true });
            }
            Err(e) => return Err(e),
        };
        if !closure.is_bounded() {
            return Err(FwvError::Unbounded(
                "recession cone is nontrivial; supply a truncation halfspace".into(),
            ));
        }
        let mr = Rat::from_integer(BigInt::from(m));
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in 0..n {
            let min = closure.vertices().iter().map(|v| &v[i]).min().expect("nonempty");
            let max = closure.vertices().iter().map(|v| &v[i]).max().expect("nonempty");
            lo.push(ceil_i128(&(min * &mr))?);
            hi.push(floor_i128(&(max * &mr))?);
        }
        let mut cons = Vec::new();
        for h in p.halfspaces() {
            cons.push(to_int_cons(h, false, m)?);
        }
        for c in extra {
            cons.push(to_int_cons(&c.halfspace, c.strict, m)?);
        }
        let empty = lo.iter().zip(&hi).any(|(l, h)| l > h);
        Ok(LatticeRegion { n, cons, lo, hi, empty })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// Values of the first coordinate to scan (a single dummy slab for rank 1).
    pub fn slabs(&self) -> Vec<i128> {
        if self.empty {
            return vec![];
        }
        if self.n == 1 {
            vec![0]
        } else {
            (self.lo[0]..=self.hi[0]).collect()
        }
    }

    /// Exact integer interval of the last coordinate over a fixed prefix.
    fn fiber(&self, prefix: &[i128]) -> Option<(i128, i128)> {
        let last = self.n - 1;
        let mut lo = self.lo[last];
        let mut hi = self.hi[last];
        for c in &self.cons {
            let s: i128 = c.a[..last].iter().zip(prefix).map(|(a, x)| a * x).sum();
            let r = c.rhs - s;
            let al = c.a[last];
            if al > 0 {
                lo = lo.max(Integer::div_ceil(&r, &al));
            } else if al < 0 {
                hi = hi.min(Integer::div_floor(&r, &al));
            } else if r > 0 {
                return None;
            }
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Visits every nonempty fiber whose first coordinate equals `x0`.
    pub fn for_each_fiber_in_slab(&self, x0: i128, f: &mut dyn FnMut(&[i128], i128, i128)) {
        if self.empty {
            return;
        }
        if self.n == 1 {
            if let Some((lo, hi)) = self.fiber(&[]) {
                f(&[], lo, hi);
            }
            return;
        }
        let mut prefix = vec![0i128; self.n - 1];
        prefix[0] = x0;
        self.recurse(&mut prefix, 1, f);
    }

    fn recurse(&self, prefix: &mut Vec<i128>, depth: usize, f: &mut dyn FnMut(&[i128], i128, i128)) {
        if depth == self.n - 1 {
            if let Some((lo, hi)) = self.fiber(prefix) {
                f(prefix, lo, hi);
            }
            return;
        }
        for x in self.lo[depth]..=self.hi[depth] {
            prefix[depth] = x;
            self.recurse(prefix, depth + 1, f);
        }
    }

    pub fn for_each_fiber(&self, f: &mut dyn FnMut(&[i128], i128, i128)) {
        for x0 in self.slabs() {
            self.for_each_fiber_in_slab(x0, f);
        }
    }

    pub fn points(&self) -> Result<Vec<Vec<i64>>> {
        let mut out = Vec::new();
        let mut overflow = false;
        self.for_each_fiber(&mut |prefix, lo, hi| {
            for x in lo..=hi {
                let mut p: Vec<i64> = prefix.iter().map(|&v| v as i64).collect();
                p.push(x as i64);
                if prefix.iter().any(|&v| v.to_i64().is_none()) || x.to_i64().is_none() {
                    overflow = true;
                }
                out.push(p);
            }
        });
        if overflow {
            return Err(FwvError::Overflow("lattice point coordinates"));
        }
        Ok(out)
    }

    pub fn count(&self) -> u128 {
        let mut c = 0u128;
        self.for_each_fiber(&mut |_, lo, hi| c += (hi - lo + 1) as u128);
        c
    }
}
