//! Shipped toric examples.

use crate::germs::ToricGermData;
use crate::okounkov::Semigroup;
use crate::polyhedra::{HalfSpace, Polyhedron};
use crate::weights::FibrationData;

fn fibration(rank: usize, hs: &[(&[i64], i64)], label: &str) -> FibrationData {
    let hs = hs.iter().map(|(n, c)| HalfSpace::from_ints(n, *c)).collect();
    let p = Polyhedron::new(rank, hs).expect("fixture polytope is valid");
    FibrationData::new(p, 1, label).expect("fixture polytope is full-dimensional")
}

/// `ℙ¹`: the interval `[−1, 1]`.
pub fn p1() -> FibrationData {
    fibration(1, &[(&[1], -1), (&[-1], -1)], "P1")
}

/// `ℙ²`: `{x₁ ≥ −1, x₂ ≥ −1, x₁ + x₂ ≤ 1}`.
pub fn p2() -> FibrationData {
    fibration(2, &[(&[1, 0], -1), (&[0, 1], -1), (&[-1, -1], -1)], "P2")
}

/// `ℙ¹ × ℙ¹`: the square `[−1, 1]²`.
pub fn p1xp1() -> FibrationData {
    fibration(2, &[(&[1, 0], -1), (&[0, 1], -1), (&[-1, 0], -1), (&[0, -1], -1)], "P1xP1")
}

/// Blow-up of `ℂ²` at the origin over `ℂ²`: `{x₁ ≥ −1, x₂ ≥ −1, x₁ + x₂ ≥ −1}`.
pub fn blowup_c2() -> FibrationData {
    fibration(2, &[(&[1, 0], -1), (&[0, 1], -1), (&[1, 1], -1)], "Bl0C2")
}

/// Identity fibration of `ℂⁿ`: the orthant shifted by `−(1, …, 1)`.
pub fn affine_space(n: usize) -> FibrationData {
    let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let hs: Vec<(&[i64], i64)> = rows.iter().map(|r| (r.as_slice(), -1)).collect();
    fibration(n, &hs, &format!("C{n}"))
}

/// Bounded fixtures.
pub fn fano() -> Vec<FibrationData> {
    vec![p1(), p2(), p1xp1()]
}

/// All shipped fibrations.
pub fn all() -> Vec<FibrationData> {
    vec![p1(), p2(), p1xp1(), blowup_c2(), affine_space(1), affine_space(2)]
}

pub fn by_name(name: &str) -> Option<FibrationData> {
    all().into_iter().find(|f| f.label().eq_ignore_ascii_case(name))
}

/// `ℂⁿ` as a toric germ.
pub fn smooth_germ(n: usize) -> ToricGermData {
    ToricGermData::smooth(n)
}

/// The `A₁` surface singularity, `σ = cone((1,0), (1,2))`.
pub fn a1_germ() -> ToricGermData {
    ToricGermData::new(&[vec![1, 0], vec![1, 2]], "A1").expect("A1 cone is Gorenstein")
}

/// Semigroups whose growth is checked against their Okounkov bodies.
pub fn semigroups() -> Vec<(&'static str, Semigroup)> {
    let mk = |g: &[&[i64]]| Semigroup::new(g.iter().map(|x| x.to_vec()).collect()).expect("valid generators");
    vec![
        ("interval", mk(&[&[0, 1], &[1, 1]])),
        ("shifted-interval", mk(&[&[2, 1], &[3, 1]])),
        ("triangle", mk(&[&[0, 0, 1], &[1, 0, 1], &[0, 1, 1]])),
    ]
}
