//! Divided differences of `t ↦ e^{-t}` at arbitrary, possibly repeated, nodes.
//!
//! The exponential integral over a simplex equals such a divided difference,
//! and the naive recurrence cancels catastrophically when nodes cluster. Node
//! ranges narrower than [`TAYLOR_SPREAD`] are evaluated by the series
//! `e^{-c} Σ_q (-1)^{p+q} h_q(x − c) / (p+q)!` about the midpoint `c`, where
//! `h_q` is the complete homogeneous symmetric polynomial; wider ranges use the
//! recurrence on sorted nodes, memoized over contiguous index ranges.

/// Node ranges below this width use the Taylor form.
pub const TAYLOR_SPREAD: f64 = 1.0;

const TAYLOR_TERMS: usize = 40;

/// `E[x_0, …, x_p]` for `E(t) = e^{-t}`.
pub fn exp_neg_dd(nodes: &[f64]) -> f64 {
    assert!(!nodes.is_empty(), "divided difference needs at least one node");
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    let p = x.len();
    if x[p - 1] - x[0] < TAYLOR_SPREAD {
        return taylor(&x);
    }
    // table[len-1][i] holds the divided difference over x[i..i+len]
    let mut prev: Vec<f64> = x.iter().map(|&t| (-t).exp()).collect();
    for len in 2..=p {
        let mut cur = Vec::with_capacity(p - len + 1);
        for i in 0..=p - len {
            let j = i + len - 1;
            let width = x[j] - x[i];
            if width < TAYLOR_SPREAD {
                cur.push(taylor(&x[i..=j]));
            } else {
                cur.push((prev[i + 1] - prev[i]) / width);
            }
        }
        prev = cur;
    }
    prev[0]
}

fn taylor(x: &[f64]) -> f64 {
    let p = x.len() - 1;
    let c = 0.5 * (x[0] + x[x.len() - 1]);
    let mut h = [0.0f64; TAYLOR_TERMS];
    h[0] = 1.0;
    for &xi in x {
        let y = xi - c;
        for q in 1..TAYLOR_TERMS {
            h[q] += y * h[q - 1];
        }
    }
    // 1/(p+q)! built incrementally
    let mut inv_fact = 1.0;
    for k in 1..=p {
        inv_fact /= k as f64;
    }
    let mut sum = 0.0;
    let mut sign = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    for (q, hq) in h.iter().enumerate() {
        if q > 0 {
            inv_fact /= (p + q) as f64;
        }
        sum += sign * hq * inv_fact;
        sign = -sign;
    }
    (-c).exp() * sum
}

/// `∫_Δ e^{-λ·s} dλ` over the standard simplex `{λ ≥ 0, Σλ = 1}` with the
/// Lebesgue measure of its coordinate projection, and its first and second
/// partial derivatives in `s`.
#[derive(Clone, Debug)]
pub struct SimplexExp {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

pub fn simplex_exp(s: &[f64], derivatives: u8) -> SimplexExp {
    let k = s.len();
    let sign = if (k - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let value = sign * exp_neg_dd(s);
    let mut grad = Vec::new();
    let mut hess = Vec::new();
    if derivatives >= 1 {
        let mut nodes = s.to_vec();
        nodes.push(0.0);
        grad = (0..k)
            .map(|i| {
                nodes[k] = s[i];
                sign * exp_neg_dd(&nodes)
            })
            .collect();
    }
    if derivatives >= 2 {
        let mut nodes = s.to_vec();
        nodes.push(0.0);
        nodes.push(0.0);
        hess = vec![vec![0.0; k]; k];
        for i in 0..k {
            for l in i..k {
                nodes[k] = s[i];
                nodes[k + 1] = s[l];
                let mult = if i == l { 2.0 } else { 1.0 };
                let v = sign * mult * exp_neg_dd(&nodes);
                hess[i][l] = v;
                hess[l][i] = v;
            }
        }
    }
    SimplexExp { value, grad, hess }
}
