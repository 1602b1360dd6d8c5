//! Futaki invariants of product and user-supplied test configurations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::weights::{FibrationData, ReebVector};
use crate::wvol::grad_w;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigKind {
    Product,
    /// Special test configuration whose central fiber is given by the caller.
    Special,
}

#[derive(Clone, Debug)]
pub struct TestConfiguration {
    pub central_fiber: FibrationData,
    pub eta: Vec<f64>,
    pub kind: ConfigKind,
}

impl TestConfiguration {
    /// Product configuration induced by `η` on `f` itself.
    pub fn product(f: &FibrationData, eta: Vec<f64>) -> Result<Self> {
        Self::build(f.clone(), eta, ConfigKind::Product)
    }

    pub fn special(central_fiber: FibrationData, eta: Vec<f64>) -> Result<Self> {
        Self::build(central_fiber, eta, ConfigKind::Special)
    }

    fn build(central_fiber: FibrationData, eta: Vec<f64>, kind: ConfigKind) -> Result<Self> {
        if eta.len() != central_fiber.rank() {
            return invalid("η has the wrong length");
        }
        if eta.iter().any(|x| !x.is_finite()) {
            return invalid("η has non-finite coordinates");
        }
        Ok(TestConfiguration { central_fiber, eta, kind })
    }
}

/// `Fut_ξ(η) = d/dt W(ξ + tη)|₀ = ⟨∇W(ξ), η⟩` on the central fiber.
pub fn futaki(tc: &TestConfiguration, xi: &ReebVector) -> Result<f64> {
    let xi = tc.central_fiber.reeb(xi.coords.clone())?;
    xi.require_interior()?;
    let g = grad_w(&tc.central_fiber, &xi)?;
    Ok(g.iter().zip(&tc.eta).map(|(a, b)| a * b).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub semistable_in_torus_directions: bool,
    /// Keys `+e1`, `-e1`, … .
    pub futaki_values: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub scope: String,
}

/// Evaluates product Futaki invariants along `±e_1, …, ±e_n`.
pub fn k_semistable_torus(f: &FibrationData, xi: &ReebVector, tol: f64) -> Result<StabilityVerdict> {
    if !(tol.is_finite() && tol >= 0.0) {
        return invalid("tolerance must be nonnegative");
    }
    let xi = f.reeb(xi.coords.clone())?;
    xi.require_interior()?;
    let g = grad_w(f, &xi)?;
    let mut values = BTreeMap::new();
    for (i, gi) in g.iter().enumerate() {
        values.insert(format!("+e{}", i + 1), *gi);
        values.insert(format!("-e{}", i + 1), -gi);
    }
    let semistable = values.values().all(|&v| v >= -tol);
    Ok(StabilityVerdict {
        semistable_in_torus_directions: semistable,
        futaki_values: values,
        tolerance: tol,
        scope: "product test configurations along coordinate directions; a stationary point, not a stability theorem".into(),
    })
}
