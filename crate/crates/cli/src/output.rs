use std::fmt;

use fwv::FwvError;
use serde_json::{json, Value};

/// A failure that ends the process with a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub exit: i32,
    pub detail: Value,
}

impl Failure {
    pub fn validation(detail: impl Into<String>) -> Self {
        Failure { code: "invalid-input", exit: 2, detail: Value::String(detail.into()) }
    }

    pub fn io(detail: impl Into<String>) -> Self {
        Failure { code: "io", exit: 2, detail: Value::String(detail.into()) }
    }

    pub fn payload(&self) -> Value {
        json!({ "error": self.code, "detail": self.detail })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

impl From<FwvError> for Failure {
    fn from(e: FwvError) -> Self {
        let (code, exit) = match &e {
            FwvError::Invalid(_) => ("invalid-input", 2),
            FwvError::Empty => ("empty", 2),
            FwvError::Degenerate(_) => ("degenerate", 2),
            FwvError::Unbounded(_) => ("unbounded", 2),
            FwvError::MissingLevel(_) => ("missing-level", 2),
            FwvError::Conditions(_) => ("conditions", 2),
            FwvError::Overflow(_) => ("overflow", 2),
            FwvError::Divergent(_) => ("divergent", 3),
            FwvError::NotConverged(_) => ("not-converged", 4),
            FwvError::BudgetOverflow { .. } => ("budget-overflow", 4),
        };
        Failure { code, exit, detail: Value::String(e.to_string()) }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::validation(format!("malformed JSON: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Rounds a float to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Applies `round12` to every float in a JSON tree.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("result types serialize")
}
