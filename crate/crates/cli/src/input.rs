use std::path::Path;

use fwv::germs::{GermJson, ToricGermData};
use fwv::okounkov::Semigroup;
use fwv::weights::{FibrationData, FibrationJson, WeightTable, WeightTableJson};
use serde_json::Value;

use crate::output::{CliResult, Failure};

pub enum Input {
    Fibration(FibrationData),
    Table(WeightTable),
    Germ(ToricGermData),
    Semigroup(Semigroup),
}

impl Input {
    pub fn kind(&self) -> &'static str {
        match self {
            Input::Fibration(_) => "fibration",
            Input::Table(_) => "weight-table",
            Input::Germ(_) => "germ",
            Input::Semigroup(_) => "semigroup",
        }
    }
}

/// A parsed input file plus the optional `"xi"` it carries.
pub struct Loaded {
    pub input: Input,
    pub xi: Option<Vec<f64>>,
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let mut v = read_json(path)?;
    let obj = v.as_object_mut().ok_or_else(|| Failure::validation("input must be a JSON object"))?;
    let xi = match obj.remove("xi") {
        None => None,
        Some(x) => {
            let xs: Vec<f64> = serde_json::from_value(x)?;
            check_finite("xi", &xs)?;
            Some(xs)
        }
    };
    let input = if obj.contains_key("polytope") {
        Input::Fibration(serde_json::from_value::<FibrationJson>(v)?.into_fibration()?)
    } else if obj.contains_key("levels") {
        Input::Table(serde_json::from_value::<WeightTableJson>(v)?.into_table()?)
    } else if obj.contains_key("sigma_rays") {
        Input::Germ(serde_json::from_value::<GermJson>(v)?.into_germ()?)
    } else if obj.contains_key("generators") {
        let s: Semigroup = serde_json::from_value(v)?;
        Input::Semigroup(Semigroup::new(s.generators)?)
    } else {
        return Err(Failure::validation("unrecognized input: expected a fibration, weight table, germ or semigroup"));
    };
    Ok(Loaded { input, xi })
}

pub fn check_finite(name: &str, xs: &[f64]) -> CliResult<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Failure::validation(format!("{name} must contain finite numbers")));
    }
    Ok(())
}

impl Loaded {
    /// Fibrations directly; germs through their identity fibration.
    pub fn fibration(&self) -> CliResult<FibrationData> {
        match &self.input {
            Input::Fibration(f) => Ok(f.clone()),
            Input::Germ(g) => Ok(g.to_fibration()?),
            other => Err(Failure::validation(format!("this command needs a fibration, got a {}", other.kind()))),
        }
    }

    pub fn germ(&self) -> CliResult<&ToricGermData> {
        match &self.input {
            Input::Germ(g) => Ok(g),
            other => Err(Failure::validation(format!("this command needs a germ, got a {}", other.kind()))),
        }
    }

    pub fn semigroup(&self) -> CliResult<&Semigroup> {
        match &self.input {
            Input::Semigroup(s) => Ok(s),
            other => Err(Failure::validation(format!("this command needs a semigroup, got a {}", other.kind()))),
        }
    }
}
