use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// A single free parameter with box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl ParamDef {
    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        ParamDef {
            name: name.to_string(),
            lower,
            upper,
        }
    }
}

/// Ordered list of named, bounded parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec(pub Vec<ParamDef>);

impl ParameterSpec {
    pub fn new(defs: Vec<ParamDef>) -> Self {
        ParameterSpec(defs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|d| d.name == name)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.0.iter().map(|d| (d.lower, d.upper)).collect()
    }

    /// Checks arity and box bounds for a candidate parameter vector.
    pub fn validate(&self, theta: &[f64]) -> Result<(), EvalError> {
        if theta.len() != self.len() {
            return Err(EvalError::Arity {
                expected: self.len(),
                got: theta.len(),
            });
        }
        for (def, &v) in self.0.iter().zip(theta) {
            if !v.is_finite() || v < def.lower || v > def.upper {
                return Err(EvalError::Bounds {
                    name: def.name.clone(),
                    value: v,
                    lower: def.lower,
                    upper: def.upper,
                });
            }
        }
        Ok(())
    }

    /// Uniform draw inside the box.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.0
            .iter()
            .map(|d| rng.gen_range(d.lower..d.upper))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.0.iter().map(|d| 0.5 * (d.lower + d.upper)).collect()
    }
}
