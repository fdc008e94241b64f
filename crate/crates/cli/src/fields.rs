//! Field descriptors read and written by the CLI.

use std::path::Path;
use std::sync::Arc;

use degor_core::de::{AnalyticN2Field, GammaField, RandomPolynomialField, TrivialField};
use degor_core::hurwitz::{Hurwitz0Field, PolyMap};
use degor_core::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Trivial { n: usize },
    /// γ₁₂ = num(u₁ − u₂)/den(u₁ − u₂), coefficients lowest degree first.
    AnalyticN2 {
        #[serde(with = "degor_core::linalg::pairs")]
        num: Vec<C64>,
        #[serde(with = "degor_core::linalg::pairs")]
        den: Vec<C64>,
    },
    Hurwitz0 { poly: PolyMap },
    /// Random symmetric polynomial field; not a DE solution.
    RandomControl { n: usize, seed: u64, scale: f64 },
}

impl FieldSpec {
    pub fn build(&self) -> Result<Arc<dyn GammaField>, CliError> {
        Ok(match self {
            FieldSpec::Trivial { n } => {
                if *n == 0 {
                    return Err(CliError::input("trivial field needs n ≥ 1"));
                }
                Arc::new(TrivialField { n: *n })
            }
            FieldSpec::AnalyticN2 { num, den } => Arc::new(AnalyticN2Field::new(num.clone(), den.clone()).map_err(CliError::core)?),
            FieldSpec::Hurwitz0 { poly } => Arc::new(Hurwitz0Field::new(poly.clone()).map_err(CliError::core)?.without_seed_cache()),
            FieldSpec::RandomControl { n, seed, scale } => Arc::new(RandomPolynomialField::new(*n, *seed, *scale)),
        })
    }
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Accepts a bare descriptor or a `seed` report carrying one under "field".
pub fn load_field(path: &Path) -> Result<FieldSpec, CliError> {
    let v = read_json(path)?;
    let inner = match v.get("field") {
        Some(f) if v.get("schema").is_some() => f.clone(),
        _ => v,
    };
    serde_json::from_value(inner).map_err(|e| CliError::input(format!("{}: not a field descriptor: {e}", path.display())))
}

pub fn parse<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    serde_json::from_value(read_json(path)?).map_err(|e| CliError::input(format!("{}: not a {what}: {e}", path.display())))
}
