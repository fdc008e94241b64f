//! Run parameters: command-line flags overlaid by an optional JSON config file.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Flags shared by every subcommand. Unset values fall back to per-command defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Pass/fail tolerance for the asserted quantity.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Central-difference step.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// RK4 steps per path segment.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Fock window bound N.
    #[arg(long = "trunc-N", global = true)]
    #[serde(rename = "trunc_N")]
    pub trunc_n: Option<usize>,
    /// Comma-separated ε values.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Radius of the verification grid around the base point.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    pub per_axis: Option<usize>,
    /// Truncation depth D of wave jets.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Rows of the isotropic matrix D.
    #[arg(long, global = true)]
    pub g: Option<usize>,
    /// Dimension for builtin families and crosscheck.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// ε-difference step of the oracle crosscheck.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
}

impl Params {
    /// Values present in the config file replace the flag values.
    pub fn with_config(self, path: Option<&Path>) -> Result<Params, CliError> {
        let Some(path) = path else { return Ok(self) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let cfg: Params = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(Params {
            tol: cfg.tol.or(self.tol),
            h: cfg.h.or(self.h),
            steps: cfg.steps.or(self.steps),
            trunc_n: cfg.trunc_n.or(self.trunc_n),
            eps_grid: cfg.eps_grid.or(self.eps_grid),
            seed: cfg.seed.or(self.seed),
            radius: cfg.radius.or(self.radius),
            per_axis: cfg.per_axis.or(self.per_axis),
            order: cfg.order.or(self.order),
            g: cfg.g.or(self.g),
            n: cfg.n.or(self.n),
            eps: cfg.eps.or(self.eps),
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::input(format!("--{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("tol", self.tol)?;
        positive("h", self.h)?;
        positive("radius", self.radius)?;
        positive("eps", self.eps)?;
        if self.steps == Some(0) {
            return Err(CliError::input("--steps must be positive"));
        }
        if matches!(self.per_axis, Some(k) if k == 0) {
            return Err(CliError::input("--per-axis must be positive"));
        }
        if let Some(grid) = &self.eps_grid {
            if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
                return Err(CliError::input("--eps-grid needs finite values"));
            }
        }
        Ok(())
    }
}
