//! Implementations behind the CLI verbs.

pub mod bench;
pub mod evaluate;
pub mod featurize;
pub mod predict;
pub mod synth;
pub mod train;

use rainrate_core::moe::{default_thresholds, TreeSpec};

use crate::error::{CliError, CliResult};

/// Tree shape from `--depth` and/or `--thresholds`.
///
/// Explicit thresholds fix the depth; without them the standard table for
/// the depth is used, falling back to geometric midpoints beyond it.
pub fn tree_spec(depth: Option<usize>, thresholds: Option<&[f64]>, y_max: f64) -> CliResult<TreeSpec> {
    match thresholds {
        Some(t) => {
            if !(t.len() + 1).is_power_of_two() {
                return Err(CliError::usage(format!(
                    "{} thresholds do not fill a complete tree (need 2^depth - 1)",
                    t.len()
                )));
            }
            let implied = (t.len() + 1).trailing_zeros() as usize;
            if let Some(d) = depth.filter(|&d| d != implied) {
                return Err(CliError::usage(format!(
                    "--depth {d} conflicts with {} thresholds (depth {implied})",
                    t.len()
                )));
            }
            Ok(TreeSpec::new(implied, 0.0, y_max, Some(t))?)
        }
        None => {
            let d = depth.unwrap_or(2);
            Ok(TreeSpec::new(d, 0.0, y_max, default_thresholds(d).as_deref())?)
        }
    }
}
