//! Run configuration shared by the command line, config files and
//! provenance records.

use std::path::Path;

use csd_core::params::ContourRadius;
use csd_core::{AxisKind, DecomposeParams, HausdorffMetric};
use serde::{Deserialize, Serialize};

use crate::atomic::read_json;
use crate::error::{FormatError, Result};

/// Environment variable consulted when no thread count is configured.
pub const THREADS_ENV: &str = "CSD_THREADS";

/// Pipeline settings as users write them; `theta_c` is in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha_s: f64,
    pub alpha_e: f64,
    pub theta_h: f64,
    /// Degrees; 181 keeps every branch separate.
    pub theta_c: f64,
    pub metric: HausdorffMetric,
    pub contour_radius: ContourRadius,
    pub sf: usize,
    pub axis: AxisKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_branch_length: Option<f64>,
    pub max_branches: usize,
    pub n_samples: usize,
    pub step: f64,
    pub seed: u64,
    /// Worker threads. Never part of a provenance record since it does not
    /// change results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = DecomposeParams::default();
        RunConfig {
            alpha_s: p.alpha_s,
            alpha_e: p.alpha_e,
            theta_h: p.theta_h,
            theta_c: p.theta_c.to_degrees(),
            metric: p.metric,
            contour_radius: p.contour_radius,
            sf: p.sf,
            axis: p.axis,
            min_branch_length: p.min_branch_length,
            max_branches: p.max_branches,
            n_samples: p.n_samples,
            step: p.step,
            seed: 0,
            threads: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a provenance record.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut value: serde_json::Value = read_json(path)?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|source| FormatError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn params(&self) -> DecomposeParams {
        DecomposeParams {
            alpha_s: self.alpha_s,
            alpha_e: self.alpha_e,
            theta_h: self.theta_h,
            theta_c: self.theta_c.to_radians(),
            metric: self.metric,
            contour_radius: self.contour_radius,
            sf: self.sf,
            axis: self.axis,
            n_samples: self.n_samples,
            min_branch_length: self.min_branch_length,
            max_branches: self.max_branches,
            step: self.step,
        }
    }

    /// Range checks, reported in user units.
    pub fn validate(&self) -> csd_core::Result<()> {
        if !(0.0..=181.0).contains(&self.theta_c) {
            return Err(csd_core::Error::InvalidParameter {
                name: "theta_c",
                value: self.theta_c,
            });
        }
        if self.threads == Some(0) {
            return Err(csd_core::Error::InvalidParameter {
                name: "threads",
                value: 0.0,
            });
        }
        self.params().validate()
    }

    /// The config as recorded alongside results.
    pub fn for_provenance(&self) -> RunConfig {
        RunConfig {
            threads: None,
            ..self.clone()
        }
    }
}

/// Thread count: the explicit value, else `CSD_THREADS`, else the number of
/// available cores.
pub fn resolve_threads(explicit: Option<usize>) -> std::result::Result<usize, String> {
    if let Some(n) = explicit {
        return Ok(n.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("{THREADS_ENV}={s:?} is not a positive integer")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_core() {
        let c = RunConfig::default();
        assert_eq!(c.params(), DecomposeParams::default());
        c.validate().unwrap();
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = RunConfig {
            theta_c: 135.0,
            alpha_s: 3.3,
            metric: HausdorffMetric::Hausdorff,
            axis: AxisKind::Spline,
            min_branch_length: Some(7.25),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.params().theta_c.to_bits(), c.params().theta_c.to_bits());
    }

    #[test]
    fn partial_files_use_defaults_and_provenance_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"alpha_s": 3, "metric": "hausdorff"}"#).unwrap();
        let c = RunConfig::load(&p).unwrap();
        assert_eq!((c.alpha_s, c.metric, c.alpha_e), (3.0, HausdorffMetric::Hausdorff, 1.0));
        std::fs::write(&p, r#"{"version": 1, "config": {"sf": 4}}"#).unwrap();
        assert_eq!(RunConfig::load(&p).unwrap().sf, 4);
        std::fs::write(&p, r#"{"alpha": 3}"#).unwrap();
        assert!(RunConfig::load(&p).is_err());
    }

    #[test]
    fn theta_c_range_in_degrees() {
        let c = RunConfig {
            theta_c: 181.0,
            ..RunConfig::default()
        };
        c.validate().unwrap();
        let c = RunConfig {
            theta_c: 182.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
