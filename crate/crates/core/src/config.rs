//! Run configuration: JSON schema, validation, lattice start.

use serde::{Deserialize, Serialize};

use crate::collisions::{CollisionModel, CollisionParams};
use crate::error::{ConfigCode, ConfigIssue, Error, Result};
use crate::field::{DriftSpec, FieldParams, FieldSpec};

/// Output controls echoed into the run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default)]
    pub emit_paths: bool,
    #[serde(default = "default_true")]
    pub emit_summary: bool,
}

fn default_dir() -> String {
    "out".to_string()
}

fn default_true() -> bool {
    true
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { dir: default_dir(), emit_paths: false, emit_summary: true }
    }
}

/// Raw JSON config. Key names are part of the external contract; unknown keys
/// are an error. `field` and `drift` default to the zero family when absent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub dimension: i64,
    pub resolution_n: i64,
    pub horizon_t: f64,
    pub paths_m: i64,
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<FieldParams>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionParams>,
}

/// Validated simulation config. Immutable once built; safe to share across
/// worker threads.
#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub dim: usize,
    pub resolution: u64,
    pub horizon: f64,
    pub paths: usize,
    pub start: Vec<f64>,
    /// Coordinatewise nearest integer to `start * sqrt(n)`, ties toward zero,
    /// so the rescaled lattice start converges to `start`.
    pub lattice_start: Vec<i64>,
    pub field: FieldSpec,
    pub drift: DriftSpec,
    pub seed: u64,
    pub output: OutputOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionModel>,
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<RawConfig> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(vec![ConfigIssue::new(
                ConfigCode::FieldShape,
                format!("config does not match schema: {e}"),
            )])
        })
    }

    /// Checks every invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<SimConfig> {
        let mut issues = Vec::new();
        if self.dimension < 1 {
            issues.push(ConfigIssue::new(
                ConfigCode::NonPositive,
                format!("dimension must be >= 1, got {}", self.dimension),
            ));
        }
        if self.resolution_n < 1 {
            issues.push(ConfigIssue::new(
                ConfigCode::NonPositive,
                format!("resolution_n must be >= 1, got {}", self.resolution_n),
            ));
        }
        if !(self.horizon_t > 0.0) || !self.horizon_t.is_finite() {
            issues.push(ConfigIssue::new(
                ConfigCode::NonPositive,
                format!("horizon_t must be > 0, got {}", self.horizon_t),
            ));
        }
        if self.paths_m < 1 {
            issues.push(ConfigIssue::new(
                ConfigCode::NonPositive,
                format!("paths_m must be >= 1, got {}", self.paths_m),
            ));
        }
        if self.seed.is_none() {
            issues.push(ConfigIssue::new(ConfigCode::SeedMissing, "config has no seed"));
        }

        let dim = self.dimension.max(1) as usize;
        if self.start.len() != dim {
            issues.push(ConfigIssue::new(
                ConfigCode::StartShape,
                format!("start has length {}, expected {}", self.start.len(), dim),
            ));
        }
        if self.start.iter().any(|v| !v.is_finite()) {
            issues.push(ConfigIssue::new(ConfigCode::NonFinite, "start has a non-finite entry"));
        }

        let field_params = self.field.clone().unwrap_or(FieldParams::Zero);
        let field = match FieldSpec::new(field_params, dim) {
            Ok(f) => Some(f),
            Err(mut errs) => {
                issues.append(&mut errs);
                None
            }
        };
        let drift_params = self.drift.clone().unwrap_or(FieldParams::Zero);
        let drift = match DriftSpec::new(drift_params, dim) {
            Ok(d) => Some(d),
            Err(mut errs) => {
                issues.append(&mut errs);
                None
            }
        };
        let collision = match &self.collision {
            None => None,
            Some(params) => match CollisionModel::new(params.clone()) {
                Ok(m) => Some(m),
                Err(mut errs) => {
                    issues.append(&mut errs);
                    None
                }
            },
        };

        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }

        let resolution = self.resolution_n as u64;
        let lattice_start = self
            .start
            .iter()
            .map(|&x| round_ties_to_zero(x * (resolution as f64).sqrt()))
            .collect();
        Ok(SimConfig {
            dim,
            resolution,
            horizon: self.horizon_t,
            paths: self.paths_m as usize,
            start: self.start.clone(),
            lattice_start,
            field: field.unwrap(),
            drift: drift.unwrap(),
            seed: self.seed.unwrap(),
            output: self.output.clone().unwrap_or_default(),
            collision,
        })
    }
}

impl SimConfig {
    /// Rescaled lattice start `x^n / sqrt(n)`.
    pub fn scaled_start(&self) -> Vec<f64> {
        let root = (self.resolution as f64).sqrt();
        self.lattice_start.iter().map(|&v| v as f64 / root).collect()
    }

    /// Number of chain steps covering `[0, horizon]`.
    pub fn steps(&self) -> usize {
        step_count(self.resolution, self.horizon)
    }

    /// Canonical raw form (defaults filled in); used for manifest echoes.
    pub fn echo(&self) -> RawConfig {
        RawConfig {
            dimension: self.dim as i64,
            resolution_n: self.resolution as i64,
            horizon_t: self.horizon,
            paths_m: self.paths as i64,
            start: self.start.clone(),
            field: Some(self.field.params().clone()),
            drift: Some(self.drift.params().clone()),
            seed: Some(self.seed),
            output: Some(self.output.clone()),
            collision: self.collision.as_ref().map(|m| m.params().clone()),
        }
    }
}

/// Nearest integer with exact halves rounded toward zero.
pub fn round_ties_to_zero(x: f64) -> i64 {
    let a = x.abs();
    let r = if a.fract() == 0.5 { a.trunc() } else { a.round() };
    (r.copysign(x)) as i64
}

/// `ceil(n * t)` with a guard against float fuzz on exact products.
pub fn step_count(n: u64, t: f64) -> usize {
    let nt = n as f64 * t;
    let rounded = nt.round();
    if (nt - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        nt.ceil() as usize
    }
}

/// Grid index `floor(n t)` for piecewise-constant paths, clamped to the grid.
pub fn grid_index(n: u64, t: f64, steps: usize) -> usize {
    let idx = (n as f64 * t + 1e-9).floor();
    if idx < 0.0 {
        0
    } else {
        (idx as usize).min(steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_raw() -> RawConfig {
        RawConfig {
            dimension: 1,
            resolution_n: 100,
            horizon_t: 1.0,
            paths_m: 10,
            start: vec![0.7],
            field: Some(FieldParams::Constant { value: vec![0.5] }),
            drift: None,
            seed: Some(7),
            output: None,
            collision: None,
        }
    }

    #[test]
    fn lattice_start_rounds_to_nearest() {
        let cfg = base_raw().validate().unwrap();
        // 0.7 * sqrt(100) = 7 exactly.
        assert_eq!(cfg.lattice_start, vec![7]);
        assert_eq!(cfg.scaled_start(), vec![0.7]);

        let mut raw = base_raw();
        raw.resolution_n = 4;
        raw.start = vec![0.33];
        let cfg = raw.validate().unwrap();
        // 0.33 * 2 = 0.66 rounds to 1, rescaled start 0.5.
        assert_eq!(cfg.lattice_start, vec![1]);
        assert_eq!(cfg.scaled_start(), vec![0.5]);
    }

    #[test]
    fn ties_round_toward_zero() {
        assert_eq!(round_ties_to_zero(0.5), 0);
        assert_eq!(round_ties_to_zero(-0.5), 0);
        assert_eq!(round_ties_to_zero(1.5), 1);
        assert_eq!(round_ties_to_zero(-2.5), -2);
        assert_eq!(round_ties_to_zero(0.75), 1);
    }

    #[test]
    fn b1_range_violation_reported() {
        let mut raw = base_raw();
        raw.field = Some(FieldParams::Constant { value: vec![1.5] });
        let err = raw.validate().unwrap_err();
        match err {
            Error::Config(issues) => {
                assert!(issues.iter().any(|i| i.code == ConfigCode::B1Range))
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn missing_seed_and_bad_sizes_reported_together() {
        let mut raw = base_raw();
        raw.seed = None;
        raw.paths_m = 0;
        raw.resolution_n = -3;
        let err = raw.validate().unwrap_err();
        match err {
            Error::Config(issues) => {
                assert!(issues.iter().any(|i| i.code == ConfigCode::SeedMissing));
                assert_eq!(
                    issues.iter().filter(|i| i.code == ConfigCode::NonPositive).count(),
                    2
                );
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{
            "dimension": 1, "resolution_n": 10, "horizon_t": 1.0, "paths_m": 1,
            "start": [0.0], "seed": 1, "typo_key": true
        }"#;
        assert!(RawConfig::from_json(text).is_err());
    }

    #[test]
    fn validation_is_idempotent() {
        let cfg = base_raw().validate().unwrap();
        let again = cfg.echo().validate().unwrap();
        assert_eq!(cfg.lattice_start, again.lattice_start);
        assert_eq!(cfg.field, again.field);
        assert_eq!(cfg.seed, again.seed);
        assert_eq!(cfg.steps(), again.steps());
    }

    #[test]
    fn step_count_handles_fuzzy_products() {
        assert_eq!(step_count(1000, 1.0), 1000);
        assert_eq!(step_count(1000, 0.3), 300);
        assert_eq!(step_count(3, 0.5), 2); // ceil(1.5)
        assert_eq!(grid_index(1000, 0.3, 300), 300);
        assert_eq!(grid_index(4, 0.75, 4), 3);
        assert_eq!(grid_index(4, 1.0, 4), 4);
    }
}
