//! Experiment configuration files. Lengths are in units of the reaction's
//! length scale and times in units of its square; key suffixes name the
//! quantity.

use crate::design::Variant;
use crate::error::{Error, Result};
use crate::frontmetrics::SpeedClass;
use crate::reaction::ReactionSpec;
use crate::solver::{Boundary, Orientation, Scheme};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub reaction: Option<ReactionSpec>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    pub certify: Option<CertifyConfig>,
    pub design: Option<DesignConfig>,
    pub terrace: Option<TerraceConfig>,
    pub sweep: Option<SweepConfig>,
    pub fg: Option<FgConfig>,
    #[serde(default)]
    pub expect: ExpectConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub dx_length: Option<f64>,
    pub dt_time: Option<f64>,
    pub t_end_time: Option<f64>,
    pub half_width_length: Option<f64>,
    pub recenter_length: Option<f64>,
    pub margin_length: Option<f64>,
    pub scheme: Option<Scheme>,
    pub boundary: Option<Boundary>,
    pub sample_every_steps: Option<usize>,
    pub snapshot_count: Option<usize>,
    pub n_xi: Option<usize>,
    pub n_eta: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    RightMoving,
    LeftMoving,
    Both,
}

impl Direction {
    pub fn orientations(self) -> Vec<Orientation> {
        match self {
            Direction::RightMoving => vec![Orientation::RightMoving],
            Direction::LeftMoving => vec![Orientation::LeftMoving],
            Direction::Both => vec![Orientation::LeftMoving, Orientation::RightMoving],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub discard_fraction: Option<f64>,
    pub orientation: Option<Direction>,
    /// Propagation directions for planar reactions.
    pub directions: Option<Vec<[f64; 2]>>,
    pub decay_min_deviation: Option<f64>,
    pub decay_max_deviation: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub nodes_per_length: Option<usize>,
    pub random_seeds: Option<usize>,
    pub harvest_runs: Option<usize>,
    pub harvest_time: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub targets_speed: Vec<f64>,
    pub sigma: Option<f64>,
    pub directions: Option<Vec<[f64; 2]>>,
    pub lattice_lengths: Option<Vec<f64>>,
    pub ratio_tolerance: Option<f64>,
    pub speed_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerraceConfig {
    pub variant: Variant,
    pub fronts: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub taus: Vec<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FgConfig {
    /// Number of low-height rational directions to sample.
    pub direction_count: Option<usize>,
    pub directions: Option<Vec<[f64; 2]>>,
    pub queries: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectConfig {
    pub left_class: Option<SpeedClass>,
    pub right_class: Option<SpeedClass>,
    /// One class per measured planar direction.
    pub direction_classes: Option<Vec<SpeedClass>>,
    pub relative_tolerance: Option<f64>,
    pub certified: Option<bool>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let positive = [
            ("dx_length", n.dx_length),
            ("dt_time", n.dt_time),
            ("half_width_length", n.half_width_length),
            ("recenter_length", n.recenter_length),
            ("margin_length", n.margin_length),
        ];
        for (k, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("numerics.{k} must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = n.t_end_time {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "numerics.t_end_time must be nonnegative, got {t}"
                )));
            }
        }
        if let Some(d) = self.measurement.discard_fraction {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::Config(format!(
                    "measurement.discard_fraction must lie in [0, 1), got {d}"
                )));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn reaction(&self) -> Result<crate::reaction::Reaction> {
        self.reaction
            .as_ref()
            .ok_or_else(|| Error::Config("missing [reaction] section".into()))?
            .build()
    }

    pub fn discard(&self) -> f64 {
        self.measurement
            .discard_fraction
            .unwrap_or(crate::frontmetrics::DEFAULT_DISCARD)
    }
}
