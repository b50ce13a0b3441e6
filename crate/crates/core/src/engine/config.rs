//! Simulation configuration (JSON) and its validated, resolved form.
//!
//! ```json
//! {
//!   "cells": [{"id": 0, "pose": {"x": 0, "y": 0, "heading": 0}, "codebook": {"beamwidth_deg": 20}}, ...],
//!   "mobile": {"codebook": {"omni": true}, "mobility": {"scenario": "walk"}, "channel": {...}},
//!   "schedule": {"meas_period_s": 0.02, "serving_to_neighbor_ratio": [3, 1]},
//!   "protocol": {"failure_samples": 3, "max_ra_attempts": 4},
//!   "duration_s": 10.0,
//!   "seed": 1
//! }
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, Pose};
use crate::codebook::{Codebook, CodebookSpec};
use crate::mobility::{MobilityModel, Scenario, ROTATION_RATE_DPS, VEHICULAR_SPEED_MPS, WALK_SPEED_MPS};
use crate::protocol::{BeamBooks, CellId, ProtocolConfig};

/// Invalid configuration, with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config at {}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn default_ssb_period() -> f64 {
    0.02
}

fn default_coverage() -> f64 {
    DEFAULT_COVERAGE_RADIUS_M
}

/// Nominal cell radius of the default topology, in meters.
pub const DEFAULT_COVERAGE_RADIUS_M: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub id: CellId,
    pub pose: Pose,
    #[serde(default)]
    pub codebook: CodebookSpec,
    #[serde(default = "default_ssb_period")]
    pub ssb_period_s: f64,
    /// Offset of the sweep within its period; drawn per trial when absent.
    #[serde(default)]
    pub ssb_phase_s: Option<f64>,
    #[serde(default = "default_coverage")]
    pub coverage_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_dps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_deg: Option<f64>,
}

impl MobilityConfig {
    pub fn scenario(scenario: Scenario) -> Self {
        Self { scenario, start: None, speed_mps: None, omega_dps: None, direction_deg: None }
    }

    /// Fills unset fields from the scenario preset.
    pub fn resolve(&self) -> MobilityModel {
        let preset = preset_mobility(self.scenario);
        MobilityModel {
            scenario: self.scenario,
            start: self.start.unwrap_or(preset.start),
            speed_mps: self.speed_mps.unwrap_or(preset.speed_mps),
            omega_dps: self.omega_dps.unwrap_or(preset.omega_dps),
            direction_deg: self.direction_deg.unwrap_or(preset.direction_deg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobileConfig {
    #[serde(default)]
    pub codebook: CodebookSpec,
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    /// Initially serving cell; defaults to the first listed cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serving_cell: Option<CellId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub meas_period_s: f64,
    pub serving_to_neighbor_ratio: [u32; 2],
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { meas_period_s: 0.02, serving_to_neighbor_ratio: [3, 1] }
    }
}

/// Protocol constants; unset thresholds derive from the channel sensitivity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_samples: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nack_limit: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ra_attempts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_threshold_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rach_threshold_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop_threshold_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ra_retry_period_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ra_timeout_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ewma_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub cells: Vec<CellConfig>,
    pub mobile: MobileConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub protocol: ProtocolOverrides,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Trajectory presets of the default cell-edge topology: base stations at
/// (0, 0) and (16, 0), the mobile crossing the overlap on the chord y = -4 m
/// (about 9 m from each base station at the midpoint).
pub fn preset_mobility(scenario: Scenario) -> MobilityModel {
    let path_start = Pose { x: 2.0, y: -4.0, heading: 0.0 };
    match scenario {
        Scenario::Walk => MobilityModel { speed_mps: WALK_SPEED_MPS, ..MobilityModel::walk(path_start, 0.0) },
        Scenario::Vehicular => {
            MobilityModel { speed_mps: VEHICULAR_SPEED_MPS, ..MobilityModel::vehicular(path_start, 0.0) }
        }
        Scenario::Rotation => MobilityModel {
            omega_dps: ROTATION_RATE_DPS,
            ..MobilityModel::rotation(Pose { x: 13.0, y: -4.0, heading: 0.0 })
        },
        Scenario::Static => MobilityModel::stationary(Pose { x: 8.0, y: -4.0, heading: 0.0 }),
    }
}

/// Simulated duration that lets each preset play out.
pub fn preset_duration_s(scenario: Scenario) -> f64 {
    match scenario {
        Scenario::Walk => 10.0,
        Scenario::Vehicular => 2.0,
        Scenario::Rotation => 3.0,
        Scenario::Static => 2.0,
    }
}

/// One mobile and three base stations: the serving cell, the handover
/// target, and a distant third cell.
pub fn default_cells() -> Vec<CellConfig> {
    let cell = |id, x, y, heading, phase: Option<f64>| CellConfig {
        id,
        pose: Pose { x, y, heading },
        codebook: CodebookSpec::beamwidth(20.0),
        ssb_period_s: 0.02,
        ssb_phase_s: phase,
        coverage_radius_m: DEFAULT_COVERAGE_RADIUS_M,
    };
    vec![cell(0, 0.0, 0.0, 0.0, Some(0.0)), cell(1, 16.0, 0.0, 180.0, None), cell(2, 8.0, 40.0, 270.0, None)]
}

impl SimConfig {
    /// Default configuration for a scenario: 20 degree mobile codebook, no
    /// shadowing.
    pub fn scenario(scenario: Scenario) -> Self {
        Self {
            cells: default_cells(),
            mobile: MobileConfig {
                codebook: CodebookSpec::beamwidth(20.0),
                mobility: MobilityConfig::scenario(scenario),
                channel: ChannelParams::default(),
                serving_cell: None,
            },
            schedule: ScheduleConfig::default(),
            protocol: ProtocolOverrides::default(),
            duration_s: preset_duration_s(scenario),
            seed: 1,
        }
    }

    /// Same topology and radio settings, different trajectory. Keeps this
    /// config's mobility overrides and duration when the scenario matches.
    pub fn with_scenario(&self, scenario: Scenario) -> Self {
        let mut c = self.clone();
        if c.mobile.mobility.scenario != scenario {
            c.mobile.mobility = MobilityConfig::scenario(scenario);
            c.duration_s = preset_duration_s(scenario);
        }
        c
    }

    pub fn with_mobile_codebook(&self, codebook: CodebookSpec) -> Self {
        let mut c = self.clone();
        c.mobile.codebook = codebook;
        c
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| ConfigError::new("", e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field and produces the engine's working form.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(ConfigError::new("duration_s", "must be positive"));
        }
        let period_ms = to_ms(self.schedule.meas_period_s, "schedule.meas_period_s")?;
        let [s_ratio, n_ratio] = self.schedule.serving_to_neighbor_ratio;
        if s_ratio == 0 || n_ratio == 0 {
            return Err(ConfigError::new("schedule.serving_to_neighbor_ratio", "both terms must be at least 1"));
        }
        if self.cells.len() < 2 {
            return Err(ConfigError::new("cells", "at least two cells are required"));
        }

        let mut cells = Vec::with_capacity(self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            let path = |f: &str| format!("cells[{i}].{f}");
            if self.cells[..i].iter().any(|o| o.id == c.id) {
                return Err(ConfigError::new(path("id"), format!("duplicate cell id {}", c.id)));
            }
            let pose = Pose::new(c.pose.x, c.pose.y, c.pose.heading)
                .map_err(|e| ConfigError::new(path("pose"), e.to_string()))?;
            let codebook = c.codebook.build().map_err(|e| ConfigError::new(path("codebook"), e.to_string()))?;
            let ssb_ms = to_ms(c.ssb_period_s, &path("ssb_period_s"))?;
            if ssb_ms != period_ms {
                return Err(ConfigError::new(path("ssb_period_s"), "must equal schedule.meas_period_s"));
            }
            if codebook.len() as u64 > ssb_ms {
                return Err(ConfigError::new(
                    path("codebook"),
                    "sweep does not fit in one SSB period at 1 ms per beam",
                ));
            }
            let phase_ms = match c.ssb_phase_s {
                None => None,
                Some(p) => {
                    let ms = (p * 1000.0).round();
                    if !(ms >= 0.0 && (ms as u64) < ssb_ms) {
                        return Err(ConfigError::new(path("ssb_phase_s"), "must lie in [0, ssb_period_s)"));
                    }
                    Some(ms as u64)
                }
            };
            if !(c.coverage_radius_m > 0.0) {
                return Err(ConfigError::new(path("coverage_radius_m"), "must be positive"));
            }
            cells.push(ResolvedCell { id: c.id, pose, codebook, phase_ms, coverage_radius_m: c.coverage_radius_m });
        }

        let serving_id = self.mobile.serving_cell.unwrap_or(self.cells[0].id);
        let serving = cells
            .iter()
            .position(|c| c.id == serving_id)
            .ok_or_else(|| ConfigError::new("mobile.serving_cell", format!("unknown cell {serving_id}")))?;

        let mobile_book =
            self.mobile.codebook.build().map_err(|e| ConfigError::new("mobile.codebook", e.to_string()))?;
        self.mobile.channel.validate().map_err(|m| ConfigError::new("mobile.channel", m))?;
        let mobility = self.mobile.mobility.resolve();
        mobility.validate().map_err(|m| ConfigError::new("mobile.mobility", m))?;
        let start = Pose::new(mobility.start.x, mobility.start.y, mobility.start.heading)
            .map_err(|e| ConfigError::new("mobile.mobility.start", e.to_string()))?;
        if cells.iter().any(|c| c.pose.distance_to(&start) == 0.0) {
            return Err(ConfigError::new("mobile.mobility.start", "coincides with a base station"));
        }

        let protocol = self.resolve_protocol(period_ms)?;
        let books = BeamBooks {
            mobile_beams: mobile_book.len(),
            cell_beams: cells.iter().map(|c| (c.id, c.codebook.len())).collect(),
            default_cell_beams: cells[serving].codebook.len(),
        };
        Ok(Resolved {
            cells,
            serving,
            mobile_book,
            mobile_label: self.mobile.codebook.label(),
            mobility: MobilityModel { start, ..mobility },
            channel: self.mobile.channel,
            period_ms,
            ratio: (s_ratio, n_ratio),
            protocol,
            books,
            duration_ms: (self.duration_s * 1000.0).round() as u64,
            seed: self.seed,
        })
    }

    fn resolve_protocol(&self, period_ms: u64) -> Result<ProtocolConfig, ConfigError> {
        let o = &self.protocol;
        let mut p = ProtocolConfig::for_sensitivity(self.mobile.channel.sensitivity_dbm);
        p.ssb_period_ms = period_ms;
        if let Some(v) = o.failure_samples {
            p.failure_samples = v;
        }
        if let Some(v) = o.nack_limit {
            p.nack_limit = v;
        }
        if let Some(v) = o.max_ra_attempts {
            p.max_ra_attempts = v;
        }
        if let Some(v) = o.edge_threshold_dbm {
            p.edge_threshold_dbm = v;
        }
        if let Some(v) = o.rach_threshold_dbm {
            p.rach_threshold_dbm = v;
        }
        if let Some(v) = o.drop_threshold_db {
            p.drop_threshold_db = v;
        }
        if let Some(v) = o.ra_retry_period_s {
            p.ra_retry_period_ms = to_ms(v, "protocol.ra_retry_period_s")?;
            p.ra_timeout_ms = 2 * p.ra_retry_period_ms;
        }
        if let Some(v) = o.ra_timeout_s {
            p.ra_timeout_ms = to_ms(v, "protocol.ra_timeout_s")?;
        }
        p.ewma_alpha = o.ewma_alpha;
        p.validate().map_err(|m| ConfigError::new("protocol", m))?;
        Ok(p)
    }
}

/// Seconds to whole milliseconds; rejects non-positive and sub-slot values.
fn to_ms(s: f64, path: &str) -> Result<u64, ConfigError> {
    let ms = (s * 1000.0).round();
    if !(s > 0.0) || !ms.is_finite() || ms < 1.0 {
        return Err(ConfigError::new(path, "must be a positive number of milliseconds"));
    }
    if ((s * 1000.0) - ms).abs() > 1e-6 {
        return Err(ConfigError::new(path, "must be a whole number of milliseconds"));
    }
    Ok(ms as u64)
}

#[derive(Debug, Clone)]
pub struct ResolvedCell {
    pub id: CellId,
    pub pose: Pose,
    pub codebook: Codebook,
    pub phase_ms: Option<u64>,
    pub coverage_radius_m: f64,
}

/// Validated configuration with derived quantities.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cells: Vec<ResolvedCell>,
    /// Index of the initially serving cell in `cells`.
    pub serving: usize,
    pub mobile_book: Codebook,
    pub mobile_label: String,
    pub mobility: MobilityModel,
    pub channel: ChannelParams,
    pub period_ms: u64,
    pub ratio: (u32, u32),
    pub protocol: ProtocolConfig,
    pub books: BeamBooks,
    pub duration_ms: u64,
    pub seed: u64,
}
