//! Closed-form trajectories for the mobile node.

use serde::{Deserialize, Serialize};

use crate::channel::{normalize_deg, Pose};
use crate::error::DomainError;

pub const WALK_SPEED_MPS: f64 = 1.4;
pub const ROTATION_RATE_DPS: f64 = 120.0;
pub const METERS_PER_SECOND_PER_MPH: f64 = 0.44704;
/// 20 mph.
pub const VEHICULAR_SPEED_MPS: f64 = 20.0 * METERS_PER_SECOND_PER_MPH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Walk,
    Rotation,
    Vehicular,
    Static,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Walk, Scenario::Rotation, Scenario::Vehicular, Scenario::Static];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Walk => "walk",
            Scenario::Rotation => "rotation",
            Scenario::Vehicular => "vehicular",
            Scenario::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A deterministic trajectory. `speed_mps` and `direction_deg` drive the
/// linear variants, `omega_dps` the rotation; `Static` ignores all three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityModel {
    pub scenario: Scenario,
    pub start: Pose,
    pub speed_mps: f64,
    pub omega_dps: f64,
    pub direction_deg: f64,
}

impl MobilityModel {
    pub fn walk(start: Pose, direction_deg: f64) -> Self {
        Self { scenario: Scenario::Walk, start, speed_mps: WALK_SPEED_MPS, omega_dps: 0.0, direction_deg }
    }

    pub fn vehicular(start: Pose, direction_deg: f64) -> Self {
        Self { scenario: Scenario::Vehicular, start, speed_mps: VEHICULAR_SPEED_MPS, omega_dps: 0.0, direction_deg }
    }

    pub fn rotation(start: Pose) -> Self {
        Self { scenario: Scenario::Rotation, start, speed_mps: 0.0, omega_dps: ROTATION_RATE_DPS, direction_deg: 0.0 }
    }

    pub fn stationary(start: Pose) -> Self {
        Self { scenario: Scenario::Static, start, speed_mps: 0.0, omega_dps: 0.0, direction_deg: 0.0 }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed_mps >= 0.0) || !self.speed_mps.is_finite() {
            return Err("speed_mps must be finite and non-negative".into());
        }
        if !self.omega_dps.is_finite() {
            return Err("omega_dps must be finite".into());
        }
        if !self.direction_deg.is_finite() {
            return Err("direction_deg must be finite".into());
        }
        Ok(())
    }

    pub fn pose_at(&self, t: f64) -> Result<Pose, DomainError> {
        if !(t >= 0.0) {
            return Err(DomainError::NegativeTime(t));
        }
        let s = self.start;
        Ok(match self.scenario {
            Scenario::Walk | Scenario::Vehicular => {
                let dir = self.direction_deg.to_radians();
                let r = self.speed_mps * t;
                Pose { x: s.x + r * dir.cos(), y: s.y + r * dir.sin(), heading: s.heading }
            }
            Scenario::Rotation => Pose { x: s.x, y: s.y, heading: normalize_deg(s.heading + self.omega_dps * t) },
            Scenario::Static => s,
        })
    }
}
