//! Geometric 60 GHz line-of-sight channel.
//!
//! RSS between two posed nodes is transmit power plus both antenna gains
//! minus free-space path loss, plus an optional log-normal shadowing draw
//! supplied by the caller. Geometry is 2-D azimuth only.

use serde::{Deserialize, Serialize};

use crate::codebook::Beam;
use crate::error::DomainError;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Attenuation floor of the antenna pattern outside the main lobe, in dB.
pub const SIDELOBE_FLOOR_DB: f64 = 20.0;

/// Position in meters and heading in degrees, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self, DomainError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(DomainError::NonFinite("pose coordinate"));
        }
        if !heading.is_finite() {
            return Err(DomainError::NonFinite("heading"));
        }
        Ok(Self { x, y, heading: normalize_deg(heading) })
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// World bearing from `self` toward `other`, in `[0, 360)`.
    pub fn bearing_to(&self, other: &Pose) -> f64 {
        normalize_deg((other.y - self.y).atan2(other.x - self.x).to_degrees())
    }

    /// Bearing toward `other` relative to this node's heading, in `[0, 360)`.
    pub fn relative_bearing_to(&self, other: &Pose) -> f64 {
        normalize_deg(self.bearing_to(other) - self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub carrier_freq_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    /// Detection threshold.
    pub sensitivity_dbm: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 60e9,
            tx_power_dbm: 10.0,
            noise_floor_dbm: -80.0,
            sensitivity_dbm: -57.0,
            shadowing_sigma_db: 0.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.carrier_freq_hz > 0.0) {
            return Err("carrier_freq_hz must be positive".into());
        }
        if !(self.sensitivity_dbm >= self.noise_floor_dbm) {
            return Err("sensitivity_dbm must be at least noise_floor_dbm".into());
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err("shadowing_sigma_db must be non-negative".into());
        }
        if !self.tx_power_dbm.is_finite() {
            return Err("tx_power_dbm must be finite".into());
        }
        Ok(())
    }
}

pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Unsigned angular distance between two directions, in `[0, 180]`.
pub fn angle_offset(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Free-space path loss `20 log10(4 pi d f / c)` in dB.
pub fn fspl(distance_m: f64, freq_hz: f64) -> Result<f64, DomainError> {
    if !(distance_m > 0.0) {
        return Err(DomainError::Distance(distance_m));
    }
    if !(freq_hz > 0.0) {
        return Err(DomainError::Frequency(freq_hz));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10())
}

/// Gain of `beam` at an angular offset from its boresight: a parabolic main
/// lobe `12 (offset / theta_3db)^2` clamped at the sidelobe floor. Isotropic
/// beams return 0 dBi everywhere.
pub fn beam_gain(beam: &Beam, offset_deg: f64) -> f64 {
    if beam.is_isotropic() {
        return 0.0;
    }
    let off = angle_offset(offset_deg, 0.0);
    let att = 12.0 * (off / beam.theta_3db).powi(2);
    beam.peak_gain - att.min(SIDELOBE_FLOOR_DB)
}

/// Received signal strength in dBm. Beam boresights are relative to the
/// owning node's heading; `noise_draw` is added verbatim.
pub fn rss(
    tx_pose: &Pose,
    rx_pose: &Pose,
    tx_beam: &Beam,
    rx_beam: &Beam,
    params: &ChannelParams,
    noise_draw: f64,
) -> Result<f64, DomainError> {
    let d = tx_pose.distance_to(rx_pose);
    if d == 0.0 {
        return Err(DomainError::CoincidentPoses);
    }
    let tx_off = angle_offset(tx_pose.relative_bearing_to(rx_pose), tx_beam.boresight);
    let rx_off = angle_offset(rx_pose.relative_bearing_to(tx_pose), rx_beam.boresight);
    Ok(params.tx_power_dbm + beam_gain(tx_beam, tx_off) + beam_gain(rx_beam, rx_off) - fspl(d, params.carrier_freq_hz)?
        + noise_draw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Codebook;

    // High-precision reference values (50-digit evaluation of the closed form).
    const FSPL_1M_60GHZ: f64 = 68.010_808_229_556_25;
    const FSPL_10M_60GHZ: f64 = 88.010_808_229_556_25;
    const RSS_ALIGNED_10M: f64 = -52.905_358_127_490_13;

    #[test]
    fn fspl_matches_reference() {
        assert!((fspl(1.0, 60e9).unwrap() - FSPL_1M_60GHZ).abs() < 1e-9);
        assert!((fspl(10.0, 60e9).unwrap() - FSPL_10M_60GHZ).abs() < 1e-9);
        let diff = fspl(100.0, 28e9).unwrap() - fspl(10.0, 28e9).unwrap();
        assert!((diff - 20.0).abs() < 1e-9);
    }

    #[test]
    fn fspl_rejects_non_positive() {
        assert_eq!(fspl(0.0, 60e9), Err(DomainError::Distance(0.0)));
        assert_eq!(fspl(-1.0, 60e9), Err(DomainError::Distance(-1.0)));
        assert_eq!(fspl(1.0, 0.0), Err(DomainError::Frequency(0.0)));
    }

    #[test]
    fn gain_examples() {
        let b20 = Codebook::uniform(20.0).unwrap().beams()[0];
        let b60 = Codebook::uniform(60.0).unwrap().beams()[0];
        assert_eq!(beam_gain(&b20, 0.0), b20.peak_gain);
        assert_eq!(beam_gain(&b20, 10.0), b20.peak_gain - 3.0);
        // 12 * (90/60)^2 = 27 dB, clamped to the floor
        assert_eq!(beam_gain(&b60, 90.0), b60.peak_gain - 20.0);
        assert_eq!(beam_gain(&Beam::isotropic(), 123.0), 0.0);
    }

    #[test]
    fn rss_examples() {
        let cb = Codebook::uniform(20.0).unwrap();
        let p = ChannelParams { tx_power_dbm: 10.0, ..Default::default() };
        let bs = Pose::new(0.0, 0.0, 0.0).unwrap();
        let ue = Pose::new(10.0, 0.0, 180.0).unwrap();
        let b0 = cb.beams()[0];
        let aligned = rss(&bs, &ue, &b0, &b0, &p, 0.0).unwrap();
        assert!((aligned - RSS_ALIGNED_10M).abs() < 1e-9);

        let ue_off = Pose::new(10.0, 0.0, 190.0).unwrap();
        let off = rss(&bs, &ue_off, &b0, &b0, &p, 0.0).unwrap();
        assert!((off - (RSS_ALIGNED_10M - 3.0)).abs() < 1e-9);

        let swapped = rss(&ue, &bs, &b0, &b0, &p, 0.0).unwrap();
        assert!((swapped - aligned).abs() < 1e-12);
    }

    #[test]
    fn rss_rejects_coincident() {
        let b = Beam::isotropic();
        let p = Pose::new(1.0, 1.0, 0.0).unwrap();
        let q = Pose::new(1.0, 1.0, 90.0).unwrap();
        assert_eq!(rss(&p, &q, &b, &b, &ChannelParams::default(), 0.0), Err(DomainError::CoincidentPoses));
    }

    #[test]
    fn pose_normalizes_heading() {
        assert_eq!(Pose::new(0.0, 0.0, -90.0).unwrap().heading, 270.0);
        assert_eq!(Pose::new(0.0, 0.0, 720.0).unwrap().heading, 0.0);
        assert!(Pose::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::default().validate().is_ok());
        let bad = ChannelParams { sensitivity_dbm: -100.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChannelParams { carrier_freq_hz: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
