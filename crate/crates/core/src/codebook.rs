//! Uniform azimuth beam codebooks.
//!
//! A codebook tiles the full azimuth circle with `N = max(1, round(360 / w))`
//! beams spaced `360 / N` degrees apart. Beam `i` points at `i * 360 / N`
//! relative to the owning node's heading, so ids increase with boresight and
//! "directionally adjacent" means `i - 1` and `i + 1` modulo `N`.

use serde::{Deserialize, Serialize};

use crate::channel::{angle_offset, beam_gain};
use crate::error::DomainError;

/// Index of a beam inside its codebook.
pub type BeamId = usize;

/// One directional beam of a codebook.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub id: BeamId,
    /// Boresight in degrees, relative to the owner's heading.
    pub boresight: f64,
    /// Half-power beamwidth in degrees. A value of 360 or more is isotropic.
    pub theta_3db: f64,
    /// Peak gain in dBi.
    pub peak_gain: f64,
}

impl Beam {
    /// Builds a beam whose peak gain follows from azimuthal energy
    /// conservation: `10 log10(360 / theta_3db)`.
    pub fn new(id: BeamId, boresight: f64, theta_3db: f64) -> Result<Self, DomainError> {
        if !(theta_3db > 0.0 && theta_3db <= 360.0) {
            return Err(DomainError::Beamwidth(theta_3db));
        }
        if !boresight.is_finite() {
            return Err(DomainError::NonFinite("boresight"));
        }
        Ok(Self {
            id,
            boresight: boresight.rem_euclid(360.0),
            theta_3db,
            peak_gain: 10.0 * (360.0 / theta_3db).log10(),
        })
    }

    /// The single 0 dBi beam of an omni-directional antenna.
    pub fn isotropic() -> Self {
        Self { id: 0, boresight: 0.0, theta_3db: 360.0, peak_gain: 0.0 }
    }

    pub fn is_isotropic(&self) -> bool {
        self.theta_3db >= 360.0
    }
}

/// How a codebook is requested in configuration files:
/// `{"beamwidth_deg": 20}` or `{"omni": true}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodebookSpec {
    Beamwidth { beamwidth_deg: f64 },
    Omni { omni: bool },
}

impl CodebookSpec {
    pub fn beamwidth(deg: f64) -> Self {
        Self::Beamwidth { beamwidth_deg: deg }
    }

    pub fn omni() -> Self {
        Self::Omni { omni: true }
    }

    /// Short label used in sweep reports: `20deg`, `60deg`, `omni`.
    pub fn label(&self) -> String {
        match *self {
            Self::Omni { .. } => "omni".to_string(),
            Self::Beamwidth { beamwidth_deg } => format!("{}deg", beamwidth_deg),
        }
    }

    /// Parses `20`, `20deg`, `60` or `omni`.
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("omni") {
            return Ok(Self::omni());
        }
        let num = t.trim_end_matches("deg");
        num.parse::<f64>().map(Self::beamwidth).map_err(|_| DomainError::CodebookLabel(s.to_string()))
    }

    pub fn build(&self) -> Result<Codebook, DomainError> {
        match *self {
            Self::Omni { omni: true } => Ok(Codebook::omni()),
            Self::Omni { omni: false } => Err(DomainError::CodebookLabel("omni: false".into())),
            Self::Beamwidth { beamwidth_deg } => Codebook::uniform(beamwidth_deg),
        }
    }
}

impl Default for CodebookSpec {
    fn default() -> Self {
        Self::beamwidth(20.0)
    }
}

/// Ordered, uniformly spaced set of beams covering the azimuth circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    beams: Vec<Beam>,
    beamwidth: f64,
}

impl Codebook {
    /// Uniform codebook for the requested beamwidth. Every beam gets the
    /// tiling width `360 / N` as its half-power width, so the half-power
    /// sectors cover the circle exactly even when `360 / w` is not integral.
    pub fn uniform(beamwidth: f64) -> Result<Self, DomainError> {
        if !(beamwidth > 0.0 && beamwidth <= 360.0) {
            return Err(DomainError::Beamwidth(beamwidth));
        }
        let n = ((360.0 / beamwidth).round() as usize).max(1);
        if n == 1 {
            return Ok(Self { beams: vec![Beam::isotropic()], beamwidth });
        }
        let spacing = 360.0 / n as f64;
        let beams = (0..n).map(|i| Beam::new(i, i as f64 * spacing, spacing)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { beams, beamwidth })
    }

    pub fn omni() -> Self {
        Self { beams: vec![Beam::isotropic()], beamwidth: 360.0 }
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn beamwidth(&self) -> f64 {
        self.beamwidth
    }

    /// Angular distance between neighbouring boresights.
    pub fn spacing(&self) -> f64 {
        360.0 / self.beams.len() as f64
    }

    pub fn beam(&self, id: BeamId) -> Result<&Beam, DomainError> {
        self.beams.get(id).ok_or(DomainError::BeamIndex { id, len: self.beams.len() })
    }

    /// Directionally adjacent beams `(left, right) = (id - 1, id + 1) mod N`.
    pub fn adjacent(&self, id: BeamId) -> Result<(BeamId, BeamId), DomainError> {
        adjacent_ids(self.len(), id)
    }

    /// Ground-truth best beam toward `direction` (degrees, relative to the
    /// owner's heading). Ties go to the lowest id.
    pub fn best_beam_oracle(&self, direction: f64) -> BeamId {
        let mut best = 0;
        let mut best_gain = f64::NEG_INFINITY;
        for b in &self.beams {
            let g = beam_gain(b, angle_offset(b.boresight, direction));
            if g > best_gain {
                best_gain = g;
                best = b.id;
            }
        }
        best
    }
}

/// Adjacency on a ring of `n` beams.
pub fn adjacent_ids(n: usize, id: BeamId) -> Result<(BeamId, BeamId), DomainError> {
    if id >= n {
        return Err(DomainError::BeamIndex { id, len: n });
    }
    Ok(((id + n - 1) % n, (id + 1) % n))
}

/// Signed ring step from `from` to `to` (`+1`, `-1`, or `0` when not adjacent
/// or equal). On a two-beam ring both neighbours coincide and count as `+1`.
pub fn ring_step(n: usize, from: BeamId, to: BeamId) -> i8 {
    if n < 2 || from == to {
        0
    } else if (from + 1) % n == to {
        1
    } else if (to + 1) % n == from {
        -1
    } else {
        0
    }
}

/// Ring distance between two beam ids.
pub fn ring_distance(n: usize, a: BeamId, b: BeamId) -> usize {
    let d = a.abs_diff(b) % n.max(1);
    d.min(n - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_degree_book_has_eighteen_beams() {
        let cb = Codebook::uniform(20.0).unwrap();
        assert_eq!(cb.len(), 18);
        for (i, b) in cb.beams().iter().enumerate() {
            assert_eq!(b.id, i);
            assert!((b.boresight - 20.0 * i as f64).abs() < 1e-9);
            assert!((b.peak_gain - 10.0 * 18f64.log10()).abs() < 1e-9);
        }
        assert!((cb.beams()[0].peak_gain - 12.55).abs() < 0.005);
    }

    #[test]
    fn sixty_degree_book_has_six_beams() {
        let cb = Codebook::uniform(60.0).unwrap();
        assert_eq!(cb.len(), 6);
        assert!((cb.beams()[0].peak_gain - 7.78).abs() < 0.005);
    }

    #[test]
    fn omni_book_is_single_zero_dbi_beam() {
        let cb = CodebookSpec::omni().build().unwrap();
        assert_eq!(cb.len(), 1);
        assert_eq!(cb.beams()[0].peak_gain, 0.0);
        assert_eq!(Codebook::uniform(360.0).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_beamwidth() {
        assert!(Codebook::uniform(0.0).is_err());
        assert!(Codebook::uniform(-20.0).is_err());
        assert!(Codebook::uniform(400.0).is_err());
        assert!(Codebook::uniform(f64::NAN).is_err());
    }

    #[test]
    fn adjacency_wraps() {
        let b18 = Codebook::uniform(20.0).unwrap();
        let b6 = Codebook::uniform(60.0).unwrap();
        assert_eq!(b18.adjacent(0).unwrap(), (17, 1));
        assert_eq!(b6.adjacent(3).unwrap(), (2, 4));
        assert_eq!(Codebook::omni().adjacent(0).unwrap(), (0, 0));
        assert!(b6.adjacent(6).is_err());
    }

    #[test]
    fn oracle_examples() {
        let b18 = Codebook::uniform(20.0).unwrap();
        let b6 = Codebook::uniform(60.0).unwrap();
        assert_eq!(b18.best_beam_oracle(0.0), 0);
        // 10 degrees sits exactly between beams 0 and 1.
        let g0 = beam_gain(&b18.beams()[0], angle_offset(0.0, 10.0));
        let g1 = beam_gain(&b18.beams()[1], angle_offset(20.0, 10.0));
        assert_eq!(g0, g1);
        assert_eq!(b18.best_beam_oracle(10.0), 0);
        assert_eq!(b6.best_beam_oracle(350.0), 0);
    }

    #[test]
    fn codebook_labels_parse() {
        assert_eq!(CodebookSpec::parse("omni").unwrap(), CodebookSpec::omni());
        assert_eq!(CodebookSpec::parse("20").unwrap(), CodebookSpec::beamwidth(20.0));
        assert_eq!(CodebookSpec::parse("60deg").unwrap(), CodebookSpec::beamwidth(60.0));
        assert!(CodebookSpec::parse("wide").is_err());
        assert_eq!(CodebookSpec::beamwidth(20.0).label(), "20deg");
    }

    #[test]
    fn codebook_json_shapes() {
        let a: CodebookSpec = serde_json::from_str(r#"{"beamwidth_deg": 20}"#).unwrap();
        let b: CodebookSpec = serde_json::from_str(r#"{"omni": true}"#).unwrap();
        assert_eq!(a, CodebookSpec::beamwidth(20.0));
        assert_eq!(b, CodebookSpec::omni());
    }

    #[test]
    fn ring_helpers() {
        assert_eq!(ring_step(18, 17, 0), 1);
        assert_eq!(ring_step(18, 0, 17), -1);
        assert_eq!(ring_step(18, 3, 5), 0);
        assert_eq!(ring_distance(18, 1, 17), 2);
        assert_eq!(ring_distance(6, 2, 2), 0);
    }
}
