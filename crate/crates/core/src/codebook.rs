//! 1-bit reflection codewords and codebooks.
//!
//! The continuous excitation for an (incident, reflect) pair is the
//! difference of the two path phases across the aperture. Each element keeps
//! only the sign of its cosine: phases within 90 deg of zero map to state 0,
//! the rest to state 1. An optional per-surface random offset (dither) is
//! added before quantization and re-applied on reflection, which decorrelates
//! the quantization error from the aperture phase and breaks up the mirror
//! lobe.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RisError};
use crate::geometry::{path_phases, vec3, ArrayGeometry, Direction, Point3, WaveParams};

/// Complex reflection coefficient of each diode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementStateModel {
    state0: Complex64,
    state1: Complex64,
}

impl Default for ElementStateModel {
    fn default() -> Self {
        Self {
            state0: Complex64::new(1.0, 0.0),
            state1: Complex64::new(-1.0, 0.0),
        }
    }
}

impl ElementStateModel {
    pub fn new(state0: Complex64, state1: Complex64) -> Result<Self> {
        for (field, s) in [("state0_reflection", state0), ("state1_reflection", state1)] {
            let m = s.norm();
            if !(m > 0.0 && m <= 1.0 + 1e-12) {
                return Err(invalid(field, format!("magnitude {m} outside (0, 1]")));
            }
        }
        Ok(Self { state0, state1 })
    }

    /// Builds the model from magnitudes (linear) and phases (degrees).
    pub fn from_polar_deg(mag0: f64, phase0_deg: f64, mag1: f64, phase1_deg: f64) -> Result<Self> {
        Self::new(
            Complex64::from_polar(mag0, phase0_deg.to_radians()),
            Complex64::from_polar(mag1, phase1_deg.to_radians()),
        )
    }

    pub fn state0(&self) -> Complex64 {
        self.state0
    }

    pub fn state1(&self) -> Complex64 {
        self.state1
    }

    pub fn reflection(&self, bit: u8) -> Complex64 {
        if bit == 0 {
            self.state0
        } else {
            self.state1
        }
    }
}

/// Wraps a phase into (-180, 180].
pub fn wrap_deg(phi: f64) -> f64 {
    let w = (phi + 180.0).rem_euclid(360.0) - 180.0;
    if w <= -180.0 {
        w + 360.0
    } else {
        w
    }
}

/// 1-bit quantizer: 0 when the wrapped phase lies in [-90, 90], else 1.
pub fn quantize_phase(phi_deg: f64) -> u8 {
    if wrap_deg(phi_deg).abs() <= 90.0 {
        0
    } else {
        1
    }
}

/// Continuous per-element excitation phase for steering `incident` into
/// `reflect`, wrapped to (-180, 180] degrees.
pub fn ideal_phase(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    incident: Direction,
    reflect: Direction,
) -> Vec<f64> {
    let pi = path_phases(geometry, wave.wavenumber(), incident);
    let pd = path_phases(geometry, wave.wavenumber(), reflect);
    pi.iter()
        .zip(&pd)
        .map(|(a, b)| wrap_deg((a - b).to_degrees()))
        .collect()
}

/// Incident phase (radians) of a spherical wave from a point source,
/// referenced to the aperture origin.
pub fn spherical_incident_phases(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    source: Point3,
) -> Vec<f64> {
    let k = wave.wavenumber();
    geometry
        .positions()
        .map(|(x, y)| -k * path_excess([x, y, 0.0], source))
        .collect()
}

/// `|e - s| - |s|` without cancellation for sources far from the aperture.
pub(crate) fn path_excess(element: Point3, source: Point3) -> f64 {
    let r0 = vec3::norm(source);
    let r = vec3::distance(element, source);
    (vec3::dot(element, element) - 2.0 * vec3::dot(element, source)) / (r + r0)
}

/// Per-element dither offsets in degrees, uniform on [0, 360).
pub fn dither_offsets(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.0..360.0)).collect()
}

/// One surface configuration, with the design it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    bits: Vec<u8>,
    design_incident: Direction,
    design_reflect: Direction,
    dither_deg: Option<Vec<f64>>,
}

impl Codeword {
    pub fn new(
        bits: Vec<u8>,
        design_incident: Direction,
        design_reflect: Direction,
        dither_deg: Option<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(invalid("bits", format!("value {bad} is not 0 or 1")));
        }
        if let Some(d) = &dither_deg {
            if d.len() != bits.len() {
                return Err(RisError::LengthMismatch {
                    expected: bits.len(),
                    actual: d.len(),
                });
            }
        }
        Ok(Self {
            bits,
            design_incident,
            design_reflect,
            dither_deg,
        })
    }

    /// All-zero codeword (uniform reflection) for `geometry`.
    pub fn uniform(geometry: &ArrayGeometry) -> Self {
        Self {
            bits: vec![0; geometry.len()],
            design_incident: Direction::BROADSIDE,
            design_reflect: Direction::BROADSIDE,
            dither_deg: None,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn design_incident(&self) -> Direction {
        self.design_incident
    }

    pub fn design_reflect(&self) -> Direction {
        self.design_reflect
    }

    pub fn dither_deg(&self) -> Option<&[f64]> {
        self.dither_deg.as_deref()
    }

    /// Bits as a string of '0'/'1' in storage order.
    pub fn bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b == 0 { '0' } else { '1' })
            .collect()
    }

    pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(RisError::Format(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect()
    }

    /// Every bit flipped; design and dither kept.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| 1 - b).collect(),
            ..self.clone()
        }
    }

    /// Per-element reflection `state(bit) * exp(j dither)`.
    pub fn interaction(&self, states: &ElementStateModel) -> Vec<Complex64> {
        match &self.dither_deg {
            None => self.bits.iter().map(|&b| states.reflection(b)).collect(),
            Some(d) => self
                .bits
                .iter()
                .zip(d)
                .map(|(&b, &deg)| {
                    states.reflection(b) * Complex64::from_polar(1.0, deg.to_radians())
                })
                .collect(),
        }
    }
}

/// Quantizes a continuous incident phase profile (radians) for `reflect`.
pub fn build_codeword_from_incident_phases(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    incident_phases_rad: &[f64],
    design_incident: Direction,
    reflect: Direction,
    dither: Option<&[f64]>,
) -> Result<Codeword> {
    if incident_phases_rad.len() != geometry.len() {
        return Err(RisError::LengthMismatch {
            expected: geometry.len(),
            actual: incident_phases_rad.len(),
        });
    }
    if let Some(d) = dither {
        if d.len() != geometry.len() {
            return Err(RisError::LengthMismatch {
                expected: geometry.len(),
                actual: d.len(),
            });
        }
    }
    let pd = path_phases(geometry, wave.wavenumber(), reflect);
    let bits = incident_phases_rad
        .iter()
        .zip(&pd)
        .enumerate()
        .map(|(i, (a, b))| {
            let offset = dither.map_or(0.0, |d| d[i]);
            quantize_phase((a - b).to_degrees() + offset)
        })
        .collect();
    Codeword::new(bits, design_incident, reflect, dither.map(<[f64]>::to_vec))
}

/// Plane-wave codeword for one (incident, reflect) pair.
pub fn build_codeword(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    incident: Direction,
    reflect: Direction,
    dither_seed: Option<u64>,
) -> Codeword {
    let pi = path_phases(geometry, wave.wavenumber(), incident);
    let dither = dither_seed.map(|s| dither_offsets(geometry.len(), s));
    build_codeword_from_incident_phases(geometry, wave, &pi, incident, reflect, dither.as_deref())
        .expect("lengths derive from the same geometry")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "seed")]
pub enum DitherPolicy {
    #[default]
    None,
    /// One offset set per surface, shared by every codeword in the book.
    Seeded(u64),
}

impl DitherPolicy {
    pub fn seed(self) -> Option<u64> {
        match self {
            DitherPolicy::None => None,
            DitherPolicy::Seeded(s) => Some(s),
        }
    }
}

/// Codewords for every (incident, reflect) pair, incident-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub frequency_hz: f64,
    pub geometry: ArrayGeometry,
    pub incident_set: Vec<Direction>,
    pub reflect_set: Vec<Direction>,
    pub dither: DitherPolicy,
    /// Set for books designed against a point feed instead of a plane wave.
    pub feed_position: Option<Point3>,
    pub codewords: Vec<Codeword>,
}

impl Codebook {
    /// A book with no codewords; sweeping it selects nothing.
    pub fn empty(geometry: ArrayGeometry, wave: &WaveParams) -> Self {
        Self {
            frequency_hz: wave.frequency_hz(),
            geometry,
            incident_set: Vec::new(),
            reflect_set: Vec::new(),
            dither: DitherPolicy::None,
            feed_position: None,
            codewords: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn index_of(&self, incident: usize, reflect: usize) -> usize {
        incident * self.reflect_set.len() + reflect
    }
}

fn check_sets(incident: &[Direction], reflect: &[Direction]) -> Result<()> {
    if incident.is_empty() {
        return Err(RisError::EmptyInput("incident direction set"));
    }
    if reflect.is_empty() {
        return Err(RisError::EmptyInput("reflect direction set"));
    }
    Ok(())
}

pub fn build_codebook(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    incident: &[Direction],
    reflect: &[Direction],
    dither: DitherPolicy,
) -> Result<Codebook> {
    check_sets(incident, reflect)?;
    let pairs: Vec<(Direction, Direction)> = incident
        .iter()
        .flat_map(|&i| reflect.iter().map(move |&d| (i, d)))
        .collect();
    let codewords = pairs
        .par_iter()
        .map(|&(i, d)| build_codeword(geometry, wave, i, d, dither.seed()))
        .collect();
    Ok(Codebook {
        frequency_hz: wave.frequency_hz(),
        geometry: *geometry,
        incident_set: incident.to_vec(),
        reflect_set: reflect.to_vec(),
        dither,
        feed_position: None,
        codewords,
    })
}

/// Codebook focused on a point feed at `feed_position` (aperture frame):
/// the incident phase is the exact spherical path from the feed.
pub fn build_feed_codebook(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    feed_position: Point3,
    reflect: &[Direction],
    dither: DitherPolicy,
) -> Result<Codebook> {
    if feed_position[2] <= 0.0 {
        return Err(RisError::BehindSurface {
            normal_component: feed_position[2],
        });
    }
    let r = vec3::norm(feed_position);
    let feed_dir = Direction::new(
        (feed_position[2] / r).acos().to_degrees(),
        feed_position[1].atan2(feed_position[0]).to_degrees(),
    )?;
    check_sets(&[feed_dir], reflect)?;
    let incident = spherical_incident_phases(geometry, wave, feed_position);
    let offsets = dither.seed().map(|s| dither_offsets(geometry.len(), s));
    let codewords = reflect
        .par_iter()
        .map(|&d| {
            build_codeword_from_incident_phases(
                geometry,
                wave,
                &incident,
                feed_dir,
                d,
                offsets.as_deref(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        frequency_hz: wave.frequency_hz(),
        geometry: *geometry,
        incident_set: vec![feed_dir],
        reflect_set: reflect.to_vec(),
        dither,
        feed_position: Some(feed_position),
        codewords,
    })
}

/// Signed-angle grid `start, start+step, ...` up to and including `stop`.
pub fn angle_grid(start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<Vec<f64>> {
    if step_deg.is_nan() || step_deg <= 0.0 || stop_deg < start_deg {
        return Err(invalid(
            "angle grid",
            format!("{start_deg}..{stop_deg} step {step_deg}"),
        ));
    }
    let n = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start_deg + i as f64 * step_deg).collect())
}
