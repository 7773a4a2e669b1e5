//! Far-field array factor, feed illumination and pattern metrics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{path_excess, Codeword, ElementStateModel};
use crate::error::{invalid, Result, RisError};
use crate::geometry::{
    array_response, path_phases, vec3, ArrayGeometry, CutPlane, Direction, Point3, WaveParams,
};

/// Floor applied to normalized gains so nulls stay finite in exports.
pub const GAIN_FLOOR_DB: f64 = -300.0;

/// Relative tolerance under which two samples count as the same peak.
const PEAK_TIE_RTOL: f64 = 1e-9;

/// Complex weight of the wave arriving at each element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Illumination(Vec<Complex64>);

impl Illumination {
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        if weights
            .iter()
            .any(|w| !(w.re.is_finite() && w.im.is_finite()))
        {
            return Err(invalid("illumination", "non-finite weight"));
        }
        Ok(Self(weights))
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|w| w * factor).collect())
    }

    /// Sum of magnitudes: the coherent upper bound on |AF| for unit states.
    pub fn total_magnitude(&self) -> f64 {
        self.0.iter().map(|w| w.norm()).sum()
    }
}

/// Unit-magnitude illumination by a plane wave from `incident`.
pub fn plane_wave_illumination(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    incident: Direction,
) -> Illumination {
    Illumination(
        path_phases(geometry, wave.wavenumber(), incident)
            .into_iter()
            .map(|p| Complex64::from_polar(1.0, p))
            .collect(),
    )
}

/// Taper exponent q of a `cos^q` feed with the given boresight gain,
/// from `G = 2 (2q + 1)`.
pub fn taper_exponent_from_gain(gain_dbi: f64) -> f64 {
    let g = crate::units::db_to_linear(gain_dbi);
    ((g / 2.0 - 1.0) / 2.0).max(0.0)
}

/// Point feed aimed at the aperture centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedModel {
    /// Position in the aperture frame (z along the surface normal).
    pub position: Point3,
    pub taper_exponent: f64,
}

impl FeedModel {
    pub fn from_gain(position: Point3, gain_dbi: f64) -> Self {
        Self {
            position,
            taper_exponent: taper_exponent_from_gain(gain_dbi),
        }
    }

    pub fn illumination(
        &self,
        geometry: &ArrayGeometry,
        wave: &WaveParams,
    ) -> Result<Illumination> {
        feed_illumination(geometry, wave, self.position, self.taper_exponent)
    }
}

/// Spherical-wave illumination from a `cos^q` feed. Magnitudes are
/// normalized to a peak of 1 and phases are referenced to the path length
/// from the feed to the aperture centre.
pub fn feed_illumination(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    feed: Point3,
    q: f64,
) -> Result<Illumination> {
    if feed[2] <= 0.0 {
        return Err(RisError::BehindSurface {
            normal_component: feed[2],
        });
    }
    if !(q.is_finite() && q >= 0.0) {
        return Err(invalid("taper exponent", format!("{q} is negative")));
    }
    let k = wave.wavenumber();
    let r0 = vec3::norm(feed);
    let boresight = vec3::scale(feed, -1.0 / r0);
    let raw: Vec<(f64, f64)> = geometry
        .positions()
        .map(|(x, y)| {
            let to_elem = vec3::sub([x, y, 0.0], feed);
            let r = vec3::norm(to_elem);
            let cos_a = (vec3::dot(boresight, to_elem) / r).max(0.0);
            (cos_a.powf(q) / r, -k * path_excess([x, y, 0.0], feed))
        })
        .collect();
    let peak = raw.iter().map(|&(m, _)| m).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(RisError::DegeneratePattern);
    }
    Ok(Illumination(
        raw.into_iter()
            .map(|(m, p)| Complex64::from_polar(m / peak, p))
            .collect(),
    ))
}

/// Radiation pattern of a single element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementFactor {
    #[default]
    Isotropic,
    /// Amplitude falls as cos(theta) away from broadside.
    Cosine,
}

impl ElementFactor {
    fn gain(self, dir: Direction) -> f64 {
        match self {
            ElementFactor::Isotropic => 1.0,
            ElementFactor::Cosine => dir.theta_deg().to_radians().cos(),
        }
    }
}

/// Aperture, state model and element pattern bundled for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Reflector {
    pub geometry: ArrayGeometry,
    pub states: ElementStateModel,
    pub element_factor: ElementFactor,
}

impl Reflector {
    pub fn new(geometry: ArrayGeometry) -> Self {
        Self {
            geometry,
            ..Self::default()
        }
    }

    fn check(&self, codeword: &Codeword, illumination: &Illumination) -> Result<()> {
        let n = self.geometry.len();
        for actual in [codeword.len(), illumination.len()] {
            if actual != n {
                return Err(RisError::LengthMismatch {
                    expected: n,
                    actual,
                });
            }
        }
        Ok(())
    }

    fn excitation(&self, codeword: &Codeword, illumination: &Illumination) -> Vec<Complex64> {
        codeword
            .interaction(&self.states)
            .iter()
            .zip(illumination.weights())
            .map(|(psi, w)| psi * w)
            .collect()
    }

    fn af_of(&self, wave: &WaveParams, excitation: &[Complex64], dir: Direction) -> Complex64 {
        let a = array_response(&self.geometry, wave, dir);
        let sum: Complex64 = a.iter().zip(excitation).map(|(a, e)| a * e).sum();
        sum * self.element_factor.gain(dir)
    }

    pub fn array_factor(
        &self,
        wave: &WaveParams,
        codeword: &Codeword,
        illumination: &Illumination,
        dir: Direction,
    ) -> Result<Complex64> {
        self.check(codeword, illumination)?;
        Ok(self.af_of(wave, &self.excitation(codeword, illumination), dir))
    }

    pub fn pattern_cut(
        &self,
        wave: &WaveParams,
        codeword: &Codeword,
        illumination: &Illumination,
        plane: CutPlane,
        angles_deg: &[f64],
    ) -> Result<PatternCut> {
        self.check(codeword, illumination)?;
        check_grid(angles_deg)?;
        let excitation = self.excitation(codeword, illumination);
        let af: Vec<Complex64> = angles_deg
            .par_iter()
            .map(|&a| Direction::in_plane(plane, a).map(|d| self.af_of(wave, &excitation, d)))
            .collect::<Result<_>>()?;
        PatternCut::new(
            plane,
            angles_deg.to_vec(),
            af,
            codeword.design_reflect().signed_angle_in(plane),
        )
    }
}

fn check_grid(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(RisError::EmptyInput("angle grid"));
    }
    if let Some(a) = angles.iter().find(|a| !(-90.0..=90.0).contains(*a)) {
        return Err(invalid("angle grid", format!("{a} deg outside [-90, 90]")));
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("angle grid", "not strictly increasing"));
    }
    Ok(())
}

/// Array factor with the default state model and isotropic elements.
pub fn array_factor(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    codeword: &Codeword,
    illumination: &Illumination,
    dir: Direction,
) -> Result<Complex64> {
    Reflector::new(*geometry).array_factor(wave, codeword, illumination, dir)
}

pub fn pattern_cut(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    codeword: &Codeword,
    illumination: &Illumination,
    plane: CutPlane,
    angles_deg: &[f64],
) -> Result<PatternCut> {
    Reflector::new(*geometry).pattern_cut(wave, codeword, illumination, plane, angles_deg)
}

/// Normalized scattering pattern under plane-wave incidence.
pub fn rcs_pattern(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    codeword: &Codeword,
    incident: Direction,
    plane: CutPlane,
    angles_deg: &[f64],
) -> Result<PatternCut> {
    let ill = plane_wave_illumination(geometry, wave, incident);
    pattern_cut(geometry, wave, codeword, &ill, plane, angles_deg)
}

/// A sampled one-dimensional pattern cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCut {
    plane: CutPlane,
    angles_deg: Vec<f64>,
    af: Vec<Complex64>,
    gain_db: Vec<f64>,
    design_angle_deg: Option<f64>,
}

impl PatternCut {
    pub fn new(
        plane: CutPlane,
        angles_deg: Vec<f64>,
        af: Vec<Complex64>,
        design_angle_deg: Option<f64>,
    ) -> Result<Self> {
        check_grid(&angles_deg)?;
        if af.len() != angles_deg.len() {
            return Err(RisError::LengthMismatch {
                expected: angles_deg.len(),
                actual: af.len(),
            });
        }
        let peak = af.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(RisError::DegeneratePattern);
        }
        let gain_db = af
            .iter()
            .map(|c| (20.0 * (c.norm() / peak).log10()).max(GAIN_FLOOR_DB))
            .collect();
        Ok(Self {
            plane,
            angles_deg,
            af,
            gain_db,
            design_angle_deg,
        })
    }

    pub fn plane(&self) -> CutPlane {
        self.plane
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn af(&self) -> &[Complex64] {
        &self.af
    }

    /// Gain normalized to the cut maximum, in dB.
    pub fn gain_db(&self) -> &[f64] {
        &self.gain_db
    }

    pub fn design_angle_deg(&self) -> Option<f64> {
        self.design_angle_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    /// Highest normalized gain within `half_width_deg` of `angle_deg`.
    pub fn max_gain_near(&self, angle_deg: f64, half_width_deg: f64) -> Option<(f64, f64)> {
        self.angles_deg
            .iter()
            .zip(&self.gain_db)
            .filter(|(a, _)| (*a - angle_deg).abs() <= half_width_deg)
            .map(|(&a, &g)| (a, g))
            .fold(None, |best: Option<(f64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    fn peak_index(&self, mags: &[f64]) -> usize {
        let peak = mags.iter().copied().fold(0.0, f64::max);
        let ties = (0..mags.len()).filter(|&i| mags[i] >= peak * (1.0 - PEAK_TIE_RTOL));
        match self.design_angle_deg {
            Some(target) => ties
                .min_by(|&a, &b| {
                    let da = (self.angles_deg[a] - target).abs();
                    let db = (self.angles_deg[b] - target).abs();
                    da.total_cmp(&db)
                })
                .unwrap_or(0),
            None => ties.min().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub angle_deg: f64,
    /// Level relative to the main lobe, dB.
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub main_lobe_deg: f64,
    /// Peak |AF| in dB relative to one element under unit illumination.
    pub peak_gain_db: f64,
    pub hpbw_deg: f64,
    /// The -3 dB crossing fell off the grid on at least one side, so
    /// `hpbw_deg` underestimates the true width.
    pub hpbw_is_lower_bound: bool,
    /// Highest side lobe outside the first-null region, if any.
    pub sll: Option<Lobe>,
    pub grating_lobes: Vec<Lobe>,
}

impl PatternMetrics {
    pub fn sll_db(&self) -> Option<f64> {
        self.sll.map(|l| l.level_db)
    }
}

fn crossing(a0: f64, g0: f64, a1: f64, g1: f64, level: f64) -> f64 {
    if (g1 - g0).abs() < f64::EPSILON {
        return a0;
    }
    a0 + (level - g0) * (a1 - a0) / (g1 - g0)
}

/// Main lobe, half-power beamwidth, side-lobe level and grating lobes.
pub fn analyze_pattern(cut: &PatternCut) -> Result<PatternMetrics> {
    let n = cut.len();
    if n < 3 {
        return Err(invalid(
            "pattern cut",
            format!("{n} samples, need at least 3"),
        ));
    }
    let mags: Vec<f64> = cut.af.iter().map(|c| c.norm()).collect();
    let p = cut.peak_index(&mags);
    let peak = mags[p];
    let rel = |i: usize| 20.0 * (mags[i] / peak).log10();
    let ang = &cut.angles_deg;
    const HALF: f64 = -3.0103;

    let mut lower_bound = p == 0 || p == n - 1;
    let left = match (0..p).rev().find(|&i| rel(i) < HALF) {
        Some(i) => crossing(ang[i], rel(i), ang[i + 1], rel(i + 1), HALF),
        None => {
            lower_bound = true;
            ang[0]
        }
    };
    let right = match (p + 1..n).find(|&i| rel(i) < HALF) {
        Some(i) => crossing(ang[i - 1], rel(i - 1), ang[i], rel(i), HALF),
        None => {
            lower_bound = true;
            ang[n - 1]
        }
    };

    let mut lo = p;
    while lo > 0 && mags[lo - 1] <= mags[lo] {
        lo -= 1;
    }
    let mut hi = p;
    while hi + 1 < n && mags[hi + 1] <= mags[hi] {
        hi += 1;
    }

    let is_local_max = |i: usize| {
        let left_ok = i == 0 || mags[i] > mags[i - 1];
        let right_ok = i + 1 == n || mags[i] >= mags[i + 1];
        left_ok && right_ok
    };
    let sidelobes: Vec<Lobe> = (0..lo)
        .chain(hi + 1..n)
        .filter(|&i| is_local_max(i) && mags[i] > 0.0)
        .map(|i| Lobe {
            angle_deg: ang[i],
            level_db: rel(i).min(0.0),
        })
        .collect();
    let sll = sidelobes
        .iter()
        .copied()
        .max_by(|a, b| a.level_db.total_cmp(&b.level_db));
    let grating_lobes = sidelobes
        .into_iter()
        .filter(|l| l.level_db >= HALF)
        .collect();

    Ok(PatternMetrics {
        main_lobe_deg: ang[p],
        peak_gain_db: 20.0 * peak.log10(),
        hpbw_deg: right - left,
        hpbw_is_lower_bound: lower_bound,
        sll,
        grating_lobes,
    })
}
