//! World-frame deployments: base station, surface, UE grid and blockers,
//! line-of-sight tests, and coverage maps with and without the surface.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{
    angle_grid, build_codebook, build_feed_codebook, Codebook, Codeword, DitherPolicy,
    ElementStateModel,
};
use crate::error::{invalid, Result, RisError};
use crate::geometry::{
    local_direction, vec3, ArrayGeometry, CutPlane, Direction, Point3, Pose3D, WaveParams,
    PROTOTYPE_PITCH_M,
};
use crate::pattern::{ElementFactor, Reflector};
use crate::signal::{
    beam_sweep, synthesize_channels, ChannelSet, InteractionVector, LinkGeometry, NoiseKey,
    OfdmConfig,
};
use crate::units::{dbm_to_watts, linear_to_db, thermal_noise_watts};

/// Rectangular obstacle rotated about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blocker {
    pub center: Point3,
    /// Full side lengths along the box's own x, y, z axes.
    pub extents: Point3,
    #[serde(default)]
    pub yaw_deg: f64,
}

impl Blocker {
    pub fn new(center: Point3, extents: Point3, yaw_deg: f64) -> Result<Self> {
        let b = Self {
            center,
            extents,
            yaw_deg,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid(
                "blocker extents",
                format!("{:?} must all be positive", self.extents),
            ));
        }
        Ok(())
    }

    fn box_coords(&self, p: Point3) -> Point3 {
        let d = vec3::sub(p, self.center);
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]]
    }

    /// Whether `p` lies in the closed box.
    pub fn contains(&self, p: Point3) -> bool {
        let q = self.box_coords(p);
        (0..3).all(|i| q[i].abs() <= self.extents[i] / 2.0)
    }

    /// Closed slab test of the segment `a`-`b` against the box.
    pub fn intersects_segment(&self, a: Point3, b: Point3) -> bool {
        let p = self.box_coords(a);
        let d = vec3::sub(self.box_coords(b), p);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..3 {
            let h = self.extents[i] / 2.0;
            if d[i] == 0.0 {
                if p[i] < -h || p[i] > h {
                    return false;
                }
                continue;
            }
            let (mut near, mut far) = ((-h - p[i]) / d[i], (h - p[i]) / d[i]);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// True when any blocker touches the closed segment `a`-`b`.
pub fn los_blocked(a: Point3, b: Point3, blockers: &[Blocker]) -> Result<bool> {
    if vec3::distance(a, b) == 0.0 {
        return Err(RisError::DegenerateSegment);
    }
    Ok(blockers.iter().any(|bl| bl.intersects_segment(a, b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsConfig {
    pub position: Point3,
    pub gain_dbi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub magnitude: f64,
    pub phase_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub position: Point3,
    pub normal: Point3,
    pub elements_x: usize,
    pub elements_y: usize,
    pub spacing_x_m: f64,
    pub spacing_y_m: f64,
    pub efficiency: f64,
    pub enabled: bool,
    pub element_factor: ElementFactor,
    pub state0: StateSpec,
    pub state1: StateSpec,
}

impl RisConfig {
    fn prototype(position: Point3, normal: Point3) -> Self {
        Self {
            position,
            normal,
            elements_x: 16,
            elements_y: 10,
            spacing_x_m: PROTOTYPE_PITCH_M,
            spacing_y_m: PROTOTYPE_PITCH_M,
            efficiency: 1.0,
            enabled: true,
            element_factor: ElementFactor::Isotropic,
            state0: StateSpec {
                magnitude: 1.0,
                phase_deg: 0.0,
            },
            state1: StateSpec {
                magnitude: 1.0,
                phase_deg: 180.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeGrid {
    pub points: Vec<Point3>,
    pub gain_dbi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub frequency_hz: f64,
    pub subcarriers: usize,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub narrowband: bool,
}

impl Default for Waveform {
    fn default() -> Self {
        Self {
            frequency_hz: 5.8e9,
            subcarriers: 64,
            bandwidth_hz: 20e6,
            tx_power_dbm: 20.0,
            noise_figure_db: 7.0,
            narrowband: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookDesign {
    /// Plane-wave incidence from the BS direction.
    #[default]
    Plane,
    /// Spherical incidence from the BS treated as a point feed.
    Feed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodebookSpec {
    pub plane: CutPlane,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    pub design: CodebookDesign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dither_seed: Option<u64>,
}

impl CodebookSpec {
    fn azimuth(start_deg: f64, stop_deg: f64) -> Self {
        Self {
            plane: CutPlane::Azimuth,
            start_deg,
            stop_deg,
            step_deg: 2.5,
            design: CodebookDesign::Plane,
            dither_seed: None,
        }
    }

    pub fn reflect_directions(&self) -> Result<Vec<Direction>> {
        angle_grid(self.start_deg, self.stop_deg, self.step_deg)?
            .into_iter()
            .map(|a| Direction::in_plane(self.plane, a))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// A field violates its own constraints.
    Invalid,
    /// Fields are valid but the deployment cannot work.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
    pub severity: Severity,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Invalid => "invalid",
            Severity::Infeasible => "infeasible",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

fn diag(field: &str, message: impl Into<String>, severity: Severity) -> Diagnostic {
    Diagnostic {
        field: field.to_owned(),
        message: message.into(),
        severity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Model the BS-UE line of sight. Off when both horns face the surface
    /// and direct coupling is negligible.
    pub direct_path: bool,
    /// Lowest SNR reported in maps; blocked points with no signal sit here.
    pub snr_floor_db: f64,
    pub bs: BsConfig,
    pub ris: RisConfig,
    pub ue_grid: UeGrid,
    #[serde(default)]
    pub blockers: Vec<Blocker>,
    pub waveform: Waveform,
    pub codebook: CodebookSpec,
}

impl Scenario {
    pub fn wave(&self) -> Result<WaveParams> {
        WaveParams::from_frequency(self.waveform.frequency_hz)
    }

    pub fn ofdm(&self) -> OfdmConfig {
        let w = &self.waveform;
        OfdmConfig {
            subcarriers: w.subcarriers,
            bandwidth_hz: w.bandwidth_hz,
            center_frequency_hz: w.frequency_hz,
            total_power_w: dbm_to_watts(w.tx_power_dbm),
            noise_variance_w: thermal_noise_watts(w.bandwidth_hz, w.noise_figure_db)
                / w.subcarriers.max(1) as f64,
            narrowband: w.narrowband,
        }
    }

    pub fn array(&self) -> Result<ArrayGeometry> {
        let r = &self.ris;
        ArrayGeometry::new(r.elements_x, r.elements_y, r.spacing_x_m, r.spacing_y_m)
    }

    pub fn ris_pose(&self) -> Result<Pose3D> {
        Pose3D::new(self.ris.position, self.ris.normal)
    }

    pub fn states(&self) -> Result<ElementStateModel> {
        let (a, b) = (self.ris.state0, self.ris.state1);
        ElementStateModel::from_polar_deg(a.magnitude, a.phase_deg, b.magnitude, b.phase_deg)
    }

    pub fn reflector(&self) -> Result<Reflector> {
        Ok(Reflector {
            geometry: self.array()?,
            states: self.states()?,
            element_factor: self.ris.element_factor,
        })
    }

    /// BS position in the surface frame.
    pub fn feed_local(&self) -> Result<Point3> {
        Ok(self.ris_pose()?.to_local(self.bs.position))
    }

    /// Direction and range of the BS seen from the surface.
    pub fn bs_direction(&self) -> Result<(Direction, f64)> {
        local_direction(&self.ris_pose()?, self.bs.position).map_err(|e| match e {
            RisError::BehindSurface { .. } | RisError::CoincidentPoint => {
                RisError::Infeasible(format!("base station cannot illuminate the surface: {e}"))
            }
            other => other,
        })
    }

    /// Rejects deployments whose surface cannot see the BS.
    pub fn check_feasible(&self) -> Result<()> {
        self.bs_direction()?;
        if los_blocked(self.ris.position, self.bs.position, &self.blockers)? {
            return Err(RisError::Infeasible(
                "line of sight between surface and base station is blocked".into(),
            ));
        }
        Ok(())
    }

    /// Every field and feasibility violation, without running anything.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        use Severity::{Infeasible, Invalid};
        let mut out = Vec::new();
        match self.wave() {
            Err(e) => out.push(diag("waveform.frequency_hz", e.to_string(), Invalid)),
            Ok(_) => {
                if let Err(e) = self.ofdm().validate() {
                    let field = match &e {
                        RisError::InvalidParameter { field, .. } => format!("waveform.{field}"),
                        _ => "waveform".into(),
                    };
                    out.push(diag(&field, e.to_string(), Invalid));
                }
            }
        }
        if let Err(e) = self.array() {
            out.push(diag("ris", e.to_string(), Invalid));
        }
        if let Err(e) = self.ris_pose() {
            out.push(diag("ris.normal", e.to_string(), Invalid));
        }
        if let Err(e) = self.states() {
            out.push(diag("ris.state", e.to_string(), Invalid));
        }
        if !(self.ris.efficiency > 0.0 && self.ris.efficiency <= 1.0) {
            out.push(diag(
                "ris.efficiency",
                format!("{} outside (0, 1]", self.ris.efficiency),
                Invalid,
            ));
        }
        if self.ue_grid.points.is_empty() {
            out.push(diag("ue_grid.points", "grid is empty", Invalid));
        }
        for (i, b) in self.blockers.iter().enumerate() {
            if let Err(e) = b.validate() {
                out.push(diag(&format!("blockers[{i}]"), e.to_string(), Invalid));
            }
        }
        if let Err(e) = self.codebook.reflect_directions() {
            out.push(diag("codebook", e.to_string(), Invalid));
        }
        if !self.snr_floor_db.is_finite() {
            out.push(diag("snr_floor_db", "not finite", Invalid));
        }
        if out.is_empty() {
            if let Err(e) = self.check_feasible() {
                out.push(diag("bs.position", e.to_string(), Infeasible));
            }
        }
        out
    }

    /// The codebook described by the `codebook` section.
    pub fn build_codebook(&self) -> Result<Codebook> {
        let wave = self.wave()?;
        let array = self.array()?;
        let reflect = self.codebook.reflect_directions()?;
        let dither = self
            .codebook
            .dither_seed
            .map_or(DitherPolicy::None, DitherPolicy::Seeded);
        match self.codebook.design {
            CodebookDesign::Plane => {
                let (bs_dir, _) = self.bs_direction()?;
                build_codebook(&array, &wave, &[bs_dir], &reflect, dither)
            }
            CodebookDesign::Feed => {
                build_feed_codebook(&array, &wave, self.feed_local()?, &reflect, dither)
            }
        }
    }

    pub fn link_geometry(&self, ue: Point3, direct_open: bool) -> Result<LinkGeometry> {
        Ok(LinkGeometry {
            ris: self.ris_pose()?,
            array: self.array()?,
            efficiency: self.ris.efficiency,
            bs_position: self.bs.position,
            bs_gain_dbi: self.bs.gain_dbi,
            ue_position: ue,
            ue_gain_dbi: self.ue_grid.gain_dbi,
            direct_path: self.direct_path && direct_open,
        })
    }

    /// Same scenario with a differently sized aperture.
    pub fn with_elements(&self, elements_x: usize, elements_y: usize) -> Self {
        let mut s = self.clone();
        s.ris.elements_x = elements_x;
        s.ris.elements_y = elements_y;
        s
    }
}

/// Outdoor beam-scanning setup: feed 5 m in front of the surface on its
/// normal, receive horn swung on a 10 m arc from 0 to 60 deg.
pub fn parking_preset() -> Scenario {
    let ris = [0.0, 0.0, 1.5];
    let points = angle_grid(0.0, 60.0, 2.5)
        .expect("static grid")
        .into_iter()
        .map(|a| {
            let (s, c) = a.to_radians().sin_cos();
            [ris[0] + 10.0 * c, ris[1] + 10.0 * s, ris[2]]
        })
        .collect();
    Scenario {
        name: "parking".into(),
        direct_path: false,
        snr_floor_db: -10.0,
        bs: BsConfig {
            position: [5.0, 0.0, 1.5],
            gain_dbi: 12.5,
        },
        ris: RisConfig::prototype(ris, [1.0, 0.0, 0.0]),
        ue_grid: UeGrid {
            points,
            gain_dbi: 18.5,
        },
        blockers: Vec::new(),
        waveform: Waveform::default(),
        codebook: CodebookSpec::azimuth(0.0, 60.0),
    }
}

/// Courtyard coverage setup: a 5 m tall, 2 m thick wall hides a 7 x 4
/// grid from the BS; the surface sits beyond the wall's end and sees both.
pub fn gammage_preset() -> Scenario {
    let z = 1.5;
    let bs = [0.0, -8.0, z];
    let ris = [14.0, 4.0, z];
    let points: Vec<Point3> = (0..4)
        .flat_map(|j| (0..7).map(move |i| [-7.0 + 1.5 * f64::from(i), 2.5 + 1.5 * f64::from(j), z]))
        .collect();
    let centre = {
        let n = points.len() as f64;
        let s = points.iter().fold([0.0; 3], |acc, p| vec3::add(acc, *p));
        vec3::scale(s, 1.0 / n)
    };
    let unit = |v: Point3| vec3::scale(v, 1.0 / vec3::norm(v));
    let normal = unit(vec3::add(
        unit(vec3::sub(bs, ris)),
        unit(vec3::sub(centre, ris)),
    ));
    Scenario {
        name: "gammage".into(),
        direct_path: true,
        snr_floor_db: -10.0,
        bs: BsConfig {
            position: bs,
            gain_dbi: 19.0,
        },
        ris: RisConfig::prototype(ris, normal),
        ue_grid: UeGrid {
            points,
            gain_dbi: 0.0,
        },
        blockers: vec![Blocker {
            center: [0.0, 0.0, 2.5],
            extents: [16.0, 2.0, 5.0],
            yaw_deg: 0.0,
        }],
        waveform: Waveform::default(),
        codebook: CodebookSpec::azimuth(-60.0, 60.0),
    }
}

/// Feed distance in the bench setup; close enough that the horn taper
/// shapes the elevation beam.
pub const CHAMBER_FEED_DISTANCE_M: f64 = 0.12;

/// Bench pattern setup: feed horn offset -27.5 deg in elevation, codewords
/// focused on the feed, one far receiver on broadside.
pub fn chamber_preset() -> Scenario {
    let (s, c) = (-27.5f64).to_radians().sin_cos();
    Scenario {
        name: "chamber".into(),
        direct_path: false,
        snr_floor_db: -10.0,
        bs: BsConfig {
            position: [
                0.0,
                CHAMBER_FEED_DISTANCE_M * s,
                CHAMBER_FEED_DISTANCE_M * c,
            ],
            gain_dbi: 12.5,
        },
        ris: RisConfig::prototype([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ue_grid: UeGrid {
            points: vec![[0.0, 0.0, 10.0]],
            gain_dbi: 18.5,
        },
        blockers: Vec::new(),
        waveform: Waveform::default(),
        codebook: CodebookSpec {
            design: CodebookDesign::Feed,
            ..CodebookSpec::azimuth(-60.0, 60.0)
        },
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "parking" => Some(parking_preset()),
        "gammage" => Some(gammage_preset()),
        "chamber" => Some(chamber_preset()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub position: Point3,
    /// Direct BS-UE path occluded.
    pub blocked: bool,
    pub snr_without_db: f64,
    pub snr_with_db: f64,
    pub improvement_db: f64,
    pub best_codeword: Option<usize>,
    /// Noise-free energy carried by the surface path with the chosen
    /// configuration, W.
    pub ris_power_w: f64,
    /// Surface-path energy in the map without the surface, W.
    pub ris_power_without_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub points: Vec<CoveragePoint>,
}

fn noise_free(ch: &ChannelSet, psi: &InteractionVector, pilots: &[Complex64]) -> (f64, f64) {
    let (mut total, mut ris) = (0.0, 0.0);
    for (k, s) in pilots.iter().enumerate() {
        let t = ch.ris_term(k, psi) * s;
        ris += t.norm_sqr();
        total += (t + ch.h_tr()[k] * s).norm_sqr();
    }
    (total, ris)
}

/// SNR at every grid point with and without the surface.
///
/// Training runs over `codebook` with receiver noise keyed by `seed` and the
/// grid index. The chosen configuration may also be applied inverted,
/// whichever of the two adds more constructively to the direct path.
pub fn coverage_map(scenario: &Scenario, codebook: &Codebook, seed: u64) -> Result<CoverageMap> {
    scenario.check_feasible()?;
    if scenario.ue_grid.points.is_empty() {
        return Err(RisError::EmptyInput("ue grid"));
    }
    let ofdm = scenario.ofdm();
    ofdm.validate()?;
    let states = scenario.states()?;
    let pilots = ofdm.pilots();
    let noise_total = ofdm.noise_variance_w * ofdm.subcarriers as f64;
    let floor = scenario.snr_floor_db;
    let to_db = |p: f64| {
        if p > 0.0 {
            linear_to_db(p / noise_total).max(floor)
        } else {
            floor
        }
    };
    let use_ris = scenario.ris.enabled && !codebook.is_empty();
    if use_ris && codebook.geometry.len() != scenario.array()?.len() {
        return Err(RisError::LengthMismatch {
            expected: scenario.array()?.len(),
            actual: codebook.geometry.len(),
        });
    }
    let idle = InteractionVector::from_codeword(&Codeword::uniform(&scenario.array()?), &states);

    let points = scenario
        .ue_grid
        .points
        .par_iter()
        .enumerate()
        .map(|(i, &ue)| {
            let blocked = los_blocked(scenario.bs.position, ue, &scenario.blockers)?;
            let ch = synthesize_channels(&scenario.link_geometry(ue, !blocked)?, &ofdm)?;
            let off = ch.without_ris();
            let (p_without, ris_without) = noise_free(&off, &idle, &pilots);
            let snr_without_db = to_db(p_without);

            let (snr_with_db, best_codeword, ris_power_w) = if use_ris && ch.has_ris_path() {
                let sweep =
                    beam_sweep(codebook, &states, &ch, &ofdm, NoiseKey::new(seed, i as u64))?;
                let cw = &codebook.codewords[sweep.selected];
                let psi = InteractionVector::from_codeword(cw, &states);
                let inv = InteractionVector::from_codeword(&cw.complement(), &states);
                let a = noise_free(&ch, &psi, &pilots);
                let b = noise_free(&ch, &inv, &pilots);
                let (p, r) = if b.0 > a.0 { b } else { a };
                (to_db(p), Some(sweep.selected), r)
            } else {
                (snr_without_db, None, 0.0)
            };
            Ok(CoveragePoint {
                position: ue,
                blocked,
                snr_without_db,
                snr_with_db,
                improvement_db: snr_with_db - snr_without_db,
                best_codeword,
                ris_power_w,
                ris_power_without_w: ris_without,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageMap { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub mean_improvement_db: f64,
    pub max_improvement_db: f64,
    pub improved_count: usize,
    pub point_count: usize,
    /// No point was blocked, so the statistics cover the whole grid.
    pub all_points_fallback: bool,
}

pub fn coverage_stats(map: &CoverageMap) -> Result<CoverageStats> {
    if map.points.is_empty() {
        return Err(RisError::EmptyInput("coverage map"));
    }
    let blocked: Vec<&CoveragePoint> = map.points.iter().filter(|p| p.blocked).collect();
    let (set, fallback) = if blocked.is_empty() {
        (map.points.iter().collect(), true)
    } else {
        (blocked, false)
    };
    let n = set.len();
    let mean = set.iter().map(|p| p.improvement_db).sum::<f64>() / n as f64;
    let max = set
        .iter()
        .map(|p| p.improvement_db)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CoverageStats {
        mean_improvement_db: mean,
        max_improvement_db: max,
        improved_count: set.iter().filter(|p| p.improvement_db > 0.0).count(),
        point_count: n,
        all_points_fallback: fallback,
    })
}
