//! Wave, direction and aperture primitives shared by every other module.
//!
//! Angles are degrees at every public boundary and radians internally.
//! The surface local frame has x along the long (azimuth-scan) edge, y
//! along the short edge, and z along the outward normal.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RisError};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Element pitch of the 160-element prototype aperture.
pub const PROTOTYPE_PITCH_M: f64 = 0.02585;

pub type Point3 = [f64; 3];

pub(crate) mod vec3 {
    use super::Point3;

    pub fn sub(a: Point3, b: Point3) -> Point3 {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn add(a: Point3, b: Point3) -> Point3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    pub fn scale(a: Point3, s: f64) -> Point3 {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    pub fn dot(a: Point3, b: Point3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn cross(a: Point3, b: Point3) -> Point3 {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    pub fn norm(a: Point3) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn distance(a: Point3, b: Point3) -> f64 {
        norm(sub(a, b))
    }
}

/// Carrier frequency with its derived wavelength and free-space wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WaveParams {
    frequency_hz: f64,
    wavelength_m: f64,
    wavenumber: f64,
}

impl WaveParams {
    pub fn from_frequency(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(invalid(
                "frequency",
                format!("{frequency_hz} Hz is not positive"),
            ));
        }
        let wavelength_m = SPEED_OF_LIGHT / frequency_hz;
        Ok(Self {
            frequency_hz,
            wavelength_m,
            wavenumber: 2.0 * PI / wavelength_m,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Free-space wavenumber in rad/m.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }
}

impl TryFrom<f64> for WaveParams {
    type Error = RisError;

    fn try_from(f: f64) -> Result<Self> {
        Self::from_frequency(f)
    }
}

impl From<WaveParams> for f64 {
    fn from(w: WaveParams) -> f64 {
        w.frequency_hz
    }
}

/// A principal cut through the pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutPlane {
    /// The x-z plane: phi = 0 deg for positive angles, 180 deg for negative.
    Azimuth,
    /// The y-z plane: phi = 90 deg for positive angles, 270 deg for negative.
    Elevation,
}

impl CutPlane {
    fn phi_pair(self) -> (f64, f64) {
        match self {
            CutPlane::Azimuth => (0.0, 180.0),
            CutPlane::Elevation => (90.0, 270.0),
        }
    }
}

/// Direction seen from the surface: `theta` off the broadside normal and
/// `phi` in the surface plane measured from the local x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta_deg: f64,
    phi_deg: f64,
}

impl Direction {
    pub const BROADSIDE: Direction = Direction {
        theta_deg: 0.0,
        phi_deg: 0.0,
    };

    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !(0.0..=90.0).contains(&theta_deg) {
            return Err(invalid("theta", format!("{theta_deg} deg outside [0, 90]")));
        }
        if !phi_deg.is_finite() {
            return Err(invalid("phi", "not finite"));
        }
        let mut phi = phi_deg.rem_euclid(360.0);
        if phi >= 360.0 {
            phi = 0.0;
        }
        Ok(Self {
            theta_deg,
            phi_deg: phi,
        })
    }

    /// Builds a direction from a signed angle in one of the principal cuts.
    pub fn in_plane(plane: CutPlane, signed_deg: f64) -> Result<Self> {
        let (pos, neg) = plane.phi_pair();
        let phi = if signed_deg >= 0.0 { pos } else { neg };
        Self::new(signed_deg.abs(), phi)
    }

    pub fn azimuth(signed_deg: f64) -> Result<Self> {
        Self::in_plane(CutPlane::Azimuth, signed_deg)
    }

    pub fn elevation(signed_deg: f64) -> Result<Self> {
        Self::in_plane(CutPlane::Elevation, signed_deg)
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }

    /// Direction cosines `(u, v) = (sin θ cos φ, sin θ sin φ)`.
    pub fn uv(&self) -> (f64, f64) {
        let (t, p) = (self.theta_deg.to_radians(), self.phi_deg.to_radians());
        (t.sin() * p.cos(), t.sin() * p.sin())
    }

    /// Signed angle of this direction within `plane`, if it lies in it.
    pub fn signed_angle_in(&self, plane: CutPlane) -> Option<f64> {
        const TOL: f64 = 1e-9;
        if self.theta_deg.abs() < TOL {
            return Some(0.0);
        }
        let (pos, neg) = plane.phi_pair();
        let close = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(360.0);
            d < TOL || 360.0 - d < TOL
        };
        if close(self.phi_deg, pos) {
            Some(self.theta_deg)
        } else if close(self.phi_deg, neg) {
            Some(-self.theta_deg)
        } else {
            None
        }
    }
}

/// Uniform rectangular grid of elements centred on the aperture origin.
///
/// Elements are indexed row-major with the x position as the fast index:
/// `index = n * elements_x + m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    elements_x: usize,
    elements_y: usize,
    spacing_x_m: f64,
    spacing_y_m: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self {
            elements_x: 16,
            elements_y: 10,
            spacing_x_m: PROTOTYPE_PITCH_M,
            spacing_y_m: PROTOTYPE_PITCH_M,
        }
    }
}

impl ArrayGeometry {
    pub fn new(
        elements_x: usize,
        elements_y: usize,
        spacing_x_m: f64,
        spacing_y_m: f64,
    ) -> Result<Self> {
        if elements_x == 0 || elements_y == 0 {
            return Err(invalid("element count", "must be at least 1 per axis"));
        }
        for (field, s) in [("spacing_x", spacing_x_m), ("spacing_y", spacing_y_m)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid(field, format!("{s} m is not positive")));
            }
        }
        Ok(Self {
            elements_x,
            elements_y,
            spacing_x_m,
            spacing_y_m,
        })
    }

    pub fn elements_x(&self) -> usize {
        self.elements_x
    }

    pub fn elements_y(&self) -> usize {
        self.elements_y
    }

    pub fn spacing_x_m(&self) -> f64 {
        self.spacing_x_m
    }

    pub fn spacing_y_m(&self) -> f64 {
        self.spacing_y_m
    }

    pub fn len(&self) -> usize {
        self.elements_x * self.elements_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical aperture area, counting one full pitch cell per element.
    pub fn area_m2(&self) -> f64 {
        self.len() as f64 * self.cell_area_m2()
    }

    pub fn cell_area_m2(&self) -> f64 {
        self.spacing_x_m * self.spacing_y_m
    }

    pub fn x(&self, m: usize) -> f64 {
        (m as f64 - (self.elements_x as f64 - 1.0) / 2.0) * self.spacing_x_m
    }

    pub fn y(&self, n: usize) -> f64 {
        (n as f64 - (self.elements_y as f64 - 1.0) / 2.0) * self.spacing_y_m
    }

    /// `(x, y)` coordinates of every element in storage order.
    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.elements_y)
            .flat_map(move |n| (0..self.elements_x).map(move |m| (self.x(m), self.y(n))))
    }
}

/// Per-element phase `k0 (x u + y v)` in radians.
pub(crate) fn path_phases(geometry: &ArrayGeometry, wavenumber: f64, dir: Direction) -> Vec<f64> {
    let (u, v) = dir.uv();
    geometry
        .positions()
        .map(|(x, y)| wavenumber * (x * u + y * v))
        .collect()
}

/// Far-field array response `exp(-j k0 (x u + y v))` for each element.
pub fn array_response(
    geometry: &ArrayGeometry,
    wave: &WaveParams,
    dir: Direction,
) -> Vec<Complex64> {
    array_response_at(geometry, wave.wavenumber(), dir)
}

pub(crate) fn array_response_at(
    geometry: &ArrayGeometry,
    wavenumber: f64,
    dir: Direction,
) -> Vec<Complex64> {
    path_phases(geometry, wavenumber, dir)
        .into_iter()
        .map(|p| Complex64::from_polar(1.0, -p))
        .collect()
}

/// Position and outward normal of a surface or antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose3D {
    pub position: Point3,
    pub normal: Point3,
}

impl Pose3D {
    /// Normalises `normal`; rejects zero-length or non-finite vectors.
    pub fn new(position: Point3, normal: Point3) -> Result<Self> {
        let len = vec3::norm(normal);
        if !(len.is_finite() && len > 1e-12) {
            return Err(invalid("normal", "must be a non-zero vector"));
        }
        if position.iter().any(|c| !c.is_finite()) {
            return Err(invalid("position", "not finite"));
        }
        Ok(Self {
            position,
            normal: vec3::scale(normal, 1.0 / len),
        })
    }

    /// Local `(x, y, z)` unit axes. x is horizontal (perpendicular to world
    /// up and the normal) unless the normal points straight up or down.
    pub fn local_axes(&self) -> [Point3; 3] {
        let n = self.normal;
        let up = [0.0, 0.0, 1.0];
        let mut ex = vec3::cross(up, n);
        let len = vec3::norm(ex);
        if len < 1e-9 {
            ex = [1.0, 0.0, 0.0];
        } else {
            ex = vec3::scale(ex, 1.0 / len);
        }
        let ey = vec3::cross(n, ex);
        [ex, ey, n]
    }

    /// Coordinates of a world point in this pose's local frame.
    pub fn to_local(&self, point: Point3) -> Point3 {
        let d = vec3::sub(point, self.position);
        let [ex, ey, ez] = self.local_axes();
        [vec3::dot(d, ex), vec3::dot(d, ey), vec3::dot(d, ez)]
    }

    /// World coordinates of a point given in the local frame.
    pub fn to_world(&self, local: Point3) -> Point3 {
        let [ex, ey, ez] = self.local_axes();
        let offset = vec3::add(
            vec3::add(vec3::scale(ex, local[0]), vec3::scale(ey, local[1])),
            vec3::scale(ez, local[2]),
        );
        vec3::add(self.position, offset)
    }
}

/// Direction and range of `point` as seen from the surface at `pose`.
pub fn local_direction(pose: &Pose3D, point: Point3) -> Result<(Direction, f64)> {
    let local = pose.to_local(point);
    let range = vec3::norm(local);
    if range < 1e-12 {
        return Err(RisError::CoincidentPoint);
    }
    if local[2] <= range * 1e-9 {
        return Err(RisError::BehindSurface {
            normal_component: local[2],
        });
    }
    let theta = (local[2] / range).clamp(-1.0, 1.0).acos().to_degrees();
    let phi = if local[0].hypot(local[1]) < range * 1e-12 {
        0.0
    } else {
        local[1].atan2(local[0]).to_degrees()
    };
    Ok((Direction::new(theta.min(90.0), phi)?, range))
}
