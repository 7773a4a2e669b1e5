//! Flat-plate bistatic radar-equation link budget.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RisError};
use crate::geometry::WaveParams;
use crate::units::{db_to_linear, linear_to_db};

/// Inputs of the bistatic radar equation. Gains are in dBi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub tx_power_w: f64,
    pub bs_gain_dbi: f64,
    pub ue_gain_dbi: f64,
    /// BS to surface distance, m.
    pub r_i_m: f64,
    /// Surface to UE distance, m.
    pub r_d_m: f64,
    pub efficiency: f64,
    pub area_m2: f64,
    pub theta_i_deg: f64,
    pub theta_d_deg: f64,
    pub noise_power_w: f64,
}

impl Default for LinkParams {
    /// The outdoor beam-scanning setup: 20 dBm into a 12.5 dBi feed at 5 m,
    /// an 18.5 dBi receive horn at 10 m, the 0.414 x 0.259 m aperture.
    fn default() -> Self {
        Self {
            tx_power_w: 0.1,
            bs_gain_dbi: 12.5,
            ue_gain_dbi: 18.5,
            r_i_m: 5.0,
            r_d_m: 10.0,
            efficiency: 1.0,
            area_m2: 16.0 * 10.0 * 0.02585 * 0.02585,
            theta_i_deg: 0.0,
            theta_d_deg: 0.0,
            noise_power_w: crate::units::thermal_noise_watts(20e6, 7.0),
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power_w),
            ("r_i", self.r_i_m),
            ("r_d", self.r_d_m),
            ("area", self.area_m2),
            ("noise_power", self.noise_power_w),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("{v} is not positive")));
            }
        }
        check_efficiency(self.efficiency)?;
        check_angle("theta_i", self.theta_i_deg)?;
        check_angle("theta_d", self.theta_d_deg)?;
        for (field, g) in [("bs_gain", self.bs_gain_dbi), ("ue_gain", self.ue_gain_dbi)] {
            if !g.is_finite() {
                return Err(invalid(field, "not finite"));
            }
        }
        Ok(())
    }

    pub fn bs_gain_linear(&self) -> f64 {
        db_to_linear(self.bs_gain_dbi)
    }

    pub fn ue_gain_linear(&self) -> f64 {
        db_to_linear(self.ue_gain_dbi)
    }
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("efficiency", format!("{eta} outside (0, 1]")));
    }
    Ok(())
}

fn check_angle(field: &'static str, deg: f64) -> Result<()> {
    if !(0.0..90.0).contains(&deg) {
        return Err(invalid(field, format!("{deg} deg outside [0, 90)")));
    }
    Ok(())
}

/// `4 pi eta A^2 / lambda^2`, m^2.
pub fn monostatic_rcs(area_m2: f64, efficiency: f64, wave: &WaveParams) -> Result<f64> {
    if !(area_m2.is_finite() && area_m2 > 0.0) {
        return Err(invalid("area", format!("{area_m2} m^2 is not positive")));
    }
    check_efficiency(efficiency)?;
    Ok(4.0 * PI * efficiency * area_m2 * area_m2 / wave.wavelength_m().powi(2))
}

/// Monostatic RCS scaled by the projected aperture on both sides.
pub fn bistatic_rcs(
    area_m2: f64,
    efficiency: f64,
    wave: &WaveParams,
    theta_i_deg: f64,
    theta_d_deg: f64,
) -> Result<f64> {
    check_angle("theta_i", theta_i_deg)?;
    check_angle("theta_d", theta_d_deg)?;
    Ok(monostatic_rcs(area_m2, efficiency, wave)?
        * theta_i_deg.to_radians().cos()
        * theta_d_deg.to_radians().cos())
}

/// Bistatic radar equation for a given RCS.
pub fn radar_equation(
    tx_power_w: f64,
    g_bs: f64,
    g_ue: f64,
    wave: &WaveParams,
    rcs_m2: f64,
    r_i_m: f64,
    r_d_m: f64,
) -> Result<f64> {
    if r_i_m <= 0.0 || r_d_m <= 0.0 {
        return Err(invalid("distance", "must be positive"));
    }
    Ok(
        tx_power_w * g_bs * g_ue * wave.wavelength_m().powi(2) * rcs_m2
            / ((4.0 * PI).powi(3) * r_i_m.powi(2) * r_d_m.powi(2)),
    )
}

pub fn received_power(params: &LinkParams, wave: &WaveParams) -> Result<f64> {
    params.validate()?;
    let sigma = bistatic_rcs(
        params.area_m2,
        params.efficiency,
        wave,
        params.theta_i_deg,
        params.theta_d_deg,
    )?;
    radar_equation(
        params.tx_power_w,
        params.bs_gain_linear(),
        params.ue_gain_linear(),
        wave,
        sigma,
        params.r_i_m,
        params.r_d_m,
    )
}

pub fn snr_db(received_w: f64, noise_w: f64) -> Result<f64> {
    if noise_w.is_nan() || noise_w <= 0.0 {
        return Err(invalid(
            "noise_power",
            format!("{noise_w} W is not positive"),
        ));
    }
    Ok(linear_to_db(received_w / noise_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossRow {
    pub angle_deg: f64,
    pub distance_m: f64,
    pub received_power_w: f64,
    pub snr_db: f64,
}

/// Received power for every (reflect angle, UE distance) pair, angle-major.
pub fn pathloss_curve(
    template: &LinkParams,
    wave: &WaveParams,
    distances_m: &[f64],
    reflect_angles_deg: &[f64],
) -> Result<Vec<PathlossRow>> {
    if distances_m.is_empty() {
        return Err(RisError::EmptyInput("distances"));
    }
    if reflect_angles_deg.is_empty() {
        return Err(RisError::EmptyInput("reflect angles"));
    }
    reflect_angles_deg
        .iter()
        .flat_map(|&angle_deg| {
            distances_m
                .iter()
                .map(move |&distance_m| (angle_deg, distance_m))
        })
        .map(|(angle_deg, distance_m)| {
            let p = LinkParams {
                r_d_m: distance_m,
                theta_d_deg: angle_deg,
                ..*template
            };
            let received_power_w = received_power(&p, wave)?;
            Ok(PathlossRow {
                angle_deg,
                distance_m,
                received_power_w,
                snr_db: snr_db(received_power_w, p.noise_power_w)?,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(RisError::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(invalid("regression", "need at least two points"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("regression", "abscissae are identical"));
    }
    Ok(sxy / sxx)
}
