//! Text exports: fixed-precision CSV tables and the codebook file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codebook::{dither_offsets, Codebook, Codeword, DitherPolicy};
use crate::error::{Result, RisError};
use crate::geometry::{ArrayGeometry, Direction, Point3};
use crate::link::PathlossRow;
use crate::pattern::{PatternCut, PatternMetrics};
use crate::scenario::{CoverageMap, CoverageStats};
use crate::signal::SweepResult;
use crate::units::watts_to_dbm;

/// Formats like C's `%.6g`: six significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-4, 1e6)`.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

pub fn pattern_csv(cut: &PatternCut) -> String {
    let mut out = String::from("angle_deg,af_real,af_imag,gain_db_normalized\n");
    for ((a, af), g) in cut.angles_deg().iter().zip(cut.af()).zip(cut.gain_db()) {
        out.push_str(&row(&[
            fmt_g6(*a),
            fmt_g6(af.re),
            fmt_g6(af.im),
            fmt_g6(*g),
        ]));
    }
    out
}

#[derive(Serialize)]
struct MetricsRecord {
    plane: String,
    design_angle_deg: Option<f64>,
    main_lobe_deg: f64,
    peak_gain_db: f64,
    hpbw_deg: f64,
    hpbw_is_lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sll_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sll_angle_deg: Option<f64>,
    grating_lobe_angles_deg: Vec<f64>,
    grating_lobe_levels_db: Vec<f64>,
}

fn round6(x: f64) -> f64 {
    fmt_g6(x).parse().unwrap_or(x)
}

/// Pattern metrics as a TOML record, values rounded to six digits.
pub fn metrics_toml(cut: &PatternCut, m: &PatternMetrics) -> Result<String> {
    let rec = MetricsRecord {
        plane: format!("{:?}", cut.plane()).to_lowercase(),
        design_angle_deg: cut.design_angle_deg().map(round6),
        main_lobe_deg: round6(m.main_lobe_deg),
        peak_gain_db: round6(m.peak_gain_db),
        hpbw_deg: round6(m.hpbw_deg),
        hpbw_is_lower_bound: m.hpbw_is_lower_bound,
        sll_db: m.sll.map(|l| round6(l.level_db)),
        sll_angle_deg: m.sll.map(|l| round6(l.angle_deg)),
        grating_lobe_angles_deg: m
            .grating_lobes
            .iter()
            .map(|l| round6(l.angle_deg))
            .collect(),
        grating_lobe_levels_db: m.grating_lobes.iter().map(|l| round6(l.level_db)).collect(),
    };
    toml::to_string(&rec).map_err(|e| RisError::Format(e.to_string()))
}

pub fn pathloss_csv(rows: &[PathlossRow]) -> String {
    let mut out = String::from("angle_deg,distance_m,received_power_dbm,snr_db\n");
    for r in rows {
        out.push_str(&row(&[
            fmt_g6(r.angle_deg),
            fmt_g6(r.distance_m),
            fmt_g6(watts_to_dbm(r.received_power_w)),
            fmt_g6(r.snr_db),
        ]));
    }
    out
}

pub fn sweep_csv(book: &Codebook, sweep: &SweepResult) -> String {
    let mut out =
        String::from("codeword_index,design_theta_deg,design_phi_deg,rx_power_dbm,selected_flag\n");
    for (i, (cw, p)) in book.codewords.iter().zip(&sweep.powers_w).enumerate() {
        let d = cw.design_reflect();
        out.push_str(&row(&[
            i.to_string(),
            fmt_g6(d.theta_deg()),
            fmt_g6(d.phi_deg()),
            fmt_g6(watts_to_dbm(*p)),
            u8::from(i == sweep.selected).to_string(),
        ]));
    }
    out
}

pub fn coverage_csv(map: &CoverageMap) -> String {
    let mut out = String::from(
        "x_m,y_m,blocked,snr_no_ris_db,snr_ris_db,improvement_db,best_codeword_index\n",
    );
    for p in &map.points {
        out.push_str(&row(&[
            fmt_g6(p.position[0]),
            fmt_g6(p.position[1]),
            u8::from(p.blocked).to_string(),
            fmt_g6(p.snr_without_db),
            fmt_g6(p.snr_with_db),
            fmt_g6(p.improvement_db),
            p.best_codeword
                .map_or_else(|| "-1".to_string(), |i| i.to_string()),
        ]));
    }
    out
}

pub fn coverage_stats_toml(stats: &CoverageStats) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mean_improvement_db = {}",
        fmt_g6(stats.mean_improvement_db)
    );
    let _ = writeln!(
        out,
        "max_improvement_db = {}",
        fmt_g6(stats.max_improvement_db)
    );
    let _ = writeln!(out, "improved_count = {}", stats.improved_count);
    let _ = writeln!(out, "point_count = {}", stats.point_count);
    let _ = writeln!(out, "all_points_fallback = {}", stats.all_points_fallback);
    out
}

const CODEBOOK_FORMAT: &str = "risim-codebook";
const CODEBOOK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GeometryRecord {
    elements_x: usize,
    elements_y: usize,
    spacing_x_m: f64,
    spacing_y_m: f64,
}

#[derive(Serialize, Deserialize)]
struct DirectionRecord {
    theta_deg: f64,
    phi_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct CodewordRecord {
    index: usize,
    incident: usize,
    reflect: usize,
    bits: String,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    format: String,
    version: u32,
    frequency_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dither_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feed_position: Option<Point3>,
    geometry: GeometryRecord,
    incident: Vec<DirectionRecord>,
    reflect: Vec<DirectionRecord>,
    codeword: Vec<CodewordRecord>,
}

fn dir_record(d: &Direction) -> DirectionRecord {
    DirectionRecord {
        theta_deg: d.theta_deg(),
        phi_deg: d.phi_deg(),
    }
}

/// Serializes a codebook: header plus one bit string per codeword.
pub fn codebook_to_toml(book: &Codebook) -> Result<String> {
    let nd = book.reflect_set.len().max(1);
    let file = CodebookFile {
        format: CODEBOOK_FORMAT.into(),
        version: CODEBOOK_VERSION,
        frequency_hz: book.frequency_hz,
        dither_seed: book.dither.seed(),
        feed_position: book.feed_position,
        geometry: GeometryRecord {
            elements_x: book.geometry.elements_x(),
            elements_y: book.geometry.elements_y(),
            spacing_x_m: book.geometry.spacing_x_m(),
            spacing_y_m: book.geometry.spacing_y_m(),
        },
        incident: book.incident_set.iter().map(dir_record).collect(),
        reflect: book.reflect_set.iter().map(dir_record).collect(),
        codeword: book
            .codewords
            .iter()
            .enumerate()
            .map(|(index, cw)| CodewordRecord {
                index,
                incident: index / nd,
                reflect: index % nd,
                bits: cw.bit_string(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| RisError::Format(e.to_string()))
}

pub fn codebook_from_toml(text: &str) -> Result<Codebook> {
    let file: CodebookFile = toml::from_str(text).map_err(|e| RisError::Format(e.to_string()))?;
    if file.format != CODEBOOK_FORMAT || file.version != CODEBOOK_VERSION {
        return Err(RisError::Format(format!(
            "unsupported codebook format {} v{}",
            file.format, file.version
        )));
    }
    let g = &file.geometry;
    let geometry = ArrayGeometry::new(g.elements_x, g.elements_y, g.spacing_x_m, g.spacing_y_m)?;
    let dirs = |v: &[DirectionRecord]| -> Result<Vec<Direction>> {
        v.iter()
            .map(|d| Direction::new(d.theta_deg, d.phi_deg))
            .collect()
    };
    let incident_set = dirs(&file.incident)?;
    let reflect_set = dirs(&file.reflect)?;
    let expected = incident_set.len() * reflect_set.len();
    if file.codeword.len() != expected {
        return Err(RisError::LengthMismatch {
            expected,
            actual: file.codeword.len(),
        });
    }
    let dither = file.dither_seed.map(|s| dither_offsets(geometry.len(), s));
    let codewords = file
        .codeword
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            if rec.index != i || rec.incident * reflect_set.len() + rec.reflect != i {
                return Err(RisError::Format(format!(
                    "codeword record {i} is out of order"
                )));
            }
            let bits = Codeword::parse_bits(&rec.bits)?;
            if bits.len() != geometry.len() {
                return Err(RisError::LengthMismatch {
                    expected: geometry.len(),
                    actual: bits.len(),
                });
            }
            Codeword::new(
                bits,
                incident_set[rec.incident],
                reflect_set[rec.reflect],
                dither.clone(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        frequency_hz: file.frequency_hz,
        geometry,
        incident_set,
        reflect_set,
        dither: file
            .dither_seed
            .map_or(DitherPolicy::None, DitherPolicy::Seeded),
        feed_position: file.feed_position,
        codewords,
    })
}
