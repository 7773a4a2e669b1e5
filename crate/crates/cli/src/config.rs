//! Experiment configuration: a preset, an optional TOML file merged over it,
//! then flat `key=value` overrides.

use std::path::Path;

use risim::geometry::CutPlane;
use risim::scenario::{preset, Diagnostic, Scenario, Severity};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const DEFAULT_PRESET: &str = "parking";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IlluminationKind {
    /// Tapered spherical wave from the BS treated as a feed horn.
    #[default]
    Feed,
    /// Plane wave from the BS direction.
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSettings {
    pub plane: CutPlane,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    pub reflect_deg: f64,
    pub illumination: IlluminationKind,
}

impl Default for PatternSettings {
    fn default() -> Self {
        Self {
            plane: CutPlane::Azimuth,
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 0.25,
            reflect_deg: 30.0,
            illumination: IlluminationKind::Feed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkbudgetSettings {
    pub distances_m: Vec<f64>,
    pub reflect_angles_deg: Vec<f64>,
}

impl Default for LinkbudgetSettings {
    fn default() -> Self {
        Self {
            distances_m: vec![10.0, 20.0, 40.0],
            reflect_angles_deg: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default)]
    pub pattern: PatternSettings,
    #[serde(default)]
    pub linkbudget: LinkbudgetSettings,
}

impl ExperimentConfig {
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let scenario = preset(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset {name:?} (expected parking, gammage or chamber)"
            ))
        })?;
        Ok(Self {
            scenario,
            pattern: PatternSettings::default(),
            linkbudget: LinkbudgetSettings::default(),
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Scenario diagnostics plus checks on the experiment sections.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = self.scenario.diagnostics();
        let p = &self.pattern;
        let bad_grid = !(p.step_deg > 0.0
            && p.start_deg <= p.stop_deg
            && p.start_deg >= -90.0
            && p.stop_deg <= 90.0);
        if bad_grid {
            out.push(Diagnostic {
                field: "pattern".into(),
                message: format!(
                    "angle grid {}..{} step {} must lie in [-90, 90] with a positive step",
                    p.start_deg, p.stop_deg, p.step_deg
                ),
                severity: Severity::Invalid,
            });
        }
        if !(-90.0..=90.0).contains(&p.reflect_deg) {
            out.push(Diagnostic {
                field: "pattern.reflect_deg".into(),
                message: format!("{} outside [-90, 90]", p.reflect_deg),
                severity: Severity::Invalid,
            });
        }
        let l = &self.linkbudget;
        if l.distances_m.is_empty() || l.distances_m.iter().any(|d| d.is_nan() || *d <= 0.0) {
            out.push(Diagnostic {
                field: "linkbudget.distances_m".into(),
                message: "needs at least one positive distance".into(),
                severity: Severity::Invalid,
            });
        }
        if l.reflect_angles_deg.is_empty()
            || l.reflect_angles_deg
                .iter()
                .any(|a| !(0.0..90.0).contains(a))
        {
            out.push(Diagnostic {
                field: "linkbudget.reflect_angles_deg".into(),
                message: "needs at least one angle in [0, 90)".into(),
                severity: Severity::Invalid,
            });
        }
        out
    }
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_literal(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| Value::String(raw.to_owned())),
        Err(_) => Value::String(raw.to_owned()),
    }
}

pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(format!("malformed key in {s:?}"));
    }
    Ok((k.to_owned(), v.trim().to_owned()))
}

fn apply_override(root: &mut Table, key: &str, raw: &str) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut table = root;
    for p in parts {
        let entry = table
            .entry(p.to_owned())
            .or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key}: {p} is not a section")))?;
    }
    table.insert(last.to_owned(), parse_literal(raw));
    Ok(())
}

/// Resolves preset, file and overrides into one configuration.
pub fn load(
    preset_name: Option<&str>,
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, CliError> {
    let mut file_table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    let file_preset = match file_table.remove("preset") {
        Some(Value::String(s)) => Some(s),
        Some(other) => {
            return Err(CliError::Config(format!(
                "preset must be a string, got {other}"
            )))
        }
        None => None,
    };
    let name = preset_name
        .map(str::to_owned)
        .or(file_preset)
        .unwrap_or_else(|| DEFAULT_PRESET.to_owned());
    let base = ExperimentConfig::from_preset(&name)?;
    let mut root: Table = Table::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut root, file_table);
    for (k, v) in overrides {
        apply_override(&mut root, k, v)?;
    }
    Value::Table(root)
        .try_into::<ExperimentConfig>()
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in ["parking", "gammage", "chamber"] {
            let c = ExperimentConfig::from_preset(name).unwrap();
            let back: ExperimentConfig = toml::from_str(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c);
            assert!(c.diagnostics().is_empty(), "{name}: {:?}", c.diagnostics());
        }
        assert!(ExperimentConfig::from_preset("moon").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "preset = \"gammage\"\n[waveform]\nsubcarriers = 16\n[pattern]\nreflect_deg = 45.0\n",
        )
        .unwrap();
        let ov = vec![
            parse_override("waveform.subcarriers=8").unwrap(),
            parse_override("name = renamed").unwrap(),
        ];
        let c = load(None, Some(&path), &ov).unwrap();
        assert_eq!(c.scenario.waveform.subcarriers, 8);
        assert_eq!(c.scenario.name, "renamed");
        assert_eq!(c.pattern.reflect_deg, 45.0);
        assert_eq!(c.scenario.ue_grid.points.len(), 28);
        let c = load(Some("parking"), Some(&path), &[]).unwrap();
        assert_eq!(c.scenario.ue_grid.points.len(), 25);
    }

    #[test]
    fn bad_overrides() {
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
        let ov = vec![parse_override("waveform.subcarriers=many").unwrap()];
        assert!(load(None, None, &ov).is_err());
        let ov = vec![parse_override("name.inner=1").unwrap()];
        assert!(load(None, None, &ov).is_err());
    }

    #[test]
    fn negative_frequency_is_one_diagnostic() {
        let ov = vec![parse_override("waveform.frequency_hz=-5.8e9").unwrap()];
        let c = load(None, None, &ov).unwrap();
        let d = c.diagnostics();
        assert_eq!(d.len(), 1);
        assert!(d[0].field.contains("frequency_hz"));
    }
}
