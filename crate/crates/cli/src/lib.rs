//! Command-line driver for the `risim` library.
//!
//! A run resolves a configuration (preset, optional TOML file, `--set`
//! overrides), checks it, executes one experiment and writes its outputs
//! plus a `manifest.toml` into the output directory.

pub mod config;
pub mod output;

use std::fmt::Write as _;
use std::path::PathBuf;

use risim::codebook::{Codebook, Codeword};
use risim::io;
use risim::link::{pathloss_curve, LinkParams};
use risim::pattern::{analyze_pattern, plane_wave_illumination, FeedModel, Illumination};
use risim::scenario::{coverage_map, coverage_stats, los_blocked, Diagnostic, Scenario, Severity};
use risim::signal::{
    achievable_rate, beam_sweep, synthesize_channels, InteractionVector, NoiseKey,
};
use risim::units::{dbm_to_watts, thermal_noise_watts, watts_to_dbm};
use risim::{codebook::angle_grid, RisError};

pub use config::ExperimentConfig;
use output::OutputSet;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 5800;
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RISIM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "risim-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Model(RisError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{} problem(s) found", .0.len())]
    Diagnostics(Vec<Diagnostic>),
}

impl From<RisError> for CliError {
    fn from(e: RisError) -> Self {
        match e {
            RisError::Infeasible(msg) => CliError::Infeasible(msg),
            other => CliError::Model(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Diagnostics(d) if d.iter().all(|d| d.severity == Severity::Infeasible) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Design the codebook and write `codebook.toml`.
    Codebook,
    /// One pattern cut: `pattern.csv` and `metrics.toml`.
    Pattern,
    /// Beam training at every UE: `sweep_ueNNN.csv` and `sweep_summary.csv`.
    Sweep,
    /// Radar-equation received power table: `pathloss.csv`.
    Linkbudget,
    /// SNR map with and without the surface: `coverage.csv`, `coverage_stats.toml`.
    Coverage,
    /// Report configuration problems without running anything.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Codebook => "codebook",
            Command::Pattern => "pattern",
            Command::Sweep => "sweep",
            Command::Linkbudget => "linkbudget",
            Command::Coverage => "coverage",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    /// Precomputed codebook file used instead of designing one.
    pub codebook: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub overrides: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: Command, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config: None,
            preset: None,
            codebook: None,
            out_dir: out_dir.into(),
            seed: DEFAULT_SEED,
            overrides: Vec::new(),
        }
    }
}

#[derive(Debug)]
pub enum Outcome {
    Written(Vec<PathBuf>),
    Clean,
}

pub fn resolve(cfg: &RunConfig) -> Result<ExperimentConfig, CliError> {
    config::load(cfg.preset.as_deref(), cfg.config.as_deref(), &cfg.overrides)
}

/// Resolves, checks and executes one command.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let exp = resolve(cfg)?;
    let diags = exp.diagnostics();
    if cfg.command == Command::Validate {
        return if diags.is_empty() {
            Ok(Outcome::Clean)
        } else {
            Err(CliError::Diagnostics(diags))
        };
    }
    if !diags.is_empty() {
        return Err(CliError::Diagnostics(diags));
    }
    let codebook_bytes = match &cfg.codebook {
        Some(p) => Some(
            std::fs::read(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let codebook = || -> Result<Codebook, CliError> {
        match &codebook_bytes {
            Some(b) => {
                let text = std::str::from_utf8(b)
                    .map_err(|e| CliError::Config(format!("codebook file: {e}")))?;
                io::codebook_from_toml(text)
                    .map_err(|e| CliError::Config(format!("codebook file: {e}")))
            }
            None => Ok(exp.scenario.build_codebook()?),
        }
    };

    let mut out = OutputSet::new(&cfg.out_dir);
    match cfg.command {
        Command::Codebook => out.add("codebook.toml", io::codebook_to_toml(&codebook()?)?),
        Command::Pattern => {
            let (csv, metrics) = pattern_outputs(&exp)?;
            out.add("pattern.csv", csv);
            out.add("metrics.toml", metrics);
        }
        Command::Sweep => {
            for (name, text) in sweep_outputs(&exp.scenario, &codebook()?, cfg.seed)? {
                out.add(name, text);
            }
        }
        Command::Linkbudget => out.add("pathloss.csv", linkbudget_output(&exp)?),
        Command::Coverage => {
            let map = coverage_map(&exp.scenario, &codebook()?, cfg.seed)?;
            let stats = coverage_stats(&map)?;
            out.add("coverage.csv", io::coverage_csv(&map));
            out.add("coverage_stats.toml", io::coverage_stats_toml(&stats));
        }
        Command::Validate => unreachable!("handled above"),
    }
    let written = out.commit(
        cfg.command.name(),
        cfg.seed,
        &exp.to_toml()?,
        codebook_bytes.as_deref(),
    )?;
    Ok(Outcome::Written(written))
}

/// The scenario's design rule applied to a single reflect direction.
fn design_codeword(
    scenario: &Scenario,
    plane: risim::CutPlane,
    reflect_deg: f64,
) -> Result<Codeword, CliError> {
    let mut s = scenario.clone();
    s.codebook.plane = plane;
    s.codebook.start_deg = reflect_deg;
    s.codebook.stop_deg = reflect_deg;
    s.codebook.step_deg = 1.0;
    let mut book = s.build_codebook()?;
    book.codewords
        .pop()
        .ok_or_else(|| CliError::Config("empty design".into()))
}

fn pattern_outputs(exp: &ExperimentConfig) -> Result<(String, String), CliError> {
    let s = &exp.scenario;
    let p = &exp.pattern;
    let wave = s.wave()?;
    let reflector = s.reflector()?;
    let geom = reflector.geometry;
    let cw = design_codeword(s, p.plane, p.reflect_deg)?;
    let ill: Illumination = match p.illumination {
        config::IlluminationKind::Feed => {
            FeedModel::from_gain(s.feed_local()?, s.bs.gain_dbi).illumination(&geom, &wave)?
        }
        config::IlluminationKind::Plane => {
            plane_wave_illumination(&geom, &wave, s.bs_direction()?.0)
        }
    };
    let angles = angle_grid(p.start_deg, p.stop_deg, p.step_deg)?;
    let cut = reflector.pattern_cut(&wave, &cw, &ill, p.plane, &angles)?;
    let metrics = analyze_pattern(&cut)?;
    Ok((io::pattern_csv(&cut), io::metrics_toml(&cut, &metrics)?))
}

fn sweep_outputs(
    s: &Scenario,
    book: &Codebook,
    seed: u64,
) -> Result<Vec<(String, String)>, CliError> {
    let ofdm = s.ofdm();
    let states = s.states()?;
    let mut files = Vec::with_capacity(s.ue_grid.points.len() + 1);
    let mut summary = String::from("ue_index,x_m,y_m,z_m,blocked,selected_index,design_theta_deg,design_phi_deg,rx_power_dbm,rate_bps_hz\n");
    for (i, &ue) in s.ue_grid.points.iter().enumerate() {
        let blocked = los_blocked(s.bs.position, ue, &s.blockers)?;
        let ch = synthesize_channels(&s.link_geometry(ue, !blocked)?, &ofdm)?;
        let sweep = beam_sweep(book, &states, &ch, &ofdm, NoiseKey::new(seed, i as u64))?;
        let cw = &book.codewords[sweep.selected];
        let rate = achievable_rate(
            &ch,
            &InteractionVector::from_codeword(cw, &states),
            ofdm.rho(),
        )?;
        let d = cw.design_reflect();
        let _ = writeln!(
            summary,
            "{i},{},{},{},{},{},{},{},{},{}",
            io::fmt_g6(ue[0]),
            io::fmt_g6(ue[1]),
            io::fmt_g6(ue[2]),
            u8::from(blocked),
            sweep.selected,
            io::fmt_g6(d.theta_deg()),
            io::fmt_g6(d.phi_deg()),
            io::fmt_g6(watts_to_dbm(sweep.powers_w[sweep.selected])),
            io::fmt_g6(rate),
        );
        files.push((format!("sweep_ue{i:03}.csv"), io::sweep_csv(book, &sweep)));
    }
    files.push(("sweep_summary.csv".into(), summary));
    Ok(files)
}

fn linkbudget_output(exp: &ExperimentConfig) -> Result<String, CliError> {
    let s = &exp.scenario;
    let wave = s.wave()?;
    let (bs_dir, r_i) = s.bs_direction()?;
    let w = &s.waveform;
    let template = LinkParams {
        tx_power_w: dbm_to_watts(w.tx_power_dbm),
        bs_gain_dbi: s.bs.gain_dbi,
        ue_gain_dbi: s.ue_grid.gain_dbi,
        r_i_m: r_i,
        r_d_m: exp.linkbudget.distances_m[0],
        efficiency: s.ris.efficiency,
        area_m2: s.array()?.area_m2(),
        theta_i_deg: bs_dir.theta_deg(),
        theta_d_deg: 0.0,
        noise_power_w: thermal_noise_watts(w.bandwidth_hz, w.noise_figure_db),
    };
    let rows = pathloss_curve(
        &template,
        &wave,
        &exp.linkbudget.distances_m,
        &exp.linkbudget.reflect_angles_deg,
    )?;
    Ok(io::pathloss_csv(&rows))
}
