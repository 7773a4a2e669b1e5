//! Simulation toolkit for 1-bit reconfigurable reflecting surfaces.
//!
//! * [`geometry`]: wave constants, directions, aperture layout, poses
//! * [`codebook`]: phase design, 1-bit quantization, dithering, codebooks
//! * [`pattern`]: array factor, feed illumination, pattern metrics
//! * [`link`]: radar-equation link budget and pathloss tables
//! * [`signal`]: OFDM channels, receive model, beam training
//! * [`scenario`]: deployments, blockage and coverage maps
//! * [`io`]: CSV and codebook file formats

pub mod codebook;
pub mod error;
pub mod geometry;
pub mod io;
pub mod link;
pub mod pattern;
pub mod scenario;
pub mod signal;
pub mod units;

pub use codebook::{
    build_codebook, build_codeword, ideal_phase, quantize_phase, Codebook, Codeword, DitherPolicy,
    ElementStateModel,
};
pub use error::{Result, RisError};
pub use geometry::{
    array_response, local_direction, ArrayGeometry, CutPlane, Direction, Pose3D, WaveParams,
};
pub use link::{bistatic_rcs, monostatic_rcs, received_power, LinkParams};
pub use pattern::{
    analyze_pattern, array_factor, feed_illumination, pattern_cut, plane_wave_illumination,
    Illumination, PatternCut, PatternMetrics,
};
pub use scenario::{coverage_map, coverage_stats, los_blocked, Scenario};
pub use signal::{
    achievable_rate, beam_sweep, receive, synthesize_channels, ChannelSet, InteractionVector,
    OfdmConfig,
};
