//! Measurement campaigns for the polarimetric mixed-state phase experiments.
//!
//! * [`config`] – campaign parameters from a flat key=value file and CLI flags
//! * [`campaign`] – geometric, dynamical, nonadditivity, tomography and single-scan runs
//! * [`output`] – CSV writers
//! * [`plot`] – optional SVG renderings

pub mod campaign;
pub mod config;
pub mod output;
pub mod plot;

use spinor_phase::depolarization::NoiseError;
use spinor_phase::phase::PhaseError;
use thiserror::Error;

pub use campaign::{run_campaign, CampaignResult, CampaignRow, RowKind};
pub use config::{Campaign, ExperimentConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("phase extraction failed: {0}")]
    Phase(#[from] PhaseError),
    #[error("noise model: {0}")]
    Noise(#[from] NoiseError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("plotting failed: {0}")]
    Plot(String),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration errors, 3 for extrema that
    /// contradict the purity beyond the clamp tolerance, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Phase(PhaseError::Inconsistent(_)) => 3,
            _ => 1,
        }
    }
}
