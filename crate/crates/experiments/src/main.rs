use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spinor_phase_experiments::config::{Settings, SEED_ENV};
use spinor_phase_experiments::{output, plot, run_campaign, ExperimentConfig, ExperimentError};

/// Simulated polarimetric measurement of mixed-state phases.
///
/// Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
/// 3 intensity extrema inconsistent with the purity.
#[derive(Debug, Parser)]
#[command(name = "spinor-phase", version)]
struct Cli {
    /// Flat key = value file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// geometric, dynamical, nonadditivity, tomography or scan.
    #[arg(long)]
    campaign: Option<String>,
    /// Comma-separated target purities in (0, 1].
    #[arg(long, allow_hyphen_values = true)]
    purities: Option<String>,
    /// Comma-separated δ values, e.g. `pi/8,2pi/8,3pi/8`.
    #[arg(long, allow_hyphen_values = true)]
    deltas: Option<String>,
    /// φ_g:φ_d pairs for the nonadditivity campaign, e.g. `pi/8:pi/8,pi/8:pi/4`.
    #[arg(long)]
    utot: Option<String>,
    /// Expected counts per point at unit intensity (0 = exact intensities).
    #[arg(long)]
    exposure: Option<String>,
    /// `paper`: 150 counts/s times the dwell time.
    #[arg(long)]
    exposure_preset: Option<String>,
    /// Dwell time per point in seconds for the exposure preset.
    #[arg(long)]
    dwell: Option<String>,
    /// η points per scan.
    #[arg(long)]
    points: Option<String>,
    /// Master seed; falls back to SPINOR_PHASE_SEED, then 0.
    #[arg(long)]
    seed: Option<String>,
    /// First-coil noise distribution: uniform, gaussian or discrete.
    #[arg(long)]
    noise: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
    /// Second-coil ξ for the scan campaign.
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<String>,
    /// Phase-unit ζ for the scan campaign (default δ − π/2).
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
    /// Monte Carlo samples for the noisy first coil.
    #[arg(long)]
    ensemble_samples: Option<String>,
    /// Polarization of the incident beam, multiplying every purity.
    #[arg(long)]
    incident_polarization: Option<String>,
}

impl Cli {
    fn settings(&self) -> Settings {
        Settings {
            campaign: self.campaign.clone(),
            purities: self.purities.clone(),
            deltas: self.deltas.clone(),
            utot: self.utot.clone(),
            exposure: self.exposure.clone(),
            exposure_preset: self.exposure_preset.clone(),
            dwell: self.dwell.clone(),
            points: self.points.clone(),
            seed: self.seed.clone(),
            noise: self.noise.clone(),
            out: self.out.clone(),
            plot: self.plot.then(|| "true".to_string()),
            xi: self.xi.clone(),
            zeta: self.zeta.clone(),
            ensemble_samples: self.ensemble_samples.clone(),
            incident_polarization: self.incident_polarization.clone(),
        }
    }
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = ExperimentConfig::resolve(&file.overridden_by(cli.settings()), env_seed.as_deref())?;

    let result = run_campaign(&cfg)?;
    let clamped = result.rows.iter().filter(|r| r.flags.clamped).count();
    if clamped > 0 {
        eprintln!("warning: {clamped} row(s) clamped: a bracket term was within noise of zero");
    }
    let mut written = output::write_result(&cfg.output_dir, &result)?;
    if cfg.plot {
        written.extend(plot::write_plots(&cfg.output_dir, &result)?);
    }
    println!(
        "{} campaign: {} rows, {} scans, {} files under {}",
        cfg.campaign,
        result.rows.len().max(result.tomography.len()),
        result.scans.len(),
        written.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
