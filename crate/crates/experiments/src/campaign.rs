//! Measurement campaigns.
//!
//! Every point prepares the state after the noisy first coil (exactly when
//! `exposure == 0`, by Monte Carlo otherwise), propagates it through the
//! remaining beamline, records intensities (Poisson counts when
//! `exposure > 0`), and extracts the mixed-state phase from the fringe
//! extrema. The reference intensity I₀ comes from a second measurement with
//! the phase unit switched off.
//!
//! Points run in parallel. Each draws from its own seed stream derived from
//! the campaign seed and its position in the campaign, and results are
//! collected in input order, so output does not depend on scheduling.

use std::f64::consts::FRAC_PI_2;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spinor_phase::beamline::{compose_coil_and_precession, geometric_setting, intensity_after_first_coil};
use spinor_phase::depolarization::{
    bloch_tomography, exact_first_coil_state, first_coil_ensemble, solve_noise_for_purity, TomographyEstimate,
};
use spinor_phase::phase::scan::poisson_counts;
use spinor_phase::phase::{
    additive_prediction, bracket_sigmas, cumulative_prediction, extract_phase_with_slack, fit_oscillation,
    nonadditivity_gap, predicted_phase, propagate_extrema_uncertainty, scan_with, solve_utot, Extrema, Measured,
    PhaseEstimate, PhaseFlags, PhaseKind, ScanResult, CLAMP_EPSILON,
};
use spinor_phase::{BeamlineConfig, DensityMatrix};

use crate::config::{Campaign, ExperimentConfig};
use crate::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    Geometric,
    Dynamical,
    Total,
    /// Φ_g + Φ_d from separate evolutions.
    Sum,
    /// Φ_tot − (Φ_g + Φ_d).
    Gap,
}

impl RowKind {
    pub fn name(&self) -> &'static str {
        match self {
            RowKind::Geometric => "geometric",
            RowKind::Dynamical => "dynamical",
            RowKind::Total => "total",
            RowKind::Sum => "sum",
            RowKind::Gap => "gap",
        }
    }
}

impl From<PhaseKind> for RowKind {
    fn from(k: PhaseKind) -> Self {
        match k {
            PhaseKind::Geometric => RowKind::Geometric,
            PhaseKind::Dynamical => RowKind::Dynamical,
            PhaseKind::Total => RowKind::Total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignRow {
    /// Purity of the state entering the phase unit (incident polarization
    /// times the target purity).
    pub r0: f64,
    pub two_xi_deg: f64,
    pub two_delta_deg: f64,
    pub kind: RowKind,
    pub phi_extracted: f64,
    pub phi_sigma: f64,
    pub phi_predicted: f64,
    pub flags: PhaseFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanRole {
    Measurement,
    /// Phase unit switched off, for I₀.
    Reference,
}

impl ScanRole {
    pub fn name(&self) -> &'static str {
        match self {
            ScanRole::Measurement => "measurement",
            ScanRole::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub kind: RowKind,
    pub role: ScanRole,
    pub r0: f64,
    pub two_xi_deg: f64,
    pub two_delta_deg: f64,
    pub scan: ScanResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyRow {
    pub r0: f64,
    pub estimate: TomographyEstimate,
    pub r0_estimated: f64,
    pub r0_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub campaign: Campaign,
    pub rows: Vec<CampaignRow>,
    /// Filled by the tomography campaign only.
    pub tomography: Vec<TomographyRow>,
    pub scans: Vec<ScanRecord>,
}

/// Phase-unit setting of one measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSetting {
    pub kind: PhaseKind,
    pub xi: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl PhaseSetting {
    /// 2ξ = π/2, ζ = δ − π/2.
    pub fn geometric(delta: f64) -> Self {
        let p = geometric_setting(delta);
        Self {
            kind: PhaseKind::Geometric,
            xi: p.xi,
            delta: p.delta,
            zeta: p.zeta,
        }
    }

    /// Second coil off; a single intensity carries the phase.
    pub fn dynamical(delta: f64) -> Self {
        let p = compose_coil_and_precession(0.0, delta);
        Self {
            kind: PhaseKind::Dynamical,
            xi: 0.0,
            delta: p.delta,
            zeta: p.zeta,
        }
    }

    /// Evolution whose pure-state phases are `(phi_g, phi_d)`.
    pub fn cumulative(phi_g: f64, phi_d: f64) -> Result<Self, ExperimentError> {
        let (xi, delta) = solve_utot(phi_g, phi_d)?;
        let p = compose_coil_and_precession(xi, delta);
        Ok(Self {
            kind: PhaseKind::Total,
            xi: p.xi,
            delta: p.delta,
            zeta: p.zeta,
        })
    }

    pub fn two_xi_deg(&self) -> f64 {
        (2.0 * self.xi).to_degrees()
    }

    pub fn two_delta_deg(&self) -> f64 {
        (2.0 * self.delta).to_degrees()
    }

    fn beamline(&self, r0: f64) -> Result<BeamlineConfig, ExperimentError> {
        BeamlineConfig::new(r0.clamp(0.0, 1.0), self.xi, self.delta, self.zeta, 0.0)
            .map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

/// One extracted phase with the scans it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub setting: PhaseSetting,
    /// Nominal purity, `incident_polarization × target`.
    pub r0: f64,
    pub phase: PhaseEstimate,
    pub predicted: f64,
    pub scans: Vec<ScanRecord>,
}

impl Measurement {
    fn row(&self) -> CampaignRow {
        CampaignRow {
            r0: self.r0,
            two_xi_deg: self.setting.two_xi_deg(),
            two_delta_deg: self.setting.two_delta_deg(),
            kind: self.setting.kind.into(),
            phi_extracted: self.phase.value,
            phi_sigma: self.phase.sigma,
            phi_predicted: self.predicted,
            flags: self.phase.flags,
        }
    }
}

/// Seed of stream `stream` under `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

/// State after the noisy first coil and its purity.
fn prepare_state(cfg: &ExperimentConfig, target: f64, seed: u64) -> Result<(DensityMatrix, Measured), ExperimentError> {
    let model = solve_noise_for_purity(target, cfg.noise_kind, seed)?;
    if cfg.exposure == 0.0 {
        let rho = exact_first_coil_state(&model, cfg.incident_polarization);
        return Ok((rho, Measured::exact(rho.purity())));
    }
    let rho_in = DensityMatrix::polarized_along_z(cfg.incident_polarization)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let ensemble = first_coil_ensemble(&model, cfg.ensemble_samples, &rho_in)?;
    Ok((ensemble.rho, Measured::new(ensemble.r0, ensemble.r0_stderr)))
}

fn extract(kind: PhaseKind, extrema: &Extrema, i_0: Measured, r0: Measured) -> Result<PhaseEstimate, ExperimentError> {
    let (s_num, s_den) = bracket_sigmas(extrema, i_0, r0.value);
    let slack = CLAMP_EPSILON + 3.0 * s_num.max(s_den);
    let mut est = extract_phase_with_slack(kind, extrema.i_max, extrema.i_min, i_0.value, r0.value, slack)?;
    let (sigma, flags) = propagate_extrema_uncertainty(extrema, i_0, r0)?;
    est.sigma = sigma;
    est.flags.endpoint |= flags.endpoint;
    est.flags.clamped |= flags.clamped;
    Ok(est)
}

fn single_point(config: &BeamlineConfig, intensity: f64, exposure: f64, seed: u64) -> (ScanResult, Measured) {
    let scan = ScanResult {
        eta_grid: vec![config.eta()],
        intensities: vec![intensity],
        counts: (exposure > 0.0).then(|| poisson_counts(&[intensity], exposure, seed)),
        exposure,
        config: *config,
    };
    let value = match &scan.counts {
        Some(c) => Measured::new(c[0] as f64 / exposure, (c[0].max(1) as f64).sqrt() / exposure),
        None => Measured::exact(intensity),
    };
    (scan, value)
}

/// Prepare, record and extract one phase. `stream` selects the seed stream.
pub fn measure_phase(
    cfg: &ExperimentConfig,
    setting: PhaseSetting,
    target_r0: f64,
    stream: u64,
) -> Result<Measurement, ExperimentError> {
    let seed = |k: u64| derive_seed(cfg.seed, 4 * stream + k);
    let (rho, r0) = prepare_state(cfg, target_r0, seed(0))?;
    let nominal = cfg.incident_polarization * target_r0;
    let config = setting.beamline(r0.value)?;
    let reference = config.reference();
    let intensity = |c: &BeamlineConfig| intensity_after_first_coil(&rho, c);

    let (extrema, i_0, scans) = if setting.kind == PhaseKind::Dynamical {
        let (scan, value) = single_point(&config, intensity(&config), cfg.exposure, seed(1));
        let (ref_scan, i_0) = single_point(&reference, intensity(&reference), cfg.exposure, seed(2));
        (Extrema::single(value.value, value.sigma), i_0, [scan, ref_scan])
    } else {
        let scan = scan_with(&config, cfg.n_points, cfg.exposure, seed(1), intensity)?;
        let ref_scan = scan_with(&reference, cfg.n_points, cfg.exposure, seed(2), intensity)?;
        let i_0 = if cfg.exposure > 0.0 {
            let fit = fit_oscillation(&ref_scan);
            Measured::new(fit.offset, fit.offset_sigma())
        } else {
            Measured::exact(intensity(&reference))
        };
        (fit_oscillation(&scan).extrema(), i_0, [scan, ref_scan])
    };

    let phase = extract(setting.kind, &extrema, i_0, r0)?;
    let predicted = predicted_phase(setting.kind, nominal, setting.delta)?.value;
    let record = |scan: ScanResult, role| ScanRecord {
        kind: setting.kind.into(),
        role,
        r0: nominal,
        two_xi_deg: setting.two_xi_deg(),
        two_delta_deg: setting.two_delta_deg(),
        scan,
    };
    let [scan, ref_scan] = scans;
    Ok(Measurement {
        setting,
        r0: nominal,
        phase,
        predicted,
        scans: vec![
            record(scan, ScanRole::Measurement),
            record(ref_scan, ScanRole::Reference),
        ],
    })
}

fn collect(campaign: Campaign, measurements: Vec<Measurement>) -> CampaignResult {
    let rows = measurements.iter().map(Measurement::row).collect();
    let scans = measurements.into_iter().flat_map(|m| m.scans).collect();
    CampaignResult {
        campaign,
        rows,
        tomography: Vec::new(),
        scans,
    }
}

fn run_grid(
    cfg: &ExperimentConfig,
    campaign: Campaign,
    purities: &[f64],
    setting: impl Fn(f64) -> PhaseSetting + Sync,
) -> Result<CampaignResult, ExperimentError> {
    let tasks: Vec<(f64, f64)> = cfg
        .deltas
        .iter()
        .flat_map(|&d| purities.iter().map(move |&r| (d, r)))
        .collect();
    let measurements = tasks
        .par_iter()
        .enumerate()
        .map(|(i, &(delta, r0))| measure_phase(cfg, setting(delta), r0, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collect(campaign, measurements))
}

/// Purely geometric phases (2ξ = π/2, ζ = δ − π/2) for every δ and purity.
/// The noiseless pure state (r₀ = 1) is always included as reference.
pub fn run_geometric_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    let mut purities = cfg.purities.clone();
    if purities.last() != Some(&1.0) {
        purities.push(1.0);
    }
    run_grid(cfg, Campaign::Geometric, &purities, PhaseSetting::geometric)
}

/// Purely dynamical phases (second coil off) for every δ and purity.
pub fn run_dynamical_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    run_grid(cfg, Campaign::Dynamical, &cfg.purities, PhaseSetting::dynamical)
}

/// For each (φ_g, φ_d) setting and purity: Φ_tot from the cumulative
/// evolution, Φ_g and Φ_d from separate evolutions, their sum and the gap
/// Φ_tot − (Φ_g + Φ_d), each against its theory curve.
pub fn run_nonadditivity_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    let tasks: Vec<((f64, f64), f64)> = cfg
        .utot_settings
        .iter()
        .flat_map(|&s| cfg.purities.iter().map(move |&r| (s, r)))
        .collect();
    let groups = tasks
        .par_iter()
        .enumerate()
        .map(|(i, &((phi_g, phi_d), r0))| {
            let stream = 3 * i as u64;
            let total = measure_phase(cfg, PhaseSetting::cumulative(phi_g, phi_d)?, r0, stream)?;
            let geo = measure_phase(cfg, PhaseSetting::geometric(phi_g), r0, stream + 1)?;
            let dyn_ = measure_phase(cfg, PhaseSetting::dynamical(phi_d), r0, stream + 2)?;
            let nominal = total.r0;
            let base = total.row();
            let sum_sigma = geo.phase.sigma.hypot(dyn_.phase.sigma);
            let sum = CampaignRow {
                kind: RowKind::Sum,
                phi_extracted: geo.phase.value + dyn_.phase.value,
                phi_sigma: sum_sigma,
                phi_predicted: additive_prediction(nominal, phi_g, phi_d)?,
                flags: PhaseFlags::default(),
                ..base
            };
            let gap = CampaignRow {
                kind: RowKind::Gap,
                phi_extracted: total.phase.value - sum.phi_extracted,
                phi_sigma: total.phase.sigma.hypot(sum_sigma),
                phi_predicted: nonadditivity_gap(nominal, phi_g, phi_d)?,
                flags: PhaseFlags::default(),
                ..base
            };
            let total_row = CampaignRow {
                phi_predicted: cumulative_prediction(nominal, phi_g, phi_d)?,
                ..base
            };
            let rows = vec![total_row, geo.row(), dyn_.row(), sum, gap];
            let scans: Vec<ScanRecord> = [total, geo, dyn_].into_iter().flat_map(|m| m.scans).collect();
            Ok((rows, scans))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut result = CampaignResult {
        campaign: Campaign::Nonadditivity,
        rows: Vec::new(),
        tomography: Vec::new(),
        scans: Vec::new(),
    };
    for (rows, scans) in groups {
        result.rows.extend(rows);
        result.scans.extend(scans);
    }
    Ok(result)
}

/// Three-axis spin analysis of the state after the noisy first coil.
pub fn run_tomography_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    let scale = if cfg.exposure > 0.0 {
        cfg.exposure
    } else {
        f64::INFINITY
    };
    let tomography = cfg
        .purities
        .par_iter()
        .enumerate()
        .map(|(i, &target)| {
            let (rho, _) = prepare_state(cfg, target, derive_seed(cfg.seed, 4 * i as u64))?;
            let estimate = bloch_tomography(&rho, scale, derive_seed(cfg.seed, 4 * i as u64 + 1))?;
            Ok(TomographyRow {
                r0: cfg.incident_polarization * target,
                estimate,
                r0_estimated: estimate.magnitude(),
                r0_sigma: estimate.magnitude_sigma(),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(CampaignResult {
        campaign: Campaign::Tomography,
        rows: Vec::new(),
        tomography,
        scans: Vec::new(),
    })
}

/// One η-scan at the first purity and δ of `cfg`, with the configured ξ and
/// ζ (default δ − π/2).
pub fn run_single_scan(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    let delta = cfg.deltas[0];
    let setting = PhaseSetting {
        kind: PhaseKind::Total,
        xi: cfg.xi,
        delta,
        zeta: cfg.zeta.unwrap_or(delta - FRAC_PI_2),
    };
    let m = measure_phase(cfg, setting, cfg.purities[0], 0)?;
    Ok(collect(Campaign::Scan, vec![m]))
}

pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    match cfg.campaign {
        Campaign::Geometric => run_geometric_campaign(cfg),
        Campaign::Dynamical => run_dynamical_campaign(cfg),
        Campaign::Nonadditivity => run_nonadditivity_campaign(cfg),
        Campaign::Tomography => run_tomography_campaign(cfg),
        Campaign::Scan => run_single_scan(cfg),
    }
}
