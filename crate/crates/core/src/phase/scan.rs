//! η-scans: intensity versus second-coil position.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::PhaseError;
use crate::beamline::{intensity_closed_form, BeamlineConfig};

/// Smallest grid that still samples two full periods of the π-periodic fringe.
pub const MIN_SCAN_POINTS: usize = 7;

/// Default η grid: 36 points, 10° steps.
pub const DEFAULT_SCAN_POINTS: usize = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub eta_grid: Vec<f64>,
    /// Expected detection probabilities.
    pub intensities: Vec<f64>,
    /// Poisson counts, present when `exposure > 0`.
    pub counts: Option<Vec<u64>>,
    /// Expected counts at unit intensity.
    pub exposure: f64,
    /// Scan geometry; its η is replaced point by point from `eta_grid`.
    pub config: BeamlineConfig,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.eta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_grid.is_empty()
    }

    /// Observed intensities: counts divided by exposure when counted,
    /// expected intensities otherwise.
    pub fn observed(&self) -> Vec<f64> {
        match &self.counts {
            Some(c) => c.iter().map(|&n| n as f64 / self.exposure).collect(),
            None => self.intensities.clone(),
        }
    }
}

/// `n` equally spaced values on `[0, 2π)`.
pub fn uniform_eta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Draw Poisson counts for each expected intensity.
pub fn poisson_counts(intensities: &[f64], exposure: f64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    intensities
        .iter()
        .map(|&p| {
            let mean = exposure * p.max(0.0);
            if mean > 0.0 {
                Poisson::new(mean).expect("finite positive mean").sample(&mut rng) as u64
            } else {
                0
            }
        })
        .collect()
}

/// Scan with the closed-form intensity of `config`.
pub fn scan_eta(config: &BeamlineConfig, n_points: usize, exposure: f64, seed: u64) -> Result<ScanResult, PhaseError> {
    scan_with(config, n_points, exposure, seed, intensity_closed_form)
}

/// Scan with an arbitrary intensity model evaluated at each η.
pub fn scan_with<F>(
    config: &BeamlineConfig,
    n_points: usize,
    exposure: f64,
    seed: u64,
    intensity: F,
) -> Result<ScanResult, PhaseError>
where
    F: Fn(&BeamlineConfig) -> f64,
{
    if n_points < MIN_SCAN_POINTS {
        return Err(PhaseError::UnderSampled(n_points));
    }
    if !(exposure.is_finite() && exposure >= 0.0) {
        return Err(PhaseError::InvalidExposure(exposure));
    }
    let eta_grid = uniform_eta_grid(n_points);
    let intensities: Vec<f64> = eta_grid
        .iter()
        .map(|&eta| {
            let c = config.with_eta(eta).expect("grid angles are finite");
            intensity(&c).clamp(0.0, 1.0)
        })
        .collect();
    let counts = (exposure > 0.0).then(|| poisson_counts(&intensities, exposure, seed));
    Ok(ScanResult {
        eta_grid,
        intensities,
        counts,
        exposure,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamline::geometric_setting;
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn rejects_short_grids() {
        let c = BeamlineConfig::new(1.0, 0.3, 0.2, 0.0, 0.0).unwrap();
        assert_eq!(scan_eta(&c, 6, 0.0, 0), Err(PhaseError::UnderSampled(6)));
        assert!(scan_eta(&c, 7, 0.0, 0).is_ok());
        assert!(scan_eta(&c, 36, -1.0, 0).is_err());
    }

    #[test]
    fn geometric_scan_extrema() {
        let p = geometric_setting(FRAC_PI_8);
        let c = BeamlineConfig::new(1.0, p.xi, p.delta, p.zeta, 0.0).unwrap();
        // Extrema sit at η ≡ ζ (mod π/2) = π/8 (mod π/2), which a π/8 grid contains.
        let s = scan_eta(&c, 16, 0.0, 0).unwrap();
        let max = s.intensities.iter().cloned().fold(f64::MIN, f64::max);
        let min = s.intensities.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - 0.926_776_695_296_636_9).abs() < 1e-12);
        assert!((min - 0.426_776_695_296_636_9).abs() < 1e-12);
        assert!(s.counts.is_none());
    }

    #[test]
    fn flat_scans() {
        let c = BeamlineConfig::new(0.7, 0.0, 0.4, 0.0, 0.0).unwrap();
        let s = scan_eta(&c, 36, 0.0, 0).unwrap();
        assert!(s.intensities.iter().all(|v| (v - s.intensities[0]).abs() < 1e-14));
        let c = BeamlineConfig::new(0.0, 0.6, 0.4, 0.2, 0.0).unwrap();
        let s = scan_eta(&c, 36, 0.0, 0).unwrap();
        assert!(s.intensities.iter().all(|v| (v - 0.5).abs() < 1e-14));
    }

    #[test]
    fn counts_are_seeded() {
        let c = BeamlineConfig::new(0.7, 0.5, 0.4, 0.0, 0.0).unwrap();
        let a = scan_eta(&c, 36, 1e4, 5).unwrap();
        let b = scan_eta(&c, 36, 1e4, 5).unwrap();
        let d = scan_eta(&c, 36, 1e4, 6).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_ne!(a.counts, d.counts);
    }
}
