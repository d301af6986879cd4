//! Linear least-squares fit of an η-scan to `I(η) = a + c·cos 2η + s·sin 2η`.
//!
//! The intensity is affine in `cos²(ζ − η) = ½(1 + cos 2(ζ − η))`, so this
//! three-term basis represents it exactly and the fit reduces to a 3×3 normal
//! system.

use nalgebra::{Matrix3, Vector3};

use super::scan::ScanResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationFit {
    /// `a`
    pub offset: f64,
    /// `b = √(c² + s²)`
    pub amplitude: f64,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
    /// η at which the fitted fringe peaks, in (−π/2, π/2].
    pub phase_origin: f64,
    pub i_max: f64,
    pub i_min: f64,
    pub residual_rms: f64,
    /// Covariance of `(a, c, s)`.
    pub covariance: [[f64; 3]; 3],
    /// Set when the normal equations were singular; the fit then carries the
    /// weighted mean only.
    pub degenerate: bool,
}

/// Fitted extrema with their 2×2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub i_max: f64,
    pub i_min: f64,
    /// Covariance of `(i_max, i_min)`.
    pub covariance: [[f64; 2]; 2],
}

impl Extrema {
    /// A single η-independent intensity (both extrema coincide).
    pub fn single(value: f64, sigma: f64) -> Self {
        let v = sigma * sigma;
        Self {
            i_max: value,
            i_min: value,
            covariance: [[v, v], [v, v]],
        }
    }

    pub fn exact(i_max: f64, i_min: f64) -> Self {
        Self {
            i_max,
            i_min,
            covariance: [[0.0; 2]; 2],
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    pub fn sigma_min(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }
}

impl OscillationFit {
    pub fn offset_sigma(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    /// `(i_max, i_min)` with first-order covariance propagated from `(a, c, s)`.
    pub fn extrema(&self) -> Extrema {
        let (dc, ds) = if self.amplitude > 0.0 {
            (self.cos_coeff / self.amplitude, self.sin_coeff / self.amplitude)
        } else {
            (0.0, 0.0)
        };
        let g_max = [1.0, dc, ds];
        let g_min = [1.0, -dc, -ds];
        let quad = |g: &[f64; 3], h: &[f64; 3]| {
            (0..3)
                .map(|i| (0..3).map(|j| g[i] * self.covariance[i][j] * h[j]).sum::<f64>())
                .sum::<f64>()
        };
        let mm = quad(&g_max, &g_max);
        let nn = quad(&g_min, &g_min);
        let mn = quad(&g_max, &g_min);
        Extrema {
            i_max: self.i_max,
            i_min: self.i_min,
            covariance: [[mm, mn], [mn, nn]],
        }
    }

    /// Fitted intensity at η.
    pub fn evaluate(&self, eta: f64) -> f64 {
        self.offset + self.cos_coeff * (2.0 * eta).cos() + self.sin_coeff * (2.0 * eta).sin()
    }
}

/// Weighted least squares on counts (weights `1/max(N, 1)`), ordinary least
/// squares on expected intensities.
///
/// With counts the covariance follows from the Poisson variances; without,
/// it is the residual variance times `(XᵀX)⁻¹`.
pub fn fit_oscillation(scan: &ScanResult) -> OscillationFit {
    let y = scan.observed();
    let weights: Vec<f64> = match &scan.counts {
        Some(c) => c
            .iter()
            .map(|&n| scan.exposure * scan.exposure / (n.max(1) as f64))
            .collect(),
        None => vec![1.0; y.len()],
    };

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for ((&eta, &yi), &w) in scan.eta_grid.iter().zip(&y).zip(&weights) {
        let x = Vector3::new(1.0, (2.0 * eta).cos(), (2.0 * eta).sin());
        normal += w * x * x.transpose();
        rhs += w * yi * x;
    }

    let inverse = normal.try_inverse().filter(|inv| inv.iter().all(|v| v.is_finite()));
    let (coeffs, inverse, degenerate) = match inverse {
        Some(inv) if normal.determinant().abs() > 1e-12 * normal.norm().powi(3) => (inv * rhs, inv, false),
        _ => {
            let wsum: f64 = weights.iter().sum();
            let mean = y.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
            let mut inv = Matrix3::zeros();
            inv[(0, 0)] = 1.0 / wsum;
            (Vector3::new(mean, 0.0, 0.0), inv, true)
        }
    };

    let (a, c, s) = (coeffs[0], coeffs[1], coeffs[2]);
    let n = y.len();
    let rss: f64 = scan
        .eta_grid
        .iter()
        .zip(&y)
        .map(|(&eta, &yi)| {
            let r = yi - (a + c * (2.0 * eta).cos() + s * (2.0 * eta).sin());
            r * r
        })
        .sum();
    let residual_rms = (rss / n as f64).sqrt();

    let cov = if scan.counts.is_some() {
        inverse
    } else {
        let dof = n.saturating_sub(if degenerate { 1 } else { 3 }).max(1);
        inverse * (rss / dof as f64)
    };
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }

    let amplitude = c.hypot(s);
    let phase_origin = if amplitude > 0.0 { 0.5 * s.atan2(c) } else { 0.0 };
    OscillationFit {
        offset: a,
        amplitude,
        cos_coeff: c,
        sin_coeff: s,
        phase_origin,
        i_max: a + amplitude,
        i_min: a - amplitude,
        residual_rms,
        covariance,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamline::{geometric_setting, BeamlineConfig};
    use crate::phase::scan::scan_eta;
    use std::f64::consts::FRAC_PI_8;

    fn geometric(r: f64) -> BeamlineConfig {
        let p = geometric_setting(FRAC_PI_8);
        BeamlineConfig::new(r, p.xi, p.delta, p.zeta, 0.0).unwrap()
    }

    #[test]
    fn exact_recovery_of_noiseless_extrema() {
        let fit = fit_oscillation(&scan_eta(&geometric(1.0), 36, 0.0, 0).unwrap());
        assert!((fit.i_max - 0.926_776_695_296_636_9).abs() < 1e-10);
        assert!((fit.i_min - 0.426_776_695_296_636_9).abs() < 1e-10);
        assert!(fit.residual_rms < 1e-12);
        assert!(!fit.degenerate);
        // Peak at η ≡ ζ (mod π).
        let zeta = FRAC_PI_8 - std::f64::consts::FRAC_PI_2;
        assert!((fit.phase_origin - zeta).abs() < 1e-10);
    }

    #[test]
    fn recovery_on_odd_grid() {
        let fit = fit_oscillation(&scan_eta(&geometric(0.5), 7, 0.0, 0).unwrap());
        assert!((fit.i_max - 0.713_388_347_648_318_4).abs() < 1e-10);
        assert!((fit.i_min - 0.463_388_347_648_318_4).abs() < 1e-10);
    }

    #[test]
    fn flat_scan_has_zero_amplitude() {
        let c = BeamlineConfig::new(0.5, 0.0, FRAC_PI_8, 0.0, 0.0).unwrap();
        let fit = fit_oscillation(&scan_eta(&c, 36, 0.0, 0).unwrap());
        assert!((fit.offset - 0.676_776_695_296_636_9).abs() < 1e-12);
        assert!(fit.amplitude < 1e-12);
    }

    #[test]
    fn degenerate_grid_is_flagged() {
        let mut scan = scan_eta(&geometric(1.0), 36, 0.0, 0).unwrap();
        scan.eta_grid = vec![0.3; 36];
        let fit = fit_oscillation(&scan);
        assert!(fit.degenerate);
        assert_eq!(fit.amplitude, 0.0);
    }

    #[test]
    fn single_extrema_are_fully_correlated() {
        let e = Extrema::single(0.6, 0.01);
        assert_eq!(e.covariance, [[1e-4, 1e-4], [1e-4, 1e-4]]);
        assert_eq!(e.sigma_max(), 0.01);
    }
}
