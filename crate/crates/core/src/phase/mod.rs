//! Mixed-state phases from intensity extrema, their theoretical values, and
//! the pure-state geometric/dynamical split.
//!
//! For incident purity r the interferometric mixed-state phase of the
//! phase unit is `Φ = arctan(r tan δ)`. It is measured from the η-fringe
//! extrema as
//!
//! ```text
//! x = I_min / I_n,   y = I_max / I_n,   I_n = 2 I₀ / (1 + r)
//! N = (x − (1 − r)/2) / r
//! D = r ((1 + r)/2 − y)
//! Φ = arccos √(N / (N + D))
//! ```
//!
//! where I₀ is the intensity with the phase unit switched off.

pub mod fit;
pub mod scan;
pub mod solid_angle;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use thiserror::Error;

pub use fit::{fit_oscillation, Extrema, OscillationFit};
pub use scan::{scan_eta, scan_with, uniform_eta_grid, ScanResult, DEFAULT_SCAN_POINTS, MIN_SCAN_POINTS};
pub use solid_angle::solid_angle_geometric_phase;

/// Slack allowed on the bracket terms of the extraction before clamping
/// turns into an error.
pub const CLAMP_EPSILON: f64 = 1e-9;

/// Below this `q(1 − q)` the arccos derivative is treated as singular.
const ENDPOINT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseError {
    #[error("η-scan needs at least {min} points, got {0}", min = MIN_SCAN_POINTS)]
    UnderSampled(usize),
    #[error("exposure must be finite and non-negative, got {0}")]
    InvalidExposure(f64),
    #[error("purity {0} leaves the phase undefined (must lie in (0, 1])")]
    UndefinedPurity(f64),
    #[error("reference intensity must be positive, got {0}")]
    InvalidReference(f64),
    #[error("intensity extrema inconsistent with the purity: {0}")]
    Inconsistent(String),
    #[error("tan δ has a pole at δ = {0}")]
    Pole(f64),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    OutOfDomain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseKind {
    Geometric,
    Dynamical,
    Total,
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseKind::Geometric => "geometric",
            PhaseKind::Dynamical => "dynamical",
            PhaseKind::Total => "total",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseFlags {
    /// A bracket term was slightly negative and clamped to zero.
    pub clamped: bool,
    /// δ sits on the tan pole.
    pub pole: bool,
    /// Φ at 0 or π/2 where the linearized uncertainty diverges.
    pub endpoint: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub value: f64,
    pub sigma: f64,
    pub kind: PhaseKind,
    pub flags: PhaseFlags,
}

/// A measured scalar with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// Intermediate terms of the extraction, exposed for uncertainty propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Brackets {
    numerator: f64,
    denominator_term: f64,
}

fn brackets(i_max: f64, i_min: f64, i_0: f64, r0: f64) -> Brackets {
    let i_n = 2.0 * i_0 / (1.0 + r0);
    let x = i_min / i_n;
    let y = i_max / i_n;
    Brackets {
        numerator: (x - 0.5 * (1.0 - r0)) / r0,
        denominator_term: r0 * (0.5 * (1.0 + r0) - y),
    }
}

fn check_inputs(i_max: f64, i_min: f64, i_0: f64, r0: f64) -> Result<(), PhaseError> {
    if !(i_max.is_finite() && i_min.is_finite() && i_0.is_finite() && r0.is_finite()) {
        return Err(PhaseError::NonFinite("extraction inputs"));
    }
    if r0 <= 0.0 || r0 > 1.0 {
        return Err(PhaseError::UndefinedPurity(r0));
    }
    if i_0 <= 0.0 {
        return Err(PhaseError::InvalidReference(i_0));
    }
    Ok(())
}

/// Clamped bracket terms `(N, D)`; terms in `[−slack, 0)` become zero.
fn clamped_brackets(i_max: f64, i_min: f64, i_0: f64, r0: f64, slack: f64) -> Result<(f64, f64, bool), PhaseError> {
    check_inputs(i_max, i_min, i_0, r0)?;
    let Brackets {
        mut numerator,
        mut denominator_term,
    } = brackets(i_max, i_min, i_0, r0);
    let mut clamped = false;
    for (name, term) in [("I_min", &mut numerator), ("I_max", &mut denominator_term)] {
        if *term < 0.0 {
            if *term < -slack {
                return Err(PhaseError::Inconsistent(format!(
                    "{name} bracket {term:e} below tolerance −{slack:e}"
                )));
            }
            *term = 0.0;
            clamped = true;
        }
    }
    if numerator + denominator_term <= 0.0 {
        return Err(PhaseError::Inconsistent("extrema carry no phase information".into()));
    }
    Ok((numerator, denominator_term, clamped))
}

/// Mixed-state phase from the fringe extrema, in `[0, π/2]`, with the default
/// clamp slack [`CLAMP_EPSILON`].
///
/// For the purely dynamical case pass the single measured intensity as both
/// `i_max` and `i_min`.
pub fn extract_phase_eq2(
    kind: PhaseKind,
    i_max: f64,
    i_min: f64,
    i_0: f64,
    r0: f64,
) -> Result<PhaseEstimate, PhaseError> {
    extract_phase_with_slack(kind, i_max, i_min, i_0, r0, CLAMP_EPSILON)
}

/// As [`extract_phase_eq2`] with an explicit slack, usually
/// `CLAMP_EPSILON + 3σ` of the bracket terms for counted data.
pub fn extract_phase_with_slack(
    kind: PhaseKind,
    i_max: f64,
    i_min: f64,
    i_0: f64,
    r0: f64,
    slack: f64,
) -> Result<PhaseEstimate, PhaseError> {
    let (num, den, clamped) = clamped_brackets(i_max, i_min, i_0, r0, slack)?;
    // arccos √(N/(N+D)) written as atan2 to stay well conditioned near 0 and π/2.
    let value = den.sqrt().atan2(num.sqrt());
    let q = num / (num + den);
    Ok(PhaseEstimate {
        value,
        sigma: 0.0,
        kind,
        flags: PhaseFlags {
            clamped,
            endpoint: q * (1.0 - q) < ENDPOINT_EPSILON,
            ..PhaseFlags::default()
        },
    })
}

/// Standard errors of the two bracket terms, for choosing the clamp slack.
pub fn bracket_sigmas(extrema: &Extrema, i_0: Measured, r0: f64) -> (f64, f64) {
    let i_n = 2.0 * i_0.value / (1.0 + r0);
    let x = extrema.i_min / i_n;
    let y = extrema.i_max / i_n;
    let rel_n = i_0.sigma / i_0.value;
    let sx = ((extrema.sigma_min() / i_n).powi(2) + (x * rel_n).powi(2)).sqrt();
    let sy = ((extrema.sigma_max() / i_n).powi(2) + (y * rel_n).powi(2)).sqrt();
    (sx / r0, r0 * sy)
}

/// `Φ = arctan(r₀ tan δ)`.
///
/// At the pole `cos δ = 0` the phase is π/2 for every `r₀ > 0`; that value is
/// returned with `flags.pole` set, and `r₀ = 0` there is an error.
pub fn predicted_phase(kind: PhaseKind, r0: f64, delta: f64) -> Result<PhaseEstimate, PhaseError> {
    if !(r0.is_finite() && delta.is_finite()) {
        return Err(PhaseError::NonFinite("prediction inputs"));
    }
    if !(0.0..=1.0).contains(&r0) {
        return Err(PhaseError::UndefinedPurity(r0));
    }
    let mut flags = PhaseFlags::default();
    let value = if delta.cos().abs() < 1e-12 {
        if r0 == 0.0 {
            return Err(PhaseError::Pole(delta));
        }
        flags.pole = true;
        FRAC_PI_2.copysign(delta.sin())
    } else {
        (r0 * delta.tan()).atan()
    };
    Ok(PhaseEstimate {
        value,
        sigma: 0.0,
        kind,
        flags,
    })
}

/// `Φ(φ_g + φ_d)` for a single cumulative evolution.
pub fn cumulative_prediction(r0: f64, phi_g: f64, phi_d: f64) -> Result<f64, PhaseError> {
    Ok(predicted_phase(PhaseKind::Total, r0, phi_g + phi_d)?.value)
}

/// `Φ(φ_g) + Φ(φ_d)` from two separate evolutions.
pub fn additive_prediction(r0: f64, phi_g: f64, phi_d: f64) -> Result<f64, PhaseError> {
    Ok(predicted_phase(PhaseKind::Geometric, r0, phi_g)?.value
        + predicted_phase(PhaseKind::Dynamical, r0, phi_d)?.value)
}

/// `Φ(φ_g + φ_d) − [Φ(φ_g) + Φ(φ_d)]`, zero only for pure (or fully mixed) states.
pub fn nonadditivity_gap(r0: f64, phi_g: f64, phi_d: f64) -> Result<f64, PhaseError> {
    Ok(cumulative_prediction(r0, phi_g, phi_d)? - additive_prediction(r0, phi_g, phi_d)?)
}

/// Pure-state geometric phase `δ(1 − cos 2ξ)`.
pub fn geometric_phase(xi: f64, delta: f64) -> f64 {
    delta - dynamical_phase(xi, delta)
}

/// Pure-state dynamical phase `δ cos 2ξ`.
pub fn dynamical_phase(xi: f64, delta: f64) -> f64 {
    delta * (2.0 * xi).cos()
}

/// (ξ, δ) whose pure-state phases are `(phi_g, phi_d)`:
/// `δ = φ_g + φ_d`, `cos 2ξ = φ_d / δ`.
pub fn solve_utot(phi_g: f64, phi_d: f64) -> Result<(f64, f64), PhaseError> {
    if !(phi_g.is_finite() && phi_d.is_finite()) {
        return Err(PhaseError::NonFinite("target phases"));
    }
    if phi_g < 0.0 || phi_d < 0.0 {
        return Err(PhaseError::OutOfDomain("target phases must be non-negative"));
    }
    let delta = phi_g + phi_d;
    if delta == 0.0 {
        return Err(PhaseError::OutOfDomain(
            "zero total phase leaves the evolution undetermined",
        ));
    }
    let xi = 0.5 * (phi_d / delta).clamp(-1.0, 1.0).acos();
    Ok((xi, delta))
}

/// Fringe visibility `|cos ξ|` of the pure-state configuration.
pub fn visibility(xi: f64) -> f64 {
    xi.cos().abs()
}

/// Standard error of the extracted phase.
///
/// First-order propagation of the fit covariance, the reference-intensity
/// error and the purity error through the extraction. Where Φ sits at 0 or
/// π/2 the derivative diverges; the returned sigma is then the half-width of
/// the image of `q ± σ_q` and `flags.endpoint` is set.
pub fn propagate_uncertainty(
    fit: &OscillationFit,
    i_0: Measured,
    r0: Measured,
) -> Result<(f64, PhaseFlags), PhaseError> {
    propagate_extrema_uncertainty(&fit.extrema(), i_0, r0)
}

/// [`propagate_uncertainty`] for extrema from any source.
pub fn propagate_extrema_uncertainty(
    extrema: &Extrema,
    i_0: Measured,
    r0: Measured,
) -> Result<(f64, PhaseFlags), PhaseError> {
    let (i_max, i_min, i0, r) = (extrema.i_max, extrema.i_min, i_0.value, r0.value);
    check_inputs(i_max, i_min, i0, r)?;

    let i_n = 2.0 * i0 / (1.0 + r);
    let x = i_min / i_n;
    let y = i_max / i_n;
    let b = brackets(i_max, i_min, i0, r);
    let (num, den) = (b.numerator.max(0.0), b.denominator_term.max(0.0));
    let total = num + den;
    if total <= 0.0 {
        return Err(PhaseError::Inconsistent("extrema carry no phase information".into()));
    }
    let q = num / total;
    let dq_dnum = den / (total * total);
    let dq_dden = -num / (total * total);

    // Partials of N and D with respect to (I_max, I_min, I₀, r).
    let dx = [0.0, (1.0 + r) / (2.0 * i0), -x / i0, i_min / (2.0 * i0)];
    let dy = [(1.0 + r) / (2.0 * i0), 0.0, -y / i0, i_max / (2.0 * i0)];
    let dn: Vec<f64> = (0..4)
        .map(|k| dx[k] / r + if k == 3 { (0.5 - x) / (r * r) } else { 0.0 })
        .collect();
    let dd: Vec<f64> = (0..4)
        .map(|k| -r * dy[k] + if k == 3 { 0.5 + r - y } else { 0.0 })
        .collect();
    let grad_q: Vec<f64> = (0..4).map(|k| dq_dnum * dn[k] + dq_dden * dd[k]).collect();

    let c = &extrema.covariance;
    let var_q = grad_q[0] * grad_q[0] * c[0][0]
        + 2.0 * grad_q[0] * grad_q[1] * c[0][1]
        + grad_q[1] * grad_q[1] * c[1][1]
        + (grad_q[2] * i_0.sigma).powi(2)
        + (grad_q[3] * r0.sigma).powi(2);
    let sigma_q = var_q.max(0.0).sqrt();

    let phi = |q: f64| q.clamp(0.0, 1.0).sqrt().acos();
    let mut flags = PhaseFlags::default();
    let sigma = if q * (1.0 - q) < ENDPOINT_EPSILON {
        flags.endpoint = true;
        (phi(q - sigma_q) - phi(q)).abs().max((phi(q + sigma_q) - phi(q)).abs())
    } else {
        sigma_q / (2.0 * (q * (1.0 - q)).sqrt())
    };
    Ok((sigma, flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    /// Extrema of the closed-form intensity over η.
    fn extrema(r: f64, xi: f64, delta: f64) -> (f64, f64) {
        let base = 0.5 * (1.0 - r) + r * xi.cos().powi(2) * delta.cos().powi(2);
        (base + r * xi.sin().powi(2), base)
    }

    #[test]
    fn pure_state_extraction_returns_delta() {
        let (max, min) = extrema(1.0, FRAC_PI_4, FRAC_PI_8);
        let phi = extract_phase_eq2(PhaseKind::Geometric, max, min, 1.0, 1.0).unwrap();
        assert!((phi.value - FRAC_PI_8).abs() < 1e-12);
    }

    #[test]
    fn half_purity_extraction() {
        let phi = extract_phase_eq2(
            PhaseKind::Geometric,
            0.713_388_347_648_318_4,
            0.463_388_347_648_318_4,
            0.75,
            0.5,
        )
        .unwrap();
        let expected = (0.5 * FRAC_PI_8.tan()).atan();
        assert!((phi.value - expected).abs() < 1e-12);
        assert!((phi.value - 0.204_219_570_928_118_93).abs() < 1e-12, "{}", phi.value);
    }

    #[test]
    fn zero_delta_gives_zero_phase() {
        let (max, min) = extrema(0.6, 0.0, 0.0);
        assert_eq!(max, min);
        let phi = extract_phase_eq2(PhaseKind::Dynamical, max, min, 0.8, 0.6).unwrap();
        assert_eq!(phi.value, 0.0);
    }

    #[test]
    fn extraction_errors() {
        assert_eq!(
            extract_phase_eq2(PhaseKind::Total, 0.7, 0.5, 0.6, 0.0),
            Err(PhaseError::UndefinedPurity(0.0))
        );
        assert!(matches!(
            extract_phase_eq2(PhaseKind::Total, 0.7, 0.5, 0.0, 0.5),
            Err(PhaseError::InvalidReference(_))
        ));
        // I_min far below (1 − r)/2.
        assert!(matches!(
            extract_phase_eq2(PhaseKind::Total, 0.7, 0.1, 0.75, 0.5),
            Err(PhaseError::Inconsistent(_))
        ));
    }

    #[test]
    fn small_negative_brackets_are_clamped() {
        // Pure state at δ = π/2: I_min = 0 exactly; nudge it below zero.
        let phi = extract_phase_eq2(PhaseKind::Geometric, 0.5, -5e-10, 1.0, 1.0).unwrap();
        assert!(phi.flags.clamped);
        assert!((phi.value - FRAC_PI_2).abs() < 1e-12);
        let phi = extract_phase_with_slack(PhaseKind::Geometric, 0.5, -1e-4, 1.0, 1.0, 1e-3).unwrap();
        assert!(phi.flags.clamped && phi.flags.endpoint);
    }

    #[test]
    fn prediction_examples() {
        let p = predicted_phase(PhaseKind::Total, 1.0, 3.0 * FRAC_PI_8).unwrap();
        assert!((p.value - 3.0 * FRAC_PI_8).abs() < 1e-15);
        let p = predicted_phase(PhaseKind::Total, 0.5, 3.0 * FRAC_PI_8).unwrap();
        assert!((p.value - (0.5 * (1.0 + 2f64.sqrt())).atan()).abs() < 1e-15);
        assert!((p.value - 0.878_960_513_151_671_6).abs() < 1e-12);
        assert_eq!(predicted_phase(PhaseKind::Total, 0.0, FRAC_PI_8).unwrap().value, 0.0);
        let p = predicted_phase(PhaseKind::Total, 0.3, FRAC_PI_2).unwrap();
        assert!(p.flags.pole && p.value == FRAC_PI_2);
        assert!(matches!(
            predicted_phase(PhaseKind::Total, 0.0, FRAC_PI_2),
            Err(PhaseError::Pole(_))
        ));
    }

    #[test]
    fn pure_phase_split() {
        assert!((geometric_phase(FRAC_PI_4, 0.3) - 0.3).abs() < 1e-15);
        assert!(dynamical_phase(FRAC_PI_4, 0.3).abs() < 1e-15);
        assert_eq!(geometric_phase(0.0, 0.3), 0.0);
        assert_eq!(dynamical_phase(0.0, 0.3), 0.3);
        let (g, d) = (
            geometric_phase(PI / 6.0, FRAC_PI_4),
            dynamical_phase(PI / 6.0, FRAC_PI_4),
        );
        assert!((g - FRAC_PI_8).abs() < 1e-15 && (d - FRAC_PI_8).abs() < 1e-15);
    }

    #[test]
    fn utot_settings() {
        let (xi, delta) = solve_utot(FRAC_PI_8, FRAC_PI_8).unwrap();
        assert!((2.0 * delta - FRAC_PI_2).abs() < 1e-15);
        assert!((2.0 * xi - PI / 3.0).abs() < 1e-15);

        let (xi, delta) = solve_utot(FRAC_PI_8, FRAC_PI_4).unwrap();
        assert!((2.0 * delta - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert!((2.0 * xi - (2.0f64 / 3.0).acos()).abs() < 1e-15);
        assert!(((2.0 * xi).to_degrees() - 48.189_685_104_221_4).abs() < 1e-9);

        let (xi, delta) = solve_utot(0.7, 0.0).unwrap();
        assert!((2.0 * xi - FRAC_PI_2).abs() < 1e-15 && delta == 0.7);

        assert!(solve_utot(0.0, 0.0).is_err());
        assert!(solve_utot(-0.1, 0.2).is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(0.0), 1.0);
        assert!((visibility(FRAC_PI_4) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn zero_covariance_gives_zero_sigma() {
        let (max, min) = extrema(0.6, FRAC_PI_4, FRAC_PI_8);
        let (sigma, flags) =
            propagate_extrema_uncertainty(&Extrema::exact(max, min), Measured::exact(0.8), Measured::exact(0.6))
                .unwrap();
        assert_eq!(sigma, 0.0);
        assert!(!flags.endpoint);
    }

    #[test]
    fn propagated_sigma_matches_finite_differences() {
        let (r, xi, delta) = (0.6, FRAC_PI_4, 0.5);
        let (max, min) = extrema(r, xi, delta);
        let i0 = (1.0 + r) / 2.0;
        let phi = |a: f64, b: f64, c: f64, d: f64| extract_phase_eq2(PhaseKind::Total, a, b, c, d).unwrap().value;
        let h = 1e-6;
        let sig = [0.003, 0.002, 0.004, 0.01];
        let base = [max, min, i0, r];
        let mut var = 0.0;
        for k in 0..4 {
            let mut up = base;
            let mut dn = base;
            up[k] += h;
            dn[k] -= h;
            let g = (phi(up[0], up[1], up[2], up[3]) - phi(dn[0], dn[1], dn[2], dn[3])) / (2.0 * h);
            var += (g * sig[k]).powi(2);
        }
        let extrema = Extrema {
            i_max: max,
            i_min: min,
            covariance: [[sig[0] * sig[0], 0.0], [0.0, sig[1] * sig[1]]],
        };
        let (sigma, _) =
            propagate_extrema_uncertainty(&extrema, Measured::new(i0, sig[2]), Measured::new(r, sig[3])).unwrap();
        assert!(
            (sigma - var.sqrt()).abs() < 1e-6 * var.sqrt(),
            "{sigma} vs {}",
            var.sqrt()
        );
    }

    #[test]
    fn endpoint_sigma_is_flagged() {
        let (sigma, flags) =
            propagate_extrema_uncertainty(&Extrema::single(0.6, 0.01), Measured::exact(0.6), Measured::exact(0.2))
                .unwrap();
        assert!(flags.endpoint);
        assert!(sigma > 0.0 && sigma.is_finite());
    }
}
