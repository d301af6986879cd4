//! The five-element polarimeter: first coil, η-shift, phase unit, reverse
//! η-shift, third coil, followed by a `|+⟩` analyzer.
//!
//! The full evolution is
//!
//! ```text
//! V = U₁† · U_η · U_φ · U_η† · U₁,    U₁ = U(π/4, 0, −π/2),  U_η = U(0, η/2),  U_φ = U(ξ, δ, ζ)
//! ```
//!
//! and the detected intensity is `⟨+|V ρ_in V†|+⟩` with `ρ_in = ½(𝟙 + r₀′σ_z)`.
//! Translating the second coil moves η; with the η-shift placed as above the
//! intensity is
//!
//! ```text
//! I = (1 − r₀′)/2 + r₀′ (cos²ξ cos²δ + sin²ξ cos²(ζ − η))
//! ```
//!
//! for every (ξ, δ, ζ, η).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use thiserror::Error;

use crate::su2::{DensityMatrix, SpinOperator, Su2Params};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamlineError {
    #[error("incident purity {0} outside [0, 1]")]
    PurityOutOfRange(f64),
    #[error("non-finite beamline angle `{0}`")]
    NonFiniteAngle(&'static str),
}

/// Parameters of one intensity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamlineConfig {
    r0_prime: f64,
    xi: f64,
    delta: f64,
    zeta: f64,
    eta: f64,
}

impl BeamlineConfig {
    /// * `r0_prime` – incident purity along +z
    /// * `xi` – half the second-coil rotation angle
    /// * `delta` – half the guide-field precession angle
    /// * `zeta` – azimuthal parameter of the phase unit `U(ξ, δ, ζ)`
    /// * `eta` – auxiliary dynamical shift from the coil position
    pub fn new(r0_prime: f64, xi: f64, delta: f64, zeta: f64, eta: f64) -> Result<Self, BeamlineError> {
        if !(0.0..=1.0).contains(&r0_prime) {
            return Err(BeamlineError::PurityOutOfRange(r0_prime));
        }
        for (name, v) in [("xi", xi), ("delta", delta), ("zeta", zeta), ("eta", eta)] {
            if !v.is_finite() {
                return Err(BeamlineError::NonFiniteAngle(name));
            }
        }
        Ok(Self {
            r0_prime,
            xi,
            delta,
            zeta,
            eta,
        })
    }

    /// Coil setting followed by guide-field precession, as assembled by
    /// [`compose_coil_and_precession`], at η = 0.
    pub fn from_coil_and_precession(r0_prime: f64, xi: f64, delta: f64) -> Result<Self, BeamlineError> {
        let p = compose_coil_and_precession(xi, delta);
        Self::new(r0_prime, p.xi, p.delta, p.zeta, 0.0)
    }

    pub fn r0_prime(&self) -> f64 {
        self.r0_prime
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self, BeamlineError> {
        Self::new(self.r0_prime, self.xi, self.delta, self.zeta, eta)
    }

    pub fn with_r0_prime(&self, r0_prime: f64) -> Result<Self, BeamlineError> {
        Self::new(r0_prime, self.xi, self.delta, self.zeta, self.eta)
    }

    /// Same geometry with the phase unit switched off (`U_φ = 𝟙`), the setting
    /// whose intensity normalizes the phase extraction.
    pub fn reference(&self) -> Self {
        Self {
            xi: 0.0,
            delta: 0.0,
            zeta: 0.0,
            ..*self
        }
    }

    pub fn phase_params(&self) -> Su2Params {
        Su2Params {
            xi: self.xi,
            delta: self.delta,
            zeta: self.zeta,
        }
    }
}

/// `U₁ = U(π/4, 0, −π/2)`, a +π/2 rotation about +x.
pub fn first_coil() -> SpinOperator {
    SpinOperator::x_rotation(FRAC_PI_2)
}

/// `U_η = U(0, η/2)`.
pub fn eta_shift(eta: f64) -> SpinOperator {
    SpinOperator::z_phase(eta / 2.0)
}

/// `U_φ = U(ξ, δ, ζ)`.
pub fn phase_unit(c: &BeamlineConfig) -> SpinOperator {
    SpinOperator::from_params(c.phase_params()).expect("validated config")
}

/// Everything after the first coil: `U₁† · U_η · U_φ · U_η†`.
pub fn downstream_operator(c: &BeamlineConfig) -> SpinOperator {
    let shift = eta_shift(c.eta);
    first_coil().adjoint() * shift * phase_unit(c) * shift.adjoint()
}

/// `V = U₁† · U_η · U_φ · U_η† · U₁`.
pub fn evolution_operator(c: &BeamlineConfig) -> SpinOperator {
    downstream_operator(c) * first_coil()
}

/// `⟨+|V ρ_in V†|+⟩` by explicit propagation of `ρ_in = ½(𝟙 + r₀′σ_z)`.
pub fn intensity_matrix(c: &BeamlineConfig) -> f64 {
    let rho_in = DensityMatrix::polarized_along_z(c.r0_prime).expect("validated purity");
    evolution_operator(c).apply_to_density(&rho_in).up_population()
}

/// Detected intensity for a state that has already passed the first coil.
///
/// This is how ensembles produced by a noisy first coil enter the beamline:
/// `rho_after_first_coil` replaces `U₁ ρ_in U₁†`, and the purity stored in
/// `c` is not used.
pub fn intensity_after_first_coil(rho_after_first_coil: &DensityMatrix, c: &BeamlineConfig) -> f64 {
    downstream_operator(c)
        .apply_to_density(rho_after_first_coil)
        .up_population()
}

/// Closed form of [`intensity_matrix`].
pub fn intensity_closed_form(c: &BeamlineConfig) -> f64 {
    let r = c.r0_prime;
    let (cx, sx) = (c.xi.cos(), c.xi.sin());
    let cd = c.delta.cos();
    let cze = (c.zeta - c.eta).cos();
    0.5 * (1.0 - r) + r * (cx * cx * cd * cd + sx * sx * cze * cze)
}

/// Second coil: rotation by 2ξ about +x, `U(ξ, 0, −π/2)`.
pub fn second_coil(xi: f64) -> SpinOperator {
    SpinOperator::x_rotation(2.0 * xi)
}

/// Guide-field precession contributing phase `e^{±iδ}` to `|±⟩`, `U(0, δ)`.
pub fn precession(delta: f64) -> SpinOperator {
    SpinOperator::z_phase(delta)
}

/// SU(2) parameters of the phase unit built from a second coil (ξ) and a
/// precession (δ).
///
/// Returns `(ξ, δ, δ − π/2)`, which is the matrix product
/// `second_coil(ξ) · precession(δ)`. The opposite product
/// `precession(δ) · second_coil(ξ)` has azimuth `−δ − π/2`; both orders give
/// `arg⟨+|U_φ|+⟩ = δ` and the same intensity extrema, and differ only by
/// where along η the fringe maximum sits.
pub fn compose_coil_and_precession(xi: f64, delta: f64) -> Su2Params {
    if xi == 0.0 && delta == 0.0 {
        return Su2Params::identity();
    }
    Su2Params {
        xi,
        delta,
        zeta: delta - FRAC_PI_2,
    }
}

/// Phase-unit parameters for the purely geometric protocol, 2ξ = π/2.
pub fn geometric_setting(delta: f64) -> Su2Params {
    compose_coil_and_precession(FRAC_PI_4, delta)
}
