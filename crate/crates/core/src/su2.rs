//! Exact 2×2 complex algebra for a single spin-1/2.
//!
//! Basis ordering is fixed everywhere: index 0 is `|+⟩` (spin up along the
//! guide field, +z), index 1 is `|−⟩`.
//!
//! The three-angle parameterization used throughout is
//!
//! ```text
//! U(ξ′, δ′, ζ′) = ⎡ e^{iδ′} cos ξ′    −e^{−iζ′} sin ξ′ ⎤
//!                 ⎣ e^{iζ′} sin ξ′     e^{−iδ′} cos ξ′ ⎦
//! ```
//!
//! With this form `U(π/4, 0, −π/2)` is a +π/2 rotation about +x (it takes the
//! Bloch vector +z to −y), and `arg⟨+|U(ξ, δ, ζ)|+⟩ = +δ`. Every other rotation
//! sense in the crate follows from these two facts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for algebraic identities on doubles (unitarity, trace, Hermiticity, ...).
pub const TOLERANCE: f64 = 1e-12;

pub type ComplexAmplitude = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Su2Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("operator is not special unitary (deviation {0:e})")]
    NotSpecialUnitary(f64),
    #[error("spinor norm deviates from 1 by {0:e}")]
    NotNormalized(f64),
    #[error("Bloch vector magnitude {0} exceeds 1")]
    OutsideBlochBall(f64),
    #[error("not a density matrix: {0}")]
    InvalidDensity(&'static str),
    #[error("overlap ⟨ψ|U|ψ⟩ vanishes; the phase is undefined")]
    UndefinedPhase,
}

/// `(sin θ, cos θ)` with exact values at integer multiples of π/2.
///
/// `f64::cos(π/2)` is 6.1e−17, which would leak tiny real parts into operators
/// like `U(π/4, 0, −π/2)` whose off-diagonal entries are purely imaginary.
pub fn sin_cos(theta: f64) -> (f64, f64) {
    let quarter_turns = theta / FRAC_PI_2;
    if quarter_turns == quarter_turns.round() && quarter_turns.abs() < 1e15 {
        match (quarter_turns as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        theta.sin_cos()
    }
}

/// `e^{iθ}`, exact at quarter turns.
pub fn cis(theta: f64) -> Complex64 {
    let (s, c) = sin_cos(theta);
    Complex64::new(c, s)
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// The angles (ξ′, δ′, ζ′) of [`SpinOperator::from_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Params {
    pub xi: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl Su2Params {
    pub fn new(xi: f64, delta: f64, zeta: f64) -> Result<Self, Su2Error> {
        let p = Self { xi, delta, zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn identity() -> Self {
        Self {
            xi: 0.0,
            delta: 0.0,
            zeta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), Su2Error> {
        if self.xi.is_finite() && self.delta.is_finite() && self.zeta.is_finite() {
            Ok(())
        } else {
            Err(Su2Error::NonFinite("SU(2) parameters"))
        }
    }

    /// Same angles reduced into (−π, π]. The operator may change sign under
    /// this reduction (SU(2) is a double cover), callers opt in explicitly.
    pub fn canonical(&self) -> Self {
        Self {
            xi: wrap_angle(self.xi),
            delta: wrap_angle(self.delta),
            zeta: wrap_angle(self.zeta),
        }
    }
}

/// A 2×2 complex matrix acting on spinors, usually an element of SU(2).
#[derive(Clone, Copy, PartialEq)]
pub struct SpinOperator {
    m: [[Complex64; 2]; 2],
}

impl fmt::Debug for SpinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl SpinOperator {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    /// Raw matrix, no SU(2) check. Use [`SpinOperator::checked`] for validated input.
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn checked(m: [[Complex64; 2]; 2]) -> Result<Self, Su2Error> {
        let u = Self { m };
        u.check_special_unitary()?;
        Ok(u)
    }

    /// `U(ξ′, δ′, ζ′)`. At ξ′ = 0 the azimuth ζ′ is irrelevant and simply ignored.
    pub fn from_params(p: Su2Params) -> Result<Self, Su2Error> {
        p.validate()?;
        let (s, c) = sin_cos(p.xi);
        let ed = cis(p.delta);
        let ez = cis(p.zeta);
        Ok(Self {
            m: [[ed * c, -ez.conj() * s], [ez * s, ed.conj() * c]],
        })
    }

    /// Rotation of the Bloch vector by `angle` about +x.
    pub fn x_rotation(angle: f64) -> Self {
        Self::from_params(Su2Params {
            xi: angle / 2.0,
            delta: 0.0,
            zeta: -FRAC_PI_2,
        })
        .expect("finite rotation angle")
    }

    /// Rotation of the Bloch vector by `angle` about +y.
    pub fn y_rotation(angle: f64) -> Self {
        Self::from_params(Su2Params {
            xi: angle / 2.0,
            delta: 0.0,
            zeta: 0.0,
        })
        .expect("finite rotation angle")
    }

    /// `U(0, δ′)`: phases `e^{±iδ′}` on `|±⟩`. On the Bloch sphere this turns
    /// the vector by −2δ′ about +z.
    pub fn z_phase(delta: f64) -> Self {
        let e = cis(delta);
        Self {
            m: [[e, ZERO], [ZERO, e.conj()]],
        }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &SpinOperator) -> SpinOperator {
        let a = &self.m;
        let b = &other.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        SpinOperator { m }
    }

    pub fn adjoint(&self) -> SpinOperator {
        let m = &self.m;
        SpinOperator {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest entrywise deviation of `U·U†` from the identity and of `det U` from 1.
    pub fn special_unitary_deviation(&self) -> f64 {
        let p = self.compose(&self.adjoint());
        let id = Self::identity();
        let mut dev = (self.determinant() - ONE).norm();
        for i in 0..2 {
            for j in 0..2 {
                dev = dev.max((p.m[i][j] - id.m[i][j]).norm());
            }
        }
        dev
    }

    pub fn check_special_unitary(&self) -> Result<(), Su2Error> {
        if self.m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Su2Error::NonFinite("operator entries"));
        }
        let dev = self.special_unitary_deviation();
        if dev > TOLERANCE {
            return Err(Su2Error::NotSpecialUnitary(dev));
        }
        Ok(())
    }

    /// Cayley–Klein pair `(a, b) = (U[+,+], U[+,−])`.
    pub fn cayley_klein(&self) -> Result<(Complex64, Complex64), Su2Error> {
        self.check_special_unitary()?;
        Ok((self.m[0][0], self.m[0][1]))
    }

    pub fn apply(&self, psi: &Spinor) -> Spinor {
        Spinor {
            up: self.m[0][0] * psi.up + self.m[0][1] * psi.down,
            down: self.m[1][0] * psi.up + self.m[1][1] * psi.down,
        }
    }

    /// `U ρ U†`.
    pub fn apply_to_density(&self, rho: &DensityMatrix) -> DensityMatrix {
        let r = SpinOperator { m: rho.m };
        let out = self.compose(&r).compose(&self.adjoint());
        DensityMatrix { m: out.m }
    }

    /// `arg⟨ψ|U|ψ⟩` in (−π, π].
    pub fn total_phase(&self, psi: &Spinor) -> Result<f64, Su2Error> {
        let overlap = psi.inner(&self.apply(psi));
        if overlap.norm() < TOLERANCE {
            return Err(Su2Error::UndefinedPhase);
        }
        let phase = overlap.arg();
        // atan2 returns −π for a negative real with −0 imaginary part.
        Ok(if phase <= -PI { PI } else { phase })
    }

    /// Largest entrywise distance to another operator.
    pub fn distance(&self, other: &SpinOperator) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for SpinOperator {
    type Output = SpinOperator;

    fn mul(self, rhs: SpinOperator) -> SpinOperator {
        self.compose(&rhs)
    }
}

impl Mul<&SpinOperator> for &SpinOperator {
    type Output = SpinOperator;

    fn mul(self, rhs: &SpinOperator) -> SpinOperator {
        self.compose(rhs)
    }
}

/// A normalized two-component spin state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub up: Complex64,
    pub down: Complex64,
}

impl Spinor {
    pub fn new(up: Complex64, down: Complex64) -> Result<Self, Su2Error> {
        if !(up.re.is_finite() && up.im.is_finite() && down.re.is_finite() && down.im.is_finite()) {
            return Err(Su2Error::NonFinite("spinor"));
        }
        let dev = (up.norm_sqr() + down.norm_sqr() - 1.0).abs();
        if dev > TOLERANCE {
            return Err(Su2Error::NotNormalized(dev));
        }
        Ok(Self { up, down })
    }

    pub fn plus() -> Self {
        Self { up: ONE, down: ZERO }
    }

    pub fn minus() -> Self {
        Self { up: ZERO, down: ONE }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            m: [
                [self.up * self.up.conj(), self.up * self.down.conj()],
                [self.down * self.up.conj(), self.down * self.down.conj()],
            ],
        }
    }

    /// `⟨ψ|σ⃗|ψ⟩`.
    pub fn bloch_vector(&self) -> BlochVector {
        self.projector().bloch_components()
    }
}

/// Polarization vector `r⃗ = Tr(ρ σ⃗)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochVector {
    pub fn new(rx: f64, ry: f64, rz: f64) -> Result<Self, Su2Error> {
        let v = Self { rx, ry, rz };
        if !(rx.is_finite() && ry.is_finite() && rz.is_finite()) {
            return Err(Su2Error::NonFinite("Bloch vector"));
        }
        let r = v.magnitude();
        if r > 1.0 + TOLERANCE {
            return Err(Su2Error::OutsideBlochBall(r));
        }
        Ok(v)
    }

    pub fn magnitude(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.rx * other.rx + self.ry * other.ry + self.rz * other.rz
    }

    pub fn cross(&self, other: &BlochVector) -> BlochVector {
        BlochVector {
            rx: self.ry * other.rz - self.rz * other.ry,
            ry: self.rz * other.rx - self.rx * other.rz,
            rz: self.rx * other.ry - self.ry * other.rx,
        }
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        let d = [self.rx - other.rx, self.ry - other.ry, self.rz - other.rz];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

/// A spin-1/2 density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: [[Complex64; 2]; 2],
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl DensityMatrix {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self, Su2Error> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    /// `½·𝟙`.
    pub fn maximally_mixed() -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self {
            m: [[half, ZERO], [ZERO, half]],
        }
    }

    /// `½(𝟙 + r σ_z)`: a beam of purity `r` polarized along +z.
    pub fn polarized_along_z(r: f64) -> Result<Self, Su2Error> {
        Self::from_bloch(&BlochVector {
            rx: 0.0,
            ry: 0.0,
            rz: r,
        })
    }

    /// `½(𝟙 + r⃗·σ⃗)`.
    pub fn from_bloch(r: &BlochVector) -> Result<Self, Su2Error> {
        let r = BlochVector::new(r.rx, r.ry, r.rz)?;
        Ok(Self {
            m: [
                [
                    Complex64::new(0.5 * (1.0 + r.rz), 0.0),
                    Complex64::new(0.5 * r.rx, -0.5 * r.ry),
                ],
                [
                    Complex64::new(0.5 * r.rx, 0.5 * r.ry),
                    Complex64::new(0.5 * (1.0 - r.rz), 0.0),
                ],
            ],
        })
    }

    /// Weighted sum of raw entries. Used for ensemble averages where the
    /// summands are known to be valid states.
    pub(crate) fn from_raw(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Eigenvalues `(1 ± |r⃗|)/2` in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.purity();
        [0.5 * (1.0 - r), 0.5 * (1.0 + r)]
    }

    pub fn validate(&self) -> Result<(), Su2Error> {
        if self.m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Su2Error::NonFinite("density matrix"));
        }
        let herm = (self.m[0][1] - self.m[1][0].conj())
            .norm()
            .max(self.m[0][0].im.abs())
            .max(self.m[1][1].im.abs());
        if herm > TOLERANCE {
            return Err(Su2Error::InvalidDensity("not Hermitian"));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TOLERANCE {
            return Err(Su2Error::InvalidDensity("trace differs from 1"));
        }
        // For a Hermitian 2×2 matrix with unit trace, PSD ⇔ det ≥ 0.
        if self.determinant().re < -TOLERANCE {
            return Err(Su2Error::InvalidDensity("negative eigenvalue"));
        }
        Ok(())
    }

    fn bloch_components(&self) -> BlochVector {
        BlochVector {
            rx: 2.0 * self.m[0][1].re,
            ry: -2.0 * self.m[0][1].im,
            rz: (self.m[0][0] - self.m[1][1]).re,
        }
    }

    /// `r_k = Tr(ρ σ_k)`.
    pub fn bloch_vector(&self) -> BlochVector {
        self.bloch_components()
    }

    /// `|r⃗|`, 1 for pure states and 0 for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        self.bloch_components().magnitude().min(1.0)
    }

    /// Population of `|+⟩`, i.e. the transmission probability of an analyzer along +z.
    pub fn up_population(&self) -> f64 {
        self.m[0][0].re
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
