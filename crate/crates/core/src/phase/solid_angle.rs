//! Geometric phase from the solid angle enclosed by the Bloch path of `|+⟩`.
//!
//! The path runs down a meridian to colatitude 2ξ (second coil), then along
//! the parallel through 2δ of longitude (precession), and is closed by the
//! geodesic back to the north pole. The pure-state geometric phase is half the
//! enclosed solid angle in magnitude.
//!
//! Orientation: with the rotation senses of [`crate::su2`] the coil moves the
//! pole towards −y and the precession turns clockwise seen from +z, so the
//! loop is traversed clockwise and the signed solid angle is negative. Only
//! `|Ω|/2` is returned.

use std::f64::consts::{FRAC_PI_2, PI};

use super::PhaseError;
use crate::su2::{BlochVector, SpinOperator, Spinor, Su2Params};

pub const MIN_STEPS: usize = 100;

const NORTH: BlochVector = BlochVector {
    rx: 0.0,
    ry: 0.0,
    rz: 1.0,
};

/// Bloch path of `|+⟩`: `n_steps` increments of the coil rotation followed by
/// `n_steps` increments of the precession, each point obtained by applying
/// the partial spin operators to `|+⟩`.
pub fn bloch_path(xi: f64, delta: f64, n_steps: usize) -> Vec<BlochVector> {
    let coil = |t: f64| {
        SpinOperator::from_params(Su2Params {
            xi: xi * t,
            delta: 0.0,
            zeta: -FRAC_PI_2,
        })
        .expect("finite angle")
    };
    let plus = Spinor::plus();
    let mut path = Vec::with_capacity(2 * n_steps + 1);
    for k in 0..=n_steps {
        path.push(coil(k as f64 / n_steps as f64).apply(&plus).bloch_vector());
    }
    let tilted = coil(1.0).apply(&plus);
    for k in 1..=n_steps {
        let p = SpinOperator::z_phase(delta * k as f64 / n_steps as f64);
        path.push(p.apply(&tilted).bloch_vector());
    }
    path
}

/// Signed solid angle of the spherical triangle (a, b, c) with geodesic edges.
pub fn triangle_solid_angle(a: &BlochVector, b: &BlochVector, c: &BlochVector) -> f64 {
    let numerator = a.dot(&b.cross(c));
    let denominator = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * numerator.atan2(denominator)
}

/// Signed solid angle enclosed by a closed polygon of geodesic edges.
///
/// Each edge contributes `∫(1 − cos θ) dφ` along its great-circle arc, which
/// equals the solid angle of the triangle it forms with the north pole.
pub fn enclosed_solid_angle(vertices: &[BlochVector]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| triangle_solid_angle(&NORTH, &vertices[i], &vertices[(i + 1) % n]))
        .sum()
}

/// `|Ω|/2` for the path of [`bloch_path`], closed by the geodesic to the pole.
///
/// Sampled points are joined by geodesic chords, so the parallel leg is
/// approximated to `O(1/n_steps²)`; the meridian legs are exact.
pub fn solid_angle_geometric_phase(xi: f64, delta: f64, n_steps: usize) -> Result<f64, PhaseError> {
    if !(xi.is_finite() && delta.is_finite()) {
        return Err(PhaseError::NonFinite("solid-angle path angles"));
    }
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&(2.0 * xi)) || !(0.0..PI).contains(&delta) {
        return Err(PhaseError::OutOfDomain("solid angle needs 0 ≤ 2ξ ≤ π/2 and 0 ≤ δ < π"));
    }
    if n_steps < MIN_STEPS {
        return Err(PhaseError::UnderSampled(n_steps));
    }
    // The final point returns to the pole along its meridian, which adds nothing
    // to the sum, so the open path already describes the closed loop.
    let path = bloch_path(xi, delta, n_steps);
    Ok(enclosed_solid_angle(&path).abs() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn octant() {
        // 2ξ = 2δ = π/2: the path bounds one eighth of the sphere.
        let g = solid_angle_geometric_phase(FRAC_PI_4, FRAC_PI_4, 100).unwrap();
        assert!((g - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_has_no_area() {
        assert!(solid_angle_geometric_phase(0.0, 1.0, 100).unwrap() < 1e-15);
        assert!(solid_angle_geometric_phase(1e-9, 1.0, 100).unwrap() < 1e-15);
    }

    #[test]
    fn orientation_is_clockwise() {
        let path = bloch_path(0.5, 0.6, 200);
        assert!(enclosed_solid_angle(&path) < 0.0);
        // Coil leg heads to −y.
        assert!(path[200].ry < 0.0 && path[200].rx.abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(solid_angle_geometric_phase(1.0, 0.5, 1000).is_err());
        assert!(solid_angle_geometric_phase(0.5, PI, 1000).is_err());
        assert!(solid_angle_geometric_phase(0.5, 0.5, 50).is_err());
    }
}
