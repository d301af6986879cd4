//! Spin-1/2 evolution through a neutron polarimeter and extraction of
//! mixed-state phases from intensity oscillations.
//!
//! * [`su2`] – 2×2 operators, spinors, density matrices, Bloch vectors
//! * [`beamline`] – the five-element polarimeter and its detected intensity
//! * [`depolarization`] – purity reduction by a noisy first coil, spin analysis
//! * [`phase`] – η-scans, fringe fits, phase extraction and prediction

pub mod beamline;
pub mod depolarization;
pub mod phase;
pub mod su2;

pub use beamline::BeamlineConfig;
pub use su2::{BlochVector, DensityMatrix, SpinOperator, Spinor, Su2Params, TOLERANCE};
