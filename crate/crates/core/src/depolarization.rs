//! Purity reduction by a randomly perturbed first coil, and three-axis spin
//! analysis of the resulting state.
//!
//! Each neutron sees the first coil with a random offset Δ on its SU(2)
//! angle, `Ũ₁(Δ) = U(π/4 + Δ, 0, −π/2)`. Averaged over the beam, an incident
//! `|+⟩` becomes
//!
//! ```text
//! ρ = E[ Ũ₁(Δ) |+⟩⟨+| Ũ₁†(Δ) ],   r⃗ = (0, −E[cos 2Δ], −E[sin 2Δ])
//! ```
//!
//! so for noise symmetric about zero the state stays on the −y axis with
//! purity `E[cos 2Δ]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::su2::{sin_cos, BlochVector, DensityMatrix, SpinOperator, Spinor, Su2Params};

/// Samples per independently seeded chunk. Fixed so that results do not
/// depend on the number of worker threads.
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("noise amplitude must be finite and non-negative, got {0}")]
    InvalidAmplitude(f64),
    #[error("discrete offset set must be non-empty")]
    EmptyOffsets,
    #[error("offset distribution is not symmetric about zero")]
    Asymmetric,
    #[error("ensemble needs at least one sample")]
    NoSamples,
    #[error("target purity {0} is not reachable with {1:?} noise")]
    UnreachablePurity(f64, NoiseKind),
    #[error("count scale must be positive, got {0}")]
    InvalidCountScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Uniform,
    Gaussian,
    /// Equally weighted offsets; [`solve_noise_for_purity`] uses the pair `{±A}`.
    Discrete,
}

impl std::str::FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "discrete" | "discrete-set" => Ok(Self::Discrete),
            other => Err(format!("unknown noise kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseDistribution {
    /// Δ uniform on `[−half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
    Gaussian {
        sigma: f64,
    },
    /// Δ drawn uniformly from the listed offsets.
    Discrete {
        offsets: Vec<f64>,
    },
}

/// Distribution of the first-coil offset Δξ′ plus the seed used to sample it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    distribution: NoiseDistribution,
    seed: u64,
}

fn check_amplitude(a: f64) -> Result<f64, NoiseError> {
    if a.is_finite() && a >= 0.0 {
        Ok(a)
    } else {
        Err(NoiseError::InvalidAmplitude(a))
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            distribution: NoiseDistribution::Uniform { half_width: 0.0 },
            seed,
        }
    }

    pub fn uniform(half_width: f64, seed: u64) -> Result<Self, NoiseError> {
        Ok(Self {
            distribution: NoiseDistribution::Uniform {
                half_width: check_amplitude(half_width)?,
            },
            seed,
        })
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self, NoiseError> {
        Ok(Self {
            distribution: NoiseDistribution::Gaussian {
                sigma: check_amplitude(sigma)?,
            },
            seed,
        })
    }

    /// Rejects sets that are not mirror-symmetric about zero (to 1e−12).
    pub fn discrete(offsets: Vec<f64>, seed: u64) -> Result<Self, NoiseError> {
        if offsets.is_empty() {
            return Err(NoiseError::EmptyOffsets);
        }
        if offsets.iter().any(|d| !d.is_finite()) {
            return Err(NoiseError::InvalidAmplitude(f64::NAN));
        }
        let mut sorted = offsets.clone();
        sorted.sort_by(f64::total_cmp);
        let mirrored = sorted
            .iter()
            .zip(sorted.iter().rev())
            .all(|(a, b)| (a + b).abs() < 1e-12);
        if !mirrored {
            return Err(NoiseError::Asymmetric);
        }
        Ok(Self {
            distribution: NoiseDistribution::Discrete { offsets },
            seed,
        })
    }

    pub fn distribution(&self) -> &NoiseDistribution {
        &self.distribution
    }

    pub fn kind(&self) -> NoiseKind {
        match self.distribution {
            NoiseDistribution::Uniform { .. } => NoiseKind::Uniform,
            NoiseDistribution::Gaussian { .. } => NoiseKind::Gaussian,
            NoiseDistribution::Discrete { .. } => NoiseKind::Discrete,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Half-width, standard deviation, or largest |offset|.
    pub fn amplitude(&self) -> f64 {
        match &self.distribution {
            NoiseDistribution::Uniform { half_width } => *half_width,
            NoiseDistribution::Gaussian { sigma } => *sigma,
            NoiseDistribution::Discrete { offsets } => offsets.iter().fold(0.0, |m, d| m.max(d.abs())),
        }
    }

    fn sampler(&self) -> OffsetSampler<'_> {
        match &self.distribution {
            NoiseDistribution::Uniform { half_width } => OffsetSampler::Uniform(*half_width),
            NoiseDistribution::Gaussian { sigma } => {
                OffsetSampler::Gaussian(Normal::new(0.0, *sigma).expect("validated sigma"))
            }
            NoiseDistribution::Discrete { offsets } => OffsetSampler::Discrete(offsets),
        }
    }
}

enum OffsetSampler<'a> {
    Uniform(f64),
    Gaussian(Normal<f64>),
    Discrete(&'a [f64]),
}

impl OffsetSampler<'_> {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            OffsetSampler::Uniform(a) if *a == 0.0 => 0.0,
            OffsetSampler::Uniform(a) => rng.random_range(-*a..=*a),
            OffsetSampler::Gaussian(n) => n.sample(rng),
            OffsetSampler::Discrete(set) => set[rng.random_range(0..set.len())],
        }
    }
}

/// `Ũ₁(Δ) = U(π/4 + Δ, 0, −π/2)`.
pub fn perturbed_first_coil(offset: f64) -> SpinOperator {
    SpinOperator::from_params(Su2Params {
        xi: FRAC_PI_4 + offset,
        delta: 0.0,
        zeta: -FRAC_PI_2,
    })
    .expect("finite offset")
}

/// Ensemble-averaged state after the noisy first coil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleState {
    pub rho: DensityMatrix,
    pub n_samples: usize,
    /// `|r⃗|` of `rho`.
    pub r0: f64,
    /// Standard error of `r0` from the spread of the per-neutron states.
    pub r0_stderr: f64,
}

#[derive(Clone, Copy)]
struct Accumulator {
    sum: [[Complex64; 2]; 2],
    ry: f64,
    ry2: f64,
}

impl Accumulator {
    fn zero() -> Self {
        Self {
            sum: [[Complex64::new(0.0, 0.0); 2]; 2],
            ry: 0.0,
            ry2: 0.0,
        }
    }

    fn merge(mut self, other: &Accumulator) -> Self {
        for i in 0..2 {
            for j in 0..2 {
                self.sum[i][j] += other.sum[i][j];
            }
        }
        self.ry += other.ry;
        self.ry2 += other.ry2;
        self
    }
}

/// Monte Carlo noise integral for an incident `|+⟩`.
pub fn noisy_first_coil_ensemble(noise: &NoiseModel, n: usize) -> Result<EnsembleState, NoiseError> {
    first_coil_ensemble(noise, n, &Spinor::plus().projector())
}

/// Monte Carlo noise integral `(1/n) Σ Ũ₁(Δₖ) ρ_in Ũ₁†(Δₖ)` over i.i.d. offsets.
///
/// Samples are split into fixed-size chunks, chunk `k` drawing from a ChaCha
/// stream `k` under the model seed; chunk sums are merged in order, so the
/// result is identical for any thread count.
pub fn first_coil_ensemble(noise: &NoiseModel, n: usize, rho_in: &DensityMatrix) -> Result<EnsembleState, NoiseError> {
    if n == 0 {
        return Err(NoiseError::NoSamples);
    }
    let sampler = noise.sampler();
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(n - chunk * CHUNK);
            let mut acc = Accumulator::zero();
            for _ in 0..len {
                let u = perturbed_first_coil(sampler.sample(&mut rng));
                let rho = u.apply_to_density(rho_in);
                for i in 0..2 {
                    for j in 0..2 {
                        acc.sum[i][j] += rho.entry(i, j);
                    }
                }
                let ry = rho.bloch_vector().ry;
                acc.ry += ry;
                acc.ry2 += ry * ry;
            }
            acc
        })
        .collect();
    let total = partials.iter().fold(Accumulator::zero(), |a, b| a.merge(b));

    let inv = 1.0 / n as f64;
    let mut m = total.sum;
    for row in m.iter_mut() {
        for z in row.iter_mut() {
            *z *= inv;
        }
    }
    // Symmetrize away rounding so the result is exactly Hermitian.
    m[0][0].im = 0.0;
    m[1][1].im = 0.0;
    m[1][0] = m[0][1].conj();
    let rho = DensityMatrix::from_raw(m);

    let mean_ry = total.ry * inv;
    let var_ry = if n > 1 {
        ((total.ry2 - total.ry * mean_ry) / (n as f64 - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EnsembleState {
        rho,
        n_samples: n,
        r0: rho.purity(),
        r0_stderr: (var_ry * inv).sqrt(),
    })
}

/// `E[cos 2Δ]`, the purity left by the noise integral on an incident `|+⟩`.
pub fn analytic_purity(noise: &NoiseModel) -> f64 {
    match &noise.distribution {
        NoiseDistribution::Uniform { half_width } => sinc(2.0 * half_width),
        NoiseDistribution::Gaussian { sigma } => (-2.0 * sigma * sigma).exp(),
        NoiseDistribution::Discrete { offsets } => {
            offsets.iter().map(|d| sin_cos(2.0 * d).1).sum::<f64>() / offsets.len() as f64
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Exact noise integral applied to `ρ_in = ½(𝟙 + p σ_z)`:
/// Bloch vector `(0, −p·E[cos 2Δ], 0)`.
pub fn exact_first_coil_state(noise: &NoiseModel, incident_purity: f64) -> DensityMatrix {
    let r = incident_purity * analytic_purity(noise);
    DensityMatrix::from_bloch(&BlochVector {
        rx: 0.0,
        ry: -r,
        rz: 0.0,
    })
    .expect("purity within [0, 1]")
}

/// Noise amplitude giving `analytic_purity == target_r0`, by bisection.
pub fn solve_noise_for_purity(target_r0: f64, kind: NoiseKind, seed: u64) -> Result<NoiseModel, NoiseError> {
    let reachable = match kind {
        NoiseKind::Discrete => (0.0..=1.0).contains(&target_r0),
        _ => target_r0 > 0.0 && target_r0 <= 1.0,
    };
    if !reachable {
        return Err(NoiseError::UnreachablePurity(target_r0, kind));
    }
    if target_r0 == 1.0 {
        return match kind {
            NoiseKind::Uniform => NoiseModel::uniform(0.0, seed),
            NoiseKind::Gaussian => NoiseModel::gaussian(0.0, seed),
            NoiseKind::Discrete => NoiseModel::discrete(vec![0.0], seed),
        };
    }
    let build = |a: f64| match kind {
        NoiseKind::Uniform => NoiseModel::uniform(a, seed),
        NoiseKind::Gaussian => NoiseModel::gaussian(a, seed),
        NoiseKind::Discrete => NoiseModel::discrete(vec![-a, a], seed),
    };
    // Purity decreases monotonically from 1 on each bracket.
    let mut hi = match kind {
        NoiseKind::Uniform => FRAC_PI_2,
        NoiseKind::Discrete => FRAC_PI_4,
        NoiseKind::Gaussian => 1.0,
    };
    if kind == NoiseKind::Gaussian {
        while analytic_purity(&build(hi)?) > target_r0 {
            hi *= 2.0;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if analytic_purity(&build(mid)?) > target_r0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lo_err = (analytic_purity(&build(lo)?) - target_r0).abs();
    let hi_err = (analytic_purity(&build(hi)?) - target_r0).abs();
    build(if lo_err <= hi_err { lo } else { hi })
}

/// Three-axis spin analysis with Poisson counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyEstimate {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
    pub sigma: [f64; 3],
}

impl TomographyEstimate {
    pub fn components(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }

    pub fn magnitude(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    /// First-order standard error of [`TomographyEstimate::magnitude`].
    pub fn magnitude_sigma(&self) -> f64 {
        let r = self.magnitude();
        if r == 0.0 {
            return self.sigma.iter().fold(0.0, |m: f64, s| m.max(*s));
        }
        let c = self.components();
        (0..3).map(|k| (c[k] / r * self.sigma[k]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Pre-rotations turning the x, y and z analyzer directions onto +z.
pub fn analyzer_rotations() -> [SpinOperator; 3] {
    [
        SpinOperator::y_rotation(-FRAC_PI_2),
        SpinOperator::x_rotation(FRAC_PI_2),
        SpinOperator::identity(),
    ]
}

/// Estimate `r⃗` from three analyzer settings.
///
/// For each axis the state is pre-rotated so that axis points along +z and
/// projected on `|+⟩`; the transmitted count is `N ~ Poisson(s·p)` with
/// `p = (1 + r_k)/2` and `s = counts_scale`, giving the unbiased estimate
/// `r_k = 2N/s − 1` with standard error `2√N/s`. An infinite scale returns the
/// exact components.
pub fn bloch_tomography(rho: &DensityMatrix, counts_scale: f64, seed: u64) -> Result<TomographyEstimate, NoiseError> {
    if counts_scale.is_nan() || counts_scale <= 0.0 {
        return Err(NoiseError::InvalidCountScale(counts_scale));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = [0.0; 3];
    let mut sigma = [0.0; 3];
    for (k, rot) in analyzer_rotations().iter().enumerate() {
        let p = rot.apply_to_density(rho).up_population().clamp(0.0, 1.0);
        if counts_scale.is_infinite() {
            r[k] = 2.0 * p - 1.0;
            continue;
        }
        let mean = counts_scale * p;
        let n = if mean > 0.0 {
            Poisson::new(mean).expect("positive finite mean").sample(&mut rng)
        } else {
            0.0
        };
        r[k] = 2.0 * n / counts_scale - 1.0;
        sigma[k] = 2.0 * n.max(1.0).sqrt() / counts_scale;
    }
    Ok(TomographyEstimate {
        rx: r[0],
        ry: r[1],
        rz: r[2],
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::TOLERANCE;

    #[test]
    fn noiseless_ensemble_is_psi0() {
        let e = noisy_first_coil_ensemble(&NoiseModel::noiseless(1), 100).unwrap();
        let r = e.rho.bloch_vector();
        assert_eq!(r.rx, 0.0);
        assert!((r.ry + 1.0).abs() < TOLERANCE);
        assert!(r.rz.abs() < TOLERANCE);
        assert!((e.r0 - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn opposite_quarter_offsets_fully_depolarize() {
        // Brute force over both outcomes: ±π/4 offsets rotate the pole by π and 0.
        let outcomes: Vec<BlochVector> = [FRAC_PI_4, -FRAC_PI_4]
            .iter()
            .map(|d| perturbed_first_coil(*d).apply(&Spinor::plus()).bloch_vector())
            .collect();
        let mean_z = (outcomes[0].rz + outcomes[1].rz) / 2.0;
        let mean_y = (outcomes[0].ry + outcomes[1].ry) / 2.0;
        assert!(mean_z.abs() < TOLERANCE && mean_y.abs() < TOLERANCE);

        let model = NoiseModel::discrete(vec![FRAC_PI_4, -FRAC_PI_4], 3).unwrap();
        assert_eq!(analytic_purity(&model), 0.0);
        let n = 40_000;
        let e = noisy_first_coil_ensemble(&model, n).unwrap();
        assert!(e.r0 < 5.0 / (n as f64).sqrt());
        assert_eq!(e.rho.bloch_vector().rx, 0.0);
        assert_eq!(e.rho.bloch_vector().ry, 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        assert_eq!(
            noisy_first_coil_ensemble(&NoiseModel::noiseless(0), 0),
            Err(NoiseError::NoSamples)
        );
    }

    #[test]
    fn analytic_purity_examples() {
        assert_eq!(analytic_purity(&NoiseModel::uniform(0.0, 0).unwrap()), 1.0);
        let g = analytic_purity(&NoiseModel::gaussian(0.5, 0).unwrap());
        assert!((g - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g - 0.606_530_659_712_633_4).abs() < 1e-15);
        let u = analytic_purity(&NoiseModel::uniform(0.5, 0).unwrap());
        assert!((u - 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_models_rejected() {
        assert_eq!(NoiseModel::discrete(vec![0.1, 0.2], 0), Err(NoiseError::Asymmetric));
        assert_eq!(NoiseModel::discrete(vec![], 0), Err(NoiseError::EmptyOffsets));
        assert!(NoiseModel::uniform(-0.1, 0).is_err());
        assert!(NoiseModel::gaussian(f64::NAN, 0).is_err());
        assert!(NoiseModel::discrete(vec![-0.3, 0.0, 0.3], 0).is_ok());
    }

    #[test]
    fn solve_examples() {
        let m = solve_noise_for_purity(1.0, NoiseKind::Uniform, 0).unwrap();
        assert_eq!(m.amplitude(), 0.0);
        let m = solve_noise_for_purity(1f64.sin(), NoiseKind::Uniform, 0).unwrap();
        assert!((m.amplitude() - 0.5).abs() < 1e-9);
        let m = solve_noise_for_purity((-0.5f64).exp(), NoiseKind::Gaussian, 0).unwrap();
        assert!((m.amplitude() - 0.5).abs() < 1e-9);
        let m = solve_noise_for_purity(0.0, NoiseKind::Discrete, 0).unwrap();
        assert!((m.amplitude() - FRAC_PI_4).abs() < 1e-12);
        assert!(matches!(
            solve_noise_for_purity(0.0, NoiseKind::Uniform, 0),
            Err(NoiseError::UnreachablePurity(..))
        ));
        assert!(solve_noise_for_purity(0.0, NoiseKind::Gaussian, 0).is_err());
        assert!(solve_noise_for_purity(1.5, NoiseKind::Discrete, 0).is_err());
    }

    #[test]
    fn solve_inverts_analytic_purity() {
        for kind in [NoiseKind::Uniform, NoiseKind::Gaussian, NoiseKind::Discrete] {
            for k in 1..=100 {
                let target = k as f64 / 100.0;
                let m = solve_noise_for_purity(target, kind, 0).unwrap();
                assert!((analytic_purity(&m) - target).abs() < 1e-9, "{kind:?} {target}");
            }
        }
    }

    #[test]
    fn exact_state_lies_on_minus_y() {
        let m = NoiseModel::uniform(0.5, 0).unwrap();
        let r = exact_first_coil_state(&m, 1.0).bloch_vector();
        assert_eq!((r.rx, r.rz), (0.0, 0.0));
        assert!((r.ry + 1f64.sin()).abs() < 1e-15);
        let r = exact_first_coil_state(&m, 0.99).bloch_vector();
        assert!((r.ry + 0.99 * 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn analyzer_rotations_map_axes_to_z() {
        let axes = [
            BlochVector {
                rx: 1.0,
                ry: 0.0,
                rz: 0.0,
            },
            BlochVector {
                rx: 0.0,
                ry: 1.0,
                rz: 0.0,
            },
            BlochVector {
                rx: 0.0,
                ry: 0.0,
                rz: 1.0,
            },
        ];
        for (rot, axis) in analyzer_rotations().iter().zip(axes) {
            let rho = DensityMatrix::from_bloch(&axis).unwrap();
            assert!((rot.apply_to_density(&rho).up_population() - 1.0).abs() < TOLERANCE);
        }
    }

    #[test]
    fn tomography_limits() {
        let up = Spinor::plus().projector();
        let t = bloch_tomography(&up, f64::INFINITY, 0).unwrap();
        assert!((t.rz - 1.0).abs() < TOLERANCE && t.rx.abs() < TOLERANCE && t.ry.abs() < TOLERANCE);

        let psi0 = noisy_first_coil_ensemble(&NoiseModel::noiseless(0), 1).unwrap().rho;
        let t = bloch_tomography(&psi0, 1e12, 7).unwrap();
        assert!(
            (t.ry + 1.0).abs() < 1e-5 && t.rx.abs() < 1e-5 && t.rz.abs() < 1e-5,
            "{t:?}"
        );

        let t = bloch_tomography(&DensityMatrix::maximally_mixed(), 1e4, 11).unwrap();
        for k in 0..3 {
            assert!(t.components()[k].abs() < 3.0 * t.sigma[k], "{t:?}");
        }
        assert!(bloch_tomography(&up, 0.0, 0).is_err());
    }
}
