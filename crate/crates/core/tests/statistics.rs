use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use spinor_phase::beamline::{geometric_setting, BeamlineConfig};
use spinor_phase::depolarization::{
    analytic_purity, bloch_tomography, exact_first_coil_state, noisy_first_coil_ensemble, NoiseModel,
};
use spinor_phase::phase::solid_angle::solid_angle_geometric_phase;
use spinor_phase::phase::{fit_oscillation, geometric_phase, scan_eta};
use spinor_phase::su2::DensityMatrix;

#[test]
fn ensemble_does_not_depend_on_thread_count() {
    let model = NoiseModel::gaussian(0.4, 99).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| noisy_first_coil_ensemble(&model, 100_003).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn ensemble_bloch_vector_stays_in_yz_plane() {
    for model in [
        NoiseModel::uniform(0.7, 1).unwrap(),
        NoiseModel::gaussian(0.3, 2).unwrap(),
        NoiseModel::discrete(vec![-0.2, 0.0, 0.2], 3).unwrap(),
    ] {
        let n = 200_000;
        let e = noisy_first_coil_ensemble(&model, n).unwrap();
        let r = e.rho.bloch_vector();
        assert_eq!(r.rx, 0.0);
        assert!(r.ry < 0.0);
        assert!(r.rz.abs() < 5.0 / (n as f64).sqrt());
        assert!((e.r0 - analytic_purity(&model)).abs() < 5.0 / (n as f64).sqrt());
        assert!((e.r0 - r.ry.hypot(r.rz)).abs() < 1e-12);
        assert!(e.rho.validate().is_ok());
    }
}

#[test]
fn tomography_is_unbiased() {
    let rho = exact_first_coil_state(&NoiseModel::uniform(0.6, 0).unwrap(), 1.0);
    let truth = rho.bloch_vector().as_array();
    let seeds = 100;
    let mut mean = [0.0; 3];
    let mut se = [0.0; 3];
    for seed in 0..seeds {
        let t = bloch_tomography(&rho, 1e4, seed).unwrap();
        for k in 0..3 {
            mean[k] += t.components()[k] / seeds as f64;
            se[k] += t.sigma[k].powi(2);
        }
    }
    for k in 0..3 {
        let combined = se[k].sqrt() / seeds as f64;
        assert!(
            (mean[k] - truth[k]).abs() < 3.0 * combined,
            "axis {k}: {} vs {}",
            mean[k],
            truth[k]
        );
    }
}

#[test]
fn tomography_converges_with_counts() {
    let rho = DensityMatrix::polarized_along_z(0.3).unwrap();
    let t = bloch_tomography(&rho, 1e14, 4).unwrap();
    let truth = rho.bloch_vector().as_array();
    for (est, exact) in t.components().iter().zip(truth) {
        assert!((est - exact).abs() < 1e-5);
    }
}

#[test]
fn fitted_extrema_cover_truth_under_poisson_noise() {
    let p = geometric_setting(FRAC_PI_8);
    let c = BeamlineConfig::new(1.0, p.xi, p.delta, p.zeta, 0.0).unwrap();
    let (true_max, true_min) = (0.5 * FRAC_PI_8.cos().powi(2) + 0.5, 0.5 * FRAC_PI_8.cos().powi(2));
    let mut covered = 0;
    for seed in 0..100 {
        let fit = fit_oscillation(&scan_eta(&c, 36, 1e4, seed).unwrap());
        let e = fit.extrema();
        if (e.i_max - true_max).abs() < 3.0 * e.sigma_max() && (e.i_min - true_min).abs() < 3.0 * e.sigma_min() {
            covered += 1;
        }
    }
    assert!(covered >= 95, "covered {covered}/100");
}

#[test]
fn solid_angle_converges_at_second_order() {
    for two_xi_deg in [30.0f64, 48.19, 60.0] {
        for two_delta_deg in [45.0f64, 90.0, 135.0] {
            let (xi, delta) = (two_xi_deg.to_radians() / 2.0, two_delta_deg.to_radians() / 2.0);
            let exact = geometric_phase(xi, delta);
            let err = |n| (solid_angle_geometric_phase(xi, delta, n).unwrap() - exact).abs();
            let (coarse, fine) = (err(200), err(400));
            let order = (coarse / fine).log2();
            assert!(order > 1.9, "2ξ={two_xi_deg} 2δ={two_delta_deg}: order {order}");
        }
    }
}

#[test]
fn equatorial_path_is_exact() {
    let g = solid_angle_geometric_phase(FRAC_PI_4, 1.0, 100).unwrap();
    assert!((g - 1.0).abs() < 1e-12);
}
