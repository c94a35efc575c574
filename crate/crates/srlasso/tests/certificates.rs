use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srlasso::certificates::{coefficient_bounds, gaussian};
use srlasso::{
    build_sr_design, delta_min, eta_coefficients, fourier_lowpass_1d, g_function, gaussian_kernel,
    gaussian_sampling_1d, k_functions, thm_g_condition_check, uniform_samples, DiscreteMeasure, Error, Grid,
    MeasurementOperator, SrCertificate,
};

const SIGMA: f64 = 0.07;

fn gaussian_op() -> Arc<dyn MeasurementOperator> {
    Arc::new(gaussian_sampling_1d(SIGMA, &uniform_samples(100, 0.0, 2.0)).unwrap())
}

fn on_grid_certificate(
    op: Arc<dyn MeasurementOperator>,
    grid: &Grid,
    nodes: &[(usize, f64)],
    tau: f64,
) -> SrCertificate {
    let pairs: Vec<(f64, f64)> = nodes.iter().map(|&(j, a)| (grid.node(j)[0], a)).collect();
    let mu0 = DiscreteMeasure::from_pairs_1d(&pairs).unwrap();
    let design = build_sr_design(op, grid, &[tau]).unwrap();
    SrCertificate::for_measure(&design, &mu0).unwrap()
}

#[test]
fn on_grid_truth_interpolates_with_flat_derivative() {
    let grid = Grid::line(29, 0.0, 29.0 * SIGMA).unwrap();
    for tau in [0.6, 0.8, 1.0] {
        let cert = on_grid_certificate(gaussian_op(), &grid, &[(8, 1.0), (18, -0.6)], tau);
        for j in [8, 18] {
            let [f, d1, _] = cert.f0_jet_1d(grid.node(j)[0]).unwrap();
            assert!((f - 1.0).abs() < 1e-6, "tau {tau} node {j}: f0 = {f}");
            assert!(d1.abs() < 1e-6, "tau {tau} node {j}: f0' = {d1}");
        }
    }
}

#[test]
fn on_grid_fourier_certificate_is_nondegenerate() {
    let op: Arc<dyn MeasurementOperator> = Arc::new(fourier_lowpass_1d(6).unwrap());
    let grid = Grid::line(20, 0.0, 1.0).unwrap();
    let cert = on_grid_certificate(op, &grid, &[(3, 1.0), (12, 0.7)], 1.0);
    let d = cert.diagnostics(0.3 * grid.spacing(0), 200).unwrap();
    assert!(d.mu > 0.0, "mu = {}", d.mu);
    assert!(d.eps1 < 1e-6, "eps1 = {}", d.eps1);
    assert!(!d.degenerate());
}

#[test]
fn f0_derivatives_match_finite_differences() {
    let grid = Grid::line(29, 0.0, 29.0 * SIGMA).unwrap();
    let mu0 = DiscreteMeasure::from_pairs_1d(&[(8.3 * SIGMA, 1.0), (17.8 * SIGMA, 0.5)]).unwrap();
    let design = build_sr_design(gaussian_op(), &grid, &[0.9]).unwrap();
    let cert = SrCertificate::for_measure(&design, &mu0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let e = 1e-5;
    for _ in 0..50 {
        let x = rng.random_range(0.1..1.9);
        let [f, d1, d2] = cert.f0_jet_1d(x).unwrap();
        assert!((cert.f0(&[x]).unwrap() - f).abs() < 1e-12);
        let fd1 = (cert.f0(&[x + e]).unwrap() - cert.f0(&[x - e]).unwrap()) / (2.0 * e);
        let fd2 = (cert.f0_jet_1d(x + e).unwrap()[1] - cert.f0_jet_1d(x - e).unwrap()[1]) / (2.0 * e);
        let scale = 1.0 / SIGMA;
        assert!((fd1 - d1).abs() <= 1e-5 * d1.abs().max(scale), "x {x}: {d1} vs {fd1}");
        assert!((fd2 - d2).abs() <= 1e-5 * d2.abs().max(scale * scale), "x {x}: {d2} vs {fd2}");
    }
}

#[test]
fn f0_near_isolated_spike_follows_g() {
    let k = gaussian_kernel(SIGMA).unwrap();
    let r = 0.3 * SIGMA;
    for sep in [6.0, 8.0] {
        for tau in [0.8, 1.0] {
            for theta in [0.0f64, 0.4, -1.0] {
                let pos = [0.0, sep * SIGMA, 2.0 * sep * SIGMA];
                let s_a = [theta.cos(), -1.0, 0.6];
                let s_b = [theta.sin(), 0.0, 0.8];
                let eta = eta_coefficients(&k, &pos, &s_a, &s_b, tau).unwrap();
                let g = g_function(&k, tau, s_a[0], s_b[0]).unwrap();
                let bound = 10.0 * delta_min(&k, &pos, 3).unwrap();
                for i in 0..=200 {
                    let x = -r + 2.0 * r * i as f64 / 200.0;
                    let err = (eta.f0(x, 0) - g.eval(x).value).abs();
                    assert!(err <= bound, "sep {sep} tau {tau} theta {theta} x {x}: {err} > {bound}");
                }
            }
        }
    }
}

#[test]
fn gaussian_closed_forms_match_generic_evaluators() {
    let k = gaussian_kernel(SIGMA).unwrap();
    for tau in [0.5, 0.9, 1.0, 1.3] {
        let kf = k_functions(&k, tau).unwrap();
        for i in -40..=40 {
            let u = 0.1 * i as f64;
            let x = SIGMA * u;
            let s2 = SIGMA * SIGMA;
            let pairs = [
                (kf.k0(x).value, gaussian::k0_hat(tau, u)),
                (kf.k1(x).value, gaussian::k1_hat(tau, u)),
                (kf.k2(x).value, gaussian::k2_hat(tau, u)),
                (kf.k0(x).d2 * s2, gaussian::k0_hat_d2(tau, u)),
                (kf.k1(x).d2 * s2, gaussian::k1_hat_d2(tau, u)),
                (kf.k2(x).d2 * s2, gaussian::k2_hat_d2(tau, u)),
            ];
            for (n, (generic, closed)) in pairs.into_iter().enumerate() {
                assert!((generic - closed).abs() < 1e-10, "tau {tau} u {u} form {n}: {generic} vs {closed}");
            }
        }
        let expected = (2.0 - 6.0 * tau * tau) / (tau * tau);
        assert!((gaussian::k2_hat_d2(tau, 0.0) - expected).abs() < 1e-12);
        assert!((kf.k0(0.0).value - 1.0).abs() < 1e-15);
        assert!((kf.k2(0.0).value - 1.0).abs() < 1e-15);
        assert_eq!(kf.k1(0.0).value, 0.0);
    }
}

#[test]
fn k_and_g_derivatives_match_finite_differences() {
    let k = gaussian_kernel(SIGMA).unwrap();
    let kf = k_functions(&k, 0.85).unwrap();
    let g = g_function(&k, 0.85, 0.6, -0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = 1e-6;
    for _ in 0..50 {
        let x = rng.random_range(-4.0 * SIGMA..4.0 * SIGMA);
        let evals: [&dyn Fn(f64) -> srlasso::Jet; 4] = [&|t| kf.k0(t), &|t| kf.k1(t), &|t| kf.k2(t), &|t| g.eval(t)];
        for (n, f) in evals.iter().enumerate() {
            let j = f(x);
            let fd1 = (f(x + e).value - f(x - e).value) / (2.0 * e);
            let fd2 = (f(x + e).d1 - f(x - e).d1) / (2.0 * e);
            let s = 1.0 / SIGMA;
            assert!((fd1 - j.d1).abs() <= 1e-5 * j.d1.abs().max(s), "fn {n} x {x}");
            assert!((fd2 - j.d2).abs() <= 1e-5 * j.d2.abs().max(s * s), "fn {n} x {x}");
        }
        assert!((g.eval(x).value - g.eval_from_g(x)).abs() < 1e-12);
    }
}

#[test]
fn g_values_at_zero() {
    let k = gaussian_kernel(SIGMA).unwrap();
    for tau in [0.7, 1.0] {
        for (s_a, s_b) in [(1.0, 0.0), (0.6, 0.8), (-0.28, 0.96)] {
            let g = g_function(&k, tau, s_a, s_b).unwrap();
            let j = g.eval(0.0);
            assert!((j.value - 1.0).abs() < 1e-14);
            assert!((j.d1 - g.d1_at_zero_formula()).abs() < 1e-9 * (1.0 + j.d1.abs()));
            assert!((j.d2 - g.d2_at_zero_formula()).abs() < 1e-9 * j.d2.abs().max(1.0));
            if tau == 1.0 {
                assert!(j.d1.abs() < 1e-12);
            }
        }
    }
    assert!(matches!(g_function(&k, 1.0, 0.0, 1.0), Err(Error::DegenerateSign)));
    assert!(matches!(g_function(&k, 1.0, 0.5, 0.5), Err(Error::InvalidParam(_))));
}

#[test]
fn separated_coefficients_respect_bounds() {
    let k = gaussian_kernel(SIGMA).unwrap();
    for tau in [0.8, 1.0] {
        let pos = [0.0, 6.0 * SIGMA, 12.5 * SIGMA];
        let s_a = [0.6, -1.0, 0.8];
        let s_b = [0.8, 0.0, -0.6];
        let eta = eta_coefficients(&k, &pos, &s_a, &s_b, tau).unwrap();
        let delta = delta_min(&k, &pos, 3).unwrap();
        let (bu, bv) = coefficient_bounds(delta, &s_a, &s_b, tau);
        for i in 0..3 {
            assert!((eta.u[i] - s_a[i]).abs() <= bu, "tau {tau} u[{i}]");
            assert!((eta.v[i] - s_b[i] / (tau * tau)).abs() <= bv, "tau {tau} v[{i}]");
        }
    }
}

#[test]
fn single_spike_and_coincident_spikes() {
    let k = gaussian_kernel(SIGMA).unwrap();
    let eta = eta_coefficients(&k, &[0.4], &[-0.7], &[0.0], 0.9).unwrap();
    assert!((eta.u[0] + 0.7).abs() < 1e-15);
    assert!(eta.v[0].abs() < 1e-15);
    assert!((eta.eta(0.4, 0) + 0.7).abs() < 1e-15);
    let err = eta_coefficients(&k, &[0.4, 0.4], &[1.0, 1.0], &[0.0, 0.0], 0.9).unwrap_err();
    assert!(matches!(err, Error::SingularGram { .. }));
}

#[test]
fn condition_check_reference_values() {
    let k = gaussian_kernel(1.0).unwrap();
    let tau: f64 = 0.9;
    let report = thm_g_condition_check(&k, tau, (0.1f64).min((1.0 - tau * tau) / 2.0), 0.3, 400).unwrap();
    assert!(report.k0_curvature_holds && report.k2_curvature_holds);
    assert!(report.far_k2_max <= 0.8854, "far K2 {}", report.far_k2_max);
    let low = thm_g_condition_check(&k, 0.5, 0.1, 0.3, 400).unwrap();
    assert!(!low.holds());
}

#[test]
fn delta_min_decreases_with_separation() {
    let k = gaussian_kernel(SIGMA).unwrap();
    let d4 = delta_min(&k, &[0.0, 4.0 * SIGMA], 2).unwrap();
    let d6 = delta_min(&k, &[0.0, 6.0 * SIGMA], 2).unwrap();
    assert!(d6 < d4);
    assert!(delta_min(&k, &[0.0, 200.0 * SIGMA], 2).unwrap() < 1e-12);
    assert!(matches!(delta_min(&k, &[0.3, 0.3], 2), Err(Error::InvalidParam(_))));
}
