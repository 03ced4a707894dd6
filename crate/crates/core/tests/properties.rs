//! Structural properties of the transform, the covariance oracle, the
//! thresholds and the stopping rule.

use num_complex::Complex64;
use proptest::prelude::*;

use lrdwaved::covariance::{tau_level, z_cov, KernelSpec};
use lrdwaved::estimator::{run_estimator, DeconvolutionProblem, EstimatorOptions};
use lrdwaved::finescale::stopping_time;
use lrdwaved::meyer::{band_set, forward_transform, inverse_transform, MeyerWindow, WaveletCoefficients};
use lrdwaved::signals::{gamma_kernel, GAMMA_SCALE, GAMMA_SHAPE};
use lrdwaved::thresholds::{build_policy, PolicyOptions, Smoothing, ThresholdMethod};
use lrdwaved::SampledSignal;

fn coefficients(n: usize, j0: i64, j1: i64, values: &[f64]) -> WaveletCoefficients {
    let mut c = WaveletCoefficients::zeros(n, j0, j1).unwrap();
    let mut it = values.iter().cycle();
    for v in c.scale_mut() {
        *v = *it.next().unwrap();
    }
    for j in j0..=j1 {
        for v in c.detail_mut(j) {
            *v = *it.next().unwrap();
        }
    }
    c
}

#[test]
fn partition_of_unity_on_dense_grid() {
    let window = MeyerWindow::default();
    for i in 0..10_000 {
        let omega = -2.0 + 4.0 * i as f64 / 9_999.0;
        let mut total = window.phi_hat(omega).powi(2);
        for j in 0..=12 {
            total += window.psi_hat(omega / 2f64.powi(j)).norm_sqr();
        }
        assert!((total - 1.0).abs() < 1e-12, "ω = {omega}: {total}");
    }
}

#[test]
fn sampled_basis_is_orthonormal() {
    let window = MeyerWindow::default();
    let (n, j0, j1) = (1024, 3, 7);
    let size = WaveletCoefficients::zeros(n, j0, j1).unwrap().flatten().len();
    let basis: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            let mut unit = vec![0.0; size];
            unit[i] = 1.0;
            let c = coefficients(n, j0, j1, &unit);
            let mut flat_check = c.flatten();
            flat_check[i] -= 1.0;
            assert!(flat_check.iter().all(|v| *v == 0.0));
            inverse_transform(&window, &c, n).unwrap().into_values()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..size {
        for b in a..size {
            let dot = basis[a].iter().zip(&basis[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    assert!(worst < 1e-8, "Gram matrix off by {worst}");
}

#[test]
fn identity_kernel_white_noise_tau_is_one() {
    let window = MeyerWindow::default();
    let kernel = KernelSpec::identity(1024);
    for j in 3..=7 {
        let tau = tau_level(&window, j, &kernel, 1.0).unwrap();
        assert!((tau - 1.0).abs() < 1e-12, "j = {j}: {tau}");
    }
}

#[test]
fn tau_is_finite_and_positive_for_gamma_kernel() {
    let window = MeyerWindow::default();
    let kernel = gamma_kernel(4096, GAMMA_SHAPE, GAMMA_SCALE).unwrap();
    for &alpha in &[1.0, 0.8, 0.6, 0.4, 0.2] {
        for j in 3..=10 {
            let tau = tau_level(&window, j, &kernel, alpha).unwrap();
            assert!(tau.is_finite() && tau > 0.0, "α = {alpha}, j = {j}: {tau}");
        }
    }
}

#[test]
fn lrd_thresholds_grow_with_dependence() {
    let window = MeyerWindow::default();
    let n = 4096;
    let kernel = gamma_kernel(n, GAMMA_SHAPE, GAMMA_SCALE).unwrap();
    let mut previous: Option<Vec<f64>> = None;
    for &alpha in &[1.0, 0.8, 0.6, 0.4, 0.2] {
        let policy = build_policy(
            &window,
            ThresholdMethod::Lrd,
            &kernel,
            n,
            alpha,
            0.1,
            1.0,
            3,
            8,
            PolicyOptions::default(),
        )
        .unwrap();
        assert!(policy.lambdas.iter().all(|l| *l > 0.0));
        if let Some(prev) = &previous {
            for (a, b) in prev.iter().zip(&policy.lambdas) {
                assert!(b >= a, "α = {alpha}: {b} < {a}");
            }
        }
        previous = Some(policy.lambdas);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn aux_is_antisymmetric(x in 0.0f64..=1.0) {
        let w = MeyerWindow::default();
        prop_assert!((w.aux(x) + w.aux(1.0 - x) - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&w.aux(x)));
    }

    #[test]
    fn transform_round_trip(
        values in prop::collection::vec(-10.0f64..10.0, 64..256),
        log_n in 7u32..=11,
        j0 in 1i64..=3,
        span in 0i64..=4,
    ) {
        let n = 1usize << log_n;
        let j1 = (j0 + span).min(log_n as i64 - 2);
        let window = MeyerWindow::default();
        let c = coefficients(n, j0, j1, &values);
        let signal = inverse_transform(&window, &c, n).unwrap();
        let back = forward_transform(&window, &signal, j0, j1).unwrap();
        let a = c.flatten();
        let b = back.flatten();
        let err: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-9 * norm.max(1.0), "relative error {}", err / norm);
    }

    #[test]
    fn band_sets_two_apart_never_meet(j in 0i64..20, gap in 2i64..6) {
        let a = band_set(j).unwrap();
        let b = band_set(j + gap).unwrap();
        let (lo, hi) = lrdwaved::meyer::band_bounds(j);
        for l in lo..=hi {
            prop_assert!(a.contains(l) && !b.contains(l));
        }
    }

    #[test]
    fn z_cov_is_hermitian(omega in 1i64..300, l in 1i64..300, s1 in any::<bool>(), s2 in any::<bool>(), alpha in 0.05f64..=1.0) {
        let window = MeyerWindow::default();
        let hurst = 1.0 - alpha / 2.0;
        let o = if s1 { omega } else { -omega };
        let q = if s2 { l } else { -l };
        let a = z_cov(&window, o, q, hurst).unwrap();
        let b = z_cov(&window, q, o, hurst).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn stopping_index_and_level(mags in prop::collection::vec(0.0f64..2.0, 1..400), alpha in 0.05f64..=1.0, eps in 0.001f64..0.5) {
        let seq: Vec<Complex64> = mags.iter().map(|m| Complex64::new(*m, 0.0)).collect();
        let r = stopping_time(&seq, alpha, eps).unwrap();
        prop_assert!(r.m >= 1 && r.m <= seq.len());
        prop_assert_eq!(r.j_hat, (r.m as f64).log2().floor() as i64 - 1);
        prop_assert_eq!(r.trace.len(), r.m);
        prop_assert_eq!(&r, &stopping_time(&seq, alpha, eps).unwrap());
    }

    #[test]
    fn stronger_dependence_stops_no_later(mags in prop::collection::vec(0.0f64..1.0, 1..2048), log_n in 12u32..16) {
        // Frequencies up to n/2 with ε = n^{-1/2} keep ℓ^{1/2} ε below one.
        let seq: Vec<Complex64> = mags.iter().map(|m| Complex64::new(*m, 0.0)).collect();
        let eps = (2f64.powi(log_n as i32)).sqrt().recip();
        let strong = stopping_time(&seq, 0.2, eps).unwrap();
        let weak = stopping_time(&seq, 1.0, eps).unwrap();
        prop_assert!(strong.j_hat <= weak.j_hat);
    }
}

fn smooth_problem(n: usize, scale: f64) -> DeconvolutionProblem {
    let kernel = gamma_kernel(n, GAMMA_SHAPE, GAMMA_SCALE).unwrap();
    let truth = SampledSignal::from_fn(n, |t| (2.0 * std::f64::consts::PI * t).sin() + (t - 0.5).abs());
    let blurred = kernel.blur(&truth).unwrap();
    let noisy: Vec<f64> = blurred
        .iter()
        .enumerate()
        .map(|(i, v)| scale * (v + 0.05 * ((i * 7919 % 211) as f64 / 105.0 - 1.0)))
        .collect();
    DeconvolutionProblem::new(SampledSignal::new(noisy), kernel, 0.6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn estimator_is_scale_equivariant(c in 0.1f64..10.0, lrd in any::<bool>()) {
        let window = MeyerWindow::default();
        let method = if lrd { ThresholdMethod::Lrd } else { ThresholdMethod::Iid };
        let smoothing = if lrd { Smoothing::SQRT_ALPHA } else { Smoothing::SQRT_6 };
        // The stopping rule compares a fixed kernel with the noise level, so
        // the fine level is held fixed here.
        let options = EstimatorOptions { j1_override: Some(6), ..EstimatorOptions::default() };
        let base = run_estimator(&window, &smooth_problem(512, 1.0), method, smoothing, &options).unwrap();
        let scaled = run_estimator(&window, &smooth_problem(512, c), method, smoothing, &options).unwrap();
        prop_assert!((scaled.sigma_hat - c * base.sigma_hat).abs() <= 1e-9 * scaled.sigma_hat);
        prop_assert_eq!(&base.kept_count, &scaled.kept_count);
        for (a, b) in base.estimate.iter().zip(scaled.estimate.iter()) {
            prop_assert!((c * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn estimate_is_inverse_of_kept_coefficients(seed in any::<u8>()) {
        let window = MeyerWindow::default();
        let mut problem = smooth_problem(1024, 1.0 + seed as f64 / 64.0);
        problem = problem.with_kernel_channel(lrdwaved::finescale::KernelChannel::Synthetic { seed: seed as u64, noise_level: None });
        let report = run_estimator(&window, &problem, ThresholdMethod::Lrd, Smoothing::SQRT_2ALPHA, &EstimatorOptions::default()).unwrap();
        for (i, j) in (report.policy.j0..=report.policy.j1).enumerate() {
            prop_assert!(report.kept_count[i] <= 1usize << j);
        }
        let rebuilt = inverse_transform(&window, &report.coefficients, 1024).unwrap();
        prop_assert_eq!(rebuilt, report.estimate);
    }
}
