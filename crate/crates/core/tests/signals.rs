//! Benchmark signals and dataset generation.

use lrdwaved::estimator::{deconvolve_coefficients, DeconvolutionProblem};
use lrdwaved::fourier::grid_norm_sq;
use lrdwaved::meyer::{forward_transform, max_level, MeyerWindow};
use lrdwaved::signals::{
    gamma_kernel, generate_dataset, DatasetTemplate, ExperimentConfig, TestSignal, GAMMA_SCALE, GAMMA_SHAPE,
};

/// (signal, peak-to-peak, Σ f(tᵢ), Σ f(tᵢ)²) at n = 4096, recorded when the
/// constants were frozen.
const GOLDEN: [(TestSignal, f64, f64, f64); 4] = [
    (TestSignal::Lidar, 1.600000000000000e0, 1.916093124999964e3, 2.449309045898412e3),
    (TestSignal::Doppler, 1.981120873648427e0, 3.962244975157053e2, 1.406702297317065e3),
    (TestSignal::Bumps, 8.842140187539934e0, 2.008309654896947e3, 6.529407570170903e3),
    (TestSignal::Cusp, 1.565492533463285e0, 3.959881507129731e3, 4.372369843750028e3),
];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * b.abs().max(1.0)
}

#[test]
fn golden_checksums() {
    for (signal, ptp, sum, sq) in GOLDEN {
        let v = signal.samples(4096);
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        let s: f64 = v.iter().sum();
        let q: f64 = v.iter().map(|x| x * x).sum();
        assert!(close(max - min, ptp), "{signal}: peak-to-peak {}", max - min);
        assert!(close(s, sum), "{signal}: sum {s}");
        assert!(close(q, sq), "{signal}: sum of squares {q}");
    }
}

#[test]
fn normalisation_constants_are_frozen() {
    let expected = [(TestSignal::Lidar, 1.6), (TestSignal::Doppler, 2.0), (TestSignal::Bumps, 1.75), (TestSignal::Cusp, 2.0)];
    for (signal, c) in expected {
        assert_eq!(signal.normalization(), c);
    }
}

#[test]
fn grid_norm_approximates_integral() {
    // ∫₀¹ sin²(2πt) dt = 1/2
    let v: Vec<f64> = (0..1024).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 1024.0).sin()).collect();
    assert!((grid_norm_sq(&v) - 0.5).abs() < 1e-12);
}

#[test]
fn datasets_depend_only_on_config_and_seed() {
    let config = ExperimentConfig::table_cell(TestSignal::Bumps, 0.4, 10.0, 4, 99);
    let a = generate_dataset(&config, 3).unwrap();
    let b = generate_dataset(&config, 3).unwrap();
    let c = generate_dataset(&config, 2).unwrap();
    assert_eq!(a.problem.observations(), b.problem.observations());
    assert_ne!(a.problem.observations(), c.problem.observations());
    let mut other = config.clone();
    other.seed = 100;
    let d = generate_dataset(&other, 3).unwrap();
    assert_ne!(a.problem.observations(), d.problem.observations());
}

#[test]
fn noiseless_deconvolution_recovers_projection() {
    let window = MeyerWindow::default();
    let n = 4096;
    let kernel = gamma_kernel(n, GAMMA_SHAPE, GAMMA_SCALE).unwrap();
    let j1 = max_level(n).unwrap();
    for signal in TestSignal::ALL {
        let truth = signal.samples(n);
        let blurred = kernel.blur(&truth).unwrap();
        let problem = DeconvolutionProblem::new(blurred, kernel.clone(), 1.0).unwrap();
        let got = deconvolve_coefficients(&window, &problem, 3, j1).unwrap().flatten();
        let want = forward_transform(&window, &truth, 3, j1).unwrap().flatten();
        let err: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = want.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err < 1e-6 * norm, "{signal}: relative error {}", err / norm);
    }
}

#[test]
fn empirical_snr_matches_target_after_undoing_dependence_factor() {
    // The added noise has standard deviation σ 2^{−α/2}; multiplying it back
    // by 2^{α/2} should give the nominal SNR, pooled over 50 replications.
    for &alpha in &[1.0, 0.6, 0.2] {
        let config = ExperimentConfig::table_cell(TestSignal::Doppler, alpha, 20.0, 50, 5);
        let template = DatasetTemplate::new(&config).unwrap();
        let mut noise_energy = 0.0;
        for idx in 0..50 {
            let data = template.realize(&config, idx).unwrap();
            let noise: Vec<f64> = data
                .problem
                .observations()
                .iter()
                .zip(data.blurred.iter())
                .map(|(y, b)| (y - b) * 2f64.powf(alpha / 2.0))
                .collect();
            noise_energy += grid_norm_sq(&noise) / 50.0;
        }
        let empirical = 10.0 * (grid_norm_sq(&template.blurred) / noise_energy).log10();
        assert!((empirical - 20.0).abs() <= 1.0, "α={alpha}: {empirical}");
    }
}

#[test]
fn signal_names_round_trip() {
    for signal in TestSignal::ALL {
        assert_eq!(signal.name().parse::<TestSignal>().unwrap(), signal);
        assert_eq!(signal.to_string().to_uppercase().parse::<TestSignal>().unwrap(), signal);
    }
    assert!("blocks".parse::<TestSignal>().is_err());
}
