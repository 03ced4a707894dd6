//! Monte Carlo harness behaviour.

use std::sync::OnceLock;

use lrdwaved::bench::{
    compare_with_published, run_benchmark, run_table, BenchOptions, BenchResult, TableSpec, PUBLISHED_ALPHAS,
};
use lrdwaved::signals::{ExperimentConfig, TestSignal};

fn small(signal: TestSignal, alpha: f64, m: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::table_cell(signal, alpha, 20.0, m, 77);
    c.n = 1024;
    c
}

#[test]
fn identical_config_gives_identical_result() {
    let config = small(TestSignal::Bumps, 0.4, 8);
    let a = run_benchmark(&config, &BenchOptions::default()).unwrap();
    let b = run_benchmark(&config, &BenchOptions { threads: Some(1), ..Default::default() }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replications, 8);
    for m in &a.methods {
        assert!(m.mean_mse >= 0.0 && m.se >= 0.0);
        assert_eq!(m.j1_counts.values().sum::<usize>(), 8);
    }
}

#[test]
fn standard_error_shrinks_like_root_m() {
    let se = |m: usize| run_benchmark(&small(TestSignal::Doppler, 0.6, m), &BenchOptions::default()).unwrap();
    let (a, b) = (se(16), se(64));
    for (x, y) in a.methods.iter().zip(&b.methods) {
        let ratio = x.se / y.se;
        assert!((1.3..=3.0).contains(&ratio), "{}: SE ratio {ratio}", x.label());
    }
}

#[test]
fn lrd_beats_iid_for_cusp_under_strong_dependence() {
    for &alpha in &[0.6, 0.4, 0.2] {
        let config = ExperimentConfig::table_cell(TestSignal::Cusp, alpha, 20.0, 64, 2024);
        let r = run_benchmark(&config, &BenchOptions::default()).unwrap();
        assert!(r.methods[2].mean_mse < r.methods[0].mean_mse, "α={alpha}: {:?}", r.methods);
    }
}

fn full_table() -> &'static Vec<BenchResult> {
    static TABLE: OnceLock<Vec<BenchResult>> = OnceLock::new();
    TABLE.get_or_init(|| run_table(&TableSpec::full(64, 2024), &BenchOptions::default()).unwrap())
}

#[test]
fn winner_family_agrees_in_every_table_section() {
    let cells = compare_with_published(full_table());
    let mut failures = Vec::new();
    for signal in TestSignal::ALL {
        let section: Vec<_> = cells.iter().filter(|c| c.signal == signal).collect();
        assert_eq!(section.len(), 15);
        let agree = section.iter().filter(|c| c.family_agrees()).count();
        if agree < 12 {
            failures.push(format!("{signal}: {agree}/15"));
        }
    }
    assert!(failures.is_empty(), "sections below 80%: {failures:?}");
}

#[test]
fn error_grows_as_dependence_strengthens() {
    let results = full_table();
    let mut failures = Vec::new();
    for signal in TestSignal::ALL {
        for &snr in &[10.0, 20.0, 30.0] {
            let series: Vec<&BenchResult> = PUBLISHED_ALPHAS
                .iter()
                .map(|&a| {
                    results
                        .iter()
                        .find(|r| r.config.signal == signal && r.config.snr_db == snr && r.config.alpha == a)
                        .unwrap()
                })
                .collect();
            for method in 0..3 {
                let mut inversions = 0;
                let mut beyond_noise = false;
                for w in series.windows(2) {
                    let (prev, next) = (&w[0].methods[method], &w[1].methods[method]);
                    if next.mean_mse < prev.mean_mse {
                        inversions += 1;
                        let tolerance = 2.0 * (prev.se.powi(2) + next.se.powi(2)).sqrt();
                        beyond_noise |= prev.mean_mse - next.mean_mse > tolerance;
                    }
                }
                if inversions > 1 || beyond_noise {
                    failures.push(format!(
                        "{signal} {snr}dB {}: {:?}",
                        series[0].methods[method].label(),
                        series.iter().map(|r| r.methods[method].mean_mse).collect::<Vec<_>>()
                    ));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
