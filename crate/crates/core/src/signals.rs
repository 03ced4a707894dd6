//! Benchmark signals, the Gamma blur kernel and synthetic datasets.

use serde::{Deserialize, Serialize};

use crate::covariance::KernelSpec;
use crate::error::{Error, Result};
use crate::estimator::DeconvolutionProblem;
use crate::finescale::KernelChannel;
use crate::fourier::{is_power_of_two, SampledSignal};
use crate::noise::{check_alpha, NoiseKind, NoiseModel};
use crate::rng;
use crate::thresholds::{Smoothing, ThresholdMethod};

/// Scale parameter of the default Gamma blur.
pub const GAMMA_SCALE: f64 = 0.25;
/// Shape parameter of the default Gamma blur (also its degree of ill-posedness).
pub const GAMMA_SHAPE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSignal {
    Lidar,
    Doppler,
    Bumps,
    Cusp,
}

impl TestSignal {
    pub const ALL: [TestSignal; 4] = [
        TestSignal::Lidar,
        TestSignal::Doppler,
        TestSignal::Bumps,
        TestSignal::Cusp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestSignal::Lidar => "lidar",
            TestSignal::Doppler => "doppler",
            TestSignal::Bumps => "bumps",
            TestSignal::Cusp => "cusp",
        }
    }

    /// Multiplier applied to the raw definition. Chosen so that the
    /// bias-dominated benchmark cells (α = 1, 10dB) have the published
    /// magnitudes; locked by the golden tests.
    pub fn normalization(self) -> f64 {
        match self {
            TestSignal::Lidar => 1.6,
            TestSignal::Doppler => 2.0,
            TestSignal::Bumps => 1.75,
            TestSignal::Cusp => 2.0,
        }
    }

    /// Value at `t ∈ [0, 1)`, including the normalisation.
    pub fn eval(self, t: f64) -> f64 {
        self.normalization()
            * match self {
                TestSignal::Lidar => lidar(t),
                TestSignal::Doppler => doppler(t),
                TestSignal::Bumps => bumps(t),
                TestSignal::Cusp => cusp(t),
            }
    }

    pub fn samples(self, n: usize) -> SampledSignal {
        SampledSignal::from_fn(n, |t| self.eval(t))
    }
}

impl std::str::FromStr for TestSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lidar" => Ok(TestSignal::Lidar),
            "doppler" => Ok(TestSignal::Doppler),
            "bumps" => Ok(TestSignal::Bumps),
            "cusp" => Ok(TestSignal::Cusp),
            _ => Err(Error::UnknownSignal(s.to_string())),
        }
    }
}

impl std::fmt::Display for TestSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn make_signal(name: &str, n: usize) -> Result<SampledSignal> {
    Ok(name.parse::<TestSignal>()?.samples(n))
}

fn doppler(t: f64) -> f64 {
    (t * (1.0 - t)).max(0.0).sqrt() * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
}

fn cusp(t: f64) -> f64 {
    (t - 0.37).abs().sqrt()
}

// WaveLab MakeSignal('Bumps') constants.
const BUMP_POS: [f64; 11] = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BUMP_HGT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WTH: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

fn bumps(t: f64) -> f64 {
    BUMP_POS
        .iter()
        .zip(BUMP_HGT.iter().zip(BUMP_WTH.iter()))
        .map(|(p, (h, w))| h * (1.0 + ((t - p) / w).abs()).powi(-4))
        .sum()
}

// LIDAR-style return profile: two plateaus followed by two narrow
// triangular echoes. Breakpoints as (start, end, height) and peaks as
// (centre, half-width, height).
const LIDAR_PLATEAUS: [(f64, f64, f64); 2] = [(0.15, 0.35, 0.6), (0.35, 0.50, 1.0)];
const LIDAR_PEAKS: [(f64, f64, f64); 2] = [(0.65, 0.015, 0.9), (0.80, 0.015, 0.6)];

fn lidar(t: f64) -> f64 {
    let plateau: f64 = LIDAR_PLATEAUS
        .iter()
        .filter(|(a, b, _)| t >= *a && t < *b)
        .map(|(_, _, h)| h)
        .sum();
    let peaks: f64 = LIDAR_PEAKS
        .iter()
        .map(|(c, w, h)| h * (1.0 - (t - c).abs() / w).max(0.0))
        .sum();
    plateau + peaks
}

/// Gamma density sampled at `t = (i+1)/n`, normalised to unit sum and used
/// as the circular-convolution weight at lag `i`.
pub fn gamma_kernel(n: usize, shape: f64, scale: f64) -> Result<KernelSpec> {
    if !(shape > 0.0 && shape <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "shape",
            value: shape,
            constraint: "must lie in (0, 1]",
        });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "scale",
            value: scale,
            constraint: "must be positive",
        });
    }
    let weights: Vec<f64> = (1..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            t.powf(shape - 1.0) * (-t / scale).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    KernelSpec::from_weights(&normalized, Some(shape))
}

/// `σ = ‖K*f‖ · 10^{−SNR/20}` with the grid-normalised norm.
pub fn calibrate_sigma(blurred: &[f64], snr_db: f64) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter {
            name: "snr_db",
            value: snr_db,
            constraint: "must be finite",
        });
    }
    let norm = SampledSignal::new(blurred.to_vec()).norm();
    if norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(norm * 10f64.powf(-snr_db / 20.0))
}

/// `10 log₁₀(‖K*f‖²/σ²)`.
pub fn snr_db(blurred: &[f64], sigma: f64) -> f64 {
    let norm = SampledSignal::new(blurred.to_vec()).norm();
    20.0 * (norm / sigma).log10()
}

fn default_methods() -> Vec<ThresholdMethod> {
    vec![ThresholdMethod::Iid, ThresholdMethod::Lrd, ThresholdMethod::Lrd]
}

fn default_smoothing() -> Vec<Smoothing> {
    vec![Smoothing::SQRT_6, Smoothing::SQRT_ALPHA, Smoothing::SQRT_2ALPHA]
}

fn default_nu() -> f64 {
    GAMMA_SHAPE
}

/// One cell of the simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: TestSignal,
    pub n: usize,
    pub alpha: f64,
    /// Gamma shape parameter, equal to the degree of ill-posedness.
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub snr_db: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<ThresholdMethod>,
    #[serde(default = "default_smoothing")]
    pub smoothing: Vec<Smoothing>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseKind,
}

impl ExperimentConfig {
    /// The three-method layout of the comparison tables.
    pub fn table_cell(signal: TestSignal, alpha: f64, snr_db: f64, replications: usize, seed: u64) -> Self {
        ExperimentConfig {
            signal,
            n: 4096,
            alpha,
            nu: GAMMA_SHAPE,
            snr_db,
            methods: default_methods(),
            smoothing: default_smoothing(),
            replications,
            seed,
            noise: NoiseKind::Farima,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !is_power_of_two(self.n) || self.n < 32 {
            return Err(Error::NotPowerOfTwo { n: self.n });
        }
        check_alpha(self.alpha)?;
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: self.nu,
                constraint: "must lie in (0, 1] (Gamma shape)",
            });
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidParameter {
                name: "snr_db",
                value: self.snr_db,
                constraint: "must be finite",
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                value: 0.0,
                constraint: "must be at least 1",
            });
        }
        if self.methods.len() != self.smoothing.len() {
            return Err(Error::InvalidParameter {
                name: "smoothing",
                value: self.smoothing.len() as f64,
                constraint: "needs one entry per method",
            });
        }
        for s in &self.smoothing {
            if !(s.resolve(self.alpha) > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "smoothing",
                    value: s.resolve(self.alpha),
                    constraint: "must be positive",
                });
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        gamma_kernel(self.n, self.nu, GAMMA_SCALE)
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub problem: DeconvolutionProblem,
    pub truth: SampledSignal,
    pub blurred: SampledSignal,
    pub sigma: f64,
    /// Standard deviation of the added noise, `σ 2^{−α/2}`.
    pub noise_sd: f64,
}

/// Noise-free ingredients shared by all replications of a configuration.
#[derive(Debug, Clone)]
pub struct DatasetTemplate {
    pub truth: SampledSignal,
    pub blurred: SampledSignal,
    pub kernel: KernelSpec,
    pub sigma: f64,
}

impl DatasetTemplate {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let truth = config.signal.samples(config.n);
        let kernel = config.kernel()?;
        let blurred = kernel.blur(&truth)?;
        let sigma = calibrate_sigma(&blurred, config.snr_db)?;
        Ok(DatasetTemplate {
            truth,
            blurred,
            kernel,
            sigma,
        })
    }

    /// Replication `index`: `yᵢ = (k*f)(tᵢ) + σ 2^{−α/2} eᵢ` with
    /// standardised noise drawn from stream `index` of the master seed.
    pub fn realize(&self, config: &ExperimentConfig, index: u64) -> Result<Dataset> {
        self.realize_with_sigma(config, index, self.sigma)
    }

    pub fn realize_with_sigma(&self, config: &ExperimentConfig, index: u64, sigma: f64) -> Result<Dataset> {
        let noise_sd = sigma * 2f64.powf(-config.alpha / 2.0);
        let observations: Vec<f64> = if sigma == 0.0 {
            self.blurred.to_vec()
        } else {
            let model = NoiseModel::new(config.alpha, config.noise, config.seed)?;
            let e = model.sample_with(config.n, &mut rng::stream(config.seed, index))?;
            self.blurred.iter().zip(&e).map(|(b, e)| b + noise_sd * e).collect()
        };
        let channel = KernelChannel::Synthetic {
            seed: rng::derive_seed(config.seed, index),
            noise_level: Some(noise_sd),
        };
        let problem = DeconvolutionProblem::new(observations.into(), self.kernel.clone(), config.alpha)?
            .with_kernel_channel(channel);
        Ok(Dataset {
            problem,
            truth: self.truth.clone(),
            blurred: self.blurred.clone(),
            sigma,
            noise_sd,
        })
    }
}

/// Dataset for replication `index` of a configuration.
pub fn generate_dataset(config: &ExperimentConfig, index: u64) -> Result<Dataset> {
    DatasetTemplate::new(config)?.realize(config, index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_landmarks() {
        assert_eq!(TestSignal::Cusp.eval(0.37), 0.0);
        assert!(TestSignal::Doppler.eval(0.0).abs() < 1e-15);
        assert!(TestSignal::Doppler.eval(1.0).abs() < 1e-15);
        let b = TestSignal::Bumps.samples(4096);
        assert!(b.iter().all(|v| *v >= 0.0));
        assert!("sine".parse::<TestSignal>().is_err());
        assert!(make_signal("CUSP", 64).is_ok());
    }

    #[test]
    fn gamma_kernel_basics() {
        let k = gamma_kernel(1024, 0.7, 0.25).unwrap();
        assert!((k.at(0).re - 1.0).abs() < 1e-12 && k.at(0).im.abs() < 1e-12);
        for l in 1..100 {
            assert!((k.at(-l) - k.at(l).conj()).norm() < 1e-12);
        }
        assert_eq!(k.dip(), Some(0.7));
        assert!(gamma_kernel(64, 1.5, 0.25).is_err());
        assert!(gamma_kernel(64, 0.7, 0.0).is_err());
    }

    #[test]
    fn sigma_calibration() {
        let blurred = vec![1.0, -1.0, 1.0, -1.0];
        assert!((calibrate_sigma(&blurred, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((calibrate_sigma(&blurred, 20.0).unwrap() - 0.1).abs() < 1e-15);
        let s = calibrate_sigma(&blurred, 13.7).unwrap();
        assert!((snr_db(&blurred, s) - 13.7).abs() < 1e-9);
        assert!(matches!(calibrate_sigma(&[0.0; 4], 10.0), Err(Error::ZeroSignal)));
    }

    #[test]
    fn zero_sigma_gives_blurred_truth() {
        let cfg = ExperimentConfig::table_cell(TestSignal::Cusp, 0.6, 20.0, 1, 3);
        let t = DatasetTemplate::new(&ExperimentConfig { n: 256, ..cfg.clone() }).unwrap();
        let d = t.realize_with_sigma(&ExperimentConfig { n: 256, ..cfg }, 0, 0.0).unwrap();
        assert_eq!(d.problem.observations().values(), d.blurred.values());
    }

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::table_cell(TestSignal::Bumps, 0.4, 10.0, 2, 1);
        assert!(ok.validate().is_ok());
        assert!(ExperimentConfig { n: 1000, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { replications: 0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { alpha: 0.0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { methods: vec![ThresholdMethod::Iid], ..ok }.validate().is_err());
    }

    #[test]
    fn datasets_are_deterministic() {
        let cfg = ExperimentConfig { n: 512, ..ExperimentConfig::table_cell(TestSignal::Doppler, 0.6, 20.0, 1, 9) };
        let a = generate_dataset(&cfg, 4).unwrap();
        let b = generate_dataset(&cfg, 4).unwrap();
        let c = generate_dataset(&cfg, 5).unwrap();
        assert_eq!(a.problem.observations(), b.problem.observations());
        assert_ne!(a.problem.observations(), c.problem.observations());
    }
}
