//! The deconvolution estimator.
//!
//! Pipeline: estimate the noise level from the finest detail coefficients
//! of the raw observations, pick the fine level with the Fourier stopping
//! rule, build per-level thresholds, divide the observation spectrum by the
//! kernel and project onto the Meyer basis, hard-threshold, and resynthesise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::KernelSpec;
use crate::error::{Error, Result};
use crate::finescale::{estimate_fine_level, FineLevel, KernelChannel};
use crate::fourier::{log2_exact, SampledSignal, Spectrum};
use crate::meyer::{
    analyze_spectrum, band_bounds, finest_detail, forward_transform, inverse_transform, scale_band_limit,
    validate_levels, MeyerWindow, WaveletCoefficients,
};
use crate::noise::check_alpha;
use crate::thresholds::{build_policy, PolicyOptions, Smoothing, ThresholdMethod, ThresholdPolicy};

/// MAD-to-standard-deviation factor for Gaussian data.
const MAD_SCALE: f64 = 0.6745;

/// Coarse level used by WaveD.
pub const DEFAULT_J0: i64 = 3;

/// Observations of a blurred periodic signal with a known kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolutionProblem {
    observations: SampledSignal,
    kernel: KernelSpec,
    alpha: f64,
    kernel_channel: KernelChannel,
}

impl DeconvolutionProblem {
    pub fn new(observations: SampledSignal, kernel: KernelSpec, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n = observations.len();
        log2_exact(n)?;
        if kernel.n() != n {
            return Err(Error::KernelLength {
                got: kernel.n(),
                expected: n,
            });
        }
        Ok(DeconvolutionProblem {
            observations,
            kernel,
            alpha,
            kernel_channel: KernelChannel::Exact,
        })
    }

    pub fn with_kernel_channel(mut self, channel: KernelChannel) -> Self {
        self.kernel_channel = channel;
        self
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> &SampledSignal {
        &self.observations
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kernel_channel(&self) -> &KernelChannel {
        &self.kernel_channel
    }
}

/// `β̂_{j,k} = Σ_ℓ (Ỹ[ℓ]/K̃[ℓ]) conj(Ψ̃_{j,k}[ℓ])`, and likewise for the
/// scale coefficients, with sums restricted to the band of each level.
pub fn deconvolve_coefficients(
    window: &MeyerWindow,
    problem: &DeconvolutionProblem,
    j0: i64,
    j1: i64,
) -> Result<WaveletCoefficients> {
    let n = problem.n();
    validate_levels(n, j0, j1)?;
    let observed = Spectrum::of_signal(problem.observations());
    let kernel = problem.kernel();
    let mut ratio = Spectrum::zeros(n);

    let mut fill = |l: i64, level: i64| -> Result<()> {
        let k = kernel.at(l);
        if k.norm() == 0.0 {
            return Err(Error::VanishingKernel { frequency: l, level });
        }
        ratio.set(l, observed.get(l) / k);
        Ok(())
    };
    let limit = scale_band_limit(j0);
    for l in -limit..=limit {
        fill(l, j0)?;
    }
    for j in j0..=j1 {
        let (lo, hi) = band_bounds(j);
        for a in lo..=hi {
            fill(-a, j)?;
            fill(a, j)?;
        }
    }
    analyze_spectrum(window, &ratio, j0, j1)
}

/// Finest level of the grid, `log₂ n − 1`, with its band cut at Nyquist.
pub fn default_sigma_level(n: usize) -> Result<i64> {
    Ok(log2_exact(n)? - 1)
}

/// `σ̂ = MAD(y_{J,k}) / 0.6745`, in per-sample units, from the level-`J`
/// detail coefficients of the raw observations. `J` may be any level of
/// the transform or the truncated finest level `log₂ n − 1`.
pub fn estimate_sigma(window: &MeyerWindow, observations: &[f64], level: i64) -> Result<f64> {
    let n = observations.len();
    let finest = default_sigma_level(n)?;
    if level != finest {
        validate_levels(n, level, level)?;
    }
    let have = 1usize << level.max(0);
    if have < 8 {
        return Err(Error::TooFewCoefficients { level, have, need: 8 });
    }
    let mut values = if level == finest {
        finest_detail(window, observations)?
    } else {
        forward_transform(window, observations, level, level)?.detail(level).to_vec()
    };
    let med = median(&mut values);
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    Ok(median(&mut deviations) / MAD_SCALE * (n as f64).sqrt())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Keeps `β̂_{j,k}` iff `|β̂_{j,k}| ≥ λ_j`. Returns the thresholded
/// coefficients and the kept count per level.
pub fn hard_threshold(
    coeffs: &WaveletCoefficients,
    policy: &ThresholdPolicy,
) -> (WaveletCoefficients, Vec<usize>) {
    let mut out = coeffs.clone();
    if let Some(lambda) = policy.scale_lambda {
        for v in out.scale_mut() {
            if v.abs() < lambda {
                *v = 0.0;
            }
        }
    }
    let mut kept = Vec::new();
    for j in coeffs.levels() {
        let lambda = if j <= policy.j1 && j >= policy.j0 {
            policy.lambda(j)
        } else {
            f64::INFINITY
        };
        let mut count = 0;
        for v in out.detail_mut(j) {
            if v.abs() >= lambda {
                count += 1;
            } else {
                *v = 0.0;
            }
        }
        kept.push(count);
    }
    (out, kept)
}

/// Tuning that is not part of the method itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub j0: i64,
    pub j1_override: Option<i64>,
    /// Level used for `σ̂`; defaults to `log₂ n − 1`.
    pub sigma_level: Option<i64>,
    pub policy: PolicyOptions,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            j0: DEFAULT_J0,
            j1_override: None,
            sigma_level: None,
            policy: PolicyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub method: ThresholdMethod,
    pub sigma_hat: f64,
    pub fine_level_used: i64,
    /// Stopping-rule details when the fine level was estimated.
    pub fine_level: Option<FineLevel>,
    pub policy: ThresholdPolicy,
    /// Kept detail coefficients per level `j0..=j1`.
    pub kept_count: Vec<usize>,
    pub raw_coefficients: WaveletCoefficients,
    pub coefficients: WaveletCoefficients,
    pub estimate: SampledSignal,
}

/// Runs the full estimator.
pub fn run_estimator(
    window: &MeyerWindow,
    problem: &DeconvolutionProblem,
    method: ThresholdMethod,
    smoothing: Smoothing,
    options: &EstimatorOptions,
) -> Result<EstimateReport> {
    let n = problem.n();
    let alpha = problem.alpha();
    let sigma_level = match options.sigma_level {
        Some(level) => level,
        None => default_sigma_level(n)?,
    };
    let sigma_hat = estimate_sigma(window, problem.observations(), sigma_level)?;

    let (j1, fine_level) = match options.j1_override {
        Some(j1) => (j1, None),
        None => {
            let rule_alpha = match method {
                ThresholdMethod::Iid => 1.0,
                ThresholdMethod::Lrd => alpha,
            };
            let fine = estimate_fine_level(problem, rule_alpha, sigma_hat, options.j0)?;
            (fine.level, Some(fine))
        }
    };
    validate_levels(n, options.j0, j1)?;

    let policy = build_policy(
        window,
        method,
        problem.kernel(),
        n,
        alpha,
        sigma_hat,
        smoothing.resolve(alpha),
        options.j0,
        j1,
        options.policy,
    )?;
    let raw = deconvolve_coefficients(window, problem, options.j0, j1)?;
    let (kept_coefficients, kept_count) = hard_threshold(&raw, &policy);
    let estimate = inverse_transform(window, &kept_coefficients, n)?;
    Ok(EstimateReport {
        method,
        sigma_hat,
        fine_level_used: j1,
        fine_level,
        policy,
        kept_count,
        raw_coefficients: raw,
        coefficients: kept_coefficients,
        estimate,
    })
}

/// Spectrum of a kernel observation as stored in [`KernelChannel::Observed`].
pub fn observed_channel(values: &[(f64, f64)]) -> KernelChannel {
    KernelChannel::Observed(values.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
}
