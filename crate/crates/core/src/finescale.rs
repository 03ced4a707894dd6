//! Data-driven choice of the finest resolution level.
//!
//! The rule scans a noisy observation of the kernel's Fourier coefficients,
//! `Ỹ_e[ℓ] = K̃[ℓ] + ε^α W_H[ℓ]`, and stops at the first frequency where the
//! magnitude falls below `ℓ^{α/2} ε^α log(1/ε²)`. The fine level is then
//! `⌊log₂ M⌋ − 1`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::KernelSpec;
use crate::error::{Error, Result};
use crate::estimator::DeconvolutionProblem;
use crate::fourier::log2_exact;
use crate::noise::check_alpha;
use crate::rng;
use crate::thresholds::fine_level_theoretical;

/// Factor applied to `σ̂` in the data-driven cutoff. One half turns
/// `log(1/ε²)` into `log(1/ε)` for `ε = n^{−1/2}`.
pub const CUTOFF_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub ell: usize,
    pub magnitude: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingResult {
    /// First stopped frequency, or the last scanned one when saturated.
    pub m: usize,
    pub j_hat: i64,
    /// No frequency met the cutoff.
    pub saturated: bool,
    pub trace: Vec<TracePoint>,
}

/// Stopping rule on `seq[i] = Ỹ_e[i + 1]`.
pub fn stopping_time(seq: &[Complex64], alpha: f64, epsilon: f64) -> Result<StoppingResult> {
    stopping_time_scaled(seq, alpha, epsilon, 1.0)
}

/// Stopping rule with the cutoff multiplied by a noise amplitude, i.e.
/// `amplitude · ℓ^{α/2} ε^α log(1/ε²)`. With `ε = n^{−1/2}` the amplitude
/// plays the role of the per-sample noise level.
pub fn stopping_time_scaled(
    seq: &[Complex64],
    alpha: f64,
    epsilon: f64,
    amplitude: f64,
) -> Result<StoppingResult> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            constraint: "must lie in (0, 1)",
        });
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            constraint: "must be finite and nonnegative",
        });
    }
    if seq.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sequence length",
            value: 0.0,
            constraint: "must cover at least one frequency",
        });
    }
    let level = amplitude * epsilon.powf(alpha) * (1.0 / (epsilon * epsilon)).ln();
    let mut trace = Vec::new();
    let mut stop = None;
    for (i, y) in seq.iter().enumerate() {
        let ell = i + 1;
        let cutoff = (ell as f64).powf(alpha / 2.0) * level;
        let magnitude = y.norm();
        trace.push(TracePoint { ell, magnitude, cutoff });
        if magnitude <= cutoff {
            stop = Some(ell);
            break;
        }
    }
    let (m, saturated) = match stop {
        Some(m) => (m, false),
        None => (seq.len(), true),
    };
    Ok(StoppingResult {
        m,
        j_hat: (m as f64).log2().floor() as i64 - 1,
        saturated,
        trace,
    })
}

/// Where the kernel observation comes from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum KernelChannel {
    /// `Ỹ_e = K̃`, no noise.
    #[default]
    Exact,
    /// `K̃[ℓ] + a ε^α W[ℓ]` with independent complex Gaussians `W[ℓ]` of
    /// variance `|ℓ|^{α−1}`. The amplitude `a` is `noise_level` if given and
    /// the estimated noise level otherwise.
    Synthetic { seed: u64, noise_level: Option<f64> },
    /// A measured sequence, `values[i] = Ỹ_e[i + 1]`.
    Observed(Vec<Complex64>),
}

/// Builds `Ỹ_e[1..=l_max]`.
pub fn kernel_observation(
    kernel: &KernelSpec,
    channel: &KernelChannel,
    noise_alpha: f64,
    epsilon: f64,
    default_amplitude: f64,
    l_max: usize,
) -> Vec<Complex64> {
    match channel {
        KernelChannel::Exact => (1..=l_max).map(|l| kernel.at(l as i64)).collect(),
        KernelChannel::Synthetic { seed, noise_level } => {
            let amp = noise_level.unwrap_or(default_amplitude) * epsilon.powf(noise_alpha);
            let mut rng = rng::stream(*seed, 0);
            (1..=l_max)
                .map(|l| {
                    let sd = ((l as f64).powf(noise_alpha - 1.0) / 2.0).sqrt() * amp;
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    kernel.at(l as i64) + Complex64::new(re * sd, im * sd)
                })
                .collect()
        }
        KernelChannel::Observed(values) => values.iter().take(l_max).copied().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineLevel {
    pub level: i64,
    pub stopping: StoppingResult,
    /// The raw estimate was below the coarse level.
    pub clamped_low: bool,
    pub clamped_high: bool,
}

/// Fine level for a problem under the stopping rule with dependence
/// `rule_alpha` (1 for the WaveD default), `ε = n^{−1/2}` and cutoff
/// amplitude [`CUTOFF_SCALE`]` · σ̂`, clamped to
/// `[j0, min(⌊log₂(n / log n)⌋, log₂ n − 2)]`.
pub fn estimate_fine_level(
    problem: &DeconvolutionProblem,
    rule_alpha: f64,
    sigma_hat: f64,
    j0: i64,
) -> Result<FineLevel> {
    let n = problem.n();
    let top = fine_level_theoretical(n, 1.0, 0.0).min(log2_exact(n)? - 2);
    let epsilon = (n as f64).sqrt().recip();
    let seq = kernel_observation(
        problem.kernel(),
        problem.kernel_channel(),
        problem.alpha(),
        epsilon,
        sigma_hat,
        n / 2 - 1,
    );
    let stopping = stopping_time_scaled(&seq, rule_alpha, epsilon, CUTOFF_SCALE * sigma_hat)?;
    let raw = stopping.j_hat;
    Ok(FineLevel {
        level: raw.clamp(j0, top.max(j0)),
        clamped_low: raw < j0,
        clamped_high: raw > top,
        stopping,
    })
}
