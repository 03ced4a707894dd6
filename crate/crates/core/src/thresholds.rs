//! Level-dependent hard thresholds for the i.i.d. (WaveD) and LRD methods.

use serde::{Deserialize, Serialize};

use crate::covariance::{tau_level, waved_tau_level, KernelSpec, WavedOrientation};
use crate::error::{Error, Result};
use crate::meyer::MeyerWindow;
use crate::noise::check_alpha;

/// `c_n = (n^{−α} log n)^{1/2}` with the natural logarithm.
pub fn c_n(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    (nf.powf(-alpha) * nf.ln()).sqrt()
}

/// `⌊log₂ (n^α / log n)^{1/(α+2ν)}⌋`.
pub fn fine_level_theoretical(n: usize, alpha: f64, nu: f64) -> i64 {
    let nf = n as f64;
    let log2_ratio = alpha * nf.log2() - nf.ln().log2();
    (log2_ratio / (alpha + 2.0 * nu)).floor() as i64
}

/// Lower bound on `ξ` required by the rate theory, `2(α (p ∨ 2))^{1/2}`.
/// Reported for reference; in practice it is far too conservative.
pub fn xi_theoretical_bound(alpha: f64, p: f64) -> f64 {
    2.0 * (alpha * p.max(2.0)).sqrt()
}

/// A smoothing constant, either numeric or tied to `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Smoothing {
    Value(f64),
    Named(NamedSmoothing),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedSmoothing {
    /// `√α`
    Sqrtalpha,
    /// `√(2α)`
    Sqrt2alpha,
    /// `√6`, the WaveD default for `η`.
    Sqrt6,
}

impl Smoothing {
    pub const SQRT_ALPHA: Smoothing = Smoothing::Named(NamedSmoothing::Sqrtalpha);
    pub const SQRT_2ALPHA: Smoothing = Smoothing::Named(NamedSmoothing::Sqrt2alpha);
    pub const SQRT_6: Smoothing = Smoothing::Named(NamedSmoothing::Sqrt6);

    pub fn resolve(self, alpha: f64) -> f64 {
        match self {
            Smoothing::Value(v) => v,
            Smoothing::Named(NamedSmoothing::Sqrtalpha) => alpha.sqrt(),
            Smoothing::Named(NamedSmoothing::Sqrt2alpha) => (2.0 * alpha).sqrt(),
            Smoothing::Named(NamedSmoothing::Sqrt6) => 6f64.sqrt(),
        }
    }

    pub fn label(self) -> String {
        match self {
            Smoothing::Value(v) => format!("{v}"),
            Smoothing::Named(NamedSmoothing::Sqrtalpha) => "sqrtalpha".into(),
            Smoothing::Named(NamedSmoothing::Sqrt2alpha) => "sqrt2alpha".into(),
            Smoothing::Named(NamedSmoothing::Sqrt6) => "sqrt6".into(),
        }
    }
}

impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sqrtalpha" => Ok(Smoothing::SQRT_ALPHA),
            "sqrt2alpha" => Ok(Smoothing::SQRT_2ALPHA),
            "sqrt6" => Ok(Smoothing::SQRT_6),
            other => match other.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(Smoothing::Value(v)),
                _ => Err(Error::Parse(format!("invalid smoothing '{s}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    /// WaveD defaults for i.i.d. noise.
    Iid,
    /// Thresholds adapted to long-range dependence.
    Lrd,
}

impl std::str::FromStr for ThresholdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iid" => Ok(ThresholdMethod::Iid),
            "lrd" => Ok(ThresholdMethod::Lrd),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-level thresholds `λ_j` with the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub method: ThresholdMethod,
    pub smoothing: f64,
    pub sigma_hat: f64,
    pub alpha: f64,
    pub n: usize,
    pub j0: i64,
    pub j1: i64,
    /// `λ_j` for `j = j0..=j1`.
    pub lambdas: Vec<f64>,
    /// Threshold applied to the scale coefficients, if any.
    pub scale_lambda: Option<f64>,
}

impl ThresholdPolicy {
    pub fn lambda(&self, j: i64) -> f64 {
        self.lambdas[(j - self.j0) as usize]
    }
}

/// Options that do not change the method itself.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyOptions {
    /// Threshold the scale coefficients at `λ_{j0}` instead of keeping them.
    pub threshold_scale: bool,
    pub orientation: WavedOrientation,
}

/// Builds `λ_j = smoothing · τ_j · σ̂ · (log n / n^a)^{1/2}` with `a = 1` and
/// the WaveD factor for [`ThresholdMethod::Iid`], and `a = α` with the exact
/// LRD factor `τ_{α,j}` for [`ThresholdMethod::Lrd`].
#[allow(clippy::too_many_arguments)]
pub fn build_policy(
    window: &MeyerWindow,
    method: ThresholdMethod,
    kernel: &KernelSpec,
    n: usize,
    alpha: f64,
    sigma_hat: f64,
    smoothing: f64,
    j0: i64,
    j1: i64,
    options: PolicyOptions,
) -> Result<ThresholdPolicy> {
    check_alpha(alpha)?;
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "smoothing",
            value: smoothing,
            constraint: "must be positive",
        });
    }
    if !(sigma_hat >= 0.0 && sigma_hat.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma_hat",
            value: sigma_hat,
            constraint: "must be finite and nonnegative",
        });
    }
    if j0 < 0 || j0 > j1 {
        return Err(Error::InvalidLevels { j0, j1 });
    }
    let lambdas = (j0..=j1)
        .map(|j| {
            let (tau, cn) = match method {
                ThresholdMethod::Iid => (waved_tau_level(j, kernel, options.orientation)?, c_n(n, 1.0)),
                ThresholdMethod::Lrd => (tau_level(window, j, kernel, alpha)?, c_n(n, alpha)),
            };
            Ok(smoothing * tau * sigma_hat * cn)
        })
        .collect::<Result<Vec<f64>>>()?;
    let scale_lambda = options.threshold_scale.then(|| lambdas[0]);
    Ok(ThresholdPolicy {
        method,
        smoothing,
        sigma_hat,
        alpha,
        n,
        j0,
        j1,
        lambdas,
        scale_lambda,
    })
}
