//! Long-range dependent Gaussian noise.
//!
//! Two exact generators, both producing unit marginal variance:
//!
//! * fractional Gaussian noise (increments of fBm) by circulant embedding;
//! * FARIMA(0, d, 0) by the Durbin–Levinson recursion on its autocorrelation.
//!
//! Dependence is parametrised by `α ∈ (0, 1]`, with Hurst index `H = 1 − α/2`
//! and memory parameter `d = (1 − α)/2`; `α = 1` is white noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng;

const MAX_EMBEDDING_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Fgn,
    #[default]
    Farima,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgn" => Ok(NoiseKind::Fgn),
            "farima" => Ok(NoiseKind::Farima),
            other => Err(Error::Parse(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Dependence level, generator and seed for a noise source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    alpha: f64,
    kind: NoiseKind,
    seed: u64,
}

impl NoiseModel {
    pub fn new(alpha: f64, kind: NoiseKind, seed: u64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(NoiseModel { alpha, kind, seed })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hurst(&self) -> f64 {
        hurst_from_alpha(self.alpha)
    }

    pub fn memory(&self) -> f64 {
        (1.0 - self.alpha) / 2.0
    }

    /// A length-`n` sample from stream 0 of this model's seed.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        self.sample_with(n, &mut rng::stream(self.seed, 0))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self.kind {
            NoiseKind::Fgn => sample_fgn(self.hurst(), n, rng),
            NoiseKind::Farima => sample_farima(self.memory(), n, rng),
        }
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "must lie in (0, 1]",
        });
    }
    Ok(())
}

pub fn hurst_from_alpha(alpha: f64) -> f64 {
    1.0 - alpha / 2.0
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            constraint: "must lie in [1/2, 1)",
        });
    }
    Ok(())
}

fn check_memory(d: f64) -> Result<()> {
    if !(0.0..0.5).contains(&d) {
        return Err(Error::InvalidParameter {
            name: "d",
            value: d,
            constraint: "must lie in [0, 1/2)",
        });
    }
    Ok(())
}

/// Autocovariance of unit-variance fGn at integer lag `h`:
/// `½(|h+1|^{2H} − 2|h|^{2H} + |h−1|^{2H})`.
pub fn fgn_autocovariance(h: i64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(fgn_acov_unchecked(h, hurst))
}

fn fgn_acov_unchecked(h: i64, hurst: f64) -> f64 {
    let h = h.unsigned_abs() as f64;
    let e = 2.0 * hurst;
    0.5 * ((h + 1.0).powf(e) - 2.0 * h.powf(e) + (h - 1.0).abs().powf(e))
}

/// `γ(0) = Γ(1−2d)/Γ(1−d)²` for FARIMA(0, d, 0) with unit innovations.
pub fn farima_variance(d: f64) -> Result<f64> {
    check_memory(d)?;
    Ok((ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp())
}

/// Autocorrelations `ρ(0..len)` of FARIMA(0, d, 0), via
/// `ρ(h) = ρ(h−1)(h−1+d)/(h−d)`.
pub fn farima_autocorrelation(d: f64, len: usize) -> Result<Vec<f64>> {
    check_memory(d)?;
    let mut rho = Vec::with_capacity(len);
    let mut r = 1.0;
    for h in 0..len {
        if h > 0 {
            let hf = h as f64;
            r *= (hf - 1.0 + d) / (hf - d);
        }
        rho.push(r);
    }
    Ok(rho)
}

/// Exact fGn sample with unit variance, by circulant embedding of the
/// autocovariance. The embedding is doubled when it has negative
/// eigenvalues.
pub fn sample_fgn<R: Rng + ?Sized>(hurst: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    let mut half = n.next_power_of_two();
    for _ in 0..=MAX_EMBEDDING_DOUBLINGS {
        if let Some(eigen) = embedding_eigenvalues(hurst, half) {
            return Ok(draw_from_embedding(&eigen, n, rng));
        }
        half *= 2;
    }
    Err(Error::EmbeddingFailed {
        attempts: MAX_EMBEDDING_DOUBLINGS + 1,
    })
}

/// Eigenvalues of the circulant of size `2·half`, or `None` if the
/// embedding is not nonnegative definite.
fn embedding_eigenvalues(hurst: f64, half: usize) -> Option<Vec<f64>> {
    let m = 2 * half;
    let mut row: Vec<Complex64> = (0..m)
        .map(|k| {
            let lag = if k <= half { k } else { m - k };
            Complex64::new(fgn_acov_unchecked(lag as i64, hurst), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let peak = row.iter().map(|c| c.re.abs()).fold(0.0_f64, f64::max);
    if row.iter().any(|c| c.re < -1e-10 * peak) {
        return None;
    }
    Some(row.into_iter().map(|c| c.re.max(0.0)).collect())
}

fn draw_from_embedding<R: Rng + ?Sized>(eigen: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let m = eigen.len();
    let mut w: Vec<Complex64> = eigen
        .iter()
        .map(|&lam| {
            let s = (lam / m as f64).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut w);
    w.into_iter().take(n).map(|c| c.re).collect()
}

/// Exact FARIMA(0, d, 0) sample standardised to unit variance.
///
/// Uses the Durbin–Levinson recursion with the closed-form partial
/// autocorrelations `φ_{t,t} = d/(t − d)`.
pub fn sample_farima<R: Rng + ?Sized>(d: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    check_memory(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut v = 1.0;
    x.push(rng.sample::<f64, _>(StandardNormal));
    for t in 1..n {
        let ptt = d / (t as f64 - d);
        prev.clear();
        prev.extend_from_slice(&phi);
        phi.clear();
        for k in 1..t {
            phi.push(prev[k - 1] - ptt * prev[t - k - 1]);
        }
        phi.push(ptt);
        v *= 1.0 - ptt * ptt;
        let mean: f64 = phi.iter().zip(x.iter().rev()).map(|(p, xv)| p * xv).sum();
        let e: f64 = rng.sample(StandardNormal);
        x.push(mean + v.sqrt() * e);
    }
    Ok(x)
}

/// Durbin–Levinson sampler for an arbitrary autocorrelation sequence
/// (`acf[0] = 1`). Quadratic in `n`; used as a reference.
pub fn sample_durbin_levinson<R: Rng + ?Sized>(acf: &[f64], rng: &mut R) -> Vec<f64> {
    let n = acf.len();
    let mut x = Vec::with_capacity(n);
    if n == 0 {
        return x;
    }
    let mut phi: Vec<f64> = Vec::new();
    let mut v = acf[0];
    x.push(v.sqrt() * rng.sample::<f64, _>(StandardNormal));
    for t in 1..n {
        let acc: f64 = (1..t).map(|k| phi[k - 1] * acf[t - k]).sum();
        let ptt = (acf[t] - acc) / v;
        let prev = phi.clone();
        phi.clear();
        for k in 1..t {
            phi.push(prev[k - 1] - ptt * prev[t - k - 1]);
        }
        phi.push(ptt);
        v *= 1.0 - ptt * ptt;
        let mean: f64 = phi.iter().zip(x.iter().rev()).map(|(p, xv)| p * xv).sum();
        x.push(mean + v.sqrt() * rng.sample::<f64, _>(StandardNormal));
    }
    x
}

/// Sample autocovariance at lags `0..=max_lag` (mean known to be zero).
pub fn sample_autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|h| x.iter().zip(&x[h..]).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect()
}
