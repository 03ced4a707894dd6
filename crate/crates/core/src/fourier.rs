//! Sampled periodic signals and their discrete Fourier coefficients.
//!
//! The transform convention is `ỹ[ℓ] = n⁻¹ Σᵢ yᵢ e^{−2πiℓi/n}` so that the
//! discrete coefficients approximate the Fourier coefficients of a 1-periodic
//! function sampled on `tᵢ = i/n`. The inverse is the plain sum
//! `yᵢ = Σ_ℓ ỹ[ℓ] e^{2πiℓi/n}`.

use std::ops::Deref;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for imaginary residue after an inverse transform of a
/// Hermitian spectrum.
const IMAG_TOL: f64 = 1e-9;

/// A real 1-periodic signal sampled on the grid `tᵢ = i/n`, `i = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampledSignal(Vec<f64>);

impl SampledSignal {
    pub fn new(values: Vec<f64>) -> Self {
        SampledSignal(values)
    }

    pub fn zeros(n: usize) -> Self {
        SampledSignal(vec![0.0; n])
    }

    /// Evaluates `f` on the grid `i/n`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        SampledSignal((0..n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Grid points `i/n`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.len()).map(|i| i as f64 / n).collect()
    }

    /// Grid-normalised 2-norm, `(n⁻¹ Σ vᵢ²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        grid_norm_sq(&self.0).sqrt()
    }

    pub fn scaled(&self, c: f64) -> SampledSignal {
        SampledSignal(self.0.iter().map(|v| v * c).collect())
    }
}

impl Deref for SampledSignal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for SampledSignal {
    fn from(v: Vec<f64>) -> Self {
        SampledSignal(v)
    }
}

/// `n⁻¹ Σ vᵢ²`.
pub fn grid_norm_sq(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Grid-normalised squared distance between two equal-length sequences.
pub fn grid_distance_sq(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

pub fn is_power_of_two(n: usize) -> bool {
    n >= 2 && n.is_power_of_two()
}

pub fn log2_exact(n: usize) -> Result<i64> {
    if !is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo { n });
    }
    Ok(n.trailing_zeros() as i64)
}

/// Discrete Fourier coefficients of a length-`n` sequence, stored in FFT
/// order and addressed by signed integer frequency (taken modulo `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(n: usize) -> Self {
        Spectrum {
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Wraps coefficients already in FFT order (`data[ℓ mod n]`).
    pub fn from_fft_order(data: Vec<Complex64>) -> Self {
        Spectrum { data }
    }

    /// Analysis with the `n⁻¹` convention.
    pub fn of_signal(signal: &[f64]) -> Self {
        let n = signal.len();
        let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if n > 0 {
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let scale = 1.0 / n as f64;
            buf.iter_mut().for_each(|c| *c *= scale);
        }
        Spectrum { data: buf }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn index(&self, l: i64) -> usize {
        l.rem_euclid(self.data.len() as i64) as usize
    }

    pub fn get(&self, l: i64) -> Complex64 {
        self.data[self.index(l)]
    }

    pub fn set(&mut self, l: i64, value: Complex64) {
        let i = self.index(l);
        self.data[i] = value;
    }

    pub fn add(&mut self, l: i64, value: Complex64) {
        let i = self.index(l);
        self.data[i] += value;
    }

    pub fn as_fft_order(&self) -> &[Complex64] {
        &self.data
    }

    /// Pointwise product, e.g. circular convolution with a kernel.
    pub fn multiply(&self, other: &Spectrum) -> Spectrum {
        assert_eq!(self.len(), other.len());
        Spectrum {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    /// Synthesis `yᵢ = Σ_ℓ ỹ[ℓ] e^{2πiℓi/n}`. Fails if the result is not
    /// real to within a relative tolerance.
    pub fn to_signal(&self) -> Result<SampledSignal> {
        let n = self.len();
        let mut buf = self.data.clone();
        if n > 0 {
            FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        }
        let scale = buf.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1e-300);
        let worst = buf.iter().map(|c| c.im.abs()).fold(0.0_f64, f64::max);
        if worst > IMAG_TOL * scale && worst > 1e-12 {
            return Err(Error::ImaginaryResidual {
                context: "inverse Fourier synthesis",
                residual: worst / scale,
            });
        }
        Ok(SampledSignal(buf.into_iter().map(|c| c.re).collect()))
    }
}
