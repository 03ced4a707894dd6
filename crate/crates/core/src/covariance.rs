//! Fourier-domain covariance of the fractional noise and the per-level
//! variance factors that scale the thresholds.
//!
//! With `Z̃_H[ω]` the Fourier transform of the fBm increments, the
//! covariance between two integer frequencies is
//! `|ωℓ|^{1/2−H} Σ_{j,k} ψ̃_{j,k}(ω) conj(ψ̃_{j,k}(ℓ))`. The `k` sum over one
//! period collapses to `2^j` when `2^j | (ℓ − ω)` and vanishes otherwise,
//! and at most three levels have both frequencies in their band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{Spectrum, SampledSignal};
use crate::meyer::{band_bounds, MeyerWindow};
use crate::noise::{check_alpha, hurst_from_alpha};

/// Fourier coefficients of a real periodic blur kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    coefficients: Spectrum,
    dip: Option<f64>,
}

impl KernelSpec {
    /// Wraps a spectrum (FFT order, unnormalised so that a unit-mass kernel
    /// has `K̃[0] = 1`). Fails unless `K̃[−ℓ] = conj(K̃[ℓ])`.
    pub fn new(coefficients: Spectrum, dip: Option<f64>) -> Result<Self> {
        let n = coefficients.len() as i64;
        let scale = coefficients
            .as_fft_order()
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        for l in 0..=n / 2 {
            let a = coefficients.get(l);
            let b = coefficients.get(-l).conj();
            if (a - b).norm() > 1e-9 * scale.max(1e-300) {
                return Err(Error::KernelNotHermitian { frequency: l });
            }
        }
        Ok(KernelSpec { coefficients, dip })
    }

    /// Kernel whose sampled weights (lag `i` at index `i`) are given.
    pub fn from_weights(weights: &[f64], dip: Option<f64>) -> Result<Self> {
        let n = weights.len() as f64;
        let spectrum = Spectrum::of_signal(weights);
        let scaled = spectrum.as_fft_order().iter().map(|c| c * n).collect();
        KernelSpec::new(Spectrum::from_fft_order(scaled), dip)
    }

    /// `K̃ ≡ 1`, the direct (no blur) case.
    pub fn identity(n: usize) -> Self {
        KernelSpec::constant(n, 1.0)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        KernelSpec {
            coefficients: Spectrum::from_fft_order(vec![Complex64::new(c, 0.0); n]),
            dip: Some(0.0),
        }
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn dip(&self) -> Option<f64> {
        self.dip
    }

    pub fn at(&self, l: i64) -> Complex64 {
        self.coefficients.get(l)
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.coefficients
    }

    /// Circular convolution of a sampled signal with this kernel.
    pub fn blur(&self, signal: &[f64]) -> Result<SampledSignal> {
        assert_eq!(signal.len(), self.n(), "kernel and signal lengths differ");
        Spectrum::of_signal(signal)
            .multiply(&self.coefficients)
            .to_signal()
    }

    /// Fails if any frequency of the level-`j` band has a zero coefficient.
    pub fn check_band(&self, j: i64) -> Result<()> {
        let (lo, hi) = band_bounds(j);
        for a in lo..=hi {
            for l in [-a, a] {
                if self.at(l).norm() == 0.0 {
                    return Err(Error::VanishingKernel { frequency: l, level: j });
                }
            }
        }
        Ok(())
    }
}

/// `Cov(Z̃_H[ω], Z̃_H[ℓ]) = E Z̃_H[ω] conj(Z̃_H[ℓ])` in closed form.
pub fn z_cov(window: &MeyerWindow, omega: i64, l: i64, hurst: f64) -> Result<Complex64> {
    if omega == 0 || l == 0 {
        return Err(Error::ZeroFrequency);
    }
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            constraint: "must lie in [1/2, 1)",
        });
    }
    Ok(z_cov_unchecked(window, omega, l, hurst))
}

fn z_cov_unchecked(window: &MeyerWindow, omega: i64, l: i64, hurst: f64) -> Complex64 {
    let top = 3 * omega.abs().max(l.abs());
    let diff = l - omega;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut j = 0;
    while (1i64 << j) <= top {
        let size = 1i64 << j;
        if diff.rem_euclid(size) == 0 {
            let a = window.psi_hat(omega as f64 / size as f64);
            let b = window.psi_hat(l as f64 / size as f64);
            acc += a * b.conj();
        }
        j += 1;
    }
    let weight = ((omega as f64) * (l as f64)).abs().powf(0.5 - hurst);
    acc * weight
}

/// `τ_{α,j}` at shift `k = 0`: the standard deviation of the noise part of
/// a level-`j` coefficient, in units of `ε^α`.
pub fn tau_level(window: &MeyerWindow, j: i64, kernel: &KernelSpec, alpha: f64) -> Result<f64> {
    tau_level_at(window, j, 0, kernel, alpha)
}

/// `τ_{α,j,k}` for an arbitrary shift.
pub fn tau_level_at(
    window: &MeyerWindow,
    j: i64,
    k: i64,
    kernel: &KernelSpec,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    kernel.check_band(j)?;
    let hurst = hurst_from_alpha(alpha);
    let (lo, hi) = band_bounds(j);
    let freqs: Vec<i64> = (-hi..=-lo).chain(lo..=hi).collect();
    // c_ℓ = conj(Ψ̃_{j,k}[ℓ]) / K̃[ℓ]
    let weights: Vec<Complex64> = freqs
        .iter()
        .map(|&l| Ok(window.periodized_psi_hat(j, k, l)?.conj() / kernel.at(l)))
        .collect::<Result<_>>()?;
    let step = 1i64 << (j - 1).max(0);

    let mut total = Complex64::new(0.0, 0.0);
    for (i, &omega) in freqs.iter().enumerate() {
        let c_omega = weights[i].conj();
        if c_omega.norm() == 0.0 {
            continue;
        }
        for (a, b) in [(-hi, -lo), (lo, hi)] {
            let mut l = a + (omega - a).rem_euclid(step);
            while l <= b {
                let idx = index_in_band(l, lo, hi);
                total += weights[idx] * c_omega * z_cov_unchecked(window, l, omega, hurst);
                l += step;
            }
        }
    }
    if total.im.abs() > 1e-9 * total.re.abs().max(1e-300) && total.im.abs() > 1e-14 {
        return Err(Error::ImaginaryResidual {
            context: "level variance factor",
            residual: total.im.abs() / total.re.abs().max(1e-300),
        });
    }
    Ok(total.re.max(0.0).sqrt())
}

fn index_in_band(l: i64, lo: i64, hi: i64) -> usize {
    let width = hi - lo + 1;
    if l < 0 {
        (l + hi) as usize
    } else {
        (width + l - lo) as usize
    }
}

/// Which way round the WaveD level factor is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavedOrientation {
    /// `(|𝔻_j|⁻¹ Σ |K̃[ℓ]|⁻²)^{+1/2}`, growing with ill-posedness.
    #[default]
    Conventional,
    /// `(|𝔻_j|⁻¹ Σ |K̃[ℓ]|⁻²)^{−1/2}`, as printed in the WaveD tuning recipe.
    Verbatim,
}

/// WaveD level factor `τ_j` for i.i.d. noise.
pub fn waved_tau_level(j: i64, kernel: &KernelSpec, orientation: WavedOrientation) -> Result<f64> {
    kernel.check_band(j)?;
    let (lo, hi) = band_bounds(j);
    let mut sum = 0.0;
    let mut count = 0usize;
    for a in lo..=hi {
        for l in [-a, a] {
            sum += kernel.at(l).norm_sqr().recip();
            count += 1;
        }
    }
    let mean = sum / count as f64;
    Ok(match orientation {
        WavedOrientation::Conventional => mean.sqrt(),
        WavedOrientation::Verbatim => mean.sqrt().recip(),
    })
}

/// Theoretical level scaling `σ_{j,ν,α} = 2^{−j(1−α−2ν)/2}`.
pub fn sigma_scale(j: i64, nu: f64, alpha: f64) -> f64 {
    2f64.powf(-(j as f64) * (1.0 - alpha - 2.0 * nu) / 2.0)
}

/// `τ_{α,j}` for a contiguous range of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    pub alpha: f64,
    pub j0: i64,
    pub taus: Vec<f64>,
}

impl VarianceTable {
    pub fn new(window: &MeyerWindow, kernel: &KernelSpec, alpha: f64, j0: i64, j1: i64) -> Result<Self> {
        let taus = (j0..=j1)
            .map(|j| tau_level(window, j, kernel, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(VarianceTable { alpha, j0, taus })
    }

    pub fn tau(&self, j: i64) -> f64 {
        self.taus[(j - self.j0) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meyer::band_set;

    /// Literal double sum over `(j, k)` for small levels.
    fn brute_z_cov(w: &MeyerWindow, omega: i64, l: i64, hurst: f64, max_j: i64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=max_j {
            for k in 0..(1i64 << j) {
                let a = w.periodized_psi_hat(j, k, omega).unwrap();
                let b = w.periodized_psi_hat(j, k, l).unwrap();
                acc += a * b.conj();
            }
        }
        acc * ((omega * l) as f64).abs().powf(0.5 - hurst)
    }

    #[test]
    fn closed_form_matches_brute_force() {
        let w = MeyerWindow::default();
        for &h in &[0.5, 0.7, 0.9] {
            for omega in [-40i64, -13, -5, -1, 1, 2, 3, 7, 12, 21, 33] {
                for l in [-37i64, -12, -3, 1, 4, 5, 9, 12, 20, 29, 44] {
                    let a = z_cov(&w, omega, l, h).unwrap();
                    let b = brute_z_cov(&w, omega, l, h, 8);
                    assert!((a - b).norm() < 1e-12, "{omega} {l} {h}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn white_noise_unit_variance() {
        let w = MeyerWindow::default();
        for omega in 1..200 {
            let v = z_cov(&w, omega, omega, 0.5).unwrap();
            assert!((v.re - 1.0).abs() < 1e-12 && v.im.abs() < 1e-15, "{omega}");
        }
    }

    #[test]
    fn hermitian_and_bounded() {
        let w = MeyerWindow::default();
        for omega in -30i64..30 {
            for l in -30i64..30 {
                if omega == 0 || l == 0 {
                    continue;
                }
                let a = z_cov(&w, omega, l, 0.8).unwrap();
                let b = z_cov(&w, l, omega, 0.8).unwrap();
                assert!((a - b.conj()).norm() < 1e-14);
                let bound = 3.0 * ((omega * l) as f64).abs().powf(0.5 - 0.8);
                assert!(a.norm() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn zero_frequency_rejected() {
        let w = MeyerWindow::default();
        assert!(matches!(z_cov(&w, 0, 3, 0.7), Err(Error::ZeroFrequency)));
        assert!(z_cov(&w, 3, 0, 0.7).is_err());
    }

    /// Direct `|𝔻_j|²` double sum, independent of the congruence stepping.
    fn tau_direct(w: &MeyerWindow, j: i64, kernel: &KernelSpec, alpha: f64) -> f64 {
        let h = hurst_from_alpha(alpha);
        let b = band_set(j).unwrap();
        let mut total = Complex64::new(0.0, 0.0);
        for &omega in &b.frequencies {
            for &l in &b.frequencies {
                let num = w.periodized_psi_hat(j, 0, l).unwrap().conj()
                    * w.periodized_psi_hat(j, 0, omega).unwrap();
                let den = kernel.at(l) * kernel.at(omega).conj();
                total += num / den * z_cov(w, omega, l, h).unwrap();
            }
        }
        total.re.sqrt()
    }

    #[test]
    fn stepped_sum_matches_direct_sum() {
        let w = MeyerWindow::default();
        let n = 256;
        let weights: Vec<f64> = (0..n).map(|i| (-(i as f64) / 9.0).exp()).collect();
        let total: f64 = weights.iter().sum();
        let kernel =
            KernelSpec::from_weights(&weights.iter().map(|v| v / total).collect::<Vec<_>>(), None).unwrap();
        for j in 0..=5 {
            for &alpha in &[1.0, 0.6, 0.2] {
                let a = tau_level(&w, j, &kernel, alpha).unwrap();
                let b = tau_direct(&w, j, &kernel, alpha);
                assert!((a - b).abs() < 1e-10 * b, "j={j} alpha={alpha}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn identity_kernel_white_noise_tau_is_one() {
        let w = MeyerWindow::default();
        let kernel = KernelSpec::identity(1024);
        for j in 0..=8 {
            let t = tau_level(&w, j, &kernel, 1.0).unwrap();
            assert!((t - 1.0).abs() < 1e-12, "j={j}: {t}");
        }
    }

    #[test]
    fn waved_factor_constant_kernel() {
        assert!((waved_tau_level(4, &KernelSpec::identity(256), WavedOrientation::Conventional).unwrap() - 1.0).abs() < 1e-15);
        let k = KernelSpec::constant(256, 0.25);
        let conv = waved_tau_level(3, &k, WavedOrientation::Conventional).unwrap();
        let verb = waved_tau_level(3, &k, WavedOrientation::Verbatim).unwrap();
        assert!((conv - 4.0).abs() < 1e-12);
        assert!((verb - 0.25).abs() < 1e-12);
    }

    #[test]
    fn vanishing_kernel_named() {
        let mut spec = Spectrum::from_fft_order(vec![Complex64::new(1.0, 0.0); 64]);
        spec.set(5, Complex64::new(0.0, 0.0));
        spec.set(-5, Complex64::new(0.0, 0.0));
        let kernel = KernelSpec::new(spec, None).unwrap();
        let w = MeyerWindow::default();
        match tau_level(&w, 3, &kernel, 0.6) {
            Err(Error::VanishingKernel { frequency, level }) => {
                assert_eq!(frequency.abs(), 5);
                assert_eq!(level, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_kernel_rejected() {
        let mut spec = Spectrum::from_fft_order(vec![Complex64::new(1.0, 0.0); 16]);
        spec.set(3, Complex64::new(0.5, 0.5));
        assert!(matches!(
            KernelSpec::new(spec, None),
            Err(Error::KernelNotHermitian { frequency: 3 })
        ));
    }

    #[test]
    fn sigma_scale_values() {
        assert!((sigma_scale(7, 0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((sigma_scale(4, 0.7, 0.6) - 4.0).abs() < 1e-12);
        for j in 0..10 {
            assert!(sigma_scale(j + 1, 0.7, 0.4) > sigma_scale(j, 0.7, 0.4));
        }
    }
}
