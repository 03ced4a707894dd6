//! Periodised Meyer wavelets, evaluated entirely in the Fourier domain.
//!
//! The level-`j` detail function `Ψ_{j,k}` has Fourier coefficients
//! `2^{-j/2} e^{-2πiℓk/2^j} ψ̃(ℓ 2^{-j})`, which vanish outside the band set
//! `𝔻_j`. Analysis and synthesis therefore reduce to sums over a few
//! thousand frequencies followed by a length-`2^j` FFT per level.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{log2_exact, SampledSignal, Spectrum};

/// Degree used by the WaveD reference implementation (three vanishing moments).
pub const DEFAULT_DEGREE: u32 = 3;

/// The Meyer window: the auxiliary polynomial `v` and the resulting
/// Fourier-domain scaling and detail functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeyerWindow {
    degree: u32,
    // binomial(degree + k, k) for k = 0..=degree
    weights: [f64; 8],
}

impl Default for MeyerWindow {
    fn default() -> Self {
        MeyerWindow::new(DEFAULT_DEGREE)
    }
}

impl MeyerWindow {
    /// Polynomial `v(x) = x^{d+1} Σ_{k≤d} C(d+k, k)(1−x)^k`, which satisfies
    /// `v(x) + v(1−x) = 1`. Degree 3 gives `x⁴(35 − 84x + 70x² − 20x³)`.
    pub fn new(degree: u32) -> Self {
        assert!(degree <= 7, "Meyer window degree must be at most 7");
        let mut weights = [0.0; 8];
        let d = degree as u64;
        for (k, w) in weights.iter_mut().enumerate().take(degree as usize + 1) {
            *w = binomial(d + k as u64, k as u64) as f64;
        }
        MeyerWindow { degree, weights }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Auxiliary polynomial, clamped to `[0, 1]` outside the unit interval.
    pub fn aux(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let y = 1.0 - x;
        let mut acc = 0.0;
        for k in (0..=self.degree as usize).rev() {
            acc = acc * y + self.weights[k];
        }
        acc * x.powi(self.degree as i32 + 1)
    }

    pub fn phi_hat(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w <= 1.0 / 3.0 {
            1.0
        } else if w <= 2.0 / 3.0 {
            (FRAC_PI_2 * self.aux(3.0 * w - 1.0)).cos()
        } else {
            0.0
        }
    }

    pub fn psi_hat(&self, omega: f64) -> Complex64 {
        let w = omega.abs();
        let magnitude = if w <= 1.0 / 3.0 {
            return Complex64::new(0.0, 0.0);
        } else if w <= 2.0 / 3.0 {
            (FRAC_PI_2 * self.aux(3.0 * w - 1.0)).sin()
        } else if w <= 4.0 / 3.0 {
            (FRAC_PI_2 * self.aux(1.5 * w - 1.0)).cos()
        } else {
            return Complex64::new(0.0, 0.0);
        };
        Complex64::from_polar(magnitude, -PI * omega)
    }

    /// Fourier coefficient `ℓ` of the periodised detail function `Ψ_{j,k}`.
    pub fn periodized_psi_hat(&self, j: i64, k: i64, l: i64) -> Result<Complex64> {
        check_shift(j, k)?;
        Ok(self.psi_coefficient(j, k, l))
    }

    /// Fourier coefficient `ℓ` of the periodised scaling function `Φ_{j,k}`.
    pub fn periodized_phi_hat(&self, j: i64, k: i64, l: i64) -> Result<Complex64> {
        check_shift(j, k)?;
        let size = (1u64 << j) as f64;
        let value = self.phi_hat(l as f64 / size) / size.sqrt();
        Ok(Complex64::from_polar(value, -2.0 * PI * phase_fraction(l, k, j)))
    }

    fn psi_coefficient(&self, j: i64, k: i64, l: i64) -> Complex64 {
        let size = (1u64 << j) as f64;
        let base = self.psi_hat(l as f64 / size) / size.sqrt();
        base * Complex64::from_polar(1.0, -2.0 * PI * phase_fraction(l, k, j))
    }
}

/// `(ℓk mod 2^j) / 2^j`, computed exactly in integers.
fn phase_fraction(l: i64, k: i64, j: i64) -> f64 {
    let size = 1i128 << j;
    ((l as i128 * k as i128).rem_euclid(size)) as f64 / size as f64
}

fn check_shift(j: i64, k: i64) -> Result<()> {
    if !(0..=62).contains(&j) {
        return Err(Error::InvalidLevels { j0: j, j1: j });
    }
    if k < 0 || k >= (1i64 << j) {
        return Err(Error::ShiftOutOfRange { j, k });
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Integer frequencies where the level-`j` detail functions live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BandSet {
    pub level: i64,
    /// Sorted ascending.
    pub frequencies: Vec<i64>,
}

impl BandSet {
    pub fn cardinality(&self) -> usize {
        self.frequencies.len()
    }

    pub fn contains(&self, l: i64) -> bool {
        let (lo, hi) = band_bounds(self.level);
        (lo..=hi).contains(&l.abs())
    }
}

/// `(⌈2^j/3⌉, ⌊2^{j+2}/3⌋)`, the positive half of `𝔻_j`.
pub fn band_bounds(j: i64) -> (i64, i64) {
    let size = 1i64 << j;
    ((size + 2) / 3, (4 * size) / 3)
}

/// Highest frequency carrying a nonzero `Φ̃_{j,k}` coefficient.
pub fn scale_band_limit(j: i64) -> i64 {
    (2 * (1i64 << j)) / 3
}

pub fn band_set(j: i64) -> Result<BandSet> {
    if !(0..=60).contains(&j) {
        return Err(Error::InvalidLevels { j0: j, j1: j });
    }
    let (lo, hi) = band_bounds(j);
    let mut frequencies: Vec<i64> = (lo..=hi).rev().map(|a| -a).collect();
    frequencies.extend(lo..=hi);
    Ok(BandSet { level: j, frequencies })
}

/// Largest admissible fine level for a grid of length `n`, `log₂ n − 2`.
pub fn max_level(n: usize) -> Result<i64> {
    Ok(log2_exact(n)? - 2)
}

pub fn validate_levels(n: usize, j0: i64, j1: i64) -> Result<()> {
    let max = max_level(n)?;
    if j0 < 0 || j0 > j1 {
        return Err(Error::InvalidLevels { j0, j1 });
    }
    if j1 > max {
        return Err(Error::LevelTooFine { j1, n, max });
    }
    Ok(())
}

/// Scale coefficients at `j0` and detail coefficients for levels `j0..=j1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    j0: i64,
    j1: i64,
    n: usize,
    scale: Vec<f64>,
    detail: Vec<Vec<f64>>,
}

impl WaveletCoefficients {
    pub fn zeros(n: usize, j0: i64, j1: i64) -> Result<Self> {
        validate_levels(n, j0, j1)?;
        Ok(WaveletCoefficients {
            j0,
            j1,
            n,
            scale: vec![0.0; 1 << j0],
            detail: (j0..=j1).map(|j| vec![0.0; 1 << j]).collect(),
        })
    }

    pub fn j0(&self) -> i64 {
        self.j0
    }

    pub fn j1(&self) -> i64 {
        self.j1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> impl Iterator<Item = i64> {
        self.j0..=self.j1
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn scale_mut(&mut self) -> &mut [f64] {
        &mut self.scale
    }

    pub fn detail(&self, j: i64) -> &[f64] {
        &self.detail[(j - self.j0) as usize]
    }

    pub fn detail_mut(&mut self, j: i64) -> &mut [f64] {
        &mut self.detail[(j - self.j0) as usize]
    }

    /// All coefficients, scale first, then details level by level.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.scale.clone();
        for d in &self.detail {
            out.extend_from_slice(d);
        }
        out
    }

    pub fn is_well_formed(&self) -> bool {
        self.scale.len() == 1 << self.j0
            && self.detail.len() == (self.j1 - self.j0 + 1) as usize
            && self
                .detail
                .iter()
                .zip(self.j0..)
                .all(|(d, j)| d.len() == 1 << j)
            && validate_levels(self.n, self.j0, self.j1).is_ok()
    }
}

/// Analysis of an arbitrary (Hermitian) spectrum: each coefficient is the
/// Parseval sum `Σ_ℓ S[ℓ] conj(Ψ̃_{j,k}[ℓ])` over the band of its level.
pub fn analyze_spectrum(
    window: &MeyerWindow,
    spectrum: &Spectrum,
    j0: i64,
    j1: i64,
) -> Result<WaveletCoefficients> {
    let n = spectrum.len();
    let mut out = WaveletCoefficients::zeros(n, j0, j1)?;
    let mut planner = FftPlanner::new();

    let limit = scale_band_limit(j0);
    let scale = fold_level(j0, -limit..=limit, |l| {
        spectrum.get(l) * window.phi_hat(l as f64 / (1u64 << j0) as f64)
    });
    out.scale = synth_real(&mut planner, scale, j0, "scale analysis")?;

    for j in j0..=j1 {
        let (lo, hi) = band_bounds(j);
        let size = (1u64 << j) as f64;
        let band = (-hi..=-lo).chain(lo..=hi);
        let folded = fold_level(j, band, |l| {
            spectrum.get(l) * window.psi_hat(l as f64 / size).conj()
        });
        let values = synth_real(&mut planner, folded, j, "detail analysis")?;
        out.detail_mut(j).copy_from_slice(&values);
    }
    Ok(out)
}

/// Detail coefficients at level `log₂ n − 1`, the finest level a length-`n`
/// grid supports. The band is cut below the Nyquist frequency, so these
/// functions are not part of the tight frame; they serve noise estimation.
pub fn finest_detail(window: &MeyerWindow, signal: &[f64]) -> Result<Vec<f64>> {
    let n = signal.len();
    let j = log2_exact(n)? - 1;
    if j < 1 {
        return Err(Error::NotPowerOfTwo { n });
    }
    let spectrum = Spectrum::of_signal(signal);
    let (lo, _) = band_bounds(j);
    let top = n as i64 / 2 - 1;
    let size = (1u64 << j) as f64;
    let band = (-top..=-lo).chain(lo..=top);
    let folded = fold_level(j, band, |l| spectrum.get(l) * window.psi_hat(l as f64 / size).conj());
    synth_real(&mut FftPlanner::new(), folded, j, "finest detail analysis")
}

/// Accumulates `term(ℓ)` into bucket `ℓ mod 2^j`.
fn fold_level(
    j: i64,
    freqs: impl Iterator<Item = i64>,
    term: impl Fn(i64) -> Complex64,
) -> Vec<Complex64> {
    let size = 1i64 << j;
    let mut buckets = vec![Complex64::new(0.0, 0.0); size as usize];
    for l in freqs {
        buckets[l.rem_euclid(size) as usize] += term(l);
    }
    buckets
}

/// `2^{-j/2} Σ_m b[m] e^{2πimk/2^j}`, required to be real.
fn synth_real(
    planner: &mut FftPlanner<f64>,
    mut buckets: Vec<Complex64>,
    j: i64,
    context: &'static str,
) -> Result<Vec<f64>> {
    let size = buckets.len();
    planner.plan_fft_inverse(size).process(&mut buckets);
    let norm = ((1u64 << j) as f64).sqrt().recip();
    let scale = buckets.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let worst = buckets.iter().map(|c| c.im.abs()).fold(0.0_f64, f64::max);
    if worst > 1e-9 * scale && worst > 1e-13 {
        return Err(Error::ImaginaryResidual {
            context,
            residual: worst / scale,
        });
    }
    Ok(buckets.into_iter().map(|c| c.re * norm).collect())
}

/// Fourier coefficients of `Σ α Φ_{j0,k} + Σ β Ψ_{j,k}` on a length-`n` grid.
pub fn synthesize_spectrum(window: &MeyerWindow, coeffs: &WaveletCoefficients) -> Result<Spectrum> {
    let n = coeffs.n();
    validate_levels(n, coeffs.j0(), coeffs.j1())?;
    let mut planner = FftPlanner::new();
    let mut spectrum = Spectrum::zeros(n);

    let j0 = coeffs.j0();
    let transformed = level_dft(&mut planner, coeffs.scale());
    let size = 1i64 << j0;
    let norm = (size as f64).sqrt().recip();
    let limit = scale_band_limit(j0);
    for l in -limit..=limit {
        let w = window.phi_hat(l as f64 / size as f64) * norm;
        spectrum.add(l, transformed[l.rem_euclid(size) as usize] * w);
    }

    for j in coeffs.levels() {
        let transformed = level_dft(&mut planner, coeffs.detail(j));
        let size = 1i64 << j;
        let norm = (size as f64).sqrt().recip();
        let (lo, hi) = band_bounds(j);
        for l in (-hi..=-lo).chain(lo..=hi) {
            let w = window.psi_hat(l as f64 / size as f64) * norm;
            spectrum.add(l, transformed[l.rem_euclid(size) as usize] * w);
        }
    }
    Ok(spectrum)
}

/// `B[m] = Σ_k β_k e^{-2πimk/2^j}`.
fn level_dft(planner: &mut FftPlanner<f64>, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Forward periodised Meyer transform of sampled data.
pub fn forward_transform(
    window: &MeyerWindow,
    signal: &[f64],
    j0: i64,
    j1: i64,
) -> Result<WaveletCoefficients> {
    validate_levels(signal.len(), j0, j1)?;
    analyze_spectrum(window, &Spectrum::of_signal(signal), j0, j1)
}

/// Inverse transform, sampled on the grid of length `n`.
pub fn inverse_transform(
    window: &MeyerWindow,
    coeffs: &WaveletCoefficients,
    n: usize,
) -> Result<SampledSignal> {
    validate_levels(n, coeffs.j0(), coeffs.j1())?;
    if n == coeffs.n() {
        return synthesize_spectrum(window, coeffs)?.to_signal();
    }
    let mut resized = coeffs.clone();
    resized.n = n;
    synthesize_spectrum(window, &resized)?.to_signal()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn aux_boundary_values() {
        let w = MeyerWindow::default();
        assert_eq!(w.aux(0.0), 0.0);
        assert_eq!(w.aux(1.0), 1.0);
        assert!((w.aux(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(w.aux(-3.0), 0.0);
        assert_eq!(w.aux(7.0), 1.0);
    }

    #[test]
    fn aux_matches_closed_form_degree_three() {
        let w = MeyerWindow::new(3);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let direct = x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3));
            assert!((w.aux(x) - direct).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn aux_symmetry_all_degrees() {
        for d in 0..=5 {
            let w = MeyerWindow::new(d);
            for i in 0..=64 {
                let x = i as f64 / 64.0;
                assert!((w.aux(x) + w.aux(1.0 - x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phi_hat_cases() {
        let w = MeyerWindow::default();
        assert_eq!(w.phi_hat(0.0), 1.0);
        assert_eq!(w.phi_hat(0.7), 0.0);
        assert!((w.phi_hat(0.5) - (FRAC_PI_2 * 0.5).cos()).abs() < 1e-14);
        assert!((w.phi_hat(-0.5) - w.phi_hat(0.5)).abs() < 1e-15);
    }

    #[test]
    fn psi_hat_cases() {
        let w = MeyerWindow::default();
        assert_eq!(w.psi_hat(0.0), Complex64::new(0.0, 0.0));
        assert_eq!(w.psi_hat(2.0), Complex64::new(0.0, 0.0));
        let expected = Complex64::from_polar((FRAC_PI_2 * 0.5).sin(), -FRAC_PI_2);
        assert!(close(w.psi_hat(0.5), expected, 1e-14));
        // real function: conjugate symmetry
        assert!(close(w.psi_hat(-0.9), w.psi_hat(0.9).conj(), 1e-15));
    }

    #[test]
    fn band_set_examples() {
        let b = band_set(2).unwrap();
        assert_eq!(b.frequencies, vec![-5, -4, -3, -2, 2, 3, 4, 5]);
        assert_eq!(band_set(0).unwrap().frequencies, vec![-1, 1]);
        let b3 = band_set(3).unwrap();
        assert_eq!(b3.cardinality(), 16);
        assert_eq!(b3.frequencies.first(), Some(&-10));
        assert_eq!(b3.frequencies[8], 3);
        assert!(band_set(-1).is_err());
        for j in 0..20 {
            assert_eq!(band_set(j).unwrap().cardinality(), 1 << (j + 1));
        }
    }

    #[test]
    fn band_sets_two_apart_are_disjoint() {
        for j in 0..14 {
            for jp in (j + 2)..16 {
                let a = band_set(j).unwrap();
                let b = band_set(jp).unwrap();
                assert!(a.frequencies.iter().all(|l| !b.contains(*l)), "{j} vs {jp}");
            }
        }
    }

    #[test]
    fn band_set_covers_psi_support() {
        let w = MeyerWindow::default();
        for j in 0..10 {
            let b = band_set(j).unwrap();
            let size = (1u64 << j) as f64;
            for l in -(1i64 << (j + 2))..=(1i64 << (j + 2)) {
                if w.psi_hat(l as f64 / size).norm() > 0.0 {
                    assert!(b.contains(l), "j={j} l={l}");
                }
            }
        }
    }

    #[test]
    fn periodized_psi_examples() {
        let w = MeyerWindow::default();
        for j in 0..6 {
            assert_eq!(w.periodized_psi_hat(j, 0, 0).unwrap().norm(), 0.0);
        }
        let direct = w.psi_hat(0.75) * 0.5;
        assert!(close(w.periodized_psi_hat(2, 0, 3).unwrap(), direct, 1e-15));
        let shifted = direct * Complex64::from_polar(1.0, -2.0 * PI * 0.75);
        assert!(close(w.periodized_psi_hat(2, 1, 3).unwrap(), shifted, 1e-14));
        assert!(matches!(
            w.periodized_psi_hat(2, 4, 3),
            Err(Error::ShiftOutOfRange { .. })
        ));
        assert!(w.periodized_psi_hat(2, -1, 3).is_err());
    }

    #[test]
    fn periodized_psi_vanishes_off_band() {
        let w = MeyerWindow::default();
        let b = band_set(4).unwrap();
        for l in -80..80 {
            let v = w.periodized_psi_hat(4, 3, l).unwrap();
            if !b.contains(l) {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn constant_has_no_detail() {
        let w = MeyerWindow::default();
        let c = forward_transform(&w, &vec![1.0; 256], 2, 6).unwrap();
        for j in c.levels() {
            assert!(c.detail(j).iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn single_basis_function_round_trip() {
        let w = MeyerWindow::default();
        let n = 512;
        let mut c = WaveletCoefficients::zeros(n, 3, 6).unwrap();
        c.detail_mut(3)[0] = 1.0;
        let samples = inverse_transform(&w, &c, n).unwrap();
        let back = forward_transform(&w, &samples, 3, 6).unwrap();
        assert!((back.detail(3)[0] - 1.0).abs() < 1e-10);
        let off: f64 = back.flatten().iter().map(|v| v.abs()).sum::<f64>() - back.detail(3)[0];
        assert!(off < 1e-9, "off-diagonal mass {off}");
    }

    #[test]
    fn zero_coefficients_give_zero_signal() {
        let w = MeyerWindow::default();
        let c = WaveletCoefficients::zeros(128, 3, 5).unwrap();
        assert!(inverse_transform(&w, &c, 128).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn level_validation() {
        assert!(validate_levels(1024, 3, 8).is_ok());
        assert!(matches!(
            validate_levels(1024, 3, 9),
            Err(Error::LevelTooFine { .. })
        ));
        assert!(matches!(
            validate_levels(1000, 3, 5),
            Err(Error::NotPowerOfTwo { .. })
        ));
        assert!(validate_levels(1024, 5, 4).is_err());
        let w = MeyerWindow::default();
        assert!(forward_transform(&w, &vec![0.0; 100], 2, 3).is_err());
    }
}
