//! Hard-thresholding wavelet deconvolution for periodic signals observed
//! through a regular-smooth blur and long-range dependent Gaussian noise.
//!
//! The estimator works in the Fourier domain with periodised Meyer
//! wavelets: observations are divided by the kernel's Fourier coefficients,
//! projected onto band-limited detail functions, hard-thresholded with
//! level-dependent thresholds that account for the noise memory, and
//! resynthesised up to a data-driven fine level.
//!
//! Modules follow the pipeline:
//!
//! * [`meyer`]: Fourier-domain Meyer basis, band sets, forward/inverse transforms.
//! * [`noise`]: fractional Gaussian noise and FARIMA(0, d, 0) generators.
//! * [`covariance`]: noise covariance in the Fourier domain and per-level variance factors.
//! * [`thresholds`]: threshold policies for the i.i.d. and LRD methods.
//! * [`finescale`]: Fourier-domain stopping rule for the finest level.
//! * [`estimator`]: the deconvolution estimator end to end.
//! * [`signals`]: test signals, Gamma blur kernel, dataset generation.
//! * [`bench`]: Monte Carlo harness and rate experiments.
//! * [`io`]: CSV and JSON formats.

pub mod bench;
pub mod covariance;
pub mod error;
pub mod estimator;
pub mod finescale;
pub mod fourier;
pub mod io;
pub mod meyer;
pub mod noise;
pub mod rng;
pub mod signals;
pub mod thresholds;

pub use error::{Error, Result};
pub use fourier::{SampledSignal, Spectrum};
pub use meyer::{MeyerWindow, WaveletCoefficients};
