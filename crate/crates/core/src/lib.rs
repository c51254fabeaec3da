//! Baseband OFDM link simulator with DFT-based channel estimation.
//!
//! The crate models a comb-pilot OFDM link over a tapped-delay-line Rayleigh
//! channel and compares three channel estimators:
//!
//! * an ideal (genie) estimator that reads the true frequency response,
//! * the conventional per-symbol DFT-based estimator, which needs the channel
//!   delay spread to split the pilot impulse response into a channel region
//!   and a pure-noise region,
//! * a multi-symbol DFT-based estimator that stacks the pilot estimates of `M`
//!   consecutive symbols into one long IDFT. For a block-constant channel the
//!   stacked spectrum is periodic, so every sample whose index is not a
//!   multiple of `M` is pure noise and the noise variance can be estimated
//!   without any knowledge of the delay spread.
//!
//! [`harness`] runs paired Monte Carlo sweeps that produce BER/MSE curves and
//! SNR-gap reports; [`cli`] wraps it in a command-line tool.

pub mod channel;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod phy;
pub mod spectral;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
