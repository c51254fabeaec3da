//! Tapped-delay-line fading channel, AWGN and genie frequency response.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cli::parse_key_values;
use crate::phy::GridConfig;
use crate::spectral;
use crate::{Error, Result, C64};

/// LTE sampling rate for a 512-point FFT at 15 kHz subcarrier spacing.
pub const LTE_SAMPLE_RATE_HZ: f64 = 7.68e6;

/// Extended Typical Urban taps as `(delay ns, relative power dB)`, from
/// 3GPP TS 36.101 Annex B.2.1, Table B.2.1-4.
pub const ETU_TAPS: [(f64, f64); 9] = [
    (0.0, -1.0),
    (50.0, -1.0),
    (120.0, -1.0),
    (200.0, 0.0),
    (230.0, 0.0),
    (500.0, 0.0),
    (1600.0, -3.0),
    (2300.0, -5.0),
    (5000.0, -7.0),
];

/// Names accepted by [`build_profile`].
pub const BUILTIN_PROFILES: [&str; 3] = ["etu", "single-tap", "awgn"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    /// Each tap gain is drawn from `CN(0, power)`.
    Rayleigh,
    /// Each tap gain is the deterministic real value `sqrt(power)`.
    Static,
}

/// Sample-spaced power-delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub name: String,
    pub sample_rate_hz: f64,
    /// Tap positions in samples, strictly increasing, starting at 0.
    pub delays: Vec<usize>,
    /// Linear tap powers summing to 1.
    pub powers: Vec<f64>,
    pub fading: Fading,
}

impl PowerDelayProfile {
    /// Quantizes `(delay ns, power dB)` taps to the sample grid at
    /// `sample_rate_hz`. Taps that round to the same sample are merged by
    /// adding linear powers, then powers are renormalized to sum to 1.
    pub fn from_taps(
        name: impl Into<String>,
        sample_rate_hz: f64,
        taps: &[(f64, f64)],
        fading: Fading,
    ) -> Result<Self> {
        let name = name.into();
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::config(format!("invalid sample rate {sample_rate_hz}")));
        }
        if taps.is_empty() {
            return Err(Error::config(format!("profile '{name}' has no taps")));
        }
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for &(delay_ns, power_db) in taps {
            if !(delay_ns.is_finite() && delay_ns >= 0.0 && power_db.is_finite()) {
                return Err(Error::config(format!(
                    "profile '{name}': invalid tap ({delay_ns} ns, {power_db} dB)"
                )));
            }
            let index = (delay_ns * sample_rate_hz / 1e9).round() as usize;
            let power = 10f64.powf(power_db / 10.0);
            match merged.iter_mut().find(|(d, _)| *d == index) {
                Some((_, p)) => *p += power,
                None => merged.push((index, power)),
            }
        }
        merged.sort_by_key(|&(d, _)| d);
        if merged[0].0 != 0 {
            // Shift so the first path arrives at sample 0.
            let first = merged[0].0;
            merged.iter_mut().for_each(|(d, _)| *d -= first);
        }
        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        Ok(Self {
            name,
            sample_rate_hz,
            delays: merged.iter().map(|&(d, _)| d).collect(),
            powers: merged.iter().map(|&(_, p)| p / total).collect(),
            fading,
        })
    }

    /// Parses a profile file:
    ///
    /// ```text
    /// # comment
    /// name = two-path
    /// fading = rayleigh      # or static; optional
    /// tap = 0, 0.0           # delay ns, power dB; one line per tap
    /// tap = 1000, -3.0
    /// ```
    pub fn parse(text: &str, origin: &str, sample_rate_hz: f64) -> Result<Self> {
        let mut name = String::from("custom");
        let mut fading = Fading::Rayleigh;
        let mut taps = Vec::new();
        let parse_err = |line: usize, message: String| Error::Parse {
            origin: origin.to_string(),
            line,
            message,
        };
        for (line, key, value) in parse_key_values(text, origin)? {
            match key.as_str() {
                "name" => name = value,
                "fading" => {
                    fading = match value.as_str() {
                        "rayleigh" => Fading::Rayleigh,
                        "static" => Fading::Static,
                        other => return Err(parse_err(line, format!("unknown fading '{other}'"))),
                    }
                }
                "tap" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    let parsed = match parts.as_slice() {
                        [d, p] => d.parse::<f64>().ok().zip(p.parse::<f64>().ok()),
                        _ => None,
                    };
                    let tap = parsed.ok_or_else(|| {
                        parse_err(line, format!("expected 'tap = <delay ns>, <power dB>', got '{value}'"))
                    })?;
                    taps.push(tap);
                }
                other => return Err(parse_err(line, format!("unknown key '{other}'"))),
            }
        }
        if taps.is_empty() {
            return Err(parse_err(0, "no 'tap' lines".into()));
        }
        Self::from_taps(name, sample_rate_hz, &taps, fading)
    }

    pub fn max_delay(&self) -> usize {
        *self.delays.last().expect("profile has taps")
    }

    /// Rejects profiles whose delay spread the grid cannot absorb.
    pub fn check_against(&self, cfg: &GridConfig) -> Result<()> {
        let max = self.max_delay();
        if max > cfg.cp_len {
            return Err(Error::config(format!(
                "profile '{}' reaches sample {max}, beyond the {}-sample cyclic prefix",
                self.name, cfg.cp_len
            )));
        }
        if max >= cfg.n_pilots {
            return Err(Error::config(format!(
                "profile '{}' reaches sample {max}, not below the pilot count {}",
                self.name, cfg.n_pilots
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PowerDelayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {} Hz:", self.name, self.sample_rate_hz)?;
        for (d, p) in self.delays.iter().zip(&self.powers) {
            write!(f, " {d}:{p:.6}")?;
        }
        Ok(())
    }
}

/// Built-in profile by name (case-insensitive).
///
/// * `etu`: 3GPP Extended Typical Urban, Rayleigh taps.
/// * `single-tap`: flat Rayleigh fading.
/// * `awgn`: static unit gain, no fading.
pub fn build_profile(name: &str, sample_rate_hz: f64) -> Result<PowerDelayProfile> {
    match name.to_ascii_lowercase().as_str() {
        "etu" | "etu5" => PowerDelayProfile::from_taps("etu", sample_rate_hz, &ETU_TAPS, Fading::Rayleigh),
        "single-tap" => PowerDelayProfile::from_taps("single-tap", sample_rate_hz, &[(0.0, 0.0)], Fading::Rayleigh),
        "awgn" => PowerDelayProfile::from_taps("awgn", sample_rate_hz, &[(0.0, 0.0)], Fading::Static),
        other => Err(Error::config(format!(
            "unknown channel profile '{other}' (built-ins: {})",
            BUILTIN_PROFILES.join(", ")
        ))),
    }
}

/// One block-fading draw: tap gains and the exact response on every
/// subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub delays: Vec<usize>,
    pub gains: Vec<C64>,
    /// `H[k] = sum_t gain_t e^{-j 2 pi k delay_t / N}`.
    pub freq_response: Vec<C64>,
}

impl ChannelRealization {
    /// Builds the realization and its response on `n_subcarriers` (a power
    /// of two) by transforming the sparse tap vector.
    pub fn from_taps(delays: Vec<usize>, gains: Vec<C64>, n_subcarriers: usize) -> Self {
        assert_eq!(delays.len(), gains.len());
        let mut freq_response = vec![C64::default(); n_subcarriers];
        for (&d, &g) in delays.iter().zip(&gains) {
            freq_response[d % n_subcarriers] += g;
        }
        spectral::plan(n_subcarriers)
            .and_then(|p| p.forward(&mut freq_response))
            .expect("subcarrier count is a power of two");
        Self {
            delays,
            gains,
            freq_response,
        }
    }

    pub fn max_delay(&self) -> usize {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    pub fn power(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn standard_cn<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one realization of `profile`, held constant over a block.
pub fn realize<R: Rng + ?Sized>(
    profile: &PowerDelayProfile,
    n_subcarriers: usize,
    rng: &mut R,
) -> ChannelRealization {
    let gains = profile
        .powers
        .iter()
        .map(|&p| match profile.fading {
            Fading::Rayleigh => standard_cn(rng) * p.sqrt(),
            Fading::Static => C64::new(p.sqrt(), 0.0),
        })
        .collect();
    ChannelRealization::from_taps(profile.delays.clone(), gains, n_subcarriers)
}

/// Linear convolution of the transmit stream with the tap filter, truncated
/// to the input length. Taps beyond the cyclic prefix are rejected.
pub fn apply(tx: &[C64], realization: &ChannelRealization, cfg: &GridConfig) -> Result<Vec<C64>> {
    if realization.max_delay() > cfg.cp_len {
        return Err(Error::config(format!(
            "tap at sample {} exceeds the {}-sample cyclic prefix",
            realization.max_delay(),
            cfg.cp_len
        )));
    }
    let mut rx = vec![C64::default(); tx.len()];
    for (&d, &g) in realization.delays.iter().zip(&realization.gains) {
        if d >= tx.len() {
            continue;
        }
        for (out, &x) in rx[d..].iter_mut().zip(tx) {
            *out += g * x;
        }
    }
    Ok(rx)
}

/// Noise level for a time-domain sample SNR, assuming unit sample power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    /// Variance of the complex noise per time-domain sample.
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64) -> Self {
        let sigma2 = if snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-snr_db / 10.0)
        };
        Self { snr_db, sigma2 }
    }

    pub fn from_sigma2(sigma2: f64) -> Self {
        Self {
            snr_db: -10.0 * sigma2.log10(),
            sigma2,
        }
    }

    pub fn noiseless() -> Self {
        Self::from_snr_db(f64::INFINITY)
    }
}

/// Adds i.i.d. `CN(0, sigma2)` noise in place. The RNG is advanced the same
/// way whatever `sigma2` is.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [C64], noise: &NoiseSpec, rng: &mut R) {
    let scale = noise.sigma2.sqrt();
    for s in samples.iter_mut() {
        *s += standard_cn(rng) * scale;
    }
}
