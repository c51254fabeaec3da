//! Channel estimators: genie, nearest-pilot LS fill, conventional per-symbol
//! DFT-based denoising, and multi-symbol DFT-based denoising.
//!
//! Both DFT-based schemes take the pilot LS estimates to the time domain,
//! zero out samples judged to be noise, zero-pad the impulse response to `N`
//! and transform back. They differ in how the noise level is found:
//!
//! * conventional: the tail `Th..Np` of the per-symbol `Np`-point impulse
//!   response is assumed to hold no channel energy. `Th` comes from an
//!   assumed delay spread.
//! * multi-symbol: the `M` pilot columns of a block are concatenated and sent
//!   through one `Np * M`-point IDFT. A block-constant channel makes that
//!   spectrum `Np`-periodic, so all of its energy lands on indices that are
//!   multiples of `M` and every other index is pure noise.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelRealization;
use crate::phy::{ComplexMatrix, GridConfig};
use crate::spectral;
use crate::{Error, Result, C64};

/// Magnitude floor applied to channel estimates before zero-forcing.
pub const ZF_FLOOR: f64 = 1e-12;

/// Which estimator produced a [`ChannelEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Ideal,
    ConvPerfect,
    ConvInaccurate,
    Proposed,
    LsOnly,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [
        EstimatorId::Ideal,
        EstimatorId::ConvPerfect,
        EstimatorId::ConvInaccurate,
        EstimatorId::Proposed,
        EstimatorId::LsOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::Ideal => "ideal",
            EstimatorId::ConvPerfect => "conv-perfect",
            EstimatorId::ConvInaccurate => "conv-inaccurate",
            EstimatorId::Proposed => "proposed",
            EstimatorId::LsOnly => "ls-only",
        }
    }

    /// Conventional and LS-fill estimators produce one estimate per symbol;
    /// the others one per block.
    pub fn per_symbol(self) -> bool {
        matches!(
            self,
            EstimatorId::ConvPerfect | EstimatorId::ConvInaccurate | EstimatorId::LsOnly
        )
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = EstimatorId::ALL.iter().map(|id| id.as_str()).collect();
                Error::config(format!("unknown estimator '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// `Np x M` LS channel estimates at the pilot subcarriers; column `m` holds
/// symbol `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotLsGrid(ComplexMatrix);

impl PilotLsGrid {
    pub fn new(values: ComplexMatrix) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn n_pilots(&self) -> usize {
        self.0.rows()
    }

    pub fn symbols(&self) -> usize {
        self.0.cols()
    }

    pub fn column(&self, m: usize) -> &[C64] {
        self.0.column(m)
    }
}

/// Output of the stacked `Np * M`-point IDFT.
///
/// The matrix view puts linear index `n * M + v` at row `n`, column `v`.
/// Column 0 carries the channel; columns `1..M` are pure noise for a
/// block-constant channel.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedCir {
    samples: Vec<C64>,
    n_pilots: usize,
    symbols: usize,
}

impl StackedCir {
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn n_pilots(&self) -> usize {
        self.n_pilots
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn get(&self, n: usize, v: usize) -> C64 {
        self.samples[n * self.symbols + v]
    }

    pub fn matrix_view(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n_pilots, self.symbols);
        for n in 0..self.n_pilots {
            for v in 0..self.symbols {
                out.set(n, v, self.get(n, v));
            }
        }
        out
    }

    pub fn channel_column(&self) -> Vec<C64> {
        self.samples.iter().step_by(self.symbols).copied().collect()
    }

    /// Columns `1..M` concatenated, `Np * (M - 1)` entries.
    pub fn noise_block(&self) -> Vec<C64> {
        (1..self.symbols)
            .flat_map(|v| (0..self.n_pilots).map(move |n| (n, v)))
            .map(|(n, v)| self.get(n, v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConventionalParams {
    /// First index of the assumed pure-noise region, `0..=Np-1`.
    pub threshold: usize,
    /// Samples inside the channel region survive only if
    /// `|h|^2 >= c * sigma2_hat`.
    pub c: f64,
}

impl ConventionalParams {
    pub fn new(threshold: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::config(format!("denoising constant c = {c} must be positive")));
        }
        Ok(Self { threshold, c })
    }
}

/// Estimated variance of the noise on time-domain impulse-response samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub sigma2_hat: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: Vec<C64>,
    pub estimator: EstimatorId,
    pub noise: Option<NoiseEstimate>,
}

/// Intermediate arrays of a DFT-based estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseTrace {
    /// Impulse response before any sample is removed.
    pub raw_cir: Vec<C64>,
    /// Impulse response after thresholding, before zero padding.
    pub cleaned_cir: Vec<C64>,
    pub noise: NoiseEstimate,
}

pub fn ideal_estimate(realization: &ChannelRealization) -> ChannelEstimate {
    ChannelEstimate {
        h_hat: realization.freq_response.clone(),
        estimator: EstimatorId::Ideal,
        noise: None,
    }
}

fn mean_power(samples: &[C64]) -> f64 {
    samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Mean power of `cir[threshold..]`.
pub fn conventional_noise_var(cir: &[C64], threshold: usize) -> Result<NoiseEstimate> {
    if threshold >= cir.len() {
        return Err(Error::config(format!(
            "threshold {threshold} leaves no noise samples in a length-{} impulse response",
            cir.len()
        )));
    }
    let tail = &cir[threshold..];
    Ok(NoiseEstimate {
        sigma2_hat: mean_power(tail),
        sample_count: tail.len(),
    })
}

/// Zero-pads `cir` to `n` samples and returns its `n`-point DFT.
fn interpolate(cir: &[C64], n: usize) -> Result<Vec<C64>> {
    if cir.len() > n {
        return Err(Error::config(format!(
            "impulse response of length {} does not fit {n} subcarriers",
            cir.len()
        )));
    }
    let mut padded = vec![C64::default(); n];
    padded[..cir.len()].copy_from_slice(cir);
    spectral::plan(n)?.forward(&mut padded)?;
    Ok(padded)
}

/// Conventional estimate for one OFDM symbol, with intermediates.
pub fn conventional_trace(
    pilot_col: &[C64],
    params: &ConventionalParams,
    n_subcarriers: usize,
) -> Result<(ChannelEstimate, DenoiseTrace)> {
    let raw_cir = spectral::idft(pilot_col)?;
    let noise = conventional_noise_var(&raw_cir, params.threshold)?;
    let floor = params.c * noise.sigma2_hat;
    let cleaned_cir: Vec<C64> = raw_cir
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            if i >= params.threshold || h.norm_sqr() < floor {
                C64::default()
            } else {
                h
            }
        })
        .collect();
    let h_hat = interpolate(&cleaned_cir, n_subcarriers)?;
    let estimator = EstimatorId::ConvPerfect;
    Ok((
        ChannelEstimate {
            h_hat,
            estimator,
            noise: Some(noise),
        },
        DenoiseTrace {
            raw_cir,
            cleaned_cir,
            noise,
        },
    ))
}

/// Conventional estimate for one OFDM symbol. The returned estimate is
/// tagged [`EstimatorId::ConvPerfect`]; callers running a mismatched
/// threshold retag it.
pub fn conventional_estimate(
    pilot_col: &[C64],
    params: &ConventionalParams,
    n_subcarriers: usize,
) -> Result<ChannelEstimate> {
    conventional_trace(pilot_col, params, n_subcarriers).map(|(est, _)| est)
}

/// `Np * M`-point IDFT of the pilot columns concatenated in symbol order.
pub fn proposed_stack_idft(pilots: &PilotLsGrid) -> Result<StackedCir> {
    if pilots.symbols() < 2 {
        return Err(Error::config(format!(
            "multi-symbol estimation needs at least 2 symbols per block, got {}",
            pilots.symbols()
        )));
    }
    // Column-major storage is already the concatenation of the columns.
    let samples = spectral::idft(pilots.values().as_slice())?;
    Ok(StackedCir {
        samples,
        n_pilots: pilots.n_pilots(),
        symbols: pilots.symbols(),
    })
}

/// Mean power over the noise block of `cir`.
pub fn proposed_noise_var(cir: &StackedCir) -> Result<NoiseEstimate> {
    if cir.symbols < 2 {
        return Err(Error::config("stacked impulse response has no noise columns"));
    }
    let noise = cir.noise_block();
    Ok(NoiseEstimate {
        sigma2_hat: mean_power(&noise),
        sample_count: noise.len(),
    })
}

/// Multi-symbol estimate for a whole block, with intermediates. Takes only
/// pilot data: no delay spread or threshold is involved.
pub fn proposed_trace(
    pilots: &PilotLsGrid,
    n_subcarriers: usize,
) -> Result<(ChannelEstimate, StackedCir, DenoiseTrace)> {
    let stacked = proposed_stack_idft(pilots)?;
    let noise = proposed_noise_var(&stacked)?;
    let raw_cir = stacked.channel_column();
    // Strict comparison: a sample exactly at the noise level survives.
    let cleaned_cir: Vec<C64> = raw_cir
        .iter()
        .map(|&h| if h.norm_sqr() < noise.sigma2_hat { C64::default() } else { h })
        .collect();
    let h_hat = interpolate(&cleaned_cir, n_subcarriers)?;
    Ok((
        ChannelEstimate {
            h_hat,
            estimator: EstimatorId::Proposed,
            noise: Some(noise),
        },
        stacked,
        DenoiseTrace {
            raw_cir,
            cleaned_cir,
            noise,
        },
    ))
}

/// Multi-symbol estimate; one estimate serves every symbol of the block.
pub fn proposed_estimate(pilots: &PilotLsGrid, n_subcarriers: usize) -> Result<ChannelEstimate> {
    proposed_trace(pilots, n_subcarriers).map(|(est, _, _)| est)
}

/// Each subcarrier takes the LS value of the circularly nearest pilot
/// (ties go to the lower pilot).
pub fn ls_only_estimate(pilot_col: &[C64], n_subcarriers: usize) -> ChannelEstimate {
    let np = pilot_col.len();
    let spacing = n_subcarriers / np;
    let h_hat = (0..n_subcarriers)
        .map(|k| {
            let offset = k % spacing;
            let n = k / spacing + usize::from(2 * offset > spacing);
            pilot_col[n % np]
        })
        .collect();
    ChannelEstimate {
        h_hat,
        estimator: EstimatorId::LsOnly,
        noise: None,
    }
}

/// Zero-forcing equalization of the data cells of symbol `symbol`.
///
/// Estimates smaller than [`ZF_FLOOR`] in magnitude are raised to the floor
/// keeping their phase (phase 0 for an exact zero).
pub fn equalize(
    rx_grid: &ComplexMatrix,
    estimate: &ChannelEstimate,
    cfg: &GridConfig,
    symbol: usize,
) -> Vec<C64> {
    let column = rx_grid.column(symbol);
    let spacing = cfg.pilot_spacing();
    column
        .iter()
        .zip(&estimate.h_hat)
        .enumerate()
        .filter(|(k, _)| k % spacing != 0)
        .map(|(_, (&y, &h))| y / floor_magnitude(h))
        .collect()
}

fn floor_magnitude(h: C64) -> C64 {
    let power = h.norm_sqr();
    if power >= ZF_FLOOR * ZF_FLOOR {
        h
    } else if power == 0.0 {
        C64::new(ZF_FLOOR, 0.0)
    } else {
        h * (ZF_FLOOR / h.norm())
    }
}

/// `(1/N) sum_k |H_hat[k] - H[k]|^2`.
pub fn estimator_mse(estimate: &ChannelEstimate, realization: &ChannelRealization) -> f64 {
    let truth = &realization.freq_response;
    estimate
        .h_hat
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / truth.len() as f64
}
