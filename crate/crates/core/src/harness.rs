//! Paired Monte Carlo BER/MSE sweeps, SNR-gap extraction and CSV I/O.
//!
//! Every trial draws its bits, channel and noise from ChaCha streams keyed by
//! `(master seed, trial index, purpose)`. All estimators of a sweep are
//! evaluated on the same received block, and per-trial outcomes are reduced
//! in trial order, so results do not depend on the worker count.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, ChannelRealization, NoiseSpec, PowerDelayProfile};
use crate::estimators::{self, ChannelEstimate, ConventionalParams, EstimatorId};
use crate::phy::{self, ComplexMatrix, GridConfig, ResourceGrid};
use crate::{Error, Result, C64};

/// Column header of the BER CSV.
pub const CSV_HEADER: &str = "estimator,snr_db,total_bits,bit_errors,ber,mean_mse,mean_sigma2_hat";
/// Column header of the gap CSV.
pub const GAP_HEADER: &str = "target_ber,estimator,reference,estimator_snr_db,reference_snr_db,gap_db";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub profile: PowerDelayProfile,
    pub snr_points_db: Vec<f64>,
    pub subframes_per_point: usize,
    pub estimators: Vec<EstimatorId>,
    pub master_seed: u64,
    /// Denoising constant of the conventional estimators.
    pub c: f64,
    pub th_perfect: usize,
    pub th_inaccurate: usize,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
}

impl SimConfig {
    /// N = 512, Np = 64, M = 2, ETU at 7.68 MHz, 0..30 dB in 2.5 dB steps.
    pub fn lte_etu() -> Self {
        Self {
            grid: GridConfig::lte_like(),
            profile: channel::build_profile("etu", channel::LTE_SAMPLE_RATE_HZ).expect("built-in profile"),
            snr_points_db: (0..=12).map(|i| 2.5 * i as f64).collect(),
            subframes_per_point: 10_000,
            estimators: vec![
                EstimatorId::Ideal,
                EstimatorId::Proposed,
                EstimatorId::ConvPerfect,
                EstimatorId::ConvInaccurate,
            ],
            master_seed: 1,
            c: 2.0,
            th_perfect: 39,
            th_inaccurate: 19,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.profile.check_against(&self.grid)?;
        if self.snr_points_db.is_empty() {
            return Err(Error::config("no SNR points"));
        }
        if self.snr_points_db.iter().any(|s| s.is_nan()) {
            return Err(Error::config("SNR points must be numbers"));
        }
        if self.snr_points_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("SNR points must be strictly increasing"));
        }
        if self.subframes_per_point == 0 {
            return Err(Error::config("subframes per point must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("no estimators selected"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("worker count must be at least 1"));
        }
        for th in [self.th_perfect, self.th_inaccurate] {
            if th >= self.grid.n_pilots {
                return Err(Error::config(format!(
                    "threshold {th} must be below the pilot count {}",
                    self.grid.n_pilots
                )));
            }
        }
        ConventionalParams::new(self.th_perfect, self.c)?;
        if self.estimators.contains(&EstimatorId::Proposed) && self.grid.symbols < 2 {
            return Err(Error::config("the proposed estimator needs at least 2 symbols per block"));
        }
        Ok(())
    }

    fn conventional_params(&self, id: EstimatorId) -> Option<ConventionalParams> {
        let threshold = match id {
            EstimatorId::ConvPerfect => self.th_perfect,
            EstimatorId::ConvInaccurate => self.th_inaccurate,
            _ => return None,
        };
        Some(ConventionalParams { threshold, c: self.c })
    }

    /// Fully expanded `key = value` lines for everything that affects results.
    /// The worker count is left out since it never changes the output.
    pub fn describe(&self) -> Vec<String> {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",");
        vec![
            format!("n_subcarriers = {}", self.grid.n_subcarriers),
            format!("n_pilots = {}", self.grid.n_pilots),
            format!("symbols_per_block = {}", self.grid.symbols),
            format!("cp_len = {}", self.grid.cp_len),
            format!("profile = {}", self.profile.name),
            format!("sample_rate_hz = {}", self.profile.sample_rate_hz),
            format!(
                "profile_taps = {}",
                join(&mut self.profile.delays.iter().zip(&self.profile.powers).map(|(d, p)| format!("{d}:{p:e}")))
            ),
            format!("fading = {:?}", self.profile.fading).to_lowercase(),
            format!("snr_db = {}", join(&mut self.snr_points_db.iter().map(|s| s.to_string()))),
            format!("subframes = {}", self.subframes_per_point),
            format!("estimators = {}", join(&mut self.estimators.iter().map(|e| e.to_string()))),
            format!("seed = {}", self.master_seed),
            format!("c = {}", self.c),
            format!("th_perfect = {}", self.th_perfect),
            format!("th_inaccurate = {}", self.th_inaccurate),
        ]
    }
}

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Bits = 1,
    Channel = 2,
    Noise = 3,
}

/// ChaCha stream keyed by `(seed, trial, purpose)`.
pub fn substream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Pilot symbols shared by every trial of a sweep.
pub fn sweep_pilots(cfg: &SimConfig) -> ComplexMatrix {
    phy::generate_pilots(cfg.master_seed, &cfg.grid)
}

/// Everything the receiver sees in one trial, plus the genie channel.
#[derive(Debug, Clone)]
pub struct TrialSignals {
    pub bits: Vec<u8>,
    pub realization: ChannelRealization,
    pub tx_grid: ResourceGrid,
    pub rx_samples: Vec<C64>,
    pub rx_grid: ComplexMatrix,
}

/// Transmits one block through the channel and noise of `trial`.
pub fn simulate_block(cfg: &SimConfig, pilots: &ComplexMatrix, snr_db: f64, trial: u64) -> Result<TrialSignals> {
    let grid = &cfg.grid;
    let mut bit_rng = substream(cfg.master_seed, trial, Purpose::Bits);
    let mut bits = Vec::with_capacity(grid.bits_per_block() + 63);
    while bits.len() < grid.bits_per_block() {
        let word: u64 = bit_rng.random();
        bits.extend((0..64).map(|i| ((word >> i) & 1) as u8));
    }
    bits.truncate(grid.bits_per_block());
    let data = phy::qpsk_modulate(&bits)?;
    let tx_grid = ResourceGrid::assemble(grid, &data, pilots)?;
    let tx = phy::ofdm_modulate(&tx_grid.cells, grid)?;

    let realization = channel::realize(
        &cfg.profile,
        grid.n_subcarriers,
        &mut substream(cfg.master_seed, trial, Purpose::Channel),
    );
    let mut rx_samples = channel::apply(&tx, &realization, grid)?;
    channel::add_awgn(
        &mut rx_samples,
        &NoiseSpec::from_snr_db(snr_db),
        &mut substream(cfg.master_seed, trial, Purpose::Noise),
    );
    let rx_grid = phy::ofdm_demodulate(&rx_samples, grid)?;
    Ok(TrialSignals {
        bits,
        realization,
        tx_grid,
        rx_samples,
        rx_grid,
    })
}

/// Result of one estimator on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
    /// Estimator MSE averaged over the symbols of the block.
    pub mse: f64,
    /// Noise-variance estimate averaged over symbols, if the estimator makes one.
    pub sigma2_hat: Option<f64>,
}

/// Channel estimates for a received block: one per symbol for per-symbol
/// estimators, a single shared one otherwise.
pub fn estimate_block(
    cfg: &SimConfig,
    signals: &TrialSignals,
    pilots: &ComplexMatrix,
    id: EstimatorId,
) -> Result<Vec<ChannelEstimate>> {
    let grid = &cfg.grid;
    let n = grid.n_subcarriers;
    if id == EstimatorId::Ideal {
        return Ok(vec![estimators::ideal_estimate(&signals.realization)]);
    }
    let ls = phy::extract_pilot_ls(&signals.rx_grid, pilots, grid)?;
    match id {
        EstimatorId::Ideal => unreachable!(),
        EstimatorId::Proposed => Ok(vec![estimators::proposed_estimate(&ls, n)?]),
        EstimatorId::LsOnly => Ok((0..grid.symbols)
            .map(|m| estimators::ls_only_estimate(ls.column(m), n))
            .collect()),
        EstimatorId::ConvPerfect | EstimatorId::ConvInaccurate => {
            let params = cfg.conventional_params(id).expect("conventional id");
            (0..grid.symbols)
                .map(|m| {
                    let mut est = estimators::conventional_estimate(ls.column(m), &params, n)?;
                    est.estimator = id;
                    Ok(est)
                })
                .collect()
        }
    }
}

/// Estimates, equalizes and counts bit errors for one estimator.
pub fn evaluate(
    cfg: &SimConfig,
    signals: &TrialSignals,
    pilots: &ComplexMatrix,
    id: EstimatorId,
) -> Result<TrialOutcome> {
    let grid = &cfg.grid;
    let estimates = estimate_block(cfg, signals, pilots, id)?;
    let per_symbol = grid.data_per_symbol() * 2;
    let mut bit_errors = 0u64;
    for m in 0..grid.symbols {
        let est = &estimates[m.min(estimates.len() - 1)];
        let decided = phy::qpsk_demodulate(&estimators::equalize(&signals.rx_grid, est, grid, m));
        let sent = &signals.bits[m * per_symbol..(m + 1) * per_symbol];
        bit_errors += decided.iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
    }
    let count = estimates.len() as f64;
    let mse = estimates
        .iter()
        .map(|e| estimators::estimator_mse(e, &signals.realization))
        .sum::<f64>()
        / count;
    let sigma2: Vec<f64> = estimates.iter().filter_map(|e| e.noise.map(|n| n.sigma2_hat)).collect();
    let sigma2_hat = (!sigma2.is_empty()).then(|| sigma2.iter().sum::<f64>() / sigma2.len() as f64);
    Ok(TrialOutcome {
        bit_errors,
        bits: grid.bits_per_block() as u64,
        mse,
        sigma2_hat,
    })
}

/// One subframe for one estimator.
pub fn run_trial(cfg: &SimConfig, snr_db: f64, trial: u64, id: EstimatorId) -> Result<TrialOutcome> {
    let pilots = sweep_pilots(cfg);
    let signals = simulate_block(cfg, &pilots, snr_db, trial)?;
    evaluate(cfg, &signals, &pilots, id)
}

/// Aggregated result of one `(estimator, snr)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub estimator: EstimatorId,
    pub snr_db: f64,
    pub total_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub mean_mse: f64,
    /// NaN for estimators without a noise estimate.
    pub mean_sigma2_hat: f64,
}

impl BerRecord {
    /// Binomial standard error of `ber`, treating bits as independent.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.total_bits as f64).sqrt()
    }

    /// Field-wise equality that treats two NaNs as equal.
    pub fn same_as(&self, other: &BerRecord) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.estimator == other.estimator
            && eq(self.snr_db, other.snr_db)
            && self.total_bits == other.total_bits
            && self.bit_errors == other.bit_errors
            && eq(self.ber, other.ber)
            && eq(self.mean_mse, other.mean_mse)
            && eq(self.mean_sigma2_hat, other.mean_sigma2_hat)
    }
}

fn reduce(id: EstimatorId, snr_db: f64, outcomes: impl Iterator<Item = TrialOutcome>) -> BerRecord {
    let (mut bits, mut errors, mut mse, mut sigma2, mut sigma2_count, mut trials) = (0u64, 0u64, 0.0, 0.0, 0usize, 0usize);
    for o in outcomes {
        bits += o.bits;
        errors += o.bit_errors;
        mse += o.mse;
        if let Some(s) = o.sigma2_hat {
            sigma2 += s;
            sigma2_count += 1;
        }
        trials += 1;
    }
    BerRecord {
        estimator: id,
        snr_db,
        total_bits: bits,
        bit_errors: errors,
        ber: errors as f64 / bits as f64,
        mean_mse: mse / trials as f64,
        mean_sigma2_hat: if sigma2_count == 0 { f64::NAN } else { sigma2 / sigma2_count as f64 },
    }
}

/// Runs every configured estimator at every SNR point.
pub fn sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    sweep_with_progress(cfg, |_| {})
}

/// [`sweep`], calling `progress` with each record as its SNR point finishes.
pub fn sweep_with_progress(cfg: &SimConfig, mut progress: impl FnMut(&BerRecord)) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let pilots = sweep_pilots(cfg);

    // by_estimator[e][s]
    let mut by_estimator: Vec<Vec<BerRecord>> = vec![Vec::new(); cfg.estimators.len()];
    for &snr in &cfg.snr_points_db {
        let outcomes: Vec<Vec<TrialOutcome>> = pool.install(|| {
            (0..cfg.subframes_per_point as u64)
                .into_par_iter()
                .map(|trial| {
                    let signals = simulate_block(cfg, &pilots, snr, trial)?;
                    cfg.estimators
                        .iter()
                        .map(|&id| evaluate(cfg, &signals, &pilots, id))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (e, &id) in cfg.estimators.iter().enumerate() {
            let record = reduce(id, snr, outcomes.iter().map(|per_trial| per_trial[e]));
            progress(&record);
            by_estimator[e].push(record);
        }
    }
    Ok(by_estimator.into_iter().flatten().collect())
}

/// SNR at which one curve reaches one BER target.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub estimator: EstimatorId,
    pub target_ber: f64,
    /// `None` when the curve never brackets the target.
    pub snr_db: Option<f64>,
}

/// `gap_db = snr(estimator) - snr(reference)` at one target; positive means
/// `estimator` needs more SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub target_ber: f64,
    pub estimator: EstimatorId,
    pub reference: EstimatorId,
    pub estimator_snr_db: Option<f64>,
    pub reference_snr_db: Option<f64>,
    pub gap_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapReport {
    pub crossings: Vec<Crossing>,
    /// Every pair `(a, b)` with `a` listed before `b` in the records.
    pub gaps: Vec<Gap>,
}

impl GapReport {
    pub fn crossing(&self, id: EstimatorId, target: f64) -> Option<f64> {
        self.crossings
            .iter()
            .find(|c| c.estimator == id && c.target_ber == target)
            .and_then(|c| c.snr_db)
    }

    /// `snr(estimator) - snr(reference)` for any pair present in the report.
    pub fn gap(&self, target: f64, estimator: EstimatorId, reference: EstimatorId) -> Option<f64> {
        Some(self.crossing(estimator, target)? - self.crossing(reference, target)?)
    }
}

/// Interpolated SNR at which the BER curve first falls to `target`.
///
/// Interpolation is linear in `log10(BER)` against SNR in dB. When the lower
/// bracketing point has zero errors the log is undefined and the crossing is
/// interpolated linearly in BER instead.
pub fn crossing_snr(points: &[(f64, f64)], target: f64) -> Option<f64> {
    for w in points.windows(2) {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 == target {
            return Some(s0);
        }
        if b0 > target && b1 <= target {
            if b1 == target {
                return Some(s1);
            }
            let frac = if b1 > 0.0 {
                (target.log10() - b0.log10()) / (b1.log10() - b0.log10())
            } else {
                (b0 - target) / b0
            };
            return Some(s0 + frac * (s1 - s0));
        }
    }
    match points.last() {
        Some(&(s, b)) if b == target => Some(s),
        _ => None,
    }
}

/// Crossing SNRs of every curve and pairwise gaps at each target BER.
pub fn gap_report(records: &[BerRecord], target_bers: &[f64]) -> GapReport {
    let mut order: Vec<EstimatorId> = Vec::new();
    for r in records {
        if !order.contains(&r.estimator) {
            order.push(r.estimator);
        }
    }
    let curve = |id: EstimatorId| {
        let mut pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.estimator == id)
            .map(|r| (r.snr_db, r.ber))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    };
    let mut report = GapReport::default();
    for &target in target_bers {
        for &id in &order {
            report.crossings.push(Crossing {
                estimator: id,
                target_ber: target,
                snr_db: crossing_snr(&curve(id), target),
            });
        }
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                let sa = report.crossing(a, target);
                let sb = report.crossing(b, target);
                report.gaps.push(Gap {
                    target_ber: target,
                    estimator: a,
                    reference: b,
                    estimator_snr_db: sa,
                    reference_snr_db: sb,
                    gap_db: sa.zip(sb).map(|(x, y)| x - y),
                });
            }
        }
    }
    report
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_else(|| "not_reached".to_string())
}

/// CSV text: optional `# ` comment lines, header, one row per record.
pub fn format_csv(records: &[BerRecord], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.estimator,
            fmt_float(r.snr_db),
            r.total_bits,
            r.bit_errors,
            fmt_float(r.ber),
            fmt_float(r.mean_mse),
            fmt_float(r.mean_sigma2_hat)
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_csv(records: &[BerRecord], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_csv(records, &[]))
}

/// [`write_csv`] preceded by `# ` comment lines.
pub fn write_csv_with_comments(records: &[BerRecord], comments: &[String], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_csv(records, comments))
}

/// Parses text produced by [`format_csv`]; `#` lines and blank lines are
/// skipped.
pub fn parse_csv(text: &str, origin: &str) -> Result<Vec<BerRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((line, h)) => return Err(err(line, format!("unexpected header '{h}'"))),
        None => return Err(err(0, "missing header".into())),
    }
    lines
        .map(|(line, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 7 {
                return Err(err(line, format!("expected 7 fields, found {}", fields.len())));
            }
            let float = |i: usize| {
                fields[i]
                    .parse::<f64>()
                    .map_err(|_| err(line, format!("bad number '{}'", fields[i])))
            };
            let int = |i: usize| {
                fields[i]
                    .parse::<u64>()
                    .map_err(|_| err(line, format!("bad integer '{}'", fields[i])))
            };
            Ok(BerRecord {
                estimator: fields[0].parse().map_err(|e: Error| err(line, e.to_string()))?,
                snr_db: float(1)?,
                total_bits: int(2)?,
                bit_errors: int(3)?,
                ber: float(4)?,
                mean_mse: float(5)?,
                mean_sigma2_hat: float(6)?,
            })
        })
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BerRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}

pub fn format_gaps(report: &GapReport) -> String {
    let mut out = format!("{GAP_HEADER}\n");
    for g in &report.gaps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_float(g.target_ber),
            g.estimator,
            g.reference,
            fmt_opt(g.estimator_snr_db),
            fmt_opt(g.reference_snr_db),
            fmt_opt(g.gap_db)
        );
    }
    out
}

pub fn write_gaps(report: &GapReport, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &format_gaps(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: EstimatorId, snr: f64, ber: f64) -> BerRecord {
        BerRecord {
            estimator: id,
            snr_db: snr,
            total_bits: 1_000_000,
            bit_errors: (ber * 1e6).round() as u64,
            ber,
            mean_mse: 0.0,
            mean_sigma2_hat: f64::NAN,
        }
    }

    fn small_config() -> SimConfig {
        SimConfig {
            subframes_per_point: 20,
            snr_points_db: vec![10.0, 20.0],
            ..SimConfig::lte_etu()
        }
    }

    #[test]
    fn substreams_are_distinct() {
        let mut a = substream(1, 0, Purpose::Bits);
        let mut b = substream(1, 0, Purpose::Noise);
        let mut c = substream(1, 1, Purpose::Bits);
        let mut a2 = substream(1, 0, Purpose::Bits);
        let x: u64 = a.random();
        assert_eq!(x, a2.random::<u64>());
        assert_ne!(x, b.random::<u64>());
        assert_ne!(x, c.random::<u64>());
    }

    #[test]
    fn validation() {
        assert!(SimConfig::lte_etu().validate().is_ok());
        let bad = |f: fn(&mut SimConfig)| {
            let mut c = SimConfig::lte_etu();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.snr_points_db.clear()));
        assert!(bad(|c| c.snr_points_db = vec![5.0, 5.0]));
        assert!(bad(|c| c.snr_points_db = vec![5.0, 0.0]));
        assert!(bad(|c| c.subframes_per_point = 0));
        assert!(bad(|c| c.th_perfect = 64));
        assert!(bad(|c| c.c = -1.0));
        assert!(bad(|c| c.workers = Some(0)));
        assert!(bad(|c| c.grid.cp_len = 30));
        assert!(bad(|c| {
            c.grid.symbols = 1;
        }));
    }

    #[test]
    fn noiseless_ideal_and_proposed_are_error_free() {
        let cfg = small_config();
        for trial in 0..5 {
            let ideal = run_trial(&cfg, f64::INFINITY, trial, EstimatorId::Ideal).unwrap();
            assert_eq!(ideal.bit_errors, 0);
            assert_eq!(ideal.bits, 2 * 2 * 448);
            let prop = run_trial(&cfg, f64::INFINITY, trial, EstimatorId::Proposed).unwrap();
            assert_eq!(prop.bit_errors, 0);
            assert!(prop.mse <= 1e-18, "{}", prop.mse);
        }
    }

    #[test]
    fn estimators_see_identical_signals() {
        let cfg = small_config();
        let pilots = sweep_pilots(&cfg);
        let a = simulate_block(&cfg, &pilots, 15.0, 3).unwrap();
        let b = simulate_block(&cfg, &pilots, 15.0, 3).unwrap();
        assert_eq!(a.rx_samples, b.rx_samples);
        assert_eq!(a.realization, b.realization);
        let other = simulate_block(&cfg, &pilots, 15.0, 4).unwrap();
        assert_ne!(a.rx_samples, other.rx_samples);
    }

    #[test]
    fn sweep_bookkeeping() {
        let cfg = small_config();
        let records = sweep(&cfg).unwrap();
        assert_eq!(records.len(), 8);
        let expected_bits = (20 * 2 * (512 - 64) * 2) as u64;
        for r in &records {
            assert_eq!(r.total_bits, expected_bits);
            assert!((0.0..=1.0).contains(&r.ber));
        }
        let order: Vec<(EstimatorId, f64)> = records.iter().map(|r| (r.estimator, r.snr_db)).collect();
        assert_eq!(order[0], (EstimatorId::Ideal, 10.0));
        assert_eq!(order[1], (EstimatorId::Ideal, 20.0));
        assert_eq!(order[2], (EstimatorId::Proposed, 10.0));
        assert!(records[0].mean_sigma2_hat.is_nan());
        assert!(records[2].mean_sigma2_hat > 0.0);
    }

    #[test]
    fn sweep_is_independent_of_workers() {
        let mut cfg = small_config();
        cfg.workers = Some(1);
        let one = format_csv(&sweep(&cfg).unwrap(), &[]);
        cfg.workers = Some(3);
        assert_eq!(one, format_csv(&sweep(&cfg).unwrap(), &[]));
    }

    #[test]
    fn hand_interpolated_crossing() {
        let pts = [(10.0, 1e-2), (14.0, 1e-4)];
        assert!((crossing_snr(&pts, 1e-3).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(crossing_snr(&pts, 1e-5), None);
        assert_eq!(crossing_snr(&pts, 1e-1), None);
        assert_eq!(crossing_snr(&[(0.0, 1e-2), (5.0, 0.0)], 5e-3), Some(2.5));
    }

    #[test]
    fn identical_and_shifted_curves() {
        let bers = [0.1, 3e-2, 8e-3, 1.5e-3, 2e-4, 3e-5];
        let mut recs = Vec::new();
        for (i, &b) in bers.iter().enumerate() {
            recs.push(record(EstimatorId::Ideal, 2.5 * i as f64, b));
            recs.push(record(EstimatorId::Proposed, 2.5 * i as f64, b));
            recs.push(record(EstimatorId::ConvPerfect, 2.5 * i as f64 + 2.0, b));
        }
        let report = gap_report(&recs, &[1e-3, 1e-2]);
        for t in [1e-3, 1e-2] {
            assert_eq!(report.gap(t, EstimatorId::Proposed, EstimatorId::Ideal), Some(0.0));
            let g = report.gap(t, EstimatorId::ConvPerfect, EstimatorId::Ideal).unwrap();
            assert!((g - 2.0).abs() < 1e-9);
        }
        assert_eq!(report.gaps.len(), 6);
        let g = &report.gaps[1];
        assert_eq!((g.estimator, g.reference), (EstimatorId::Ideal, EstimatorId::ConvPerfect));
        assert!((g.gap_db.unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn unreached_target_is_reported() {
        let recs = vec![
            record(EstimatorId::Ideal, 0.0, 1e-1),
            record(EstimatorId::Ideal, 10.0, 1e-4),
            record(EstimatorId::ConvInaccurate, 0.0, 1e-1),
            record(EstimatorId::ConvInaccurate, 10.0, 1e-2),
        ];
        let report = gap_report(&recs, &[1e-3]);
        assert!(report.crossing(EstimatorId::Ideal, 1e-3).is_some());
        assert_eq!(report.crossing(EstimatorId::ConvInaccurate, 1e-3), None);
        assert_eq!(report.gaps[0].gap_db, None);
        assert!(format_gaps(&report).contains("not_reached"));
    }

    #[test]
    fn csv_round_trip_and_shape() {
        assert_eq!(format_csv(&[], &[]), format!("{CSV_HEADER}\n"));
        let mut recs = Vec::new();
        for id in [EstimatorId::Ideal, EstimatorId::Proposed, EstimatorId::ConvPerfect, EstimatorId::ConvInaccurate] {
            for s in 0..9 {
                let mut r = record(id, 2.5 * s as f64, 0.1 / (s + 1) as f64);
                r.mean_mse = 1.0 / 3.0 * s as f64;
                if id != EstimatorId::Ideal {
                    r.mean_sigma2_hat = std::f64::consts::PI * 1e-5;
                }
                recs.push(r);
            }
        }
        let text = format_csv(&recs, &[]);
        assert_eq!(text.lines().count(), 37);
        let back = parse_csv(&text, "mem").unwrap();
        assert_eq!(back.len(), recs.len());
        assert!(back.iter().zip(&recs).all(|(a, b)| a.same_as(b)));

        let commented = format_csv(&recs[..1], &["seed = 1".into()]);
        assert!(commented.starts_with("# seed = 1\n"));
        assert!(parse_csv(&commented, "mem").unwrap()[0].same_as(&recs[0]));
        assert!(matches!(parse_csv("a,b\n", "mem"), Err(Error::Parse { line: 1, .. })));
        let bad_row = format!("{CSV_HEADER}\nideal,1,2\n");
        assert!(matches!(parse_csv(&bad_row, "mem"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = write_csv(&[], "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
