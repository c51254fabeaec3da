//! Command-line front end.
//!
//! Subcommands: `sweep` (Monte Carlo BER curves to CSV), `gaps` (SNR gaps of
//! an existing CSV), `inspect` (intermediate arrays of one trial) and
//! `profiles` (built-in channel profiles). Configuration comes from a flat
//! `key = value` file; command-line flags override it.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::channel::{self, PowerDelayProfile};
use crate::estimators::{self, EstimatorId};
use crate::harness::{self, SimConfig};
use crate::phy::GridConfig;
use crate::{Error, Result, C64};

/// Splits `key = value` text into `(line, key, value)` triples. `#` starts a
/// comment; blank lines are skipped.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                origin: origin.to_string(),
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        out.push((i + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses `a,b,c` where each item is a number, `inf`, or a
/// `start:step:stop` range (inclusive of `stop` up to rounding).
pub fn parse_snr_list(text: &str) -> Result<Vec<f64>> {
    let number = |s: &str| -> Result<f64> {
        match s.trim() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad SNR value '{t}'"))),
        }
    };
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(number(single)?),
            [start, step, stop] => {
                let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
                if !(step.is_finite() && step > 0.0 && start.is_finite() && stop.is_finite()) {
                    return Err(Error::config(format!("bad SNR range '{item}'")));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Err(Error::config(format!("empty SNR range '{item}'")));
                }
                out.extend((0..=count as usize).map(|i| start + step * i as f64));
            }
            _ => return Err(Error::config(format!("bad SNR item '{item}'"))),
        }
    }
    if out.is_empty() {
        return Err(Error::config("empty SNR list"));
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::config(format!("bad {what} '{s}'"))))
        .collect()
}

fn parse_estimators(text: &str) -> Result<Vec<EstimatorId>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "dftce", version, about = "OFDM DFT-based channel estimation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a BER/MSE sweep and write a CSV.
    Sweep(SweepArgs),
    /// Compute SNR gaps from a sweep CSV.
    Gaps(GapsArgs),
    /// Dump the intermediate arrays of one trial.
    Inspect(InspectArgs),
    /// List built-in channel profiles.
    Profiles(ProfilesArgs),
}

/// Overrides shared by `sweep` and `inspect`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SNR points in dB: `0,10,20` or `0:2.5:30`.
    #[arg(long)]
    pub snr: Option<String>,
    /// Comma-separated estimator ids.
    #[arg(long)]
    pub estimators: Option<String>,
    #[arg(long)]
    pub subframes: Option<usize>,
    /// Denoising constant of the conventional estimators.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub th_perfect: Option<usize>,
    #[arg(long)]
    pub th_inaccurate: Option<usize>,
    /// Built-in profile name.
    #[arg(long)]
    pub profile: Option<String>,
    /// Custom profile file (overrides --profile).
    #[arg(long)]
    pub profile_file: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the gap report as CSV.
    #[arg(long)]
    pub gaps_out: Option<PathBuf>,
    /// Target BERs for the gap summary.
    #[arg(long, default_value = "1e-3")]
    pub targets: String,
    /// Suppress per-point progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct GapsArgs {
    /// Sweep CSV to analyze.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "1e-3")]
    pub targets: String,
    /// Write the report as CSV instead of printing a table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Estimator whose thresholded CIR and estimate are dumped.
    #[arg(long, default_value = "proposed")]
    pub estimator: String,
    /// Trial index.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    #[arg(long, default_value_t = channel::LTE_SAMPLE_RATE_HZ)]
    pub sample_rate: f64,
    /// Also list a custom profile file.
    #[arg(long)]
    pub profile_file: Option<PathBuf>,
}

fn read_text(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Builds the effective configuration: defaults, then the config file, then
/// flags.
pub fn resolve_config(args: &ConfigArgs) -> Result<SimConfig> {
    let mut cfg = SimConfig::lte_etu();
    let mut grid = cfg.grid;
    let mut profile_name = cfg.profile.name.clone();
    let mut profile_file: Option<PathBuf> = None;
    let mut sample_rate = cfg.profile.sample_rate_hz;

    if let Some(path) = &args.config {
        let origin = path.display().to_string();
        let text = read_text(path)?;
        for (line, key, value) in parse_key_values(&text, &origin)? {
            let at = |e: Error| Error::Parse {
                origin: origin.clone(),
                line,
                message: format!("{key}: {}", e.to_string().trim_start_matches("configuration error: ")),
            };
            let num = |v: &str| v.parse::<usize>().map_err(|_| at(Error::config(format!("bad integer '{v}'"))));
            let real = |v: &str| v.parse::<f64>().map_err(|_| at(Error::config(format!("bad number '{v}'"))));
            match key.as_str() {
                "n_subcarriers" => grid.n_subcarriers = num(&value)?,
                "n_pilots" => grid.n_pilots = num(&value)?,
                "symbols_per_block" => grid.symbols = num(&value)?,
                "cp_len" => grid.cp_len = num(&value)?,
                "profile" => profile_name = value,
                "profile_file" => {
                    let p = PathBuf::from(&value);
                    profile_file = Some(match (p.is_relative(), path.parent()) {
                        (true, Some(dir)) => dir.join(p),
                        _ => p,
                    });
                }
                "sample_rate_hz" => sample_rate = real(&value)?,
                "snr_db" => cfg.snr_points_db = parse_snr_list(&value).map_err(at)?,
                "subframes" => cfg.subframes_per_point = num(&value)?,
                "estimators" => cfg.estimators = parse_estimators(&value).map_err(at)?,
                "seed" => cfg.master_seed = value.parse().map_err(|_| at(Error::config(format!("bad seed '{value}'"))))?,
                "c" => cfg.c = real(&value)?,
                "th_perfect" => cfg.th_perfect = num(&value)?,
                "th_inaccurate" => cfg.th_inaccurate = num(&value)?,
                "workers" => cfg.workers = if value == "auto" { None } else { Some(num(&value)?) },
                _ => return Err(at(Error::config("unknown key"))),
            }
        }
    }

    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &args.snr {
        cfg.snr_points_db = parse_snr_list(v)?;
    }
    if let Some(v) = &args.estimators {
        cfg.estimators = parse_estimators(v)?;
    }
    if let Some(v) = args.subframes {
        cfg.subframes_per_point = v;
    }
    if let Some(v) = args.c {
        cfg.c = v;
    }
    if let Some(v) = args.th_perfect {
        cfg.th_perfect = v;
    }
    if let Some(v) = args.th_inaccurate {
        cfg.th_inaccurate = v;
    }
    if let Some(v) = &args.profile {
        profile_name = v.clone();
        profile_file = None;
    }
    if let Some(v) = &args.profile_file {
        profile_file = Some(v.clone());
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }

    cfg.grid = GridConfig::new(grid.n_subcarriers, grid.n_pilots, grid.symbols, grid.cp_len)?;
    cfg.profile = match profile_file {
        Some(p) => PowerDelayProfile::parse(&read_text(&p)?, &p.display().to_string(), sample_rate)?,
        None => channel::build_profile(&profile_name, sample_rate)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `stdout` and diagnostics to `stderr`. Returns the exit
/// code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match run(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Io { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn run(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sweep(a) => sweep(a, out),
        Command::Gaps(a) => gaps(a, out),
        Command::Inspect(a) => inspect(a, out),
        Command::Profiles(a) => profiles(a, out),
    }
}

fn print_gap_summary(report: &harness::GapReport, out: &mut dyn Write) -> Result<()> {
    let show = |x: Option<f64>| x.map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "not reached".into());
    for c in &report.crossings {
        writeln!(out, "BER {:e}: {:<16} at {}", c.target_ber, c.estimator.as_str(), show(c.snr_db)).map_err(io_out)?;
    }
    for g in &report.gaps {
        writeln!(
            out,
            "BER {:e}: {} - {} = {}",
            g.target_ber,
            g.estimator,
            g.reference,
            show(g.gap_db)
        )
        .map_err(io_out)?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&args.config)?;
    let targets: Vec<f64> = parse_list(&args.targets, "target BER")?;
    let comments = cfg.describe();
    for line in &comments {
        writeln!(out, "# {line}").map_err(io_out)?;
    }
    // Fail before the long run if the output is not writable.
    harness::write_csv_with_comments(&[], &comments, &args.out)?;
    let quiet = args.quiet;
    let mut progress_err = None;
    let records = harness::sweep_with_progress(&cfg, |r| {
        if quiet || progress_err.is_some() {
            return;
        }
        if let Err(e) = writeln!(
            out,
            "{:<16} {:>6.2} dB  ber {:.4e} (se {:.1e})  mse {:.4e}  sigma2_hat {:.4e}",
            r.estimator.as_str(),
            r.snr_db,
            r.ber,
            r.std_error(),
            r.mean_mse,
            r.mean_sigma2_hat
        ) {
            progress_err = Some(e);
        }
    })?;
    if let Some(e) = progress_err {
        return Err(io_out(e));
    }
    harness::write_csv_with_comments(&records, &comments, &args.out)?;
    let report = harness::gap_report(&records, &targets);
    print_gap_summary(&report, out)?;
    if let Some(path) = &args.gaps_out {
        harness::write_gaps(&report, path)?;
    }
    writeln!(out, "wrote {}", args.out.display()).map_err(io_out)?;
    Ok(())
}

fn gaps(args: &GapsArgs, out: &mut dyn Write) -> Result<()> {
    let records = harness::read_csv(&args.input)?;
    let targets: Vec<f64> = parse_list(&args.targets, "target BER")?;
    let report = harness::gap_report(&records, &targets);
    match &args.out {
        Some(path) => harness::write_gaps(&report, path),
        None => print_gap_summary(&report, out),
    }
}

fn complex_rows(out: &mut String, label: &str, header: &str, rows: impl Iterator<Item = (String, C64)>) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "[{label}]");
    let _ = writeln!(out, "{header},re,im");
    for (prefix, v) in rows {
        let _ = writeln!(out, "{prefix},{:.15e},{:.15e}", v.re, v.im);
    }
    out.push('\n');
}

/// Labeled CSV blocks describing one trial at the first configured SNR.
pub fn inspect_report(cfg: &SimConfig, id: EstimatorId, trial: u64) -> Result<String> {
    use std::fmt::Write as _;
    let snr = cfg.snr_points_db[0];
    let n = cfg.grid.n_subcarriers;
    let pilots = harness::sweep_pilots(cfg);
    let signals = harness::simulate_block(cfg, &pilots, snr, trial)?;
    let ls = crate::phy::extract_pilot_ls(&signals.rx_grid, &pilots, &cfg.grid)?;

    let mut out = String::new();
    for line in cfg.describe() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# inspect: estimator = {id}, trial = {trial}, snr_db = {snr}\n");

    complex_rows(
        &mut out,
        "pilot_ls",
        "n,m",
        (0..ls.symbols()).flat_map(|m| (0..ls.n_pilots()).map(move |n| (n, m))).map(|(n, m)| (format!("{n},{m}"), ls.values().get(n, m))),
    );

    let mut noise_rows: Vec<String> = Vec::new();
    if cfg.grid.symbols >= 2 {
        let (_, stacked, _) = estimators::proposed_trace(&ls, n)?;
        let m = stacked.symbols();
        complex_rows(
            &mut out,
            "stacked_cir",
            "i,n,v",
            stacked.samples().iter().enumerate().map(|(i, &v)| (format!("{i},{},{}", i / m, i % m), v)),
        );
        let noise = estimators::proposed_noise_var(&stacked)?;
        noise_rows.push(format!("proposed,block,{:.15e},{}", noise.sigma2_hat, noise.sample_count));
    }
    for (label, th) in [("conv-perfect", cfg.th_perfect), ("conv-inaccurate", cfg.th_inaccurate)] {
        for m in 0..cfg.grid.symbols {
            let cir = crate::spectral::idft(ls.column(m))?;
            let noise = estimators::conventional_noise_var(&cir, th)?;
            noise_rows.push(format!("{label},{m},{:.15e},{}", noise.sigma2_hat, noise.sample_count));
        }
    }
    let _ = writeln!(out, "[noise_estimates]\nscheme,symbol,sigma2_hat,sample_count");
    for row in noise_rows {
        let _ = writeln!(out, "{row}");
    }
    out.push('\n');

    // Post-threshold CIR of the selected estimator.
    let traces: Vec<(String, estimators::DenoiseTrace)> = match id {
        EstimatorId::Proposed => vec![("block".into(), estimators::proposed_trace(&ls, n)?.2)],
        EstimatorId::ConvPerfect | EstimatorId::ConvInaccurate => {
            let th = if id == EstimatorId::ConvPerfect { cfg.th_perfect } else { cfg.th_inaccurate };
            let params = estimators::ConventionalParams::new(th, cfg.c)?;
            (0..cfg.grid.symbols)
                .map(|m| Ok((m.to_string(), estimators::conventional_trace(ls.column(m), &params, n)?.1)))
                .collect::<Result<_>>()?
        }
        EstimatorId::Ideal | EstimatorId::LsOnly => Vec::new(),
    };
    if !traces.is_empty() {
        let _ = writeln!(out, "[cir_threshold]\nsymbol,l,raw_re,raw_im,cleaned_re,cleaned_im,zeroed");
        for (symbol, t) in &traces {
            for (l, (r, c)) in t.raw_cir.iter().zip(&t.cleaned_cir).enumerate() {
                let zeroed = (*c == C64::default() && *r != C64::default()) as u8;
                let _ = writeln!(out, "{symbol},{l},{:.15e},{:.15e},{:.15e},{:.15e},{zeroed}", r.re, r.im, c.re, c.im);
            }
        }
        out.push('\n');
    }

    let estimates = harness::estimate_block(cfg, &signals, &pilots, id)?;
    let truth = &signals.realization.freq_response;
    let _ = writeln!(out, "[channel_estimate]\nsymbol,k,hhat_re,hhat_im,htrue_re,htrue_im");
    for (m, est) in estimates.iter().enumerate() {
        let symbol = if estimates.len() == 1 { "block".to_string() } else { m.to_string() };
        for (k, (h, t)) in est.h_hat.iter().zip(truth).enumerate() {
            let _ = writeln!(out, "{symbol},{k},{:.15e},{:.15e},{:.15e},{:.15e}", h.re, h.im, t.re, t.im);
        }
    }
    Ok(out)
}

fn inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&args.config)?;
    let id: EstimatorId = args.estimator.parse()?;
    let text = inspect_report(&cfg, id, args.trial)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => out.write_all(text.as_bytes()).map_err(io_out),
    }
}

fn profile_row(p: &PowerDelayProfile) -> String {
    let delays: Vec<String> = p.delays.iter().map(|d| d.to_string()).collect();
    let powers: Vec<String> = p.powers.iter().map(|w| format!("{w:.12}")).collect();
    format!(
        "{},{:?},{},{},{:.12}",
        p.name,
        p.fading,
        delays.join(" "),
        powers.join(" "),
        p.powers.iter().sum::<f64>()
    )
    .to_lowercase()
}

fn profiles(args: &ProfilesArgs, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "# sample_rate_hz = {}", args.sample_rate).map_err(io_out)?;
    writeln!(out, "name,fading,delays_samples,powers_linear,power_sum").map_err(io_out)?;
    for name in channel::BUILTIN_PROFILES {
        let p = channel::build_profile(name, args.sample_rate)?;
        writeln!(out, "{}", profile_row(&p)).map_err(io_out)?;
    }
    if let Some(path) = &args.profile_file {
        let p = PowerDelayProfile::parse(&read_text(path)?, &path.display().to_string(), args.sample_rate)?;
        writeln!(out, "{}", profile_row(&p)).map_err(io_out)?;
    }
    Ok(())
}
