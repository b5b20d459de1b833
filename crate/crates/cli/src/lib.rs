//! Command-line front end for the sphere-decoding simulator.
//!
//! Parses a sweep description, runs it through [`latsd::simkit`] and writes
//! one row per `(snr, detector)` as CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, ValueEnum};
use latsd::detectors::{ml_point_count, Detector, ML_MAX_POINTS};
use latsd::lattice::{RadiusDim, RadiusPolicy};
use latsd::modem::Constellation;
use latsd::simkit::{SimConfig, SnrRange, SweepRecord};
use serde_json::{json, Value};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LATTICE_SD_THREADS";

/// Column order of the CSV output.
pub const CSV_HEADER: &str = "snr_db,detector,n,mod,ber,ser,mean_flops,mean_preproc_flops,mean_nodes,trials,bit_errors,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "latsd", version, about = "BER and complexity sweeps for MIMO sphere decoders")]
pub struct CliArgs {
    /// Transmit and receive antennas.
    #[arg(long = "n", default_value_t = 2, value_parser = parse_antennas)]
    pub n: usize,

    /// Constellation: 16qam or 64qam.
    #[arg(long = "mod", default_value = "16qam", value_parser = parse_modulation)]
    pub modulation: u32,

    /// Detector to run (ml, sd-conv, sd-new). Repeat for several; default is all that fit.
    #[arg(long = "detector", value_parser = parse_detector)]
    pub detectors: Vec<Detector>,

    /// SNR sweep in dB as start:step:stop.
    #[arg(long, default_value = "0:2:20", value_parser = parse_snr)]
    pub snr: SnrRange,

    /// Monte Carlo trials per SNR point.
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Dimension used for the initial radius 2*sigma^2*dim: n or 2n.
    #[arg(long = "radius-dim", default_value = "2n", value_parser = parse_radius_dim)]
    pub radius_dim: RadiusDim,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count)]
    pub verbose: u8,
}

fn parse_antennas(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n @ (2 | 4 | 6)) => Ok(n),
        _ => Err(format!("expected 2, 4 or 6, got {s:?}")),
    }
}

fn parse_modulation(s: &str) -> Result<u32, String> {
    match s.to_ascii_lowercase().as_str() {
        "16qam" => Ok(16),
        "64qam" => Ok(64),
        _ => Err(format!("expected 16qam or 64qam, got {s:?}")),
    }
}

fn parse_detector(s: &str) -> Result<Detector, String> {
    s.parse().map_err(|e: latsd::Error| e.to_string())
}

fn parse_radius_dim(s: &str) -> Result<RadiusDim, String> {
    s.parse().map_err(|e: latsd::Error| e.to_string())
}

fn parse_snr(s: &str) -> Result<SnrRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, step, stop] = parts.as_slice() else {
        return Err(format!("expected start:step:stop, got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    SnrRange::new(num(start)?, num(stop)?, num(step)?).map_err(|e| e.to_string())
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliArgs, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    CliArgs::try_parse_from(argv)
}

/// Reads the thread cap from the environment.
pub fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => anyhow::bail!("{THREADS_ENV} must be a positive integer, got {v:?}"),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

impl CliArgs {
    /// Detector list after resolving the default. Exhaustive ML is left out
    /// of the default when its search space exceeds the guard.
    pub fn resolved_detectors(&self) -> anyhow::Result<Vec<Detector>> {
        if !self.detectors.is_empty() {
            let mut out = self.detectors.clone();
            out.dedup();
            return Ok(out);
        }
        let c = Constellation::new(self.modulation)?;
        Ok(Detector::ALL
            .iter()
            .copied()
            .filter(|d| *d != Detector::Ml || ml_point_count(self.n, &c) <= ML_MAX_POINTS)
            .collect())
    }

    pub fn to_sim_config(&self, threads: Option<usize>) -> anyhow::Result<SimConfig> {
        let cfg = SimConfig {
            n_antennas: self.n,
            mod_order: self.modulation,
            detectors: self.resolved_detectors()?,
            snr_db: self.snr,
            trials_per_point: self.trials,
            seed: self.seed,
            radius_policy: RadiusPolicy { dim: self.radius_dim, ..RadiusPolicy::default() },
            threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `%.10g`-style rendering: ten significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 <= |x| < 1e10`.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..10).contains(&exp) {
        let fixed = format!("{x:.*}", (9 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig10(x: f64) -> f64 {
    format_sig10(x).parse().expect("formatted float parses")
}

fn mod_label(order: u32) -> String {
    format!("{order}qam")
}

pub fn write_csv<W: Write>(records: &[SweepRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            format_sig10(r.snr_db),
            r.detector,
            r.n,
            mod_label(r.mod_order),
            format_sig10(r.ber),
            format_sig10(r.ser),
            format_sig10(r.mean_flops),
            format_sig10(r.mean_preproc_flops),
            format_sig10(r.mean_nodes),
            r.trials,
            r.bit_errors,
            r.seed
        )?;
    }
    w.flush()
}

fn record_json(r: &SweepRecord) -> Value {
    json!({
        "snr_db": round_sig10(r.snr_db),
        "detector": r.detector.to_string(),
        "n": r.n,
        "mod": mod_label(r.mod_order),
        "ber": round_sig10(r.ber),
        "ser": round_sig10(r.ser),
        "mean_flops": round_sig10(r.mean_flops),
        "mean_preproc_flops": round_sig10(r.mean_preproc_flops),
        "mean_nodes": round_sig10(r.mean_nodes),
        "trials": r.trials,
        "bit_errors": r.bit_errors,
        "seed": r.seed,
    })
}

pub fn write_json<W: Write>(records: &[SweepRecord], mut w: W) -> io::Result<()> {
    let doc = Value::Array(records.iter().map(record_json).collect());
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()
}

/// Writes `records` to `out`, or to standard output when `out` is `None`.
pub fn emit_results(records: &[SweepRecord], format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    anyhow::ensure!(!records.is_empty(), "no records to write");
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(records, sink)?,
        Format::Json => write_json(records, sink)?,
    }
    Ok(())
}

/// Full pipeline: config, sweep, output.
pub fn run(args: &CliArgs) -> anyhow::Result<Vec<SweepRecord>> {
    let cfg = args.to_sim_config(threads_from_env()?)?;
    log::info!(
        "{n}x{n} {}-QAM, detectors {:?}, {} SNR points x {} trials, seed {}",
        cfg.mod_order,
        cfg.detectors,
        cfg.snr_db.points().len(),
        cfg.trials_per_point,
        cfg.seed,
        n = cfg.n_antennas
    );
    let records = latsd::simkit::run_sweep(&cfg)?;
    emit_results(&records, args.format, args.out.as_deref())?;
    Ok(records)
}
