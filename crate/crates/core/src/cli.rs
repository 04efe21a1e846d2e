//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Deserialize;

use crate::channel::Geometry;
use crate::dmt_analytic::{
    lower_bound_transform_curve, mimo_dmt_curve, stc_curve, upper_bound_curve, DmtCurve,
};
use crate::error::{Error, Result};
use crate::experiments::{
    finite_snr_diversity, format_sig10, run, Estimator, RateMode, RelayMode, Scheme, SimConfig,
    SnrGrid,
};

#[derive(Debug, Parser)]
#[command(
    name = "relaymux",
    version,
    about = "Outage, relay-constraint and diversity-multiplexing curves for a half-duplex successive relay network"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo outage probability versus SNR
    Outage(OutageArgs),
    /// Probability that the relay decoding constraint holds versus SNR
    Constraint(ConstraintArgs),
    /// Analytic diversity-multiplexing tradeoff curves
    Dmt(DmtArgs),
    /// Finite-SNR diversity estimated from an outage CSV
    Diversity(DiversityArgs),
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// SNR grid in dB as start:stop:step (ascending, step > 0)
    #[arg(long, value_name = "DB:DB:DB", value_parser = parse_snr_range)]
    pub snr: SnrGrid,
    /// Codewords per frame (frame spans L+1 slots)
    #[arg(long = "L", value_name = "N", default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub codewords: u64,
    /// Monte Carlo trials per SNR point
    #[arg(long, value_name = "N", default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Master seed; each trial draws from its own stream of this seed
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
    /// Source-relay distance, relative to the unit source/relay-destination distance (linear)
    #[arg(long, value_name = "X", default_value_t = 0.1, value_parser = parse_positive)]
    pub rtilde: f64,
    /// Path-loss exponent of the source-relay links (linear)
    #[arg(long, value_name = "X", default_value_t = 4.0, value_parser = parse_positive)]
    pub pathloss: f64,
    /// Worker threads (0 = one per core)
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path (standard output when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate_selection").required(true).args(["mux", "rate"])))]
pub struct OutageArgs {
    /// Transmission scheme: direct | successive | dblast | stc | mimo22
    #[arg(long, value_name = "SCHEME")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub common: MonteCarloArgs,
    /// Finite-SNR multiplexing gain r; target rate R = r log2(1 + g η) bits/slot
    #[arg(long, value_name = "R", value_parser = parse_non_negative)]
    pub mux: Option<f64>,
    /// Fixed target rate in bits/slot
    #[arg(long, value_name = "BITS", value_parser = parse_non_negative)]
    pub rate: Option<f64>,
    /// Array gain g in the finite-SNR rate law (linear)
    #[arg(long, value_name = "X", default_value_t = 1.0, value_parser = parse_positive)]
    pub g: f64,
    /// Relay model: perfect (always decodes) | constrained (forwards only when the SNR constraint holds)
    #[arg(long, value_name = "MODE", default_value = "perfect")]
    pub relay: RelayMode,
}

#[derive(Debug, Args)]
pub struct ConstraintArgs {
    /// Scheme whose constraint is evaluated: successive | dblast | stc
    #[arg(long, value_name = "SCHEME", value_parser = parse_relay_scheme)]
    pub scheme: Scheme,
    #[command(flatten)]
    pub common: MonteCarloArgs,
}

#[derive(Debug, Args)]
pub struct DmtArgs {
    /// Curve to export: mimo:NTxNR | stc | upper | lower_bound_transform (repeatable)
    #[arg(long, value_name = "CURVE", required = true, value_parser = parse_curve)]
    pub curve: Vec<NamedCurve>,
    /// Sampling step in multiplexing gain
    #[arg(long, value_name = "R", default_value_t = 0.01, value_parser = parse_positive)]
    pub step: f64,
    /// Output CSV path (standard output when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    /// Outage CSV produced by the outage subcommand
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output CSV path (standard output when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct NamedCurve {
    pub name: String,
    pub curve: DmtCurve,
}

fn parse_snr_range(s: &str) -> std::result::Result<SnrGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step in dB, got '{s}'"));
    }
    let mut nums = [0.0; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("'{part}' is not a number: {e}"))?;
    }
    SnrGrid::from_range(nums[0], nums[1], nums[2]).map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s
        .parse()
        .map_err(|e| format!("'{s}' is not a number: {e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

fn parse_non_negative(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s
        .parse()
        .map_err(|e| format!("'{s}' is not a number: {e}"))?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be >= 0, got {s}"))
    }
}

fn parse_relay_scheme(s: &str) -> std::result::Result<Scheme, String> {
    match s.parse::<Scheme>()? {
        scheme @ (Scheme::SuccessiveMl | Scheme::Dblast | Scheme::Stc) => Ok(scheme),
        other => Err(format!(
            "scheme '{other}' has no relay constraint (use successive, dblast or stc)"
        )),
    }
}

fn parse_curve(s: &str) -> std::result::Result<NamedCurve, String> {
    let curve = match s {
        "stc" => stc_curve(),
        "upper" => upper_bound_curve(),
        "lower_bound_transform" => lower_bound_transform_curve(),
        _ => {
            let dims = s
                .strip_prefix("mimo:")
                .ok_or_else(|| format!("unknown curve '{s}' (expected mimo:NTxNR, stc, upper or lower_bound_transform)"))?;
            let (nt, nr) = dims
                .split_once('x')
                .ok_or_else(|| format!("expected mimo:NTxNR, got '{s}'"))?;
            let nt: usize = nt
                .parse()
                .map_err(|_| format!("bad transmit antenna count in '{s}'"))?;
            let nr: usize = nr
                .parse()
                .map_err(|_| format!("bad receive antenna count in '{s}'"))?;
            mimo_dmt_curve(nt, nr).map_err(|e| e.to_string())?
        }
    };
    Ok(NamedCurve {
        name: s.to_string(),
        curve,
    })
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Runs a parsed command. Exit status 0 on success, 1 on runtime failure.
pub fn execute(cli: Cli) -> ExitCode {
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Outage(args) => {
            let rate_mode = match (args.mux, args.rate) {
                (Some(r), None) => RateMode::Multiplexing { r, g: args.g },
                (None, Some(rate)) => RateMode::Fixed(rate),
                _ => unreachable!("clap enforces exactly one of --mux/--rate"),
            };
            let mut config = sim_config(args.scheme, &args.common, rate_mode)?;
            config.relay_mode = args.relay;
            run_estimator(&config, Estimator::Outage, args.common.out.as_deref())
        }
        Command::Constraint(args) => {
            let config = sim_config(args.scheme, &args.common, RateMode::Fixed(0.0))?;
            run_estimator(
                &config,
                Estimator::ConstraintProbability,
                args.common.out.as_deref(),
            )
        }
        Command::Dmt(args) => write_output(args.out.as_deref(), |w| {
            write_dmt(&args.curve, args.step, w)
        }),
        Command::Diversity(args) => {
            let rows = read_outage_csv(&args.input)?;
            write_output(args.out.as_deref(), |w| write_diversity(&rows, w))
        }
    }
}

fn sim_config(scheme: Scheme, common: &MonteCarloArgs, rate_mode: RateMode) -> Result<SimConfig> {
    let mut config = SimConfig::new(scheme, common.snr.clone(), rate_mode);
    config.codewords = usize::try_from(common.codewords)
        .map_err(|_| Error::Config(format!("L = {} is too large", common.codewords)))?;
    config.trials = common.trials;
    config.master_seed = common.seed;
    config.geometry = Geometry::new(common.rtilde, common.pathloss)?;
    config.workers = common.workers;
    config.validate()?;
    Ok(config)
}

fn run_estimator(config: &SimConfig, estimator: Estimator, out: Option<&Path>) -> Result<()> {
    let mut summary = None;
    write_output(out, |w| {
        summary = Some(run(config, estimator, w)?);
        Ok(())
    })?;
    if let Some(s) = summary {
        eprintln!(
            "{}: {} points x {} trials, {} events, {:.2} s",
            s.curve.label,
            s.rows,
            config.trials,
            s.total_count,
            s.elapsed.as_secs_f64()
        );
    }
    Ok(())
}

/// Sends output to stdout, or to `path` through a temporary file in the same
/// directory that is renamed into place only after a complete write.
fn write_output<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()
                .map_err(|e| Error::io("writing standard output", e))
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
                Error::io(format!("creating temporary file in {}", dir.display()), e)
            })?;
            {
                let mut w = BufWriter::new(tmp.as_file());
                body(&mut w)?;
                w.flush()
                    .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            }
            tmp.persist(path).map_err(|e| {
                Error::io(format!("renaming output into {}", path.display()), e.error)
            })?;
            Ok(())
        }
    }
}

fn write_dmt(curves: &[NamedCurve], step: f64, w: &mut dyn Write) -> Result<()> {
    let io_err = |e| Error::io("writing DMT curves", e);
    writeln!(w, "kind,curve,r,d").map_err(io_err)?;
    for named in curves {
        for &(r, d) in named.curve.breakpoints() {
            writeln!(
                w,
                "breakpoint,{},{},{}",
                named.name,
                format_sig10(r),
                format_sig10(d)
            )
            .map_err(io_err)?;
        }
        for (r, d) in named.curve.sample(step) {
            writeln!(
                w,
                "sample,{},{},{}",
                named.name,
                format_sig10(r),
                format_sig10(d)
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct OutageRow {
    snr_db: f64,
    scheme: String,
    rate_mode: String,
    rate_value: String,
    #[serde(rename = "L")]
    codewords: String,
    rtilde: String,
    p_hat: f64,
}

fn read_outage_csv(path: &Path) -> Result<Vec<OutageRow>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<OutageRow>, _>>()
        .map_err(|source| Error::Csv {
            context: format!("reading {}", path.display()),
            source,
        })
}

/// One diversity series per distinct (scheme, rate, L, rtilde), in the order
/// the series first appear in the input.
fn write_diversity(rows: &[OutageRow], w: &mut dyn Write) -> Result<()> {
    let io_err = |e| Error::io("writing diversity estimates", e);
    let key = |r: &OutageRow| {
        (
            r.scheme.clone(),
            r.rate_mode.clone(),
            r.rate_value.clone(),
            r.codewords.clone(),
            r.rtilde.clone(),
        )
    };
    let mut keys = Vec::new();
    for r in rows {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    writeln!(w, "snr_db,scheme,rate_mode,rate_value,L,rtilde,d_hat").map_err(io_err)?;
    for k in keys {
        let samples: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| key(r) == k)
            .map(|r| (r.snr_db, r.p_hat))
            .collect();
        let est = finite_snr_diversity(&samples)?;
        if !est.skipped_db.is_empty() {
            let skipped: Vec<String> = est.skipped_db.iter().map(|d| format_sig10(*d)).collect();
            eprintln!(
                "{}: skipped zero-outage points at {} dB",
                k.0,
                skipped.join(", ")
            );
        }
        for p in &est.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                format_sig10(p.snr_db),
                k.0,
                k.1,
                k.2,
                k.3,
                k.4,
                format_sig10(p.d_hat)
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
