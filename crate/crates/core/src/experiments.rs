//! Monte Carlo estimation of outage and relay-constraint probabilities over an
//! SNR grid, finite-SNR diversity estimates, and CSV output.
//!
//! Every trial is a pure function of `(config, trial index)`: its channel is
//! drawn from its own counter-addressed stream and the same draw is reused at
//! every SNR point. Counts are summed per chunk of trials, so results do not
//! depend on the number of workers or on scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::channel::{
    assemble_stc_matrix, assemble_successive_matrix, sample_realization, trial_stream,
    ChannelRealization, FrameSpec, Geometry,
};
use crate::dblast::{layer_schedule, per_message_bits, LayerSchedule, SicDecoder};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Gram, C64};
use crate::mimo_info::{
    constraint_threshold_stc, constraint_threshold_successive, direct_mutual_information, SnrPoint,
};
use crate::stats::{wilson_interval, Z_95};

const CHUNK: u64 = 2048;

pub const CSV_HEADER: [&str; 11] = [
    "snr_db",
    "scheme",
    "rate_mode",
    "rate_value",
    "L",
    "rtilde",
    "trials",
    "outage_count",
    "p_hat",
    "ci_low",
    "ci_high",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// 1×2 SIMO, source to destination only.
    Direct,
    /// Successive relaying with joint decoding of the whole frame.
    SuccessiveMl,
    /// Successive relaying decoded layer by layer with MMSE-SIC.
    Dblast,
    /// Two-slot space-time coding protocol.
    Stc,
    /// Point-to-point 2×2 MIMO reference.
    Mimo22,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Direct => "direct",
            Scheme::SuccessiveMl => "successive",
            Scheme::Dblast => "dblast",
            Scheme::Stc => "stc",
            Scheme::Mimo22 => "mimo22",
        }
    }

    fn uses_relay(&self) -> bool {
        matches!(self, Scheme::SuccessiveMl | Scheme::Dblast | Scheme::Stc)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "direct" => Ok(Scheme::Direct),
            "successive" | "successive_ml" => Ok(Scheme::SuccessiveMl),
            "dblast" => Ok(Scheme::Dblast),
            "stc" => Ok(Scheme::Stc),
            "mimo22" => Ok(Scheme::Mimo22),
            other => Err(format!(
                "unknown scheme '{other}' (expected direct, successive, dblast, stc or mimo22)"
            )),
        }
    }
}

/// How the target spectral efficiency `R` (bits per slot) is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateMode {
    /// The same `R` at every SNR.
    Fixed(f64),
    /// `R = r log2(1 + g η)`.
    Multiplexing { r: f64, g: f64 },
}

impl RateMode {
    pub fn rate_at(&self, eta: f64) -> f64 {
        match *self {
            RateMode::Fixed(rate) => rate,
            RateMode::Multiplexing { r, g } => r * (g * eta).ln_1p() / std::f64::consts::LN_2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RateMode::Fixed(_) => "fixed",
            RateMode::Multiplexing { .. } => "mux",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            RateMode::Fixed(rate) => rate,
            RateMode::Multiplexing { r, .. } => r,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RateMode::Fixed(rate) if !(rate >= 0.0) || !rate.is_finite() => Err(Error::Config(
                format!("rate must be a finite value >= 0, got {rate}"),
            )),
            RateMode::Multiplexing { r, .. } if !(r >= 0.0) || !r.is_finite() => {
                Err(Error::Config(format!(
                    "multiplexing gain must be a finite value >= 0, got {r}"
                )))
            }
            RateMode::Multiplexing { g, .. } if !(g > 0.0) || !g.is_finite() => Err(Error::Config(
                format!("array gain g must be positive, got {g}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RelayMode {
    /// The relay always decodes.
    #[default]
    Perfect,
    /// The relay forwards only when the decoding constraint holds; otherwise
    /// the trial counts as an outage.
    Constrained,
}

impl FromStr for RelayMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "perfect" => Ok(RelayMode::Perfect),
            "constrained" => Ok(RelayMode::Constrained),
            other => Err(format!(
                "unknown relay mode '{other}' (expected perfect or constrained)"
            )),
        }
    }
}

/// SNR points in dB, strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrGrid {
    db: Vec<f64>,
}

impl SnrGrid {
    pub fn from_db(db: Vec<f64>) -> Result<Self> {
        if db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("SNR grid has a non-finite point".into()));
        }
        if db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("SNR grid must be strictly increasing".into()));
        }
        Ok(SnrGrid { db })
    }

    /// `start, start + step, ...` up to and including `stop`.
    pub fn from_range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!(
                "SNR step must be positive, got {step}"
            )));
        }
        if !(stop >= start) {
            return Err(Error::Config(format!(
                "SNR range must be ascending, got {start}:{stop}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        let db = (0..=count)
            .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
            .collect();
        Self::from_db(db)
    }

    pub fn db(&self) -> &[f64] {
        &self.db
    }

    pub fn len(&self) -> usize {
        self.db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.db.is_empty()
    }

    pub fn points(&self) -> Vec<SnrPoint> {
        self.db
            .iter()
            .map(|&d| SnrPoint::from_db(d).expect("finite dB maps to positive η"))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub snr_grid: SnrGrid,
    /// Codewords per frame, `L`.
    pub codewords: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub scheme: Scheme,
    pub geometry: Geometry,
    pub rate_mode: RateMode,
    pub relay_mode: RelayMode,
    /// Worker threads; 0 picks one per core.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(scheme: Scheme, snr_grid: SnrGrid, rate_mode: RateMode) -> Self {
        SimConfig {
            snr_grid,
            codewords: 20,
            trials: 100_000,
            master_seed: 0,
            scheme,
            geometry: Geometry::default(),
            rate_mode,
            relay_mode: RelayMode::Perfect,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.codewords == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        // re-check in case the grid was built by hand
        SnrGrid::from_db(self.snr_grid.db.clone())?;
        self.rate_mode.validate()
    }

    fn frame(&self) -> FrameSpec {
        FrameSpec::new(self.codewords).expect("validated")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    /// Target spectral efficiency used at this point, bits per slot.
    pub rate: f64,
    pub trials: u64,
    pub count: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// No event was observed; the interval is the one-sided Wilson bound.
    pub zero_count: bool,
}

impl CurvePoint {
    fn from_counts(snr_db: f64, rate: f64, count: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(count, trials, Z_95);
        CurvePoint {
            snr_db,
            rate,
            trials,
            count,
            p_hat: count as f64 / trials as f64,
            ci_low,
            ci_high,
            zero_count: count == 0,
        }
    }
}

/// Per-SNR probability estimates with 95% Wilson intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `trials` independent trials in fixed chunks and sums per-point counts.
fn count_events<F>(config: &SimConfig, per_trial: F) -> Result<Vec<u64>>
where
    F: Fn(u64, &mut TrialScratch, &mut [u64]) -> Result<()> + Sync,
{
    let points = config.snr_grid.len();
    let chunks: Vec<(u64, u64)> = (0..config.trials.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(config.trials)))
        .collect();
    let pool = thread_pool(config.workers)?;
    let partial: Vec<Result<Vec<u64>>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut counts = vec![0u64; points];
                let mut scratch = TrialScratch::default();
                for trial in start..end {
                    per_trial(trial, &mut scratch, &mut counts)?;
                }
                Ok(counts)
            })
            .collect()
    });
    let mut total = vec![0u64; points];
    for chunk in partial {
        for (t, c) in total.iter_mut().zip(chunk?) {
            *t += c;
        }
    }
    Ok(total)
}

#[derive(Default)]
struct TrialScratch {
    work: Vec<C64>,
}

fn draw(config: &SimConfig, trial: u64) -> ChannelRealization {
    sample_realization(
        &mut trial_stream(config.master_seed, trial),
        &config.geometry,
    )
}

fn relay_threshold(scheme: Scheme, ch: &ChannelRealization) -> Result<f64> {
    match scheme {
        Scheme::SuccessiveMl | Scheme::Dblast => constraint_threshold_successive(ch),
        Scheme::Stc => constraint_threshold_stc(ch),
        Scheme::Direct | Scheme::Mimo22 => Ok(f64::INFINITY),
    }
}

/// Outage probability of the configured scheme at each grid point.
///
/// In constrained relay mode a trial whose relay threshold lies below η is
/// counted as an outage at that η. Schemes without a relay ignore the mode.
pub fn estimate_outage(config: &SimConfig) -> Result<OutageCurve> {
    config.validate()?;
    let frame = config.frame();
    let schedule: Option<LayerSchedule> = match config.scheme {
        Scheme::Dblast => Some(layer_schedule(frame.codewords())?),
        _ => None,
    };
    let etas: Vec<SnrPoint> = config.snr_grid.points();
    let rates: Vec<f64> = etas
        .iter()
        .map(|e| config.rate_mode.rate_at(e.linear()))
        .collect();
    let grid_db = config.snr_grid.db();

    let counts = count_events(config, |trial, scratch, counts| {
        let ch = draw(config, trial);
        let wrap = |k: usize| {
            let snr_db = grid_db[k];
            move |e: Error| Error::Trial {
                trial,
                snr_db,
                source: Box::new(e),
            }
        };
        let threshold = if config.relay_mode == RelayMode::Constrained && config.scheme.uses_relay()
        {
            relay_threshold(config.scheme, &ch).map_err(wrap(0))?
        } else {
            f64::INFINITY
        };

        let gram_target = |h: ComplexMatrix, bits_per_rate: f64| (Gram::of(&h), bits_per_rate);
        let gram = match config.scheme {
            Scheme::SuccessiveMl => Some(gram_target(
                assemble_successive_matrix(&ch, &frame),
                frame.slots() as f64,
            )),
            Scheme::Stc => Some(gram_target(assemble_stc_matrix(&ch), 2.0)),
            Scheme::Mimo22 => {
                let h22 = ComplexMatrix::from_row_major(
                    2,
                    2,
                    vec![ch.h_rd[0][0], ch.h_rd[0][1], ch.h_rd[1][0], ch.h_rd[1][1]],
                )
                .map_err(wrap(0))?;
                Some(gram_target(h22, 1.0))
            }
            _ => None,
        };
        let successive_h = match config.scheme {
            Scheme::Dblast => Some(assemble_successive_matrix(&ch, &frame)),
            _ => None,
        };
        let mut decoder = match (&successive_h, &schedule) {
            (Some(h), Some(schedule)) => Some(SicDecoder::new(h, schedule).map_err(wrap(0))?),
            _ => None,
        };

        for (k, eta) in etas.iter().enumerate() {
            let rate = rates[k];
            let outage = if threshold < eta.linear() {
                true
            } else {
                match config.scheme {
                    Scheme::Direct => direct_mutual_information(&ch, eta.linear()) < rate,
                    Scheme::SuccessiveMl | Scheme::Stc | Scheme::Mimo22 => {
                        let (g, scale) = gram.as_ref().expect("gram built for scheme");
                        g.mutual_information(eta.linear(), &mut scratch.work)
                            .map_err(wrap(k))?
                            < rate * scale
                    }
                    Scheme::Dblast => {
                        let decoder = decoder.as_mut().expect("decoder built for scheme");
                        let layer_rates = decoder.rates(*eta).map_err(wrap(k))?;
                        let target = per_message_bits(rate, &frame);
                        layer_rates.rates.iter().any(|&r| r < target)
                    }
                }
            };
            counts[k] += outage as u64;
        }
        Ok(())
    })?;

    Ok(OutageCurve {
        label: config.scheme.name().to_string(),
        points: counts
            .iter()
            .enumerate()
            .map(|(k, &c)| CurvePoint::from_counts(grid_db[k], rates[k], c, config.trials))
            .collect(),
    })
}

/// Probability that the relay decoding constraint holds at each grid point:
/// the successive-relaying threshold for `successive`/`dblast`, the
/// space-time coding threshold for `stc`.
pub fn estimate_constraint_probability(config: &SimConfig) -> Result<OutageCurve> {
    config.validate()?;
    if !config.scheme.uses_relay() {
        return Err(Error::Config(format!(
            "scheme '{}' has no relay constraint (use successive, dblast or stc)",
            config.scheme
        )));
    }
    let etas: Vec<f64> = config
        .snr_grid
        .points()
        .iter()
        .map(|p| p.linear())
        .collect();
    let grid_db = config.snr_grid.db();
    let counts = count_events(config, |trial, _, counts| {
        let ch = draw(config, trial);
        let threshold = relay_threshold(config.scheme, &ch).map_err(|e| Error::Trial {
            trial,
            snr_db: grid_db[0],
            source: Box::new(e),
        })?;
        for (k, &eta) in etas.iter().enumerate() {
            counts[k] += (threshold >= eta) as u64;
        }
        Ok(())
    })?;
    Ok(OutageCurve {
        label: format!("{}:constraint", config.scheme.name()),
        points: counts
            .iter()
            .enumerate()
            .map(|(k, &c)| CurvePoint::from_counts(grid_db[k], 0.0, c, config.trials))
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiversityPoint {
    pub snr_db: f64,
    pub d_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiversityEstimate {
    pub points: Vec<DiversityPoint>,
    /// Grid points dropped because no outage was observed there.
    pub skipped_db: Vec<f64>,
}

impl DiversityEstimate {
    /// Mean estimate over points with `lo_db <= snr_db <= hi_db`.
    pub fn mean_over(&self, lo_db: f64, hi_db: f64) -> Option<f64> {
        let inside: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db)
            .map(|p| p.d_hat)
            .collect();
        (!inside.is_empty()).then(|| inside.iter().sum::<f64>() / inside.len() as f64)
    }
}

/// Finite-SNR diversity `−d ln P / d ln η` by central differences over
/// `(snr_db, probability)` samples. Samples with zero probability are
/// skipped; the estimate is reported at every interior usable sample.
pub fn finite_snr_diversity(samples: &[(f64, f64)]) -> Result<DiversityEstimate> {
    let mut usable = Vec::with_capacity(samples.len());
    let mut skipped_db = Vec::new();
    for &(db, p) in samples {
        if p > 0.0 {
            usable.push((db * std::f64::consts::LN_10 / 10.0, p.ln(), db));
        } else {
            skipped_db.push(db);
        }
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints(usable.len()));
    }
    let points = usable
        .windows(3)
        .map(|w| DiversityPoint {
            snr_db: w[1].2,
            d_hat: -(w[2].1 - w[0].1) / (w[2].0 - w[0].0),
        })
        .collect();
    Ok(DiversityEstimate { points, skipped_db })
}

pub fn estimate_finite_snr_diversity(curve: &OutageCurve) -> Result<DiversityEstimate> {
    let samples: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.snr_db, p.p_hat)).collect();
    finite_snr_diversity(&samples)
}

/// Formats like C's `%.10g`: ten significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 <= |x| < 1e10`.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..10).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (9 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Outage,
    ConstraintProbability,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub curve: OutageCurve,
    pub rows: usize,
    pub total_trials: u64,
    pub total_count: u64,
    pub elapsed: Duration,
}

/// Writes a curve in the CSV schema of [`CSV_HEADER`].
pub fn write_curve_csv<W: Write>(
    curve: &OutageCurve,
    config: &SimConfig,
    estimator: Estimator,
    sink: W,
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        context: "writing CSV".into(),
        source,
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    let (rate_mode, rate_value) = match estimator {
        Estimator::Outage => (
            config.rate_mode.label(),
            format_sig10(config.rate_mode.value()),
        ),
        Estimator::ConstraintProbability => ("none", "0".to_string()),
    };
    for p in &curve.points {
        writer
            .write_record([
                format_sig10(p.snr_db),
                curve.label.clone(),
                rate_mode.to_string(),
                rate_value.clone(),
                config.codewords.to_string(),
                format_sig10(config.geometry.rtilde()),
                p.trials.to_string(),
                p.count.to_string(),
                format_sig10(p.p_hat),
                format_sig10(p.ci_low),
                format_sig10(p.ci_high),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io("flushing CSV", e))
}

/// Runs the requested estimator and writes its curve as CSV.
pub fn run<W: Write>(config: &SimConfig, estimator: Estimator, sink: W) -> Result<RunSummary> {
    let started = Instant::now();
    let curve = match estimator {
        Estimator::Outage => estimate_outage(config)?,
        Estimator::ConstraintProbability => estimate_constraint_probability(config)?,
    };
    write_curve_csv(&curve, config, estimator, sink)?;
    Ok(RunSummary {
        rows: curve.points.len(),
        total_trials: config.trials * curve.points.len() as u64,
        total_count: curve.points.iter().map(|p| p.count).sum(),
        elapsed: started.elapsed(),
        curve,
    })
}
