//! Experiment configuration and the end-to-end run.
//!
//! A run simulates (or loads) one pair of tick series, sweeps the return
//! interval, and writes:
//!
//! - `curve.csv` / `curve.json`: the three estimators per interval
//! - `overlap_<dt>.csv`: fractional-overlap histogram per interval
//! - `manifest.json`: the full configuration, derived seeds and crate
//!   version; feeding it back to [`run`] reproduces every file exactly

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    collect_samples, epps_sweep_sessions, overlap_stats, write_curve_csv, write_overlap_csv,
    EppsCurve, OverlapStats, SweepOptions,
};
use crate::error::{Error, Result};
use crate::estimator::{hayashi_yoshida_corr, EstimatorOptions};
use crate::synth::{
    gen_garch_pair, gen_noh_pair, sample_ticks, GarchParams, NohParams, SamplingParams,
};
use crate::tickstore::{load_ticks, SessionSpec, TickSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateNoh,
    SimulateGarch,
    FromFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub t_start: i64,
    pub t_end: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// One-factor parameters, required when simulating.
    #[serde(default)]
    pub noh: Option<NohParams>,
    /// Required for `simulate-garch`.
    #[serde(default)]
    pub garch: Option<GarchParams>,
    /// Mean waiting times of the two simulated instruments, in seconds.
    #[serde(default)]
    pub mu: Option<[f64; 2]>,
    #[serde(default = "default_step")]
    pub underlying_step: i64,
    /// Tick CSV for `from-file`.
    #[serde(default)]
    pub ticks: Option<PathBuf>,
    /// Symbols to pair from the tick file. Defaults to the first two.
    #[serde(default)]
    pub symbols: Option<[String; 2]>,
    /// Evaluation windows for `from-file`. Defaults to the span both
    /// series cover.
    #[serde(default)]
    pub sessions: Option<Vec<Window>>,
    pub dts: Vec<i64>,
    #[serde(default)]
    pub grid_step: Option<i64>,
    /// Intervals for overlap histograms. Defaults to `dts`.
    #[serde(default)]
    pub overlap_dts: Option<Vec<i64>>,
    #[serde(default)]
    pub estimator: EstimatorOptions,
    /// Also write the simulated tick series as `ticks.csv`.
    #[serde(default)]
    pub save_ticks: bool,
    pub output_dir: PathBuf,
}

fn default_step() -> i64 {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dts.is_empty() {
            return Err(Error::invalid("dts", "empty interval list"));
        }
        if self.underlying_step < 1 {
            return Err(Error::invalid(
                "underlying_step",
                "must be at least 1 second",
            ));
        }
        if let Some(step) = self.grid_step {
            if step < 1 {
                return Err(Error::invalid("grid_step", "must be at least 1 second"));
            }
        }
        match self.mode {
            Mode::SimulateNoh | Mode::SimulateGarch => {
                self.noh
                    .as_ref()
                    .ok_or_else(|| Error::invalid("noh", "required when simulating"))?
                    .validate()?;
                let mu = self
                    .mu
                    .ok_or_else(|| Error::invalid("mu", "required when simulating"))?;
                for m in mu {
                    SamplingParams { mu: m, seed: 0 }.validate()?;
                }
                if self.mode == Mode::SimulateGarch {
                    self.garch
                        .as_ref()
                        .ok_or_else(|| Error::invalid("garch", "required for simulate-garch"))?
                        .validate()?;
                }
            }
            Mode::FromFile => {
                if self.ticks.is_none() {
                    return Err(Error::invalid("ticks", "required for from-file"));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = read(path.as_ref())?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Seeds for the underlying path and the two samplers, all drawn from the
/// master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub underlying: u64,
    pub sampling: [u64; 2],
}

impl DerivedSeeds {
    pub fn from_master(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            underlying: rng.next_u64(),
            sampling: [rng.next_u64(), rng.next_u64()],
        }
    }
}

/// A pair of tick series with the windows to evaluate them on.
#[derive(Debug, Clone)]
pub struct PairData {
    pub a: TickSeries,
    pub b: TickSeries,
    pub sessions: Vec<SessionSpec>,
}

/// Simulate the configured pair. Only valid for the simulate modes.
pub fn simulate_pair(config: &ExperimentConfig) -> Result<PairData> {
    config.validate()?;
    let noh = config.noh.expect("validated");
    let mu = config.mu.expect("validated");
    let seeds = DerivedSeeds::from_master(config.seed);
    let step = config.underlying_step;
    let (u1, u2) = match config.mode {
        Mode::SimulateNoh => gen_noh_pair(&noh, step, seeds.underlying)?,
        Mode::SimulateGarch => gen_garch_pair(
            &noh,
            &config.garch.expect("validated"),
            step,
            seeds.underlying,
        )?,
        Mode::FromFile => return Err(Error::invalid("mode", "not a simulation mode")),
    };
    let a = sample_ticks(
        &u1,
        &SamplingParams {
            mu: mu[0],
            seed: seeds.sampling[0],
        },
        "S1",
    )?;
    let b = sample_ticks(
        &u2,
        &SamplingParams {
            mu: mu[1],
            seed: seeds.sampling[1],
        },
        "S2",
    )?;
    let session = SessionSpec::new(0, u1.end_time(), step)?;
    Ok(PairData {
        a,
        b,
        sessions: vec![session],
    })
}

fn load_pair(config: &ExperimentConfig) -> Result<PairData> {
    let path = config.ticks.as_ref().expect("validated");
    let series = load_ticks(path)?;
    let pick = |symbol: &str| {
        series
            .iter()
            .find(|s| s.symbol() == symbol)
            .cloned()
            .ok_or_else(|| Error::invalid("symbols", format!("{symbol} not in tick file")))
    };
    let (a, b) = match &config.symbols {
        Some([x, y]) => (pick(x)?, pick(y)?),
        None if series.len() >= 2 => (series[0].clone(), series[1].clone()),
        None => {
            return Err(Error::invalid(
                "ticks",
                format!(
                    "need two symbols with at least 2 ticks, found {}",
                    series.len()
                ),
            ))
        }
    };
    let step = config.underlying_step;
    let sessions = match &config.sessions {
        Some(windows) => windows
            .iter()
            .map(|w| SessionSpec::new(w.t_start, w.t_end, step))
            .collect::<Result<Vec<_>>>()?,
        None => {
            let start = a.first_time().max(b.first_time());
            let end = a.last_time().min(b.last_time());
            // trim to a whole number of underlying steps
            let end = end - (end - start).rem_euclid(step);
            vec![SessionSpec::new(start, end, step)?]
        }
    };
    Ok(PairData { a, b, sessions })
}

pub fn load_or_simulate(config: &ExperimentConfig) -> Result<PairData> {
    match config.mode {
        Mode::FromFile => {
            config.validate()?;
            load_pair(config)
        }
        _ => simulate_pair(config),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seeds: Option<DerivedSeeds>,
    pub symbols: [String; 2],
    pub n_ticks: [usize; 2],
    pub sessions: Vec<SessionSpec>,
    pub hayashi_yoshida: Option<f64>,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub curve: EppsCurve,
    pub overlaps: Vec<OverlapStats>,
    pub manifest: Manifest,
}

impl RunReport {
    /// Every estimator failed at every interval.
    pub fn total_failure(&self) -> bool {
        self.curve.is_empty()
    }
}

#[derive(Serialize)]
struct CurveJson<'a> {
    #[serde(flatten)]
    curve: &'a EppsCurve,
    hayashi_yoshida: Option<f64>,
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let data = load_or_simulate(config)?;
    let opts = SweepOptions {
        grid_step: config.grid_step,
        estimator: config.estimator,
    };
    let curve = epps_sweep_sessions(&data.a, &data.b, &data.sessions, &config.dts, &opts)?;

    let overlap_dts = config.overlap_dts.as_deref().unwrap_or(&config.dts);
    let mut overlaps = Vec::with_capacity(overlap_dts.len());
    for &dt in overlap_dts {
        let samples = collect_samples(&data.a, &data.b, &data.sessions, dt, config.grid_step)?;
        match overlap_stats(&samples, dt) {
            Ok(s) => overlaps.push(s),
            Err(e) => log::warn!("overlap histogram at dt={dt}: {e}"),
        }
    }

    // pooled over sessions: tick returns never cross a session boundary
    let hayashi_yoshida = if data.sessions.len() == 1 {
        hayashi_yoshida_corr(&data.a, &data.b, &data.sessions[0]).ok()
    } else {
        None
    };

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files = Vec::new();

    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &curve).expect("write to memory");
    write_file(dir, "curve.csv", &buf, &mut files)?;

    let json = serde_json::to_vec_pretty(&CurveJson {
        curve: &curve,
        hayashi_yoshida,
    })?;
    write_file(dir, "curve.json", &json, &mut files)?;

    for stats in &overlaps {
        let mut buf = Vec::new();
        write_overlap_csv(&mut buf, stats).expect("write to memory");
        write_file(dir, &format!("overlap_{}.csv", stats.dt), &buf, &mut files)?;
    }

    if config.save_ticks && config.mode != Mode::FromFile {
        let mut buf = Vec::new();
        crate::tickstore::write_ticks(&mut buf, &[data.a.clone(), data.b.clone()])
            .expect("write to memory");
        write_file(dir, "ticks.csv", &buf, &mut files)?;
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: (config.mode != Mode::FromFile).then(|| DerivedSeeds::from_master(config.seed)),
        symbols: [data.a.symbol().to_string(), data.b.symbol().to_string()],
        n_ticks: [data.a.len(), data.b.len()],
        sessions: data.sessions.clone(),
        hayashi_yoshida,
        files: files.clone(),
        config: config.clone(),
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_file(dir, "manifest.json", &json, &mut Vec::new())?;

    Ok(RunReport {
        curve,
        overlaps,
        manifest,
    })
}

/// Configuration recorded in a manifest written by [`run`].
pub fn config_from_manifest(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = read(path.as_ref())?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    Ok(manifest.config)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    let io = |source| Error::Io {
        path: path.clone(),
        source,
    };
    let mut f = fs::File::create(&path).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    files.push(name.to_string());
    Ok(())
}

/// Parse an interval list.
///
/// Comma-separated terms, each one of
/// - `600`: a single interval
/// - `60..1800`: multiples of the start, `60, 120, ..., 1800`
/// - `60..1800:30`: linear from start with an explicit stride
/// - `60..1800*8`: 8 geometrically spaced points, rounded to whole seconds
///
/// The result is sorted and deduplicated.
pub fn parse_dts(spec: &str) -> Result<Vec<i64>> {
    let bad = |term: &str, why: &str| Error::invalid("dts", format!("`{term}`: {why}"));
    let num = |s: &str, term: &str| -> Result<i64> {
        s.trim()
            .parse::<i64>()
            .map_err(|_| bad(term, "not an integer"))
    };
    let mut out = Vec::new();
    for term in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match term.split_once("..") {
            None => out.push(num(term, term)?),
            Some((start, rest)) => {
                let start = num(start, term)?;
                if let Some((end, count)) = rest.split_once('*') {
                    let end = num(end, term)?;
                    let count = num(count, term)?;
                    if start <= 0 || end < start || count < 2 {
                        return Err(bad(term, "need 0 < start <= end and at least 2 points"));
                    }
                    let ratio = (end as f64 / start as f64).powf(1.0 / (count - 1) as f64);
                    for k in 0..count {
                        out.push((start as f64 * ratio.powi(k as i32)).round() as i64);
                    }
                    // pin the endpoint against rounding drift
                    *out.last_mut().unwrap() = end;
                } else {
                    let (end, stride) = match rest.split_once(':') {
                        Some((end, stride)) => (num(end, term)?, num(stride, term)?),
                        None => (num(rest, term)?, start),
                    };
                    if start <= 0 || end < start || stride <= 0 {
                        return Err(bad(term, "need 0 < start <= end and a positive stride"));
                    }
                    out.extend((start..=end).step_by(stride as usize));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("dts", "empty interval list"));
    }
    if let Some(bad_dt) = out.iter().find(|d| **d <= 0) {
        return Err(Error::invalid(
            "dts",
            format!("interval {bad_dt} must be positive"),
        ));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
