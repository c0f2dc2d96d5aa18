//! Sweeps over return intervals, overlap histograms and pair ensembles.

use std::io::{self, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{build_samples, estimate_pair, EstimatorOptions, ReturnGrid, ReturnSample};
use crate::tickstore::{SessionSpec, TickSeries};

/// Correlation estimates as a function of the return interval. Missing
/// points (estimator failures) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppsCurve {
    pub dts: Vec<i64>,
    pub plain: Vec<Option<f64>>,
    pub compensated: Vec<Option<f64>>,
    pub filtered: Vec<Option<f64>>,
    pub n_used: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveField {
    Plain,
    Compensated,
    Filtered,
}

impl EppsCurve {
    pub fn field(&self, field: CurveField) -> &[Option<f64>] {
        match field {
            CurveField::Plain => &self.plain,
            CurveField::Compensated => &self.compensated,
            CurveField::Filtered => &self.filtered,
        }
    }

    pub fn value_at(&self, field: CurveField, dt: i64) -> Option<f64> {
        let i = self.dts.iter().position(|&d| d == dt)?;
        self.field(field)[i]
    }

    /// True when every estimator failed at every interval.
    pub fn is_empty(&self) -> bool {
        [&self.plain, &self.compensated, &self.filtered]
            .iter()
            .all(|v| v.iter().all(Option::is_none))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Spacing of return start times. `None` uses the return interval.
    #[serde(default)]
    pub grid_step: Option<i64>,
    #[serde(default)]
    pub estimator: EstimatorOptions,
}

/// Samples for one interval, pooled over sessions. Sessions shorter than
/// `dt` contribute nothing; no return spans two sessions.
pub fn collect_samples(
    a: &TickSeries,
    b: &TickSeries,
    sessions: &[SessionSpec],
    dt: i64,
    grid_step: Option<i64>,
) -> Result<Vec<ReturnSample>> {
    let mut out = Vec::new();
    for session in sessions {
        if dt > session.len() {
            continue;
        }
        let grid = ReturnGrid::for_session(session, dt, grid_step)?;
        out.extend(build_samples(a, b, &grid)?);
    }
    Ok(out)
}

fn check_dts(dts: &[i64], sessions: &[SessionSpec]) -> Result<()> {
    if dts.is_empty() {
        return Err(Error::invalid("dts", "empty interval list"));
    }
    if dts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "dts",
            "intervals must be strictly increasing",
        ));
    }
    if sessions.is_empty() {
        return Err(Error::invalid("sessions", "no session given"));
    }
    for s in sessions {
        s.validate()?;
        if dts[0] < s.underlying_step {
            return Err(Error::invalid(
                "dts",
                format!(
                    "interval {} below underlying step {}",
                    dts[0], s.underlying_step
                ),
            ));
        }
    }
    Ok(())
}

pub fn epps_sweep(
    a: &TickSeries,
    b: &TickSeries,
    session: &SessionSpec,
    dts: &[i64],
    opts: &SweepOptions,
) -> Result<EppsCurve> {
    epps_sweep_sessions(a, b, std::slice::from_ref(session), dts, opts)
}

/// Run the three estimators at each interval. Intervals are evaluated in
/// parallel; each point depends only on its own interval, so the result
/// does not depend on scheduling.
pub fn epps_sweep_sessions(
    a: &TickSeries,
    b: &TickSeries,
    sessions: &[SessionSpec],
    dts: &[i64],
    opts: &SweepOptions,
) -> Result<EppsCurve> {
    check_dts(dts, sessions)?;
    let points: Vec<_> = dts
        .par_iter()
        .map(
            |&dt| match collect_samples(a, b, sessions, dt, opts.grid_step) {
                Ok(samples) => estimate_pair(&samples, dt, &opts.estimator),
                Err(e) => {
                    warn!("dt={dt}: {e}");
                    estimate_pair(&[], dt, &opts.estimator)
                }
            },
        )
        .collect();
    Ok(EppsCurve {
        dts: dts.to_vec(),
        plain: points.iter().map(|p| p.plain).collect(),
        compensated: points.iter().map(|p| p.compensated).collect(),
        filtered: points.iter().map(|p| p.compensated_filtered).collect(),
        n_used: points.iter().map(|p| p.n_used).collect(),
    })
}

/// Lower edge of the fractional-overlap histogram.
pub const OVERLAP_HIST_LO: f64 = -0.5;
/// Upper edge of the fractional-overlap histogram.
pub const OVERLAP_HIST_HI: f64 = 2.0;
pub const OVERLAP_BIN_WIDTH: f64 = 0.05;
const OVERLAP_BINS: usize = 50;

/// Distribution of fractional overlaps `overlap / dt` at one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub dt: i64,
    pub bin_width: f64,
    pub lo: f64,
    pub hi: f64,
    /// Counts for `[lo + k * width, lo + (k + 1) * width)`.
    pub counts: Vec<u64>,
    /// Values below `lo`.
    pub underflow: u64,
    /// Values at or above `hi`.
    pub overflow: u64,
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl OverlapStats {
    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.counts.iter().sum::<u64>()
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        (
            self.lo + k as f64 * self.bin_width,
            self.lo + (k + 1) as f64 * self.bin_width,
        )
    }

    /// Count in the bin containing `x`, if it falls inside the range.
    pub fn count_at(&self, x: f64) -> Option<u64> {
        bin_of(x).map(|k| self.counts[k])
    }
}

fn bin_of(x: f64) -> Option<usize> {
    if !(OVERLAP_HIST_LO..OVERLAP_HIST_HI).contains(&x) {
        return None;
    }
    // nudge so that decimal edges like 0.95 land in the bin they open
    let k = ((x - OVERLAP_HIST_LO) / OVERLAP_BIN_WIDTH + 1e-9).floor() as usize;
    Some(k.min(OVERLAP_BINS - 1))
}

/// Bin of `overlap / dt` in exact integer arithmetic; bins are 1/20 wide
/// starting at -1/2. Negative results are underflow, `>= OVERLAP_BINS`
/// overflow.
fn bin_of_ratio(overlap: i64, dt: i64) -> i64 {
    (20 * overlap + 10 * dt).div_euclid(dt)
}

pub fn overlap_stats(samples: &[ReturnSample], dt: i64) -> Result<OverlapStats> {
    if dt <= 0 {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::TooFewSamples(0));
    }
    let mut counts = vec![0u64; OVERLAP_BINS];
    let (mut underflow, mut overflow) = (0, 0);
    let fractions: Vec<f64> = samples.iter().map(|s| s.fractional_overlap(dt)).collect();
    for s in samples {
        match bin_of_ratio(s.overlap, dt) {
            k if k < 0 => underflow += 1,
            k if k >= OVERLAP_BINS as i64 => overflow += 1,
            k => counts[k as usize] += 1,
        }
    }
    let n = fractions.len() as f64;
    let mean = fractions.iter().sum::<f64>() / n;
    let variance = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
    Ok(OverlapStats {
        dt,
        bin_width: OVERLAP_BIN_WIDTH,
        lo: OVERLAP_HIST_LO,
        hi: OVERLAP_HIST_HI,
        counts,
        underflow,
        overflow,
        mean,
        variance,
        n: samples.len(),
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    // constant up to rounding
    let flat = |ss: f64, v: &[f64]| {
        let max_abs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        !((ss / n).sqrt() > 16.0 * f64::EPSILON * max_abs)
    };
    (!flat(saa, a) && !flat(sbb, b)).then(|| sab / (saa * sbb).sqrt())
}

/// Close-to-close returns between consecutive sessions, using the
/// previous-tick price at each session end.
pub fn daily_returns(series: &TickSeries, sessions: &[SessionSpec]) -> Result<Vec<f64>> {
    let closes = sessions
        .iter()
        .map(|s| {
            series
                .index_at_or_before(s.t_end)
                .map(|i| series.prices()[i])
                .ok_or_else(|| Error::UndefinedPreviousTick {
                    symbol: series.symbol().to_string(),
                    t: s.t_end,
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(closes.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

/// Variance of Pearson coefficients over windows of `window` days shifted
/// one day at a time. Windows with a constant series are skipped.
pub fn rolling_corr_variance(a: &[f64], b: &[f64], window: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("b", "daily return series differ in length"));
    }
    if window < 2 {
        return Err(Error::invalid("window", "must be at least 2 days"));
    }
    if a.len() < window {
        return Err(Error::invalid(
            "window",
            format!("window {window} longer than series of {} days", a.len()),
        ));
    }
    let mut coefs = Vec::with_capacity(a.len() - window + 1);
    for start in 0..=a.len() - window {
        let end = start + window;
        match pearson(&a[start..end], &b[start..end]) {
            Some(r) => coefs.push(r),
            None => warn!("window starting at day {start} is degenerate, skipped"),
        }
    }
    if coefs.is_empty() {
        return Err(Error::Degenerate("every window is degenerate"));
    }
    let n = coefs.len() as f64;
    let mean = coefs.iter().sum::<f64>() / n;
    Ok(coefs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n)
}

/// Daily returns of one candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDaily {
    pub id: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// The `k` pairs with the least variable rolling correlation, most stable
/// first. Pairs whose variance cannot be computed are skipped.
pub fn most_stable_pairs(pairs: &[PairDaily], window: usize, k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = pairs
        .iter()
        .filter_map(|p| match rolling_corr_variance(&p.a, &p.b, window) {
            Ok(v) => Some((p.id.clone(), v)),
            Err(e) => {
                warn!("{}: {e}", p.id);
                None
            }
        })
        .collect();
    scored.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    scored.truncate(k);
    scored
}

/// The `k` pairs with the highest full-sample daily correlation.
pub fn most_correlated_pairs(pairs: &[PairDaily], k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = pairs
        .iter()
        .filter_map(|p| {
            (p.a.len() == p.b.len() && p.a.len() >= 2)
                .then(|| pearson(&p.a, &p.b))
                .flatten()
                .map(|r| (p.id.clone(), r))
        })
        .collect();
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    scored.truncate(k);
    scored
}

/// Divide every point by the value at `dt_ref`.
pub fn normalize(dts: &[i64], values: &[Option<f64>], dt_ref: i64) -> Option<Vec<Option<f64>>> {
    let i = dts.iter().position(|&d| d == dt_ref)?;
    let reference = values[i].filter(|v| *v != 0.0 && v.is_finite())?;
    Some(values.iter().map(|v| v.map(|x| x / reference)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub dts: Vec<i64>,
    pub mean: Vec<Option<f64>>,
    /// Twice the population standard deviation across members.
    pub two_sigma: Vec<Option<f64>>,
    pub dt_ref: i64,
    pub field: CurveField,
    pub members: Vec<String>,
}

/// Normalize each member curve at `dt_ref`, then average with equal weights.
///
/// Members lacking a usable reference value, or sampled on a different
/// interval list, are left out with a warning.
pub fn ensemble_summary(
    curves: &[(String, EppsCurve)],
    field: CurveField,
    dt_ref: i64,
) -> Result<EnsembleSummary> {
    let dts = match curves.first() {
        Some((_, c)) => c.dts.clone(),
        None => return Err(Error::invalid("curves", "empty ensemble")),
    };
    let mut members = Vec::new();
    let mut normalized = Vec::new();
    for (id, curve) in curves {
        if curve.dts != dts {
            warn!("{id}: interval list differs from the ensemble, excluded");
            continue;
        }
        match normalize(&curve.dts, curve.field(field), dt_ref) {
            Some(n) => {
                members.push(id.clone());
                normalized.push(n);
            }
            None => warn!("{id}: no usable value at dt={dt_ref}, excluded"),
        }
    }
    if members.is_empty() {
        return Err(Error::invalid(
            "dt_ref",
            format!("no member has a value at {dt_ref}"),
        ));
    }

    let mut mean = Vec::with_capacity(dts.len());
    let mut two_sigma = Vec::with_capacity(dts.len());
    for i in 0..dts.len() {
        let vals: Vec<f64> = normalized.iter().filter_map(|n| n[i]).collect();
        if vals.is_empty() {
            mean.push(None);
            two_sigma.push(None);
            continue;
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        mean.push(Some(m));
        two_sigma.push(Some(2.0 * var.sqrt()));
    }
    Ok(EnsembleSummary {
        dts,
        mean,
        two_sigma,
        dt_ref,
        field,
        members,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// `dt,plain,compensated,filtered,n_used`; missing points are written as `NaN`.
pub fn write_curve_csv<W: Write>(w: &mut W, curve: &EppsCurve) -> io::Result<()> {
    writeln!(w, "dt,plain,compensated,filtered,n_used")?;
    for i in 0..curve.dts.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            curve.dts[i],
            fmt_opt(curve.plain[i]),
            fmt_opt(curve.compensated[i]),
            fmt_opt(curve.filtered[i]),
            curve.n_used[i]
        )?;
    }
    Ok(())
}

/// `bin_lo,bin_hi,count`, with open-ended underflow and overflow rows.
pub fn write_overlap_csv<W: Write>(w: &mut W, stats: &OverlapStats) -> io::Result<()> {
    writeln!(w, "bin_lo,bin_hi,count")?;
    writeln!(w, "-inf,{},{}", stats.lo, stats.underflow)?;
    for (k, c) in stats.counts.iter().enumerate() {
        let (lo, hi) = stats.bin_edges(k);
        writeln!(w, "{lo:.2},{hi:.2},{c}")?;
    }
    writeln!(w, "{},inf,{}", stats.hi, stats.overflow)?;
    Ok(())
}

pub fn write_ensemble_csv<W: Write>(w: &mut W, summary: &EnsembleSummary) -> io::Result<()> {
    writeln!(w, "dt,mean,two_sigma")?;
    for i in 0..summary.dts.len() {
        writeln!(
            w,
            "{},{},{}",
            summary.dts[i],
            fmt_opt(summary.mean[i]),
            fmt_opt(summary.two_sigma[i])
        )?;
    }
    Ok(())
}
