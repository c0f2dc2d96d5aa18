//! Previous-tick returns and correlation estimators for asynchronous pairs.
//!
//! Returns are taken over `[t, t + dt]` on a regular grid using the last
//! trade at or before each boundary. Each sample carries the overlap of the
//! two instruments' effective return windows:
//!
//! ```text
//! overlap = min(gamma1(t + dt), gamma2(t + dt)) - max(gamma1(t), gamma2(t))
//! ```
//!
//! The compensated estimator reweights every normalized return product by
//! `dt / overlap`, undoing the attenuation caused by the part of each window
//! that only one instrument sees.

mod appendix;
mod hayashi_yoshida;

pub use appendix::{verify_appendix_relation, AppendixCheck, AppendixNormalization};
pub use hayashi_yoshida::hayashi_yoshida_corr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tickstore::{SessionSpec, TickSeries};

/// Regular grid of return start times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnGrid {
    pub t0: i64,
    /// Return interval in seconds.
    pub dt: i64,
    /// Spacing between consecutive return start times.
    pub step: i64,
    pub count: usize,
}

impl ReturnGrid {
    pub fn new(t0: i64, dt: i64, step: i64, count: usize) -> Result<Self> {
        if dt <= 0 {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if step <= 0 {
            return Err(Error::invalid("step", "must be positive"));
        }
        if count == 0 {
            return Err(Error::invalid("count", "must be positive"));
        }
        Ok(Self {
            t0,
            dt,
            step,
            count,
        })
    }

    /// Largest grid fitting inside `session`. `step` defaults to `dt`
    /// (non-overlapping windows).
    pub fn for_session(session: &SessionSpec, dt: i64, step: Option<i64>) -> Result<Self> {
        let step = step.unwrap_or(dt);
        if dt <= 0 {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if step <= 0 {
            return Err(Error::invalid("step", "must be positive"));
        }
        let span = session.t_end - session.t_start;
        if dt > span {
            return Err(Error::invalid(
                "dt",
                format!("interval {dt} longer than session {span}"),
            ));
        }
        let count = ((span - dt) / step) as usize + 1;
        Self::new(session.t_start, dt, step, count)
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.count as i64).map(move |k| self.t0 + k * self.step)
    }

    pub fn end(&self) -> i64 {
        self.t0 + (self.count as i64 - 1) * self.step + self.dt
    }
}

/// One grid return for both instruments with its last-trade times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub t: i64,
    pub r1: f64,
    pub r2: f64,
    pub gamma1_lo: i64,
    pub gamma1_hi: i64,
    pub gamma2_lo: i64,
    pub gamma2_hi: i64,
    /// Overlap of the two effective return windows in seconds. May be zero
    /// or negative, and may exceed the return interval.
    pub overlap: i64,
}

impl ReturnSample {
    pub fn fractional_overlap(&self, dt: i64) -> f64 {
        self.overlap as f64 / dt as f64
    }

    /// Both instruments traded inside `(t, t + dt]`.
    pub fn both_traded(&self) -> bool {
        self.gamma1_lo != self.gamma1_hi && self.gamma2_lo != self.gamma2_hi
    }
}

pub fn overlap(gamma1_lo: i64, gamma1_hi: i64, gamma2_lo: i64, gamma2_hi: i64) -> i64 {
    gamma1_hi.min(gamma2_hi) - gamma1_lo.max(gamma2_lo)
}

/// Time of the last trade at or before `t`.
pub fn gamma(series: &TickSeries, t: i64) -> Result<i64> {
    series
        .index_at_or_before(t)
        .map(|i| series.times()[i])
        .ok_or_else(|| Error::UndefinedPreviousTick {
            symbol: series.symbol().to_string(),
            t,
        })
}

fn price_index(series: &TickSeries, t: i64) -> Result<usize> {
    series
        .index_at_or_before(t)
        .ok_or_else(|| Error::UndefinedPreviousTick {
            symbol: series.symbol().to_string(),
            t,
        })
}

/// Relative change of the previous-tick price over `[t, t + dt]`.
pub fn previous_tick_return(series: &TickSeries, t: i64, dt: i64) -> Result<f64> {
    let lo = price_index(series, t)?;
    let hi = price_index(series, t + dt)?;
    let p = series.prices();
    Ok((p[hi] - p[lo]) / p[lo])
}

pub fn build_samples(
    a: &TickSeries,
    b: &TickSeries,
    grid: &ReturnGrid,
) -> Result<Vec<ReturnSample>> {
    let ta = a.times();
    let tb = b.times();
    let pa = a.prices();
    let pb = b.prices();
    grid.times()
        .map(|t| {
            let a_lo = price_index(a, t)?;
            let a_hi = price_index(a, t + grid.dt)?;
            let b_lo = price_index(b, t)?;
            let b_hi = price_index(b, t + grid.dt)?;
            Ok(ReturnSample {
                t,
                r1: (pa[a_hi] - pa[a_lo]) / pa[a_lo],
                r2: (pb[b_hi] - pb[b_lo]) / pb[b_lo],
                gamma1_lo: ta[a_lo],
                gamma1_hi: ta[a_hi],
                gamma2_lo: tb[b_lo],
                gamma2_hi: tb[b_hi],
                overlap: overlap(ta[a_lo], ta[a_hi], tb[b_lo], tb[b_hi]),
            })
        })
        .collect()
}

/// Which samples supply the means and standard deviations used to normalize
/// returns in the stale-filtered estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Only samples surviving the filter.
    #[default]
    Subset,
    /// Every sample, filtered or not.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Upper bound on the `dt / overlap` weight. Off by default.
    #[serde(default)]
    pub weight_cap: Option<f64>,
    #[serde(default)]
    pub filtered_normalization: Normalization,
}

/// Population mean and standard deviation of one return column.
#[derive(Debug, Clone, Copy)]
struct Moments {
    mean: f64,
    sd: f64,
    max_abs: f64,
}

impl Moments {
    /// Zero variance up to rounding. A column of identical values can
    /// still come out with a standard deviation of a few ulps, which would
    /// blow up the normalized returns.
    fn is_degenerate(&self) -> bool {
        !(self.sd > 16.0 * f64::EPSILON * self.max_abs)
    }
}

fn moments<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> Moments {
    let (sum, n) = values
        .clone()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / n as f64;
    let (ss, max_abs) = values.fold((0.0, 0.0f64), |(acc, m), v| {
        (acc + (v - mean) * (v - mean), m.max(v.abs()))
    });
    Moments {
        mean,
        sd: (ss / n as f64).sqrt(),
        max_abs,
    }
}

fn pair_moments(samples: &[&ReturnSample]) -> Result<(Moments, Moments)> {
    let m1 = moments(samples.iter().map(|s| &s.r1));
    let m2 = moments(samples.iter().map(|s| &s.r2));
    if m1.is_degenerate() {
        return Err(Error::Degenerate("first return series has zero variance"));
    }
    if m2.is_degenerate() {
        return Err(Error::Degenerate("second return series has zero variance"));
    }
    Ok((m1, m2))
}

/// Pearson correlation of the two return columns.
pub fn plain_corr(samples: &[ReturnSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let refs: Vec<&ReturnSample> = samples.iter().collect();
    let (m1, m2) = pair_moments(&refs)?;
    let cov = samples
        .iter()
        .fold(0.0, |acc, s| acc + (s.r1 - m1.mean) * (s.r2 - m2.mean))
        / samples.len() as f64;
    Ok((cov / (m1.sd * m2.sd)).clamp(-1.0, 1.0))
}

/// Overlap-weighted sum over `terms`, normalized with `norm` and divided by
/// `denominator`. Samples with non-positive overlap contribute nothing.
fn weighted_mean(
    terms: &[&ReturnSample],
    norm: (Moments, Moments),
    dt: i64,
    denominator: usize,
    weight_cap: Option<f64>,
) -> f64 {
    let (m1, m2) = norm;
    let dt = dt as f64;
    let sum = terms.iter().filter(|s| s.overlap > 0).fold(0.0, |acc, s| {
        let g1 = (s.r1 - m1.mean) / m1.sd;
        let g2 = (s.r2 - m2.mean) / m2.sd;
        let mut w = dt / s.overlap as f64;
        if let Some(cap) = weight_cap {
            w = w.min(cap);
        }
        acc + g1 * g2 * w
    });
    sum / denominator as f64
}

/// Result of a single estimator run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Samples that contributed a term to the weighted sum.
    pub n_used: usize,
}

/// Overlap-compensated correlation.
///
/// Returns are normalized over all samples and every product is weighted by
/// `dt / overlap`. Samples whose windows do not overlap (`overlap <= 0`,
/// which happens exactly when one instrument did not trade in the interval)
/// add nothing to the sum but still count in the average. The value is not
/// clamped to `[-1, 1]`.
pub fn compensated_corr(samples: &[ReturnSample], dt: i64) -> Result<f64> {
    compensated_corr_with(samples, dt, &EstimatorOptions::default()).map(|e| e.value)
}

pub fn compensated_corr_with(
    samples: &[ReturnSample],
    dt: i64,
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let n_used = samples.iter().filter(|s| s.overlap > 0).count();
    if n_used == 0 {
        return Err(Error::NoOverlappingSamples);
    }
    let all: Vec<&ReturnSample> = samples.iter().collect();
    let norm = pair_moments(&all)?;
    Ok(Estimate {
        value: weighted_mean(&all, norm, dt, all.len(), opts.weight_cap),
        n_used,
    })
}

/// Compensated correlation restricted to intervals in which both
/// instruments traded. Means and deviations come from the surviving subset.
pub fn filtered_compensated_corr(samples: &[ReturnSample], dt: i64) -> Result<f64> {
    filtered_compensated_corr_with(samples, dt, &EstimatorOptions::default()).map(|e| e.value)
}

pub fn filtered_compensated_corr_with(
    samples: &[ReturnSample],
    dt: i64,
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    let kept: Vec<&ReturnSample> = samples.iter().filter(|s| s.both_traded()).collect();
    if kept.len() < 2 {
        return Err(Error::FilterExhausted(kept.len()));
    }
    let norm = match opts.filtered_normalization {
        Normalization::Subset => pair_moments(&kept)?,
        Normalization::Full => pair_moments(&samples.iter().collect::<Vec<_>>())?,
    };
    let n_used = kept.iter().filter(|s| s.overlap > 0).count();
    if n_used == 0 {
        return Err(Error::NoOverlappingSamples);
    }
    Ok(Estimate {
        value: weighted_mean(&kept, norm, dt, kept.len(), opts.weight_cap),
        n_used,
    })
}

/// All three estimators on one sample set. Failed estimators are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub plain: Option<f64>,
    pub compensated: Option<f64>,
    pub compensated_filtered: Option<f64>,
    pub n_total: usize,
    /// Samples entering the filtered estimator.
    pub n_used: usize,
}

pub fn estimate_pair(samples: &[ReturnSample], dt: i64, opts: &EstimatorOptions) -> PairEstimate {
    let filtered = filtered_compensated_corr_with(samples, dt, opts);
    PairEstimate {
        plain: plain_corr(samples).ok(),
        compensated: compensated_corr_with(samples, dt, opts)
            .ok()
            .map(|e| e.value),
        n_used: filtered.as_ref().map_or(0, |e| e.n_used),
        compensated_filtered: filtered.ok().map(|e| e.value),
        n_total: samples.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[i64], prices: &[f64]) -> TickSeries {
        TickSeries::new("X", times.to_vec(), prices.to_vec()).unwrap()
    }

    fn sample(r1: f64, r2: f64, overlap: i64) -> ReturnSample {
        ReturnSample {
            t: 0,
            r1,
            r2,
            gamma1_lo: 0,
            gamma1_hi: 1,
            gamma2_lo: 0,
            gamma2_hi: 1,
            overlap,
        }
    }

    #[test]
    fn gamma_lookup() {
        let s = series(&[0, 15, 40], &[1.0, 2.0, 3.0]);
        assert_eq!(gamma(&s, 20).unwrap(), 15);
        assert_eq!(gamma(&s, 15).unwrap(), 15);
        let late = series(&[10, 20], &[1.0, 2.0]);
        assert!(matches!(
            gamma(&late, 5),
            Err(Error::UndefinedPreviousTick { t: 5, .. })
        ));
    }

    #[test]
    fn previous_tick_returns() {
        let s = series(&[0, 30], &[100.0, 110.0]);
        assert!((previous_tick_return(&s, 0, 60).unwrap() - 0.10).abs() < 1e-15);
        let stale = series(&[0, 100], &[100.0, 110.0]);
        assert_eq!(previous_tick_return(&stale, 10, 60).unwrap(), 0.0);
        let s = series(&[0, 15, 40], &[100.0, 101.0, 99.0]);
        assert!((previous_tick_return(&s, 10, 20).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn overlap_arithmetic() {
        assert_eq!(overlap(10, 55, 12, 50), 38);
        // effective windows reaching far before t overlap more than dt
        assert_eq!(overlap(0, 95, 5, 100), 90);
    }

    #[test]
    fn synchronous_samples_have_full_overlap() {
        let times: Vec<i64> = (0..=100).collect();
        let a = series(&times, &vec![1.0; 101]);
        let b = series(&times, &vec![2.0; 101]);
        let grid = ReturnGrid::new(0, 10, 10, 10).unwrap();
        let s = build_samples(&a, &b, &grid).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|x| x.overlap == 10));
    }

    #[test]
    fn overlap_can_exceed_interval() {
        let a = series(&[0, 95, 200], &[1.0, 1.1, 1.2]);
        let b = series(&[5, 100, 200], &[1.0, 1.2, 1.1]);
        let grid = ReturnGrid::new(90, 10, 10, 1).unwrap();
        let s = build_samples(&a, &b, &grid).unwrap();
        assert_eq!(s[0].overlap, 90);
        assert!(s[0].fractional_overlap(10) > 1.0);
    }

    #[test]
    fn grid_for_session() {
        let session = SessionSpec::new(0, 100, 1).unwrap();
        let g = ReturnGrid::for_session(&session, 30, None).unwrap();
        assert_eq!((g.count, g.end()), (3, 90));
        let g = ReturnGrid::for_session(&session, 30, Some(1)).unwrap();
        assert_eq!((g.count, g.end()), (71, 100));
        assert!(ReturnGrid::for_session(&session, 101, None).is_err());
        assert!(ReturnGrid::new(0, 0, 1, 1).is_err());
    }

    #[test]
    fn plain_corr_cases() {
        let s: Vec<_> = [(1.0, 1.0), (2.0, 2.0), (3.0, 4.0)]
            .iter()
            .map(|&(a, b)| sample(a, b, 1))
            .collect();
        // hand evaluation: cov = 1, var1 = 2/3, var2 = 14/9
        let expected = 1.0 / ((2.0f64 / 3.0) * (14.0 / 9.0)).sqrt();
        assert!((plain_corr(&s).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.981_980_506_061_965_7).abs() < 1e-12);

        let same: Vec<_> = [1.0, -2.0, 3.5].iter().map(|&x| sample(x, x, 1)).collect();
        assert!((plain_corr(&same).unwrap() - 1.0).abs() < 1e-15);
        let anti: Vec<_> = [1.0, -2.0, 3.5].iter().map(|&x| sample(x, -x, 1)).collect();
        assert!((plain_corr(&anti).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn plain_corr_errors() {
        assert!(matches!(
            plain_corr(&[sample(1.0, 1.0, 1)]),
            Err(Error::TooFewSamples(1))
        ));
        let flat = [sample(1.0, 1.0, 1), sample(1.0, 2.0, 1)];
        assert!(matches!(plain_corr(&flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_column_is_degenerate_despite_rounding() {
        // nine copies of this value have a mean a few ulps off
        let r = -9.839855976706581e-1;
        let s: Vec<_> = (0..9)
            .map(|i| sample(r, if i < 6 { 0.0 } else { -0.997 }, 3))
            .collect();
        assert!(matches!(plain_corr(&s), Err(Error::Degenerate(_))));
        assert!(matches!(
            compensated_corr(&s, 18),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            filtered_compensated_corr(&s, 18),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn compensated_matches_hand_terms() {
        // dt = 10, overlaps 5, 10, 20, 10
        let r1 = [0.01, -0.02, 0.03, 0.005];
        let r2 = [0.02, -0.01, 0.01, -0.004];
        let ov = [5, 10, 20, 10];
        let s: Vec<_> = (0..4).map(|i| sample(r1[i], r2[i], ov[i])).collect();

        let mean = |v: &[f64]| v.iter().sum::<f64>() / 4.0;
        let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        let (m1, m2) = (mean(&r1), mean(&r2));
        let (s1, s2) = (sd(&r1, m1), sd(&r2, m2));
        let mut expected = 0.0;
        for i in 0..4 {
            expected += (r1[i] - m1) / s1 * (r2[i] - m2) / s2 * 10.0 / ov[i] as f64;
        }
        expected /= 4.0;
        let got = compensated_corr(&s, 10).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn compensated_equals_plain_when_synchronous() {
        let s: Vec<_> = [0.01, -0.02, 0.03, 0.004]
            .iter()
            .zip([0.02, -0.01, 0.01, 0.0])
            .map(|(&a, b)| sample(a, b, 10))
            .collect();
        let p = plain_corr(&s).unwrap();
        assert!((compensated_corr(&s, 10).unwrap() - p).abs() < 1e-12);
        assert!((filtered_compensated_corr(&s, 10).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn compensated_requires_overlap() {
        let s = [sample(0.1, 0.2, 0), sample(0.2, 0.1, -3)];
        assert!(matches!(
            compensated_corr(&s, 10),
            Err(Error::NoOverlappingSamples)
        ));
    }

    #[test]
    fn stale_samples_excluded_by_filter() {
        let mut s: Vec<_> = [0.01, -0.02, 0.03, 0.004, -0.01]
            .iter()
            .zip([0.02, -0.01, 0.01, 0.0, 0.005])
            .map(|(&a, b)| sample(a, b, 10))
            .collect();
        let fresh = filtered_compensated_corr(&s, 10).unwrap();
        // a stale interval for instrument 1: zero return, no overlap
        s.push(ReturnSample {
            r1: 0.0,
            gamma1_lo: 0,
            gamma1_hi: 0,
            overlap: -2,
            ..sample(0.0, 0.03, 0)
        });
        let filtered =
            filtered_compensated_corr_with(&s, 10, &EstimatorOptions::default()).unwrap();
        assert!((filtered.value - fresh).abs() < 1e-12);
        assert_eq!(filtered.n_used, 5);
        assert!(compensated_corr(&s, 10).unwrap() < fresh);
    }

    #[test]
    fn filter_exhaustion() {
        let stale = |r2| ReturnSample {
            gamma1_hi: 0,
            ..sample(0.0, r2, 0)
        };
        let s = [stale(0.1), stale(-0.1), stale(0.2)];
        assert!(matches!(
            filtered_compensated_corr(&s, 10),
            Err(Error::FilterExhausted(0))
        ));
    }

    #[test]
    fn weight_cap_limits_terms() {
        let s = [sample(1.0, 1.0, 1), sample(-1.0, -1.0, 10)];
        let opts = EstimatorOptions {
            weight_cap: Some(2.0),
            ..Default::default()
        };
        assert!((compensated_corr(&s, 10).unwrap() - 5.5).abs() < 1e-12);
        assert!((compensated_corr_with(&s, 10, &opts).unwrap().value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn full_normalization_mode() {
        let mut s: Vec<_> = [0.01, -0.02, 0.03, 0.004]
            .iter()
            .zip([0.02, -0.01, 0.01, 0.0])
            .map(|(&a, b)| sample(a, b, 10))
            .collect();
        s.push(ReturnSample {
            gamma2_hi: 0,
            ..sample(0.05, 0.0, -1)
        });
        let full = EstimatorOptions {
            filtered_normalization: Normalization::Full,
            ..Default::default()
        };
        let comp = compensated_corr(&s, 10).unwrap();
        let f = filtered_compensated_corr_with(&s, 10, &full).unwrap();
        // same normalization, same terms, averaged over 4 instead of 5
        assert!((f.value - comp * 5.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_pair_records_failures() {
        let stale = ReturnSample {
            gamma1_hi: 0,
            ..sample(0.0, 0.1, 0)
        };
        let e = estimate_pair(&[stale, stale], 10, &EstimatorOptions::default());
        assert_eq!(e.plain, None);
        assert_eq!(e.compensated_filtered, None);
        assert_eq!((e.n_total, e.n_used), (2, 0));
    }
}
