use crate::error::{Error, Result};
use crate::tickstore::{SessionSpec, TickSeries};

fn inside(series: &TickSeries, session: &SessionSpec) -> (Vec<i64>, Vec<f64>) {
    let lo = series.times().partition_point(|&t| t < session.t_start);
    let hi = series.times().partition_point(|&t| t <= session.t_end);
    (
        series.times()[lo..hi].to_vec(),
        series.prices()[lo..hi].to_vec(),
    )
}

fn tick_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect()
}

/// Cumulative covariance estimator over tick-to-tick returns.
///
/// Every pair of returns whose intervals `(t[i-1], t[i]]` intersect
/// contributes its product. The sum is normalized by the square roots of
/// each series' realized variance over the session.
pub fn hayashi_yoshida_corr(a: &TickSeries, b: &TickSeries, session: &SessionSpec) -> Result<f64> {
    let (ta, pa) = inside(a, session);
    let (tb, pb) = inside(b, session);
    for (s, t) in [(a, &ta), (b, &tb)] {
        if t.len() < 2 {
            return Err(Error::InvalidSeries {
                symbol: s.symbol().to_string(),
                reason: format!("{} ticks inside session, need 2", t.len()),
            });
        }
    }
    let ra = tick_returns(&pa);
    let rb = tick_returns(&pb);

    let mut cov = 0.0;
    // first b interval that can still overlap the current a interval
    let mut first = 1;
    for i in 1..ta.len() {
        let (start, end) = (ta[i - 1], ta[i]);
        while first < tb.len() && tb[first] <= start {
            first += 1;
        }
        let mut j = first;
        while j < tb.len() && tb[j - 1] < end {
            cov += ra[i - 1] * rb[j - 1];
            j += 1;
        }
    }

    let va: f64 = ra.iter().map(|r| r * r).sum();
    let vb: f64 = rb.iter().map(|r| r * r).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Degenerate("constant price inside session"));
    }
    Ok(cov / (va * vb).sqrt())
}
