//! Tick series data model and CSV ingestion.
//!
//! Timestamps are integer seconds on a session-relative axis. Callers with
//! sub-second data pre-scale before loading.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trade timestamps and prices for one instrument.
///
/// Times are strictly increasing, prices positive, and there are at least
/// two ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TickSeries {
    symbol: String,
    times: Vec<i64>,
    prices: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    symbol: String,
    times: Vec<i64>,
    prices: Vec<f64>,
}

impl TryFrom<RawSeries> for TickSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        TickSeries::new(raw.symbol, raw.times, raw.prices)
    }
}

impl TickSeries {
    pub fn new(symbol: impl Into<String>, times: Vec<i64>, prices: Vec<f64>) -> Result<Self> {
        let symbol = symbol.into();
        let bad = |reason: String| Error::InvalidSeries {
            symbol: symbol.clone(),
            reason,
        };
        if times.len() != prices.len() {
            return Err(bad(format!(
                "{} times but {} prices",
                times.len(),
                prices.len()
            )));
        }
        if times.len() < 2 {
            return Err(bad(format!("need at least 2 ticks, got {}", times.len())));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(bad(format!(
                "times not strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(bad(format!("non-positive or non-finite price {p}")));
        }
        Ok(Self {
            symbol,
            times,
            prices,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> i64 {
        self.times[0]
    }

    pub fn last_time(&self) -> i64 {
        self.times[self.times.len() - 1]
    }

    /// Index of the last tick at or before `t`, if any.
    pub fn index_at_or_before(&self, t: i64) -> Option<usize> {
        // partition_point returns the count of ticks with time <= t
        match self.times.partition_point(|&x| x <= t) {
            0 => None,
            n => Some(n - 1),
        }
    }

    /// Copy with every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        TickSeries::new(
            self.symbol.clone(),
            self.times.clone(),
            self.prices.iter().map(|p| p * factor).collect(),
        )
    }
}

/// Evaluation window on the session-relative time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub t_start: i64,
    pub t_end: i64,
    /// Underlying grid step in seconds.
    pub underlying_step: i64,
}

impl SessionSpec {
    pub fn new(t_start: i64, t_end: i64, underlying_step: i64) -> Result<Self> {
        let session = Self {
            t_start,
            t_end,
            underlying_step,
        };
        session.validate()?;
        Ok(session)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_start >= self.t_end {
            return Err(Error::invalid(
                "t_end",
                format!(
                    "t_start {} must be before t_end {}",
                    self.t_start, self.t_end
                ),
            ));
        }
        if self.underlying_step < 1 {
            return Err(Error::invalid(
                "underlying_step",
                "must be at least 1 second",
            ));
        }
        if (self.t_end - self.t_start) % self.underlying_step != 0 {
            return Err(Error::invalid(
                "underlying_step",
                format!(
                    "session length {} not divisible by step {}",
                    self.t_end - self.t_start,
                    self.underlying_step
                ),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> i64 {
        self.t_end - self.t_start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Restrict `series` to `[t_start, t_end]`, keeping the last tick at or
/// before `t_start` so the opening previous-tick price is defined.
pub fn clip(series: &TickSeries, session: &SessionSpec) -> Result<TickSeries> {
    let open =
        series
            .index_at_or_before(session.t_start)
            .ok_or_else(|| Error::UndefinedOpeningPrice {
                symbol: series.symbol.clone(),
                t_start: session.t_start,
            })?;
    let end = series.times.partition_point(|&x| x <= session.t_end);
    TickSeries::new(
        series.symbol.clone(),
        series.times[open..end].to_vec(),
        series.prices[open..end].to_vec(),
    )
}

/// Load tick series from a `symbol,time,price` CSV file.
pub fn load_ticks(path: impl AsRef<Path>) -> Result<Vec<TickSeries>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_ticks(BufReader::new(file))
}

/// Parse tick CSV from any reader.
///
/// Series come back in order of first appearance. Rows within a symbol are
/// ordered by time; rows sharing a timestamp collapse to the last one seen.
/// Symbols with fewer than two distinct timestamps are dropped.
pub fn read_ticks<R: Read>(reader: R) -> Result<Vec<TickSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let expected = ["symbol", "time", "price"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `symbol,time,price`, got `{}`",
                headers.as_slice()
            ),
        });
    }

    // (time, file order, price) per symbol
    let mut rows: Vec<(String, Vec<(i64, usize, f64)>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (order, record) in rdr.records().enumerate() {
        let line = order as u64 + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        let line = record.position().map_or(line, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let symbol = &record[0];
        if symbol.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty symbol".into(),
            });
        }
        let time: i64 = record[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid time `{}` in row `{}`", &record[1], join(&record)),
        })?;
        let price: f64 = record[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid price `{}` in row `{}`", &record[2], join(&record)),
        })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("price must be positive in row `{}`", join(&record)),
            });
        }
        let slot = *index.entry(symbol.to_string()).or_insert_with(|| {
            rows.push((symbol.to_string(), Vec::new()));
            rows.len() - 1
        });
        rows[slot].1.push((time, order, price));
    }

    let mut out = Vec::with_capacity(rows.len());
    for (symbol, mut ticks) in rows {
        if ticks.windows(2).any(|w| w[1].0 < w[0].0) {
            warn!("{symbol}: rows out of time order, sorting");
        }
        ticks.sort_by_key(|&(t, order, _)| (t, order));
        let mut times: Vec<i64> = Vec::with_capacity(ticks.len());
        let mut prices: Vec<f64> = Vec::with_capacity(ticks.len());
        for (t, _, p) in ticks {
            if times.last() == Some(&t) {
                *prices.last_mut().unwrap() = p;
            } else {
                times.push(t);
                prices.push(p);
            }
        }
        if times.len() < 2 {
            warn!("{symbol}: fewer than 2 ticks, excluded");
            continue;
        }
        out.push(TickSeries::new(symbol, times, prices)?);
    }
    Ok(out)
}

/// Write series to a `symbol,time,price` CSV file.
pub fn save_ticks(path: impl AsRef<Path>, series: &[TickSeries]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_ticks(&mut w, series).map_err(io)?;
    w.flush().map_err(io)
}

pub fn write_ticks<W: Write>(w: &mut W, series: &[TickSeries]) -> std::io::Result<()> {
    writeln!(w, "symbol,time,price")?;
    for s in series {
        for (t, p) in s.times.iter().zip(&s.prices) {
            // `{}` on f64 prints the shortest string that round-trips
            writeln!(w, "{},{},{}", s.symbol, t, p)?;
        }
    }
    Ok(())
}

fn join(record: &csv::StringRecord) -> String {
    record.iter().collect::<Vec<_>>().join(",")
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
