//! Check of the relation between normalized grid returns and the normalized
//! underlying returns they are built from.
//!
//! A previous-tick return over `[t, t + dt]` is the sum of the `N(t)`
//! underlying increments between `gamma(t)` and `gamma(t + dt)`. Writing both
//! sides in normalized units and replacing the sample mean of `N` by
//! `dt / step` gives
//!
//! ```text
//! g(t) = sqrt(step / dt) * sum_j g_u(gamma(t) + j * step)
//!        - mean_u * (dt / step - N(t)) / sd_r
//! ```
//!
//! which holds exactly when every grid point trades and only on average
//! otherwise.

use serde::{Deserialize, Serialize};

use super::ReturnGrid;
use crate::error::{Error, Result};
use crate::synth::UnderlyingSeries;
use crate::tickstore::TickSeries;

/// Moments used to normalize the grid returns on the left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppendixNormalization {
    /// Mean and variance implied by additivity over the underlying steps,
    /// `<r> = <N> mean_u` and `Var(r) = <N> Var_u`, with `<N>` the sample
    /// mean of the step counts. Isolates the `<N> = dt / step` replacement.
    #[default]
    Additive,
    /// Sample mean and standard deviation of the grid returns.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixCheck {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub n_samples: usize,
    /// Sample mean of the underlying step counts per return.
    pub mean_steps: f64,
}

fn grid_index(u: &UnderlyingSeries, ticks: &TickSeries, t: i64) -> Result<(usize, f64)> {
    let i = ticks
        .index_at_or_before(t)
        .ok_or_else(|| Error::UndefinedPreviousTick {
            symbol: ticks.symbol().to_string(),
            t,
        })?;
    let time = ticks.times()[i];
    let k = u.index_of(time).ok_or_else(|| {
        Error::invalid(
            "ticks",
            format!("tick at t={time} is not on the underlying grid"),
        )
    })?;
    Ok((k, ticks.prices()[i]))
}

pub fn verify_appendix_relation(
    u: &UnderlyingSeries,
    ticks: &TickSeries,
    grid: &ReturnGrid,
    normalization: AppendixNormalization,
) -> Result<AppendixCheck> {
    let ur = u.returns();
    if ur.len() < 2 {
        return Err(Error::TooFewSamples(ur.len()));
    }
    let n = ur.len() as f64;
    let mean_u = ur.iter().sum::<f64>() / n;
    let sd_u = (ur.iter().map(|r| (r - mean_u).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd_u > 0.0) {
        return Err(Error::Degenerate("underlying returns have zero variance"));
    }

    struct Row {
        r: f64,
        lo: usize,
        steps: usize,
    }
    let rows = grid
        .times()
        .map(|t| {
            let (lo, p_lo) = grid_index(u, ticks, t)?;
            let (hi, p_hi) = grid_index(u, ticks, t + grid.dt)?;
            Ok(Row {
                r: (p_hi - p_lo) / p_lo,
                lo,
                steps: hi - lo,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let count = rows.len() as f64;
    let mean_steps = rows.iter().map(|r| r.steps as f64).sum::<f64>() / count;
    let (mean_r, sd_r) = match normalization {
        AppendixNormalization::Additive => (mean_steps * mean_u, mean_steps.sqrt() * sd_u),
        AppendixNormalization::Empirical => {
            let m = rows.iter().map(|r| r.r).sum::<f64>() / count;
            let v = rows.iter().map(|r| (r.r - m).powi(2)).sum::<f64>() / count;
            (m, v.sqrt())
        }
    };
    if !(sd_r > 0.0) {
        return Err(Error::Degenerate("grid returns have zero variance"));
    }

    let nominal_steps = grid.dt as f64 / u.step() as f64;
    let prices = u.prices();
    let mut max_abs: f64 = 0.0;
    let mut sum_abs = 0.0;
    for row in &rows {
        let lhs = (row.r - mean_r) / sd_r;
        // underlying increments relative to the price at the window start,
        // so that they add up to the grid return
        let base = prices[row.lo];
        let sum_g: f64 = (0..row.steps)
            .map(|j| {
                let k = row.lo + j;
                ((prices[k + 1] - prices[k]) / base - mean_u) / sd_u
            })
            .sum();
        let rhs = sum_g / nominal_steps.sqrt() - mean_u * (nominal_steps - row.steps as f64) / sd_r;
        let dev = (lhs - rhs).abs();
        max_abs = max_abs.max(dev);
        sum_abs += dev;
    }

    Ok(AppendixCheck {
        max_abs,
        mean_abs: sum_abs / count,
        n_samples: rows.len(),
        mean_steps,
    })
}
