//! Correlated underlying return series and asynchronous tick sampling.
//!
//! Two underlying return series share a common factor `eta` and carry
//! independent idiosyncratic terms, optionally modulated by a GARCH(1,1)
//! volatility per series. Each underlying price path is then observed at
//! renewal-process trade times with exponential waiting times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tickstore::TickSeries;

/// Per-step standard deviation of the returns used to build price paths.
pub const STEP_VOLATILITY: f64 = 1e-3;

/// Start price of every simulated path.
pub const START_PRICE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Innovation {
    #[default]
    Gaussian,
    /// Student-t with 3 degrees of freedom, rescaled to unit variance.
    HeavyTailed,
}

impl Innovation {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Innovation::Gaussian => rng.sample(StandardNormal),
            Innovation::HeavyTailed => heavy_tail_innovation(rng),
        }
    }
}

/// Unit-variance heavy-tailed draw: Student-t(3) divided by sqrt(3).
pub fn heavy_tail_innovation<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let t3 = StudentT::new(3.0).expect("3 degrees of freedom is valid");
    t3.sample(rng) / 3f64.sqrt()
}

/// One-factor model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NohParams {
    /// Correlation of the two underlying return series, in `[0, 1]`.
    pub c: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub innovation: Innovation,
}

impl NohParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::invalid("c", format!("{} not in [0, 1]", self.c)));
        }
        if self.n_steps < 2 {
            return Err(Error::invalid("n_steps", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    /// Initial volatility. Defaults to the unconditional level.
    #[serde(default)]
    pub sigma0: Option<f64>,
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("alpha0", self.alpha0),
            ("alpha1", self.alpha1),
            ("beta1", self.beta1),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("{v} must be >= 0")));
            }
        }
        if self.alpha0 == 0.0 {
            return Err(Error::invalid("alpha0", "must be positive"));
        }
        if let Some(s) = self.sigma0 {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid("sigma0", format!("{s} must be >= 0")));
            }
        }
        let persistence = self.alpha1 + self.beta1;
        if persistence >= 1.0 {
            return Err(Error::Nonstationary(persistence));
        }
        Ok(())
    }

    /// `alpha0 / (1 - alpha1 - beta1)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1 - self.beta1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Mean waiting time between trades, in seconds.
    pub mu: f64,
    pub seed: u64,
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid("mu", format!("{} must be > 0", self.mu)));
        }
        Ok(())
    }
}

/// Regularly spaced return and price path on the fine timescale.
///
/// `prices[k + 1] == prices[k] * (1 + returns[k])`; grid index `k` sits at
/// time `k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnderlyingSeries {
    step: i64,
    returns: Vec<f64>,
    prices: Vec<f64>,
}

impl UnderlyingSeries {
    pub fn from_returns(step: i64, returns: Vec<f64>, start_price: f64) -> Result<Self> {
        if step < 1 {
            return Err(Error::invalid("step", "must be at least 1 second"));
        }
        if !(start_price.is_finite() && start_price > 0.0) {
            return Err(Error::invalid("start_price", "must be positive"));
        }
        let mut prices = Vec::with_capacity(returns.len() + 1);
        let mut p = start_price;
        prices.push(p);
        for (k, r) in returns.iter().enumerate() {
            p *= 1.0 + r;
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Degenerate(if k == 0 {
                    "price path left the positive axis at the first step"
                } else {
                    "price path left the positive axis"
                }));
            }
            prices.push(p);
        }
        Ok(Self {
            step,
            returns,
            prices,
        })
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn n_steps(&self) -> usize {
        self.returns.len()
    }

    /// Time of the last grid point.
    pub fn end_time(&self) -> i64 {
        self.returns.len() as i64 * self.step
    }

    /// Grid index of time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: i64) -> Option<usize> {
        if t < 0 || t % self.step != 0 {
            return None;
        }
        let k = (t / self.step) as usize;
        (k < self.prices.len()).then_some(k)
    }
}

/// Raw output of the GARCH(1,1) recursion for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchPath {
    pub returns: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Draw the shared and idiosyncratic innovations for one step. The draw
/// order is fixed so every generator consumes the stream identically.
fn factor_step<R: Rng>(rng: &mut R, innovation: Innovation, c: f64) -> (f64, f64) {
    let eta = innovation.sample(rng);
    let e1 = innovation.sample(rng);
    let e2 = innovation.sample(rng);
    let common = c.sqrt() * eta;
    let idio = (1.0 - c).sqrt();
    (common + idio * e1, common + idio * e2)
}

/// Unscaled one-factor returns, unit variance per step.
pub fn noh_returns(p: &NohParams, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r1 = Vec::with_capacity(p.n_steps);
    let mut r2 = Vec::with_capacity(p.n_steps);
    for _ in 0..p.n_steps {
        let (a, b) = factor_step(&mut rng, p.innovation, p.c);
        r1.push(a);
        r2.push(b);
    }
    Ok((r1, r2))
}

/// Correlated underlying pair with per-step return volatility
/// [`STEP_VOLATILITY`] and zero drift.
pub fn gen_noh_pair(
    p: &NohParams,
    step: i64,
    seed: u64,
) -> Result<(UnderlyingSeries, UnderlyingSeries)> {
    let (r1, r2) = noh_returns(p, seed)?;
    let scale = |r: Vec<f64>| r.into_iter().map(|x| x * STEP_VOLATILITY).collect();
    Ok((
        UnderlyingSeries::from_returns(step, scale(r1), START_PRICE)?,
        UnderlyingSeries::from_returns(step, scale(r2), START_PRICE)?,
    ))
}

/// GARCH(1,1) recursion driven by one-factor innovations, one volatility
/// process per series.
pub fn garch_returns(p: &NohParams, g: &GarchParams, seed: u64) -> Result<[GarchPath; 2]> {
    p.validate()?;
    g.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma0 = g
        .sigma0
        .unwrap_or_else(|| g.unconditional_variance().sqrt());
    let mut paths = [
        GarchPath {
            returns: Vec::with_capacity(p.n_steps),
            sigma: Vec::with_capacity(p.n_steps),
        },
        GarchPath {
            returns: Vec::with_capacity(p.n_steps),
            sigma: Vec::with_capacity(p.n_steps),
        },
    ];
    let mut var = [sigma0 * sigma0; 2];
    for t in 0..p.n_steps {
        let (z1, z2) = factor_step(&mut rng, p.innovation, p.c);
        for (i, z) in [z1, z2].into_iter().enumerate() {
            if t > 0 {
                let prev = paths[i].returns[t - 1];
                var[i] = g.alpha0 + g.alpha1 * prev * prev + g.beta1 * var[i];
            }
            let sigma = var[i].sqrt();
            paths[i].sigma.push(sigma);
            paths[i].returns.push(sigma * z);
        }
    }
    Ok(paths)
}

/// GARCH(1,1) underlying pair. The raw recursion output is divided by its
/// unconditional volatility and multiplied by [`STEP_VOLATILITY`] so price
/// paths stay positive; the volatility clustering is unchanged.
pub fn gen_garch_pair(
    p: &NohParams,
    g: &GarchParams,
    step: i64,
    seed: u64,
) -> Result<(UnderlyingSeries, UnderlyingSeries)> {
    let [a, b] = garch_returns(p, g, seed)?;
    let factor = STEP_VOLATILITY / g.unconditional_variance().sqrt();
    let scale = |r: Vec<f64>| r.into_iter().map(|x| x * factor).collect();
    Ok((
        UnderlyingSeries::from_returns(step, scale(a.returns), START_PRICE)?,
        UnderlyingSeries::from_returns(step, scale(b.returns), START_PRICE)?,
    ))
}

/// Observe `u` at renewal-process trade times.
///
/// The first trade sits at the grid origin. Each waiting time is drawn from
/// an exponential with mean `mu` seconds, rounded up to the grid, and is at
/// least one step.
pub fn sample_ticks(
    u: &UnderlyingSeries,
    s: &SamplingParams,
    symbol: impl Into<String>,
) -> Result<TickSeries> {
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let wait = Exp::new(1.0 / s.mu).map_err(|e| Error::invalid("mu", e.to_string()))?;
    let step = u.step as f64;
    let last = u.prices.len() - 1;

    let mut times = vec![0];
    let mut prices = vec![u.prices[0]];
    let mut k = 0usize;
    loop {
        let w: f64 = wait.sample(&mut rng);
        let steps = ((w / step).ceil() as usize).max(1);
        k = match k.checked_add(steps) {
            Some(next) if next <= last => next,
            _ => break,
        };
        times.push(k as i64 * u.step);
        prices.push(u.prices[k]);
    }
    // a window shorter than one waiting time still yields a valid series
    if times.len() < 2 {
        times.push(last as i64 * u.step);
        prices.push(u.prices[last]);
    }
    TickSeries::new(symbol, times, prices)
}
