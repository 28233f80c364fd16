//! Agents, populations and the greed/fear sampling that seeds them.
//!
//! Every agent holds a dollar-valued stock account and a cash account, a
//! target stock-to-cash ratio `k`, and two private multipliers: greed
//! (applied to `k` after selling) and fear (divides `k` after buying).
//! Populations are drawn from a seeded ChaCha stream so that a
//! `(seed, path)` pair always reproduces the same market.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic generator used for every stochastic step.
pub type SimRng = ChaCha8Rng;

/// Derive the stream for one simulation path.
///
/// Each path gets its own ChaCha stream under the same key, so paths are
/// independent and the mapping does not depend on how many paths run or in
/// which order.
pub fn path_rng(base_seed: u64, path_index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(path_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPortfolio {
    /// Dollar value of the stock account at the current price.
    pub stock_value: f64,
    pub cash: f64,
    /// Target stock-to-cash ratio `k`.
    pub target_ratio: f64,
    pub greed: f64,
    pub fear: f64,
}

impl AgentPortfolio {
    pub fn shares(&self, price: f64) -> f64 {
        self.stock_value / price
    }
}

/// Joint log-normal law of the greed and fear multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreedFearSpec {
    pub mean_log_greed: f64,
    pub mean_log_fear: f64,
    /// Variance of each log factor (shared).
    pub log_variance: f64,
    pub correlation: f64,
}

impl Default for GreedFearSpec {
    fn default() -> Self {
        Self {
            mean_log_greed: 1.12_f64.ln(),
            mean_log_fear: 1.11_f64.ln(),
            log_variance: 12e-4,
            correlation: 0.95,
        }
    }
}

impl GreedFearSpec {
    /// Every agent gets exactly `(greed, fear)`.
    pub fn homogeneous(greed: f64, fear: f64) -> Self {
        Self {
            mean_log_greed: greed.ln(),
            mean_log_fear: fear.ln(),
            log_variance: 0.0,
            correlation: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mean_log_greed,
            self.mean_log_fear,
            self.log_variance,
            self.correlation,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("greed_fear", "all parameters must be finite"));
        }
        if !(-1.0..=1.0).contains(&self.correlation) {
            return Err(Error::config(
                "greed_fear.correlation",
                "correlation ∈ [-1,1]",
            ));
        }
        if self.log_variance < 0.0 {
            return Err(Error::config("greed_fear.log_variance", "log_variance ≥ 0"));
        }
        let three_sigma = 3.0 * self.log_variance.sqrt();
        if self.mean_log_greed - three_sigma < 0.0 {
            return Err(Error::config(
                "greed_fear.mean_log_greed",
                "mean_log_greed − 3·sqrt(log_variance) ≥ 0",
            ));
        }
        if self.mean_log_fear - three_sigma < 0.0 {
            return Err(Error::config(
                "greed_fear.mean_log_fear",
                "mean_log_fear − 3·sqrt(log_variance) ≥ 0",
            ));
        }
        Ok(())
    }

    /// Greed and fear at the mean of the log law.
    pub fn median_factors(&self) -> (f64, f64) {
        (self.mean_log_greed.exp(), self.mean_log_fear.exp())
    }
}

/// Draw `n` `(greed, fear)` pairs.
///
/// `(ln greed, ln fear)` is bivariate normal; draws outside the quadrant
/// `ln greed ≥ 0, ln fear ≥ 0` are rejected and redrawn.
pub fn sample_greed_fear<R: Rng + ?Sized>(
    gf: &GreedFearSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    gf.validate()?;
    let sigma = gf.log_variance.sqrt();
    let rho = gf.correlation;
    let ortho = (1.0 - rho * rho).max(0.0).sqrt();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let dev = sigma * z1;
        let log_greed = gf.mean_log_greed + dev;
        let log_fear = if ortho == 0.0 {
            gf.mean_log_fear + dev
        } else {
            gf.mean_log_fear + sigma * (rho * z1 + ortho * z2)
        };
        if log_greed < 0.0 || log_fear < 0.0 {
            continue;
        }
        out.push((log_greed.exp(), log_fear.exp()));
    }
    Ok(out)
}

/// Time profile of a greed or fear signal, valued in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Constant {
        level: f64,
    },
    /// Level is `level` on `[start, end)` for each segment and 0 elsewhere.
    Segments {
        segments: Vec<SignalSegment>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSegment {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

impl Signal {
    pub fn on() -> Self {
        Signal::Constant { level: 1.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Signal::Constant { level } => *level,
            Signal::Segments { segments } => segments
                .iter()
                .find(|s| t >= s.start && t < s.end)
                .map_or(0.0, |s| s.level),
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            Signal::Constant { level } if !in_unit(*level) => {
                Err(Error::config(key, "signal level ∈ [0,1]"))
            }
            Signal::Segments { segments } => {
                for s in segments {
                    if !in_unit(s.level) {
                        return Err(Error::config(key, "signal level ∈ [0,1]"));
                    }
                    if !(s.end >= s.start) {
                        return Err(Error::config(key, "segment end ≥ start"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Separate greed and fear channels. Each agent's own excess `greed − 1`
/// (resp. `fear − 1`) is the amplitude the channel scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSchedule {
    pub greed: Signal,
    pub fear: Signal,
}

impl Default for SignalSchedule {
    fn default() -> Self {
        Self {
            greed: Signal::on(),
            fear: Signal::on(),
        }
    }
}

impl SignalSchedule {
    /// Both channels follow the same signal.
    pub fn uniform(signal: Signal) -> Self {
        Self {
            greed: signal.clone(),
            fear: signal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.greed.validate("market.signal.greed")?;
        self.fear.validate("market.signal.fear")
    }
}

/// Greed and fear in force at time `t` (years).
pub fn effective_factors(agent: &AgentPortfolio, sig: &SignalSchedule, t: f64) -> (f64, f64) {
    (
        1.0 + (agent.greed - 1.0) * sig.greed.at(t),
        1.0 + (agent.fear - 1.0) * sig.fear.at(t),
    )
}

#[derive(Debug, Clone)]
pub struct MarketState {
    pub agents: Vec<AgentPortfolio>,
    pub price: f64,
    pub prev_price: f64,
    pub day: u64,
    /// Net shares held by the external-investor pool.
    pub external_shares: f64,
    pub rng: SimRng,
}

impl MarketState {
    pub fn total_cash(&self) -> f64 {
        self.agents.iter().map(|a| a.cash).sum()
    }

    pub fn total_agent_shares(&self) -> f64 {
        self.agents.iter().map(|a| a.stock_value).sum::<f64>() / self.price
    }

    /// Agent shares plus the external pool; constant across sessions.
    pub fn total_shares(&self) -> f64 {
        self.total_agent_shares() + self.external_shares
    }

    pub fn cash_values(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.cash).collect()
    }

    /// Indices of `m` distinct agents, uniformly without replacement.
    pub(crate) fn draw_active(&mut self, m: usize) -> Vec<usize> {
        index::sample(&mut self.rng, self.agents.len(), m).into_vec()
    }
}

/// Build the starting population.
///
/// Every agent starts with `initial_cash` in cash, target `initial_k`, and
/// `initial_cash·initial_k + η` in stock, `η ~ U[0, stock_noise_range]`.
/// The price starts at 1.
pub fn init_population(
    n_agents: usize,
    gf: &GreedFearSpec,
    initial_cash: f64,
    initial_k: f64,
    stock_noise_range: f64,
    mut rng: SimRng,
) -> Result<MarketState> {
    if n_agents == 0 {
        return Err(Error::config("market.n_agents", "n_agents ≥ 1"));
    }
    if !(initial_cash > 0.0) {
        return Err(Error::config("market.initial_cash", "initial_cash > 0"));
    }
    if !(initial_k > 0.0) {
        return Err(Error::config("market.initial_k", "initial_k > 0"));
    }
    if !(stock_noise_range >= 0.0) {
        return Err(Error::config(
            "market.stock_noise_range",
            "stock_noise_range ≥ 0",
        ));
    }
    let factors = sample_greed_fear(gf, n_agents, &mut rng)?;
    let agents = factors
        .into_iter()
        .map(|(greed, fear)| {
            let eta = if stock_noise_range > 0.0 {
                rng.random_range(0.0..=stock_noise_range)
            } else {
                0.0
            };
            AgentPortfolio {
                stock_value: initial_cash * initial_k + eta,
                cash: initial_cash,
                target_ratio: initial_k,
                greed,
                fear,
            }
        })
        .collect();
    Ok(MarketState {
        agents,
        price: 1.0,
        prev_price: 1.0,
        day: 0,
        external_shares: 0.0,
        rng,
    })
}
