//! Crash hazards and return statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HazardParams {
    /// Cash scale of the low-cash kernel, dollars².
    pub gamma1: f64,
    pub gamma2: f64,
    /// Scale of the investor-side risk, per year.
    pub gamma3: f64,
    /// Ceiling for the market hazard, which diverges when every agent is broke.
    pub hazard_cap: f64,
}

impl Default for HazardParams {
    fn default() -> Self {
        Self {
            gamma1: 70.0,
            gamma2: 5.0,
            gamma3: 1.0,
            hazard_cap: 1e6,
        }
    }
}

impl HazardParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("hazard.gamma1", self.gamma1),
            ("hazard.gamma2", self.gamma2),
            ("hazard.gamma3", self.gamma3),
            ("hazard.hazard_cap", self.hazard_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Share of agents concentrated at low cash: the population mean of
/// `exp(−b²/γ₁)`. Equals 1 when every agent is broke.
pub fn cash_concentration(cash_values: &[f64], gamma1: f64) -> Result<f64> {
    if cash_values.is_empty() {
        return Err(Error::Domain(
            "cash concentration of an empty population".into(),
        ));
    }
    if !(gamma1 > 0.0) {
        return Err(Error::Domain(format!("gamma1 must be > 0, got {gamma1}")));
    }
    let sum: f64 = cash_values.iter().map(|b| (-b * b / gamma1).exp()).sum();
    Ok(sum / cash_values.len() as f64)
}

/// Market-side crash hazard `γ₂·√h/(1−√h)`, capped at `hazard_cap`.
pub fn hazard_aspp(h: f64, params: &HazardParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Domain(format!(
            "concentration h = {h} outside (0, 1]"
        )));
    }
    let root = h.sqrt();
    if root >= 1.0 {
        return Ok(params.hazard_cap);
    }
    Ok((params.gamma2 * root / (1.0 - root)).min(params.hazard_cap))
}

/// A nominal-rate path sampled on a uniform grid starting at `t0`.
#[derive(Debug, Clone, Copy)]
pub struct RateSeries<'a> {
    pub t0: f64,
    pub dt: f64,
    pub values: &'a [f64],
}

impl RateSeries<'_> {
    fn end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len().saturating_sub(1)) as f64
    }

    fn at(&self, t: f64) -> f64 {
        let pos = ((t - self.t0) / self.dt).max(0.0);
        let i = (pos.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return self.values[i];
        }
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Investor-side hazard: `γ₃ ∫_{t_m}^{max(t, t_m)} exp(r_w − r_n(s)) ds`,
/// trapezoid rule at step `dt`.
pub fn hazard_investor(
    series: RateSeries<'_>,
    r_w: f64,
    t_m: f64,
    t: f64,
    gamma3: f64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step dt must be > 0, got {dt}")));
    }
    if t <= t_m {
        return Ok(0.0);
    }
    let slack = 1e-9 * series.dt.max(1.0);
    if series.values.is_empty() || series.t0 > t_m + slack || series.end() < t - slack {
        return Err(Error::Domain(format!(
            "rate series does not cover [{t_m}, {t}]"
        )));
    }
    let span = t - t_m;
    let steps = (span / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let f = |s: f64| (r_w - series.at(s)).exp();
    let mut acc = 0.5 * (f(t_m) + f(t));
    for i in 1..steps {
        acc += f(t_m + i as f64 * h);
    }
    Ok(gamma3 * acc * h)
}

pub fn total_risk(market_hazard: f64, investor_hazard: f64) -> f64 {
    market_hazard + investor_hazard
}

/// Long-run daily geometric-mean return and volatility of a homogeneous
/// pump with `n_agents` traders of which `m_active` trade each day.
pub fn theoretical_return(
    alpha: f64,
    beta: f64,
    n_agents: usize,
    m_active: usize,
    c0_sigma: f64,
) -> (f64, f64) {
    let gamma = pump_gamma(n_agents, m_active);
    (
        (alpha / beta).powf(1.0 / gamma),
        c0_sigma * (alpha * beta - 1.0),
    )
}

/// `2N/m`: sessions needed, on average, for each agent to trade twice.
pub fn pump_gamma(n_agents: usize, m_active: usize) -> f64 {
    2.0 * n_agents as f64 / m_active as f64
}

/// Continuously-compounded annual rate from a daily gross return.
pub fn annualize(daily_gross: f64, days_per_year: f64) -> f64 {
    days_per_year * daily_gross.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub mean_log_return: f64,
    pub std_log_return: f64,
    pub geometric_mean_return: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub count: usize,
}

/// Daily log-return statistics of a price series.
pub fn return_stats(prices: &[f64]) -> Result<ReturnStats> {
    if prices.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 prices, got {}",
            prices.len()
        )));
    }
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Domain(format!("nonpositive price {p}")));
    }
    let logs: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(log_return_stats(&logs))
}

/// Moments of already-computed log returns. The std is the sample (n−1)
/// estimate; skewness and kurtosis use central population moments and are
/// zero for a degenerate sample.
pub fn log_return_stats(logs: &[f64]) -> ReturnStats {
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in logs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = if logs.len() > 1 {
        (m2 / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    // Relative floor: rounding noise on a flat series is not dispersion.
    let degenerate = m2 <= (1e-10 * mean.abs()).powi(2);
    let (skewness, excess_kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    ReturnStats {
        mean_log_return: mean,
        std_log_return: if degenerate { 0.0 } else { std },
        geometric_mean_return: mean.exp(),
        skewness,
        excess_kurtosis,
        count: logs.len(),
    }
}
