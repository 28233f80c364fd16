//! Investment-cycle experiments on top of the agent market.
//!
//! A path runs three phases: a pump with no external money, an investment
//! phase during the maturity period, and a withdrawal phase in which
//! matured value is paid out at the target rate while new money keeps
//! arriving on schedule.

mod ensemble;
mod fit;
mod ledger;

pub use ensemble::{
    regime_comparison, run_ensemble, run_ensemble_with_threads, CashHistogram, EnsembleStats,
    PathFailure, RegimeComparison, RegimeConfig, SeriesBands,
};
pub use fit::{fit_c0, fit_objective, C0Fit, FitTarget};
pub use ledger::InvestorLedger;

use serde::{Deserialize, Serialize};

use crate::engine::{trading_session, FlowSign};
use crate::error::{Error, Result};
use crate::market::{init_population, path_rng, GreedFearSpec, MarketState, SignalSchedule};
use crate::ponzi::ScheduleSpec;
use crate::risk::{cash_concentration, hazard_aspp, pump_gamma, total_risk, HazardParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketConfig {
    pub n_agents: usize,
    pub m_active: usize,
    pub greed_fear: GreedFearSpec,
    pub initial_cash: f64,
    pub initial_k: f64,
    pub stock_noise_range: f64,
    pub days_per_year: u32,
    pub signal: SignalSchedule,
    pub flow_sign: FlowSign,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_agents: 500,
            m_active: 125,
            greed_fear: GreedFearSpec::default(),
            initial_cash: 10.0,
            initial_k: 1.0,
            stock_noise_range: 0.1,
            days_per_year: 360,
            signal: SignalSchedule::default(),
            flow_sign: FlowSign::default(),
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::config("market.n_agents", "n_agents ≥ 1"));
        }
        if self.m_active == 0 || self.m_active > self.n_agents {
            return Err(Error::config("market.m_active", "1 ≤ m_active ≤ n_agents"));
        }
        if self.days_per_year == 0 {
            return Err(Error::config("market.days_per_year", "days_per_year ≥ 1"));
        }
        if !(self.initial_cash > 0.0) {
            return Err(Error::config("market.initial_cash", "initial_cash > 0"));
        }
        if !(self.initial_k > 0.0) {
            return Err(Error::config("market.initial_k", "initial_k > 0"));
        }
        if !(self.stock_noise_range >= 0.0) {
            return Err(Error::config(
                "market.stock_noise_range",
                "stock_noise_range ≥ 0",
            ));
        }
        self.greed_fear.validate()?;
        self.signal.validate()
    }

    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.days_per_year)
    }

    /// Continuously-compounded annual pump rate at the median factors.
    pub fn annual_pump_rate(&self) -> f64 {
        let gf = &self.greed_fear;
        f64::from(self.days_per_year) * (gf.mean_log_greed - gf.mean_log_fear)
            / pump_gamma(self.n_agents, self.m_active)
    }

    /// Total cash held by the population at start.
    pub fn initial_cash_reserve(&self) -> f64 {
        self.initial_cash * self.n_agents as f64
    }

    pub fn populate(&self, base_seed: u64, path_index: u64) -> Result<MarketState> {
        init_population(
            self.n_agents,
            &self.greed_fear,
            self.initial_cash,
            self.initial_k,
            self.stock_noise_range,
            path_rng(base_seed, path_index),
        )
    }

    fn days(&self, years: f64) -> usize {
        (years * f64::from(self.days_per_year)).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    /// Years of pumping before any external money arrives.
    pub pre_phase: f64,
    pub t_m: f64,
    pub schedule: ScheduleSpec,
    /// Withdrawal rate on matured value; defaults to the annual pump rate.
    pub target_rate: Option<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub base_seed: u64,
    pub market: MarketConfig,
    pub hazard: HazardParams,
    /// Trailing window (days) for the realized rate entering the investor hazard.
    pub rate_window_days: usize,
    /// Cash snapshot times; defaults to the ends of the three phases.
    pub checkpoints: Option<Vec<f64>>,
}

impl Default for CycleConfig {
    fn default() -> Self {
        let market = MarketConfig::default();
        Self {
            pre_phase: 3.0,
            t_m: 3.0,
            schedule: ScheduleSpec::exponential(0.1, market.initial_cash_reserve()),
            target_rate: None,
            horizon: 20.0,
            n_paths: 100,
            base_seed: 1,
            market,
            hazard: HazardParams::default(),
            rate_window_days: 30,
            checkpoints: None,
        }
    }
}

impl CycleConfig {
    /// Pure pump: no external money at all.
    pub fn zero_investment(
        market: MarketConfig,
        horizon: f64,
        n_paths: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            pre_phase: 0.0,
            t_m: 0.0,
            schedule: ScheduleSpec::constant(0.0),
            horizon,
            n_paths,
            base_seed,
            market,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.hazard.validate()?;
        self.schedule.validate("cycle.schedule")?;
        if !(self.pre_phase >= 0.0) {
            return Err(Error::config("cycle.pre_phase", "pre_phase ≥ 0"));
        }
        if !(self.t_m >= 0.0) {
            return Err(Error::config("cycle.t_m", "t_m ≥ 0"));
        }
        if !(self.horizon > self.pre_phase + self.t_m) {
            return Err(Error::config("cycle.horizon", "horizon > pre_phase + t_m"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("cycle.n_paths", "n_paths ≥ 1"));
        }
        if self.rate_window_days == 0 {
            return Err(Error::config(
                "cycle.rate_window_days",
                "rate_window_days ≥ 1",
            ));
        }
        if let Some(r) = self.target_rate {
            if !r.is_finite() {
                return Err(Error::config(
                    "cycle.target_rate",
                    "target_rate must be finite",
                ));
            }
        }
        if let Some(cps) = &self.checkpoints {
            if cps.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
                return Err(Error::config(
                    "cycle.checkpoints",
                    "checkpoints ∈ [0, horizon]",
                ));
            }
        }
        Ok(())
    }

    pub fn withdrawal_rate(&self) -> f64 {
        self.target_rate
            .unwrap_or_else(|| self.market.annual_pump_rate())
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        let mut cps = self
            .checkpoints
            .clone()
            .unwrap_or_else(|| vec![self.pre_phase, self.pre_phase + self.t_m, self.horizon]);
        cps.sort_by(f64::total_cmp);
        cps.dedup();
        cps
    }
}

/// External flow rule for a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FlowPolicy {
    /// Pre-phase, investment and withdrawal phases of a [`CycleConfig`].
    Cycle,
    /// Fixed dollars per year from day zero, no ledger.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashSnapshot {
    pub time: f64,
    pub cash: Vec<f64>,
}

/// Daily series of one path. Index 0 is the initial state at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub time: Vec<f64>,
    pub price: Vec<f64>,
    pub log_price: Vec<f64>,
    pub h_a: Vec<f64>,
    pub h_p: Vec<f64>,
    pub h: Vec<f64>,
    /// Executed external flow per session, dollars.
    pub x_in: Vec<f64>,
    /// Matured withdrawal-eligible value.
    pub r: Vec<f64>,
    /// Mark-to-market value of the external investors' shares.
    pub s_ext: Vec<f64>,
    pub total_cash: Vec<f64>,
    pub snapshots: Vec<CashSnapshot>,
    pub clamp_count: usize,
}

/// Tracked per-day quantities, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Price,
    LogPrice,
    Ha,
    Hp,
    H,
    Xin,
    R,
    SExt,
    TotalCash,
}

impl Column {
    pub const ALL: [Column; 9] = [
        Column::Price,
        Column::LogPrice,
        Column::Ha,
        Column::Hp,
        Column::H,
        Column::Xin,
        Column::R,
        Column::SExt,
        Column::TotalCash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Price => "price",
            Column::LogPrice => "log_price",
            Column::Ha => "Ha",
            Column::Hp => "Hp",
            Column::H => "H",
            Column::Xin => "xin",
            Column::R => "R",
            Column::SExt => "S_ext",
            Column::TotalCash => "total_cash",
        }
    }
}

impl PathRecord {
    fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            time: v(),
            price: v(),
            log_price: v(),
            h_a: v(),
            h_p: v(),
            h: v(),
            x_in: v(),
            r: v(),
            s_ext: v(),
            total_cash: v(),
            snapshots: Vec::new(),
            clamp_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn column(&self, c: Column) -> &[f64] {
        match c {
            Column::Price => &self.price,
            Column::LogPrice => &self.log_price,
            Column::Ha => &self.h_a,
            Column::Hp => &self.h_p,
            Column::H => &self.h,
            Column::Xin => &self.x_in,
            Column::R => &self.r,
            Column::SExt => &self.s_ext,
            Column::TotalCash => &self.total_cash,
        }
    }

    pub fn log_returns(&self) -> Vec<f64> {
        self.price.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
    }
}

/// Simulate one path of the investment cycle.
pub fn run_path(cfg: &CycleConfig, path_index: u64) -> Result<PathRecord> {
    cfg.validate()?;
    simulate(cfg, FlowPolicy::Cycle, path_index)
}

pub(crate) fn simulate(
    cfg: &CycleConfig,
    policy: FlowPolicy,
    path_index: u64,
) -> Result<PathRecord> {
    let market_cfg = &cfg.market;
    let dt = market_cfg.dt();
    let dpy = f64::from(market_cfg.days_per_year);
    let total_days = market_cfg.days(cfg.horizon);
    let (pre_days, mat_days) = match policy {
        FlowPolicy::Cycle => (market_cfg.days(cfg.pre_phase), market_cfg.days(cfg.t_m)),
        FlowPolicy::Constant(_) => (0, 0),
    };
    let payout_start = pre_days + mat_days;
    let r_w = cfg.withdrawal_rate();
    let gamma3 = cfg.hazard.gamma3;

    let mut state = market_cfg.populate(cfg.base_seed, path_index)?;
    let mut ledger = InvestorLedger::new(mat_days);
    let mut rec = PathRecord::with_capacity(total_days + 1);

    let checkpoints: Vec<(usize, f64)> = cfg
        .checkpoint_times()
        .into_iter()
        .map(|t| (market_cfg.days(t).min(total_days), t))
        .collect();
    let mut next_cp = 0;

    // trailing realized annual rates for the investor hazard
    let mut window = std::collections::VecDeque::with_capacity(cfg.rate_window_days);
    let mut window_sum = 0.0;
    let mut last_integrand = None;
    let mut h_p = 0.0;
    // no investors, no investor hazard
    let mut invested = false;

    let push = |rec: &mut PathRecord,
                state: &MarketState,
                day: usize,
                x_in: f64,
                r: f64,
                h_p: f64|
     -> Result<()> {
        let conc = cash_concentration_of(state, cfg.hazard.gamma1)?;
        let h_a = hazard_aspp(conc, &cfg.hazard)?;
        rec.time.push(day as f64 * dt);
        rec.price.push(state.price);
        rec.log_price.push(state.price.ln());
        rec.h_a.push(h_a);
        rec.h_p.push(h_p);
        rec.h.push(total_risk(h_a, h_p));
        rec.x_in.push(x_in);
        rec.r.push(r);
        rec.s_ext.push(state.external_shares * state.price);
        rec.total_cash.push(state.total_cash());
        Ok(())
    };

    push(&mut rec, &state, 0, 0.0, 0.0, 0.0)?;
    while next_cp < checkpoints.len() && checkpoints[next_cp].0 == 0 {
        rec.snapshots.push(CashSnapshot {
            time: checkpoints[next_cp].1,
            cash: state.cash_values(),
        });
        next_cp += 1;
    }

    for day in 0..total_days {
        let t = day as f64 * dt;
        let (inflow, withdrawing) = match policy {
            FlowPolicy::Constant(rate) => (rate * dt, false),
            FlowPolicy::Cycle if day < pre_days => (0.0, false),
            FlowPolicy::Cycle => {
                let tau = (day - pre_days) as f64 * dt;
                (cfg.schedule.eval(tau) * dt, day >= payout_start)
            }
        };
        invested |= inflow > 0.0;
        let withdrawal = if withdrawing {
            r_w * ledger.value() * dt
        } else {
            0.0
        };
        let requested = inflow - withdrawal;

        let prev_price = state.price;
        let out = trading_session(
            &mut state,
            market_cfg.m_active,
            requested,
            &market_cfg.signal,
            t,
            market_cfg.flow_sign,
        )?;
        if out.clamped_from.is_some() {
            rec.clamp_count += 1;
        }
        if matches!(policy, FlowPolicy::Cycle) {
            ledger.step(
                prev_price,
                state.price,
                inflow,
                if withdrawing { r_w * dt } else { 0.0 },
            );
        }

        let realized = (state.price / prev_price - 1.0) * dpy;
        window.push_back(realized);
        window_sum += realized;
        if window.len() > cfg.rate_window_days {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        let record_day = day + 1;
        if matches!(policy, FlowPolicy::Cycle) && invested && record_day >= payout_start {
            let smoothed = window_sum / window.len() as f64;
            let integrand = (r_w - smoothed).exp();
            if let Some(prev) = last_integrand {
                h_p += gamma3 * dt * 0.5 * (prev + integrand);
            }
            last_integrand = Some(integrand);
        }

        push(
            &mut rec,
            &state,
            record_day,
            out.cash_flow_in,
            ledger.value(),
            h_p,
        )?;
        while next_cp < checkpoints.len() && checkpoints[next_cp].0 == record_day {
            rec.snapshots.push(CashSnapshot {
                time: checkpoints[next_cp].1,
                cash: state.cash_values(),
            });
            next_cp += 1;
        }
    }
    Ok(rec)
}

fn cash_concentration_of(state: &MarketState, gamma1: f64) -> Result<f64> {
    let cash: Vec<f64> = state.agents.iter().map(|a| a.cash).collect();
    cash_concentration(&cash, gamma1)
}
