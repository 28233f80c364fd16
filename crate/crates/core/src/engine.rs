//! One trading session: draw the active set, clear the price, rebalance
//! and adapt target ratios.
//!
//! The exogenous flow `x_in` is external buying pressure when positive:
//! active agents net-sell `x_in` dollars of stock and their total cash
//! rises by `x_in`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{effective_factors, AgentPortfolio, MarketState, SignalSchedule};

/// Lowest price ratio a session may produce when withdrawals would
/// otherwise annihilate the price.
pub const MIN_PRICE_RATIO: f64 = 0.01;

/// Relative tolerance for the "no change" branch of the ratio update.
pub const RATIO_TIE_TOLERANCE: f64 = 1e-12;

/// How the exogenous flow enters the clearing condition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowSign {
    /// `x_in` enters the numerator of the price formula with a plus sign.
    #[default]
    PriceFormula,
    /// Literal `Σx − x_in = 0` clearing text; equivalent to negating `x_in`.
    ClearanceText,
}

impl FlowSign {
    fn apply(self, x_in: f64) -> f64 {
        match self {
            FlowSign::PriceFormula => x_in,
            FlowSign::ClearanceText => -x_in,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bought,
    Sold,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub agent: usize,
    /// Dollars moved from cash into stock (negative when selling).
    pub amount: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub new_price: f64,
    pub trades: Vec<Trade>,
    pub external_share_delta: f64,
    /// Flow actually executed (after any clamp, in price-formula sign).
    pub cash_flow_in: f64,
    /// Requested flow when the session had to clamp it.
    pub clamped_from: Option<f64>,
}

/// Sums the two halves of the clearing formula over the active set:
/// `(Σ k·b/(1+k), Σ s/(1+k))`.
fn clearing_sums<'a>(active: impl IntoIterator<Item = &'a AgentPortfolio>) -> (f64, f64) {
    active.into_iter().fold((0.0, 0.0), |(demand, supply), a| {
        let w = 1.0 / (1.0 + a.target_ratio);
        (
            demand + a.target_ratio * a.cash * w,
            supply + a.stock_value * w,
        )
    })
}

fn ratio_from_sums(demand: f64, supply: f64, x_in: f64) -> Result<f64> {
    if supply <= 0.0 {
        return Err(Error::NoSupply);
    }
    let ratio = (x_in + demand) / supply;
    if ratio <= 0.0 {
        return Err(Error::LiquidityExhausted { x_in, ratio });
    }
    Ok(ratio)
}

/// Market-clearing price ratio `P/P₀` for the given active portfolios.
pub fn clear_price(active: &[AgentPortfolio], x_in: f64) -> Result<f64> {
    let (demand, supply) = clearing_sums(active);
    ratio_from_sums(demand, supply, x_in)
}

/// Trade to the target ratio at the new price.
///
/// Returns the updated portfolio and the dollar amount `x` moved into stock.
/// Afterwards `stock_value / cash == target_ratio`.
pub fn rebalance(agent: &AgentPortfolio, price_ratio: f64) -> (AgentPortfolio, f64) {
    let k = agent.target_ratio;
    let revalued = price_ratio * agent.stock_value;
    let x = (k * agent.cash - revalued) / (1.0 + k);
    let cash = (agent.cash + revalued) / (1.0 + k);
    let updated = AgentPortfolio {
        stock_value: k * cash,
        cash,
        ..*agent
    };
    (updated, x)
}

/// Adapted target ratio from the pre-trade holdings valued at the new price.
pub fn update_ratio(agent: &AgentPortfolio, price_ratio: f64, greed: f64, fear: f64) -> f64 {
    let k = agent.target_ratio;
    if agent.cash <= 0.0 {
        // Zero cash over-performs any finite target.
        return greed * k;
    }
    let held = price_ratio * agent.stock_value / agent.cash;
    if (held - k).abs() <= RATIO_TIE_TOLERANCE * k {
        k
    } else if held > k {
        greed * k
    } else {
        k / fear
    }
}

/// Run one session in place.
///
/// `m` agents are drawn without replacement. If `x_in` would push the
/// price ratio below [`MIN_PRICE_RATIO`], the flow is clamped so the ratio
/// lands exactly there and the outcome records the requested value.
pub fn trading_session(
    state: &mut MarketState,
    m: usize,
    x_in: f64,
    sig: &SignalSchedule,
    t: f64,
    sign: FlowSign,
) -> Result<SessionOutcome> {
    let n = state.agents.len();
    if m == 0 || m > n {
        return Err(Error::config("market.m_active", "1 ≤ m_active ≤ n_agents"));
    }
    let x_in = sign.apply(x_in);
    let mut active = state.draw_active(m);
    active.sort_unstable();

    let (demand, supply) = clearing_sums(active.iter().map(|&i| &state.agents[i]));
    let (x_exec, clamped_from) = match ratio_from_sums(demand, supply, x_in) {
        Ok(r) if r >= MIN_PRICE_RATIO => (x_in, None),
        Ok(_) | Err(Error::LiquidityExhausted { .. }) => {
            (MIN_PRICE_RATIO * supply - demand, Some(x_in))
        }
        Err(e) => return Err(e),
    };
    let ratio = if clamped_from.is_some() {
        MIN_PRICE_RATIO
    } else {
        (x_exec + demand) / supply
    };

    let mut trades = Vec::with_capacity(m);
    let mut next = 0;
    for (i, agent) in state.agents.iter_mut().enumerate() {
        if next < active.len() && active[next] == i {
            next += 1;
            let (greed, fear) = effective_factors(agent, sig, t);
            let new_k = update_ratio(agent, ratio, greed, fear);
            let (mut updated, x) = rebalance(agent, ratio);
            updated.target_ratio = new_k;
            *agent = updated;
            let side = if x > 0.0 {
                Side::Bought
            } else if x < 0.0 {
                Side::Sold
            } else {
                Side::Neutral
            };
            trades.push(Trade {
                agent: i,
                amount: x,
                side,
            });
        } else {
            agent.stock_value *= ratio;
        }
    }

    let new_price = ratio * state.price;
    let external_share_delta = x_exec / new_price;
    state.external_shares += external_share_delta;
    state.prev_price = state.price;
    state.price = new_price;
    state.day += 1;

    Ok(SessionOutcome {
        new_price,
        trades,
        external_share_delta,
        cash_flow_in: x_exec,
        clamped_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{path_rng, GreedFearSpec, Signal};
    use approx::assert_relative_eq;

    fn portfolio(s: f64, b: f64, k: f64) -> AgentPortfolio {
        AgentPortfolio {
            stock_value: s,
            cash: b,
            target_ratio: k,
            greed: 1.12,
            fear: 1.11,
        }
    }

    #[test]
    fn balanced_agent_clears_at_unit_ratio() {
        assert_eq!(
            clear_price(&[portfolio(10.0, 10.0, 1.0)], 0.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn two_agent_clearing_and_implied_trades() {
        let agents = [portfolio(10.0, 10.0, 2.0), portfolio(10.0, 10.0, 1.0)];
        let ratio = clear_price(&agents, 0.0).unwrap();
        assert_relative_eq!(ratio, 1.4, max_relative = 1e-15);
        let (a, x1) = rebalance(&agents[0], ratio);
        let (b, x2) = rebalance(&agents[1], ratio);
        assert_relative_eq!(x1, 2.0, max_relative = 1e-14);
        assert_relative_eq!(x2, -2.0, max_relative = 1e-14);
        assert!((x1 + x2).abs() < 1e-12);
        assert_relative_eq!(a.cash, 8.0, max_relative = 1e-14);
        assert_relative_eq!(a.stock_value, 16.0, max_relative = 1e-14);
        assert_relative_eq!(b.cash, 12.0, max_relative = 1e-14);
    }

    #[test]
    fn inflow_raises_price_and_agent_sells() {
        let agent = portfolio(10.0, 10.0, 1.0);
        let ratio = clear_price(&[agent], 5.0).unwrap();
        assert_eq!(ratio, 2.0);
        let (after, x) = rebalance(&agent, ratio);
        assert_eq!(x, -5.0);
        assert_eq!(after.cash, 15.0);
        assert_eq!(after.stock_value, 15.0);
    }

    #[test]
    fn clearing_errors() {
        assert!(matches!(
            clear_price(&[portfolio(0.0, 10.0, 1.0)], 0.0),
            Err(Error::NoSupply)
        ));
        assert!(matches!(
            clear_price(&[portfolio(10.0, 10.0, 1.0)], -6.0),
            Err(Error::LiquidityExhausted { x_in, .. }) if x_in == -6.0
        ));
    }

    #[test]
    fn rebalance_hits_target_ratio() {
        let (a, x) = rebalance(&portfolio(10.0, 10.0, 1.0), 1.0);
        assert_eq!(x, 0.0);
        assert_eq!(a, portfolio(10.0, 10.0, 1.0));
        let (a, x) = rebalance(&portfolio(10.0, 10.0, 2.0), 1.4);
        assert_relative_eq!(x, 2.0, max_relative = 1e-14);
        assert_relative_eq!(a.stock_value / a.cash, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn ratio_update_branches() {
        let bought = update_ratio(&portfolio(10.0, 10.0, 2.0), 1.4, 1.12, 1.11);
        assert_relative_eq!(bought, 2.0 / 1.11, max_relative = 1e-15);
        assert_eq!(
            update_ratio(&portfolio(10.0, 10.0, 1.0), 1.0, 1.12, 1.11),
            1.0
        );
        assert_relative_eq!(
            update_ratio(&portfolio(10.0, 10.0, 1.0), 2.0, 1.12, 1.11),
            1.12,
            max_relative = 1e-15
        );
        // zero cash counts as selling
        assert_relative_eq!(
            update_ratio(&portfolio(10.0, 0.0, 1.0), 0.5, 1.12, 1.11),
            1.12,
            max_relative = 1e-15
        );
    }

    fn two_agent_state() -> MarketState {
        let mut agents = vec![portfolio(10.0, 10.0, 2.0), portfolio(10.0, 10.0, 1.0)];
        for a in &mut agents {
            a.greed = 1.0;
            a.fear = 1.0;
        }
        MarketState {
            agents,
            price: 1.0,
            prev_price: 1.0,
            day: 0,
            external_shares: 0.0,
            rng: path_rng(0, 0),
        }
    }

    #[test]
    fn two_agent_session() {
        let mut st = two_agent_state();
        let cash0 = st.total_cash();
        let out = trading_session(
            &mut st,
            2,
            0.0,
            &SignalSchedule::default(),
            0.0,
            FlowSign::default(),
        )
        .unwrap();
        assert_relative_eq!(out.new_price, 1.4, max_relative = 1e-15);
        assert_eq!(out.external_share_delta, 0.0);
        assert_relative_eq!(st.total_cash(), cash0, max_relative = 1e-15);
        assert_eq!(st.day, 1);
        assert_eq!(st.prev_price, 1.0);
    }

    #[test]
    fn single_balanced_agent_is_a_fixed_point() {
        let mut st = two_agent_state();
        st.agents.truncate(1);
        st.agents[0].target_ratio = 1.0;
        let out = trading_session(
            &mut st,
            1,
            0.0,
            &SignalSchedule::default(),
            0.0,
            FlowSign::default(),
        )
        .unwrap();
        assert_eq!(out.new_price, 1.0);
        assert_eq!(out.trades[0].side, Side::Neutral);
        assert_eq!(st.day, 1);
    }

    #[test]
    fn unit_factors_keep_price_constant() {
        let gf = GreedFearSpec::homogeneous(1.0, 1.0);
        let mut st =
            crate::market::init_population(50, &gf, 10.0, 1.0, 0.0, path_rng(9, 0)).unwrap();
        for d in 0..500 {
            trading_session(
                &mut st,
                10,
                0.0,
                &SignalSchedule::default(),
                d as f64 / 360.0,
                FlowSign::default(),
            )
            .unwrap();
        }
        assert_eq!(st.price, 1.0);
    }

    #[test]
    fn signal_off_freezes_targets() {
        let gf = GreedFearSpec::homogeneous(1.2, 1.1);
        let mut st =
            crate::market::init_population(20, &gf, 10.0, 1.0, 0.1, path_rng(9, 0)).unwrap();
        let off = SignalSchedule::uniform(Signal::Constant { level: 0.0 });
        for _ in 0..50 {
            trading_session(&mut st, 5, 0.0, &off, 0.0, FlowSign::default()).unwrap();
        }
        assert!(st.agents.iter().all(|a| a.target_ratio == 1.0));
    }

    #[test]
    fn withdrawal_overdraw_is_clamped() {
        let mut st = two_agent_state();
        let out = trading_session(
            &mut st,
            2,
            -1e6,
            &SignalSchedule::default(),
            0.0,
            FlowSign::default(),
        )
        .unwrap();
        assert_eq!(out.clamped_from, Some(-1e6));
        assert_relative_eq!(out.new_price, MIN_PRICE_RATIO, max_relative = 1e-12);
        assert!(st
            .agents
            .iter()
            .all(|a| a.cash > 0.0 && a.stock_value > 0.0));
        let sum_x: f64 = out.trades.iter().map(|t| t.amount).sum();
        assert_relative_eq!(sum_x, -out.cash_flow_in, max_relative = 1e-9);
    }

    #[test]
    fn clearance_text_sign_flips_flow() {
        let mut a = two_agent_state();
        let mut b = two_agent_state();
        let sig = SignalSchedule::default();
        let pa = trading_session(&mut a, 2, 3.0, &sig, 0.0, FlowSign::PriceFormula).unwrap();
        let pb = trading_session(&mut b, 2, -3.0, &sig, 0.0, FlowSign::ClearanceText).unwrap();
        assert_eq!(pa.new_price, pb.new_price);
    }

    #[test]
    fn rejects_bad_active_count() {
        let mut st = two_agent_state();
        assert!(trading_session(
            &mut st,
            3,
            0.0,
            &SignalSchedule::default(),
            0.0,
            FlowSign::default()
        )
        .is_err());
    }
}
