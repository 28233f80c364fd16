use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Investors' view of the money they may withdraw.
///
/// Each day's inflow waits `maturity_days` sessions, then joins the
/// withdrawable value `R` grown by the price ratio since it was invested.
/// Matured value follows the market price and shrinks by the daily
/// withdrawal fraction once payouts start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestorLedger {
    value: f64,
    maturity_days: usize,
    /// Prices at which each pending inflow was invested, oldest first.
    price_history: VecDeque<f64>,
    inflow_history: VecDeque<f64>,
}

impl InvestorLedger {
    pub fn new(maturity_days: usize) -> Self {
        Self {
            value: 0.0,
            maturity_days,
            price_history: VecDeque::with_capacity(maturity_days + 1),
            inflow_history: VecDeque::with_capacity(maturity_days + 1),
        }
    }

    /// Withdrawal-eligible value `R`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn pending(&self) -> usize {
        self.inflow_history.len()
    }

    /// Advance one session: the price moved from `prev_price` to `price`,
    /// `inflow` dollars came in at `price`, and a fraction
    /// `withdrawal_fraction` of the matured value is paid out.
    pub fn step(&mut self, prev_price: f64, price: f64, inflow: f64, withdrawal_fraction: f64) {
        let mut next = self.value * (price / prev_price) - withdrawal_fraction * self.value;
        self.price_history.push_back(price);
        self.inflow_history.push_back(inflow);
        if self.inflow_history.len() > self.maturity_days {
            let invested_at = self.price_history.pop_front().unwrap_or(price);
            let amount = self.inflow_history.pop_front().unwrap_or(0.0);
            next += amount * price / invested_at;
        }
        self.value = next.max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ponzi::ScheduleSpec;
    use approx::assert_relative_eq;

    #[test]
    fn constant_price_accumulates_matured_inflow() {
        let dpy = 360.0;
        let dt = 1.0 / dpy;
        let mat = 360;
        let spec = ScheduleSpec::exponential(0.1, 5000.0);
        let mut ledger = InvestorLedger::new(mat);
        let mut paid_in = Vec::new();
        for day in 0..5 * 360 {
            let inflow = spec.eval(day as f64 * dt) * dt;
            paid_in.push(inflow);
            ledger.step(2.5, 2.5, inflow, 0.0);
            let matured: f64 = if day >= mat {
                paid_in[..=day - mat].iter().sum()
            } else {
                0.0
            };
            if matured == 0.0 {
                assert_eq!(ledger.value(), 0.0);
            } else {
                assert_relative_eq!(ledger.value(), matured, max_relative = 1e-9);
            }
        }
        assert_eq!(ledger.pending(), mat);
    }

    #[test]
    fn matured_money_tracks_price() {
        let mut ledger = InvestorLedger::new(2);
        ledger.step(1.0, 1.0, 100.0, 0.0); // invested at 1
        ledger.step(1.0, 2.0, 0.0, 0.0);
        assert_eq!(ledger.value(), 0.0);
        ledger.step(2.0, 3.0, 0.0, 0.0); // matures at 3
        assert_relative_eq!(ledger.value(), 300.0, max_relative = 1e-15);
        ledger.step(3.0, 1.5, 0.0, 0.1);
        assert_relative_eq!(ledger.value(), 150.0 - 30.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_maturity_matures_same_day() {
        let mut ledger = InvestorLedger::new(0);
        ledger.step(1.0, 1.0, 7.0, 0.0);
        assert_eq!(ledger.value(), 7.0);
        assert_eq!(ledger.pending(), 0);
    }
}
