//! Deterministic Ponzi-scheme models.
//!
//! The classical scheme pays a promised rate `r_p` on matured money; the
//! speculative scheme replaces the promise with a market rate driven by the
//! net flow of money, which makes the system nonlinear and delayed.

mod classical;
mod schedule;
mod speculative;

pub use classical::{
    classical_ponzi_solve, collapse_time, critical_exponent, critical_exponent_in,
    matured_value_closed_form, PonziParams,
};
pub use schedule::{schedule_eval, ScheduleKind, ScheduleSpec};
pub use speculative::{
    speculative_ponzi_solve, steady_state_rate, RateForm, SpecPonziParams, SteadyState,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default step: one trading day.
pub const DEFAULT_DT: f64 = 1.0 / 360.0;

/// Fixed-step ODE output on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub grid: Vec<f64>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    /// Nominal rate at each node (speculative model only).
    pub r_n: Vec<f64>,
    /// Cumulative `∫ r_n` at each node (speculative model only).
    pub j: Vec<f64>,
}

impl OdeSolution {
    pub fn dt(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    /// Linear interpolation of `S` at time `t`, clamped to the grid.
    pub fn s_at(&self, t: f64) -> f64 {
        interp(&self.grid, &self.s, t)
    }
}

pub(crate) fn interp(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let n = grid.len();
    if n == 1 || t <= grid[0] {
        return values[0];
    }
    let dt = grid[1] - grid[0];
    let pos = (t - grid[0]) / dt;
    let i = pos.floor() as usize;
    if i + 1 >= n {
        return values[n - 1];
    }
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Number of steps of size `dt` in `span`, requiring exact alignment.
pub(crate) fn aligned_steps(span: f64, dt: f64, what: &str) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step dt must be > 0, got {dt}")));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::Domain(format!(
            "{what} = {span} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}
