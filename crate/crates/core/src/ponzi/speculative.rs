use serde::{Deserialize, Serialize};

use super::schedule::ScheduleSpec;
use super::{aligned_steps, OdeSolution};
use crate::error::{Error, Result};

/// How the net flow enters the market rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateForm {
    /// `r_n = c₀ (r − r_w R) + r*`.
    #[default]
    NetFlow,
    /// `r_n = c₀ (r − R) + r*`, the variant without the withdrawal rate.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecPonziParams {
    /// Market impact per dollar of net flow.
    pub c0: f64,
    pub r_w: f64,
    pub t_m: f64,
    pub s0: f64,
    /// Background rate added to the flow-driven rate.
    pub r_star_external: f64,
    pub rate_form: RateForm,
}

impl Default for SpecPonziParams {
    fn default() -> Self {
        Self {
            c0: 1.5e-4,
            r_w: 0.41,
            t_m: 3.0,
            s0: 0.0,
            r_star_external: 0.0,
            rate_form: RateForm::NetFlow,
        }
    }
}

impl SpecPonziParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::config("ponzi.speculative.c0", "c0 > 0"));
        }
        if !(self.t_m >= 0.0) {
            return Err(Error::config("ponzi.speculative.t_m", "t_m ≥ 0"));
        }
        if !self.r_w.is_finite() || !self.r_star_external.is_finite() || !self.s0.is_finite() {
            return Err(Error::config(
                "ponzi.speculative",
                "rates and s0 must be finite",
            ));
        }
        Ok(())
    }

    fn market_rate(&self, inflow: f64, matured: f64) -> f64 {
        let net = match self.rate_form {
            RateForm::NetFlow => inflow - self.r_w * matured,
            RateForm::Literal => inflow - matured,
        };
        self.c0 * net + self.r_star_external
    }
}

/// Integrate the speculative scheme with RK4 at fixed step `dt`.
///
/// State is `(S, R, J)` with `J = ∫₀^t r_n`:
///
/// ```text
/// r_n = c₀ (r(t) − r_w R) + r*
/// S'  = (r(t) − r_w R)(c₀ S + 1)
/// R'  = (r_n − r_w) R + r(t − t_m) e^{J(t) − J(t − t_m)}
/// J'  = r_n
/// ```
///
/// `J(t − t_m)` is read from the stored node history with linear
/// interpolation at the intermediate stages; `J(s) = 0` for `s ≤ 0`.
pub fn speculative_ponzi_solve(
    p: &SpecPonziParams,
    spec: &ScheduleSpec,
    horizon: f64,
    dt: f64,
) -> Result<OdeSolution> {
    p.validate()?;
    let lag = aligned_steps(p.t_m, dt, "maturity t_m")?;
    let steps = (horizon / dt).round() as usize;

    let mut grid = Vec::with_capacity(steps + 1);
    let mut s_out = Vec::with_capacity(steps + 1);
    let mut r_out = Vec::with_capacity(steps + 1);
    let mut rn_out = Vec::with_capacity(steps + 1);
    let mut j_out: Vec<f64> = Vec::with_capacity(steps + 1);

    let (mut s, mut r, mut j) = (p.s0, 0.0, 0.0);
    grid.push(0.0);
    s_out.push(s);
    r_out.push(r);
    rn_out.push(p.market_rate(spec.eval(0.0), r));
    j_out.push(j);

    for n in 0..steps {
        let t = n as f64 * dt;
        let matured = n >= lag;
        // J at (t + θ·dt − t_m), θ ∈ [0, 1]; nodes n−lag and n−lag+1 exist.
        let delayed_j = |theta: f64| -> f64 {
            if !matured || lag == 0 {
                return 0.0;
            }
            let i = n - lag;
            j_out[i] + theta * (j_out[i + 1] - j_out[i])
        };
        let rhs = |theta: f64, s: f64, r: f64, j: f64| -> (f64, f64, f64) {
            let tau = t + theta * dt;
            let inflow = spec.eval(tau);
            let rate = p.market_rate(inflow, r);
            let maturing = if !matured {
                0.0
            } else if lag == 0 {
                inflow
            } else {
                spec.eval(tau - p.t_m) * (j - delayed_j(theta)).exp()
            };
            (
                (inflow - p.r_w * r) * (p.c0 * s + 1.0),
                (rate - p.r_w) * r + maturing,
                rate,
            )
        };
        let h = 0.5 * dt;
        let k1 = rhs(0.0, s, r, j);
        let k2 = rhs(0.5, s + h * k1.0, r + h * k1.1, j + h * k1.2);
        let k3 = rhs(0.5, s + h * k2.0, r + h * k2.1, j + h * k2.2);
        let k4 = rhs(1.0, s + dt * k3.0, r + dt * k3.1, j + dt * k3.2);
        s += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        r += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        j += dt / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        if !(s.is_finite() && r.is_finite() && j.is_finite()) {
            return Err(Error::Divergence {
                last_finite_time: t,
            });
        }
        let t_next = (n + 1) as f64 * dt;
        grid.push(t_next);
        s_out.push(s);
        r_out.push(r);
        rn_out.push(p.market_rate(spec.eval(t_next), r));
        j_out.push(j);
    }

    Ok(OdeSolution {
        grid,
        s: s_out,
        r: r_out,
        r_n: rn_out,
        j: j_out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Mean nominal rate over the final window.
    pub rate: f64,
    /// `max − min` of the nominal rate over the window.
    pub spread: f64,
}

/// Mean of `r_n` over the last `window` years of the solution.
pub fn steady_state_rate(sol: &OdeSolution, window: f64) -> Result<SteadyState> {
    let horizon =
        sol.grid.last().copied().unwrap_or(0.0) - sol.grid.first().copied().unwrap_or(0.0);
    if sol.r_n.len() != sol.grid.len() || sol.grid.len() < 2 {
        return Err(Error::Domain(
            "solution carries no nominal-rate series".into(),
        ));
    }
    if !(window > 0.0) || horizon < 2.0 * window {
        return Err(Error::Domain(format!(
            "horizon {horizon} must be at least twice the window {window}"
        )));
    }
    let start = sol.grid.last().unwrap() - window;
    let tail: Vec<f64> = sol
        .grid
        .iter()
        .zip(&sol.r_n)
        .filter(|(t, _)| **t >= start - 1e-9)
        .map(|(_, r)| *r)
        .collect();
    let rate = tail.iter().sum::<f64>() / tail.len() as f64;
    let max = tail.iter().cloned().fold(f64::MIN, f64::max);
    let min = tail.iter().cloned().fold(f64::MAX, f64::min);
    Ok(SteadyState {
        rate,
        spread: max - min,
    })
}
