//! Browser bindings: one pump path, and the two Ponzi models.

use aspp_core::cycle::MarketConfig;
use aspp_core::engine::{trading_session, FlowSign};
use aspp_core::market::GreedFearSpec;
use aspp_core::ponzi::{
    classical_ponzi_solve, collapse_time, speculative_ponzi_solve, OdeSolution, PonziParams,
    ScheduleSpec, SpecPonziParams, DEFAULT_DT,
};
use aspp_core::risk::{cash_concentration, hazard_aspp, HazardParams};
use wasm_bindgen::prelude::*;

fn js_err(e: aspp_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct PumpRun {
    time: Vec<f64>,
    log_price: Vec<f64>,
    hazard: Vec<f64>,
    clamped: u32,
}

#[wasm_bindgen]
impl PumpRun {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.time.clone()
    }

    #[wasm_bindgen(getter, js_name = logPrice)]
    pub fn log_price(&self) -> Vec<f64> {
        self.log_price.clone()
    }

    /// Market hazard from cash concentration, per day.
    #[wasm_bindgen(getter)]
    pub fn hazard(&self) -> Vec<f64> {
        self.hazard.clone()
    }

    /// Sessions where the withdrawal had to be cut to keep the price positive.
    #[wasm_bindgen(getter)]
    pub fn clamped(&self) -> u32 {
        self.clamped
    }
}

/// One market path with a constant external flow (dollars per year,
/// negative for withdrawal).
#[wasm_bindgen(js_name = simulatePump)]
pub fn simulate_pump(
    n_agents: usize,
    m_active: usize,
    greed: f64,
    fear: f64,
    years: f64,
    flow_per_year: f64,
    seed: u64,
) -> Result<PumpRun, JsError> {
    let market = MarketConfig {
        n_agents,
        m_active,
        greed_fear: GreedFearSpec {
            mean_log_greed: greed.ln(),
            mean_log_fear: fear.ln(),
            ..GreedFearSpec::default()
        },
        ..MarketConfig::default()
    };
    market.validate().map_err(js_err)?;
    let hazard = HazardParams::default();
    let dt = market.dt();
    let days = (years / dt).round() as usize;
    let mut state = market.populate(seed, 0).map_err(js_err)?;

    let mut run = PumpRun {
        time: Vec::with_capacity(days + 1),
        log_price: Vec::with_capacity(days + 1),
        hazard: Vec::with_capacity(days + 1),
        clamped: 0,
    };
    for day in 0..=days {
        if day > 0 {
            let t = (day - 1) as f64 * dt;
            let out = trading_session(
                &mut state,
                m_active,
                flow_per_year * dt,
                &market.signal,
                t,
                FlowSign::default(),
            )
            .map_err(js_err)?;
            run.clamped += u32::from(out.clamped_from.is_some());
        }
        let h = cash_concentration(&state.cash_values(), hazard.gamma1).map_err(js_err)?;
        run.time.push(day as f64 * dt);
        run.log_price.push(state.price.ln());
        run.hazard.push(hazard_aspp(h, &hazard).map_err(js_err)?);
    }
    Ok(run)
}

#[wasm_bindgen]
pub struct OdeRun {
    sol: OdeSolution,
    collapse: Option<f64>,
}

#[wasm_bindgen]
impl OdeRun {
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> Vec<f64> {
        self.sol.grid.clone()
    }

    /// Money held by the scheme.
    #[wasm_bindgen(getter)]
    pub fn value(&self) -> Vec<f64> {
        self.sol.s.clone()
    }

    /// Matured, withdrawal-eligible value.
    #[wasm_bindgen(getter)]
    pub fn matured(&self) -> Vec<f64> {
        self.sol.r.clone()
    }

    /// Nominal rate; empty for the classical model.
    #[wasm_bindgen(getter)]
    pub fn rate(&self) -> Vec<f64> {
        self.sol.r_n.clone()
    }

    /// First time the scheme runs out of money, if it does.
    #[wasm_bindgen(getter, js_name = collapseTime)]
    pub fn collapse_time(&self) -> Option<f64> {
        self.collapse
    }
}

fn schedule(kind: &str, exponent: f64, first_year: f64) -> Result<ScheduleSpec, JsError> {
    let spec = match kind {
        "constant" => ScheduleSpec::constant(first_year),
        "linear" => ScheduleSpec::linear(first_year),
        "exponential" => ScheduleSpec::exponential(exponent, first_year),
        other => return Err(JsError::new(&format!("unknown schedule `{other}`"))),
    };
    spec.validate("schedule").map_err(js_err)?;
    Ok(spec)
}

/// Classical scheme paying the promised rate on matured money.
#[wasm_bindgen(js_name = classicalPonzi)]
pub fn classical_ponzi(
    promised: f64,
    withdrawal: f64,
    maturity: f64,
    kind: &str,
    exponent: f64,
    first_year: f64,
    horizon: f64,
) -> Result<OdeRun, JsError> {
    let p = PonziParams {
        r_n: 0.0,
        r_p: promised,
        r_w: withdrawal,
        t_m: maturity,
        s0: 0.0,
    };
    p.validate().map_err(js_err)?;
    let sol = classical_ponzi_solve(
        &p,
        &schedule(kind, exponent, first_year)?,
        horizon,
        DEFAULT_DT,
    )
    .map_err(js_err)?;
    let collapse = collapse_time(&sol);
    Ok(OdeRun { sol, collapse })
}

/// Speculative scheme whose rate follows the net flow of money.
#[wasm_bindgen(js_name = speculativePonzi)]
pub fn speculative_ponzi(
    impact: f64,
    withdrawal: f64,
    maturity: f64,
    kind: &str,
    exponent: f64,
    first_year: f64,
    horizon: f64,
) -> Result<OdeRun, JsError> {
    let p = SpecPonziParams {
        c0: impact,
        r_w: withdrawal,
        t_m: maturity,
        ..SpecPonziParams::default()
    };
    p.validate().map_err(js_err)?;
    let sol = speculative_ponzi_solve(
        &p,
        &schedule(kind, exponent, first_year)?,
        horizon,
        DEFAULT_DT,
    )
    .map_err(js_err)?;
    let collapse = collapse_time(&sol);
    Ok(OdeRun { sol, collapse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pump_path_rises() {
        let run = simulate_pump(100, 25, 1.12, 1.11, 1.0, 0.0, 3).unwrap();
        assert_eq!(run.time.len(), 361);
        assert!(run.log_price[360] > 0.0);
        assert!(run.hazard.iter().all(|h| h.is_finite() && *h >= 0.0));
    }

    #[test]
    fn ponzi_models_solve() {
        let c = classical_ponzi(0.41, 0.41, 3.0, "constant", 0.0, 1.0, 20.0).unwrap();
        assert!(c.collapse.is_some());
        let s = speculative_ponzi(1.5e-4, 0.41, 3.0, "exponential", 0.1, 5000.0, 20.0).unwrap();
        assert_eq!(s.sol.r_n.len(), s.sol.grid.len());
    }
}
