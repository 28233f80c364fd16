use serde::{Deserialize, Serialize};

use super::{Column, EnsembleStats};
use crate::error::{Error, Result};
use crate::ponzi::{speculative_ponzi_solve, ScheduleSpec, SpecPonziParams};

/// Observed investment value on the investor clock (t = 0 at the start of
/// the investment phase), uniformly spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTarget {
    pub time: Vec<f64>,
    pub value: Vec<f64>,
}

impl FitTarget {
    /// Ensemble-mean external investment value from `pre_phase` onwards.
    pub fn from_ensemble(stats: &EnsembleStats, pre_phase: f64) -> Self {
        let s = &stats.band(Column::SExt).mean;
        let (time, value) = stats
            .time
            .iter()
            .zip(s)
            .filter(|(t, _)| **t >= pre_phase - 1e-9)
            .map(|(t, v)| (t - pre_phase, *v))
            .unzip();
        Self { time, value }
    }

    fn step(&self) -> Result<f64> {
        if self.time.len() < 2 {
            return Err(Error::Domain("fit target needs at least two points".into()));
        }
        let n = self.time.len();
        Ok((self.time[n - 1] - self.time[0]) / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C0Fit {
    pub c0: f64,
    pub rmse: f64,
    pub evaluations: usize,
}

/// Root-mean-square gap between the speculative model's `S(t)` at `c0`
/// and the target. Diverging solves score `+∞`.
pub fn fit_objective(
    target: &FitTarget,
    spec: &ScheduleSpec,
    r_w: f64,
    t_m: f64,
    c0: f64,
) -> Result<f64> {
    let dt = target.step()?;
    let horizon = dt * (target.time.len() - 1) as f64;
    let params = SpecPonziParams {
        c0,
        r_w,
        t_m,
        s0: target.value[0],
        ..SpecPonziParams::default()
    };
    let sol = match speculative_ponzi_solve(&params, spec, horizon, dt) {
        Ok(sol) => sol,
        Err(Error::Divergence { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let sq: f64 = target
        .time
        .iter()
        .zip(&target.value)
        .map(|(t, v)| (sol.s_at(*t) - v).powi(2))
        .sum();
    Ok((sq / target.time.len() as f64).sqrt())
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const LOG_TOL: f64 = 1e-6;
const EDGE_TOL: f64 = 1e-3;

/// Best-fitting market-impact coefficient, by golden-section search on
/// `ln c0` over `bracket`.
pub fn fit_c0(
    target: &FitTarget,
    spec: &ScheduleSpec,
    r_w: f64,
    t_m: f64,
    bracket: (f64, f64),
) -> Result<C0Fit> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "c0 bracket must satisfy 0 < low < high, got ({lo}, {hi})"
        )));
    }
    let mut evaluations = 0;
    let mut f = |x: f64| {
        evaluations += 1;
        fit_objective(target, spec, r_w, t_m, x.exp())
    };
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let (mut a, mut b) = (ln_lo, ln_hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > LOG_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let c0 = x.exp();
    if x - ln_lo < EDGE_TOL || ln_hi - x < EDGE_TOL {
        return Err(Error::BracketTooNarrow {
            c0,
            low: lo,
            high: hi,
        });
    }
    Ok(C0Fit {
        c0,
        rmse: fx,
        evaluations,
    })
}
