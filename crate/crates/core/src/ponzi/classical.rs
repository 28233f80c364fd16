use serde::{Deserialize, Serialize};

use super::schedule::{exp_mass_over, ScheduleKind, ScheduleSpec};
use super::{aligned_steps, OdeSolution, DEFAULT_DT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PonziParams {
    /// Market rate earned on money held by the scheme.
    pub r_n: f64,
    /// Promised rate.
    pub r_p: f64,
    /// Withdrawal rate on matured value.
    pub r_w: f64,
    /// Maturity period, years.
    pub t_m: f64,
    pub s0: f64,
}

impl Default for PonziParams {
    fn default() -> Self {
        Self {
            r_n: 0.0,
            r_p: 0.41,
            r_w: 0.41,
            t_m: 3.0,
            s0: 0.0,
        }
    }
}

impl PonziParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_m >= 0.0) {
            return Err(Error::config("ponzi.classical.t_m", "t_m ≥ 0"));
        }
        if !(self.s0 >= 0.0) {
            return Err(Error::config("ponzi.classical.s0", "s0 ≥ 0"));
        }
        for (k, v) in [("r_n", self.r_n), ("r_p", self.r_p), ("r_w", self.r_w)] {
            if !v.is_finite() {
                return Err(Error::config(
                    format!("ponzi.classical.{k}"),
                    "must be finite",
                ));
            }
        }
        Ok(())
    }
}

/// Integrate the classical scheme with RK4 at fixed step `dt`.
///
/// `S' = r_n S + r(t) − r_w R`, `R' = (r_p − r_w) R + e^{r_p t_m} r(t − t_m)`,
/// `S(0) = S₀`, `R(0) = 0`. The maturity delay must be a whole number of
/// steps so the inflow switch-on at `t_m` falls on a step boundary.
pub fn classical_ponzi_solve(
    p: &PonziParams,
    spec: &ScheduleSpec,
    horizon: f64,
    dt: f64,
) -> Result<OdeSolution> {
    p.validate()?;
    let lag = aligned_steps(p.t_m, dt, "maturity t_m")?;
    let steps = (horizon / dt).round() as usize;
    let boost = (p.r_p * p.t_m).exp();

    let mut grid = Vec::with_capacity(steps + 1);
    let mut s_out = Vec::with_capacity(steps + 1);
    let mut r_out = Vec::with_capacity(steps + 1);
    let (mut s, mut r) = (p.s0, 0.0);
    grid.push(0.0);
    s_out.push(s);
    r_out.push(r);

    for n in 0..steps {
        let t = n as f64 * dt;
        // The whole step lies before maturity of the first dollar.
        let matured = n >= lag;
        let rhs = |tau: f64, s: f64, r: f64| {
            let delayed = if matured { spec.eval(tau - p.t_m) } else { 0.0 };
            (
                p.r_n * s + spec.eval(tau) - p.r_w * r,
                (p.r_p - p.r_w) * r + boost * delayed,
            )
        };
        let h = 0.5 * dt;
        let k1 = rhs(t, s, r);
        let k2 = rhs(t + h, s + h * k1.0, r + h * k1.1);
        let k3 = rhs(t + h, s + h * k2.0, r + h * k2.1);
        let k4 = rhs(t + dt, s + dt * k3.0, r + dt * k3.1);
        s += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        r += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        grid.push((n + 1) as f64 * dt);
        s_out.push(s);
        r_out.push(r);
    }

    Ok(OdeSolution {
        grid,
        s: s_out,
        r: r_out,
        r_n: Vec::new(),
        j: Vec::new(),
    })
}

/// Matured value `R(t) = e^{r_p t_m} ∫₀^{t−t_m} e^{(r_p − r_w)(t − t_m − s)} r(s) ds`
/// evaluated in closed form for each schedule family.
pub fn matured_value_closed_form(p: &PonziParams, spec: &ScheduleSpec, t: f64) -> f64 {
    let tau = t - p.t_m;
    if tau <= 0.0 {
        return 0.0;
    }
    let lambda = p.r_p - p.r_w;
    let c = spec.first_year_total;
    let integral = match spec.kind {
        ScheduleKind::Constant => c * exp_mass_over(lambda, tau),
        ScheduleKind::Linear => {
            // ∫₀^τ e^{λ(τ−s)} 2C s ds
            if lambda == 0.0 {
                c * tau * tau
            } else {
                2.0 * c * ((lambda * tau).exp_m1() - lambda * tau) / (lambda * lambda)
            }
        }
        ScheduleKind::Exponential => {
            let a = spec.rate_param;
            spec.exp_prefactor() * (lambda * tau).exp() * exp_mass_over(a - lambda, tau)
        }
    };
    (p.r_p * p.t_m).exp() * integral
}

/// First time the scheme's money `S` reaches zero, by sign change and
/// linear interpolation between nodes. `None` if `S` stays positive.
pub fn collapse_time(sol: &OdeSolution) -> Option<f64> {
    for i in 1..sol.s.len() {
        if sol.s[i] <= 0.0 {
            let (s0, s1) = (sol.s[i - 1], sol.s[i]);
            if s0 <= 0.0 {
                return Some(sol.grid[i - 1]);
            }
            let frac = s0 / (s0 - s1);
            return Some(sol.grid[i - 1] + frac * (sol.grid[i] - sol.grid[i - 1]));
        }
    }
    None
}

/// Smallest exponent `a` of the schedule `r(t) = e^{a t}` for which the
/// classical scheme survives the horizon, found by bisection to `±tol`.
pub fn critical_exponent(p: &PonziParams, horizon: f64, tol: f64) -> Result<f64> {
    critical_exponent_in(p, (0.0, 2.0), horizon, tol, DEFAULT_DT)
}

pub fn critical_exponent_in(
    p: &PonziParams,
    bracket: (f64, f64),
    horizon: f64,
    tol: f64,
    dt: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    let collapses = |a: f64| -> Result<bool> {
        let sol = classical_ponzi_solve(p, &ScheduleSpec::unit_exponential(a), horizon, dt)?;
        Ok(collapse_time(&sol).is_some())
    };
    let (mut lo, mut hi) = bracket;
    let (lo_dies, hi_dies) = (collapses(lo)?, collapses(hi)?);
    if !lo_dies || hi_dies {
        return Err(Error::Bracket {
            low: lo,
            high: hi,
            detail: format!("collapse at low: {lo_dies}, collapse at high: {hi_dies}"),
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if collapses(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DT: f64 = 1.0 / 360.0;

    #[test]
    fn no_inflow_grows_exponentially() {
        let p = PonziParams {
            r_n: 0.05,
            s0: 100.0,
            ..PonziParams::default()
        };
        let sol = classical_ponzi_solve(&p, &ScheduleSpec::constant(0.0), 10.0, DT).unwrap();
        assert!(sol.r.iter().all(|&r| r == 0.0));
        let exact = 100.0 * 0.5f64.exp();
        assert!((sol.s.last().unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn matured_value_zero_until_maturity() {
        let p = PonziParams::default();
        let sol = classical_ponzi_solve(&p, &ScheduleSpec::constant(5000.0), 5.0, DT).unwrap();
        let lag = (3.0 / DT).round() as usize;
        assert!(sol.r[..=lag].iter().all(|&r| r == 0.0));
        assert!(sol.r[lag + 1] > 0.0);
    }

    #[test]
    fn constant_schedule_matches_closed_form() {
        let p = PonziParams {
            r_n: 0.02,
            r_p: 0.41,
            r_w: 0.3,
            t_m: 3.0,
            s0: 10.0,
        };
        let spec = ScheduleSpec::constant(5000.0);
        let sol = classical_ponzi_solve(&p, &spec, 12.0, DT).unwrap();
        for (t, r) in sol
            .grid
            .iter()
            .zip(&sol.r)
            .filter(|(t, _)| **t > 3.0 + 1e-9)
        {
            let exact = matured_value_closed_form(&p, &spec, *t);
            assert_relative_eq!(*r, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn closed_form_for_constant_schedule() {
        let p = PonziParams {
            r_p: 0.41,
            r_w: 0.3,
            t_m: 3.0,
            ..PonziParams::default()
        };
        let t = 7.5;
        let lam: f64 = 0.11;
        let expected = 5000.0 * (1.23f64).exp() * ((lam * 4.5).exp() - 1.0) / lam;
        assert_relative_eq!(
            matured_value_closed_form(&p, &ScheduleSpec::constant(5000.0), t),
            expected,
            max_relative = 1e-13
        );
    }

    #[test]
    fn linear_mass_scales_matured_value() {
        let p = PonziParams {
            r_p: 0.3,
            r_w: 0.2,
            ..PonziParams::default()
        };
        let a = classical_ponzi_solve(&p, &ScheduleSpec::linear(100.0), 10.0, DT).unwrap();
        let b = classical_ponzi_solve(&p, &ScheduleSpec::linear(250.0), 10.0, DT).unwrap();
        for (x, y) in a.r.iter().zip(&b.r) {
            assert_relative_eq!(2.5 * x, *y, max_relative = 1e-12);
        }
        let t = 10.0;
        assert_relative_eq!(
            *a.r.last().unwrap(),
            matured_value_closed_form(&p, &ScheduleSpec::linear(100.0), t),
            max_relative = 1e-6
        );
    }

    #[test]
    fn collapse_of_linear_ramp() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let s: Vec<f64> = grid.iter().map(|t| 1.0 - t).collect();
        let sol = OdeSolution {
            grid,
            s,
            r: vec![],
            r_n: vec![],
            j: vec![],
        };
        let tc = collapse_time(&sol).unwrap();
        assert!((tc - 1.0).abs() <= 0.01);

        let flat = OdeSolution {
            grid: vec![0.0, 1.0, 2.0],
            s: vec![3.0; 3],
            r: vec![],
            r_n: vec![],
            j: vec![],
        };
        assert_eq!(collapse_time(&flat), None);
    }

    #[test]
    fn figure_two_regime_collapses_for_slow_schedules() {
        let p = PonziParams::default();
        for spec in [ScheduleSpec::constant(1.0), ScheduleSpec::linear(1.0)] {
            let sol = classical_ponzi_solve(&p, &spec, 30.0, DT).unwrap();
            let tc = collapse_time(&sol).expect("collapse");
            let peak = sol.s.iter().cloned().fold(f64::MIN, f64::max);
            let peak_t = sol.grid[sol.s.iter().position(|&v| v == peak).unwrap()];
            assert!(peak_t > 3.0 && tc > peak_t, "{peak_t} {tc}");
        }
    }

    #[test]
    fn constant_collapse_time_matches_quadrature() {
        // r_n = 0, r_p = r_w: S(t) = S₀ + C t − r_w C e^{r_p t_m} (t − t_m)²/2
        let p = PonziParams {
            s0: 1.0,
            ..PonziParams::default()
        };
        let c = 1.0;
        let k = 0.5 * p.r_w * c * (p.r_p * p.t_m).exp();
        // root of S₀ + c t − k (t − t_m)² = 0 past t_m
        let (qa, qb, qc) = (-k, c + 2.0 * k * p.t_m, p.s0 - k * p.t_m * p.t_m);
        let root = (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        let sol = classical_ponzi_solve(&p, &ScheduleSpec::constant(c), 30.0, DT).unwrap();
        let tc = collapse_time(&sol).unwrap();
        assert!((tc - root).abs() < 1e-6, "{tc} vs {root}");
    }

    #[test]
    fn supercritical_schedule_survives() {
        let p = PonziParams {
            s0: 1.0,
            ..PonziParams::default()
        };
        let sol =
            classical_ponzi_solve(&p, &ScheduleSpec::unit_exponential(0.51), 60.0, DT).unwrap();
        assert_eq!(collapse_time(&sol), None);
    }

    #[test]
    fn critical_exponent_second_point() {
        let p = PonziParams {
            r_p: 0.2,
            r_w: 0.2,
            s0: 1.0,
            ..PonziParams::default()
        };
        let a = critical_exponent_in(&p, (0.0, 1.0), 60.0, 1e-3, 1.0 / 60.0).unwrap();
        assert!((a - 0.2).abs() < 0.02, "{a}");
    }

    #[test]
    fn critical_exponent_bad_bracket() {
        let p = PonziParams {
            s0: 1.0,
            ..PonziParams::default()
        };
        let err = critical_exponent_in(&p, (0.8, 1.0), 30.0, 1e-3, 1.0 / 60.0).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn misaligned_maturity_is_rejected() {
        let p = PonziParams {
            t_m: 0.25,
            ..PonziParams::default()
        };
        assert!(classical_ponzi_solve(&p, &ScheduleSpec::constant(1.0), 1.0, 0.1).is_err());
    }
}
