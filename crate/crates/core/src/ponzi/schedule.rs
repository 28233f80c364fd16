use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Linear,
    Exponential,
}

/// Investment schedule `r(t)` in dollars per year, normalized so that the
/// first year brings in exactly `first_year_total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    /// Growth exponent for the exponential family; ignored otherwise.
    #[serde(default)]
    pub rate_param: f64,
    pub first_year_total: f64,
}

impl ScheduleSpec {
    pub fn constant(first_year_total: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            rate_param: 0.0,
            first_year_total,
        }
    }

    pub fn linear(first_year_total: f64) -> Self {
        Self {
            kind: ScheduleKind::Linear,
            rate_param: 0.0,
            first_year_total,
        }
    }

    pub fn exponential(exponent: f64, first_year_total: f64) -> Self {
        Self {
            kind: ScheduleKind::Exponential,
            rate_param: exponent,
            first_year_total,
        }
    }

    /// `e^{a t}` with unit prefactor.
    pub fn unit_exponential(exponent: f64) -> Self {
        Self::exponential(exponent, exp_mass(exponent))
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.first_year_total >= 0.0 && self.first_year_total.is_finite()) {
            return Err(Error::config(
                format!("{key}.first_year_total"),
                "first_year_total must be finite and ≥ 0",
            ));
        }
        if !self.rate_param.is_finite() {
            return Err(Error::config(
                format!("{key}.rate_param"),
                "rate_param must be finite",
            ));
        }
        Ok(())
    }

    /// Prefactor of the exponential family, `c₁ = aC/(e^a − 1)`.
    pub fn exp_prefactor(&self) -> f64 {
        self.first_year_total / exp_mass(self.rate_param)
    }

    /// `r(t)`; zero before the schedule starts.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let c = self.first_year_total;
        match self.kind {
            ScheduleKind::Constant => c,
            ScheduleKind::Linear => 2.0 * c * t,
            ScheduleKind::Exponential => self.exp_prefactor() * (self.rate_param * t).exp(),
        }
    }

    /// `∫₀^t r(s) ds` in closed form.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let c = self.first_year_total;
        match self.kind {
            ScheduleKind::Constant => c * t,
            ScheduleKind::Linear => c * t * t,
            ScheduleKind::Exponential => self.exp_prefactor() * exp_mass_over(self.rate_param, t),
        }
    }
}

/// `∫₀¹ e^{a s} ds`.
fn exp_mass(a: f64) -> f64 {
    exp_mass_over(a, 1.0)
}

/// `∫₀^t e^{a s} ds`, stable as `a → 0`.
pub(crate) fn exp_mass_over(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else {
        (a * t).exp_m1() / a
    }
}

pub fn schedule_eval(spec: &ScheduleSpec, t: f64) -> f64 {
    spec.eval(t)
}
