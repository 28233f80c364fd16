//! JSON experiment configuration.
//!
//! One document per run: the experiment kind, a seed, an output directory
//! and one block per module. Every block is optional and falls back to the
//! reference market (500 agents, 125 active per session, $10 cash each).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cycle::{CycleConfig, MarketConfig, RegimeConfig};
use crate::error::{Error, Result};
use crate::ponzi::{PonziParams, ScheduleSpec, SpecPonziParams, DEFAULT_DT};
use crate::risk::HazardParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Aspp,
    Regimes,
    Cycle,
    PonziClassical,
    PonziSpeculative,
    FitC0,
    Stats,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Aspp => "aspp",
            ExperimentKind::Regimes => "regimes",
            ExperimentKind::Cycle => "cycle",
            ExperimentKind::PonziClassical => "ponzi-classical",
            ExperimentKind::PonziSpeculative => "ponzi-speculative",
            ExperimentKind::FitC0 => "fit-c0",
            ExperimentKind::Stats => "stats",
        }
    }
}

/// Zero-investment pump ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsppBlock {
    pub horizon: f64,
    pub n_paths: usize,
}

impl Default for AsppBlock {
    fn default() -> Self {
        Self {
            horizon: 2.0,
            n_paths: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimesBlock {
    pub horizon: f64,
    /// Dollars per year; defaults to half the initial cash reserve.
    pub flow_rate: Option<f64>,
    pub n_paths: usize,
}

impl Default for RegimesBlock {
    fn default() -> Self {
        let r = RegimeConfig::default();
        Self {
            horizon: r.horizon,
            flow_rate: None,
            n_paths: r.n_paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleBlock {
    pub pre_phase: f64,
    pub t_m: f64,
    /// Defaults to exponential growth at 0.1 with first-year mass equal to
    /// the initial cash reserve.
    pub schedule: Option<ScheduleSpec>,
    pub target_rate: Option<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub rate_window_days: usize,
    pub checkpoints: Option<Vec<f64>>,
}

impl Default for CycleBlock {
    fn default() -> Self {
        let c = CycleConfig::default();
        Self {
            pre_phase: c.pre_phase,
            t_m: c.t_m,
            schedule: None,
            target_rate: None,
            horizon: c.horizon,
            n_paths: c.n_paths,
            rate_window_days: c.rate_window_days,
            checkpoints: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalBlock {
    pub params: PonziParams,
    pub schedule: ScheduleSpec,
    pub horizon: f64,
    pub dt: f64,
    /// Also bisect for the critical exponential growth rate.
    pub critical_exponent: bool,
    pub critical_horizon: f64,
}

impl Default for ClassicalBlock {
    fn default() -> Self {
        Self {
            params: PonziParams::default(),
            schedule: ScheduleSpec::unit_exponential(0.3),
            horizon: 20.0,
            dt: DEFAULT_DT,
            critical_exponent: false,
            critical_horizon: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeculativeBlock {
    pub params: SpecPonziParams,
    pub schedule: ScheduleSpec,
    pub horizon: f64,
    pub dt: f64,
    /// Trailing window (years) for the steady-state rate.
    pub steady_window: f64,
}

impl Default for SpeculativeBlock {
    fn default() -> Self {
        Self {
            params: SpecPonziParams::default(),
            schedule: ScheduleSpec::exponential(0.1, 5000.0),
            horizon: 40.0,
            dt: DEFAULT_DT,
            steady_window: 5.0,
        }
    }
}

/// Calibration against a cycle ensemble built from the `cycle` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    pub bracket_low: f64,
    pub bracket_high: f64,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            bracket_low: 1e-6,
            bracket_high: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsBlock {
    /// Series CSV to analyse; without it a zero-investment ensemble is run
    /// from the `aspp` block.
    pub input: Option<PathBuf>,
    pub column: String,
}

impl Default for StatsBlock {
    fn default() -> Self {
        Self {
            input: None,
            column: "price".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub market: MarketConfig,
    #[serde(default)]
    pub hazard: HazardParams,
    #[serde(default)]
    pub aspp: AsppBlock,
    #[serde(default)]
    pub regimes: RegimesBlock,
    #[serde(default)]
    pub cycle: CycleBlock,
    #[serde(default)]
    pub ponzi_classical: ClassicalBlock,
    #[serde(default)]
    pub ponzi_speculative: SpeculativeBlock,
    #[serde(default)]
    pub fit_c0: FitBlock,
    #[serde(default)]
    pub stats: StatsBlock,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: default_seed(),
            output_dir: None,
            market: MarketConfig::default(),
            hazard: HazardParams::default(),
            aspp: AsppBlock::default(),
            regimes: RegimesBlock::default(),
            cycle: CycleBlock::default(),
            ponzi_classical: ClassicalBlock::default(),
            ponzi_speculative: SpeculativeBlock::default(),
            fit_c0: FitBlock::default(),
            stats: StatsBlock::default(),
        }
    }

    /// Overwrite the path count of whichever block the kind uses.
    pub fn set_paths(&mut self, n: usize) {
        match self.kind {
            ExperimentKind::Aspp | ExperimentKind::Stats => self.aspp.n_paths = n,
            ExperimentKind::Regimes => self.regimes.n_paths = n,
            ExperimentKind::Cycle | ExperimentKind::FitC0 => self.cycle.n_paths = n,
            ExperimentKind::PonziClassical | ExperimentKind::PonziSpeculative => {}
        }
    }

    pub fn aspp_config(&self) -> CycleConfig {
        CycleConfig {
            hazard: self.hazard,
            ..CycleConfig::zero_investment(
                self.market.clone(),
                self.aspp.horizon,
                self.aspp.n_paths,
                self.seed,
            )
        }
    }

    pub fn regime_config(&self) -> RegimeConfig {
        RegimeConfig {
            flow_rate: self
                .regimes
                .flow_rate
                .unwrap_or(0.5 * self.market.initial_cash_reserve()),
            market: self.market.clone(),
            hazard: self.hazard,
            horizon: self.regimes.horizon,
            n_paths: self.regimes.n_paths,
            base_seed: self.seed,
        }
    }

    pub fn cycle_config(&self) -> CycleConfig {
        let c = &self.cycle;
        CycleConfig {
            pre_phase: c.pre_phase,
            t_m: c.t_m,
            schedule: c.schedule.unwrap_or_else(|| {
                ScheduleSpec::exponential(0.1, self.market.initial_cash_reserve())
            }),
            target_rate: c.target_rate,
            horizon: c.horizon,
            n_paths: c.n_paths,
            base_seed: self.seed,
            market: self.market.clone(),
            hazard: self.hazard,
            rate_window_days: c.rate_window_days,
            checkpoints: c.checkpoints.clone(),
        }
    }

    /// Check the blocks the chosen kind reads.
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.hazard.validate()?;
        match self.kind {
            ExperimentKind::Aspp => self.aspp_config().validate(),
            ExperimentKind::Stats => match &self.stats.input {
                Some(_) if self.stats.column.is_empty() => {
                    Err(Error::config("stats.column", "column must be non-empty"))
                }
                Some(_) => Ok(()),
                None => self.aspp_config().validate(),
            },
            ExperimentKind::Regimes => self.regime_config().validate(),
            ExperimentKind::Cycle => self.cycle_config().validate(),
            ExperimentKind::FitC0 => {
                let f = &self.fit_c0;
                if !(f.bracket_low > 0.0 && f.bracket_high > f.bracket_low) {
                    return Err(Error::config(
                        "fit_c0.bracket_low",
                        "0 < bracket_low < bracket_high",
                    ));
                }
                self.cycle_config().validate()
            }
            ExperimentKind::PonziClassical => {
                let b = &self.ponzi_classical;
                b.params.validate()?;
                b.schedule.validate("ponzi_classical.schedule")?;
                positive("ponzi_classical.horizon", b.horizon)?;
                positive("ponzi_classical.dt", b.dt)?;
                positive("ponzi_classical.critical_horizon", b.critical_horizon)
            }
            ExperimentKind::PonziSpeculative => {
                let b = &self.ponzi_speculative;
                b.params.validate()?;
                b.schedule.validate("ponzi_speculative.schedule")?;
                positive("ponzi_speculative.horizon", b.horizon)?;
                positive("ponzi_speculative.dt", b.dt)?;
                positive("ponzi_speculative.steady_window", b.steady_window)
            }
        }
    }

    /// Canonical JSON text, used for hashing and round trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("{} > 0", key.rsplit('.').next().unwrap_or(key)),
        ))
    }
}

/// Parse and validate a config from JSON text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Json {
        path: PathBuf::from("<config>"),
        source: e,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read, parse and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Json { source, .. } => Error::Json {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}
