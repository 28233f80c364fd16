use serde::{Deserialize, Serialize};

use super::{simulate, Column, CycleConfig, FlowPolicy, MarketConfig, PathRecord};
use crate::error::{Error, Result};
use crate::risk::{log_return_stats, HazardParams, ReturnStats};

/// Cross-path summary of one tracked series, per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBands {
    pub mean: Vec<f64>,
    /// Sample standard deviation across paths (0 for a single path).
    pub std: Vec<f64>,
    pub p10: Vec<f64>,
    pub p50: Vec<f64>,
    pub p90: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashHistogram {
    pub time: f64,
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub time: Vec<f64>,
    /// One entry per [`Column::ALL`], same order.
    pub bands: Vec<SeriesBands>,
    /// Daily log returns pooled over all surviving paths.
    pub returns: Option<ReturnStats>,
    pub histograms: Vec<CashHistogram>,
    pub n_paths: usize,
    pub failures: Vec<PathFailure>,
    pub clamp_count: usize,
}

impl EnsembleStats {
    pub fn band(&self, c: Column) -> &SeriesBands {
        let i = Column::ALL.iter().position(|x| *x == c).unwrap_or(0);
        &self.bands[i]
    }

    pub fn survivors(&self) -> usize {
        self.n_paths - self.failures.len()
    }
}

const HISTOGRAM_BINS: usize = 40;

/// Run `cfg.n_paths` independent paths and aggregate them.
///
/// Aggregates depend only on `(cfg, base_seed)`: paths are combined in
/// index order whatever the thread count.
pub fn run_ensemble(cfg: &CycleConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    ensemble_of(cfg, FlowPolicy::Cycle)
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn run_ensemble_with_threads(cfg: &CycleConfig, threads: usize) -> Result<EnsembleStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(cfg))
}

#[cfg(not(feature = "parallel"))]
pub fn run_ensemble_with_threads(cfg: &CycleConfig, _threads: usize) -> Result<EnsembleStats> {
    run_ensemble(cfg)
}

pub(crate) fn ensemble_of(cfg: &CycleConfig, policy: FlowPolicy) -> Result<EnsembleStats> {
    let results = run_paths(cfg, policy);
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(PathFailure {
                path: i as u64,
                message: e.to_string(),
            }),
        }
    }
    let mut stats = aggregate(&records)?;
    stats.n_paths = cfg.n_paths;
    stats.failures = failures;
    Ok(stats)
}

#[cfg(feature = "parallel")]
fn run_paths(cfg: &CycleConfig, policy: FlowPolicy) -> Vec<Result<PathRecord>> {
    use rayon::prelude::*;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate(cfg, policy, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_paths(cfg: &CycleConfig, policy: FlowPolicy) -> Vec<Result<PathRecord>> {
    (0..cfg.n_paths as u64)
        .map(|i| simulate(cfg, policy, i))
        .collect()
}

/// Per-day bands, pooled return statistics and merged cash histograms.
pub fn aggregate(records: &[PathRecord]) -> Result<EnsembleStats> {
    let first = records
        .first()
        .ok_or_else(|| Error::Domain("every path failed; nothing to aggregate".into()))?;
    let days = first.len();
    if records.iter().any(|r| r.len() != days) {
        return Err(Error::Domain("paths have different lengths".into()));
    }

    let mut column = vec![0.0; records.len()];
    let bands = Column::ALL
        .iter()
        .map(|&c| {
            let mut b = SeriesBands {
                mean: Vec::with_capacity(days),
                std: Vec::with_capacity(days),
                p10: Vec::with_capacity(days),
                p50: Vec::with_capacity(days),
                p90: Vec::with_capacity(days),
            };
            for d in 0..days {
                for (slot, rec) in column.iter_mut().zip(records) {
                    *slot = rec.column(c)[d];
                }
                let n = column.len() as f64;
                let mean = column.iter().sum::<f64>() / n;
                let var = if column.len() > 1 {
                    column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                column.sort_by(f64::total_cmp);
                b.mean.push(mean);
                b.std.push(var.sqrt());
                b.p10.push(percentile(&column, 0.10));
                b.p50.push(percentile(&column, 0.50));
                b.p90.push(percentile(&column, 0.90));
            }
            b
        })
        .collect();

    let pooled: Vec<f64> = records.iter().flat_map(|r| r.log_returns()).collect();
    let returns = (pooled.len() >= 2).then(|| log_return_stats(&pooled));

    Ok(EnsembleStats {
        time: first.time.clone(),
        bands,
        returns,
        histograms: merge_histograms(records),
        n_paths: records.len(),
        failures: Vec::new(),
        clamp_count: records.iter().map(|r| r.clamp_count).sum(),
    })
}

/// Linear interpolation between order statistics of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn merge_histograms(records: &[PathRecord]) -> Vec<CashHistogram> {
    let n_cp = records[0].snapshots.len();
    (0..n_cp)
        .map(|k| {
            let time = records[0].snapshots[k].time;
            let pooled = records
                .iter()
                .flat_map(|r| r.snapshots[k].cash.iter().copied());
            let max = pooled.clone().fold(0.0f64, f64::max);
            let width = if max > 0.0 {
                max / HISTOGRAM_BINS as f64
            } else {
                1.0
            };
            let edges = (0..=HISTOGRAM_BINS).map(|i| i as f64 * width).collect();
            let mut counts = vec![0u64; HISTOGRAM_BINS];
            for v in pooled {
                let bin = ((v / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin] += 1;
            }
            CashHistogram {
                time,
                edges,
                counts,
            }
        })
        .collect()
}

/// Three ensembles differing only in a constant external flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeConfig {
    pub market: MarketConfig,
    pub hazard: HazardParams,
    pub horizon: f64,
    /// Magnitude of the constant flow, dollars per year.
    pub flow_rate: f64,
    pub n_paths: usize,
    pub base_seed: u64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        let market = MarketConfig::default();
        Self {
            flow_rate: 0.5 * market.initial_cash_reserve(),
            market,
            hazard: HazardParams::default(),
            horizon: 1.0,
            n_paths: 100,
            base_seed: 1,
        }
    }
}

impl RegimeConfig {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.hazard.validate()?;
        if !(self.horizon > 0.0) {
            return Err(Error::config("regimes.horizon", "horizon > 0"));
        }
        if !(self.flow_rate >= 0.0 && self.flow_rate.is_finite()) {
            return Err(Error::config("regimes.flow_rate", "flow_rate ≥ 0"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("regimes.n_paths", "n_paths ≥ 1"));
        }
        Ok(())
    }

    fn as_cycle(&self) -> CycleConfig {
        CycleConfig {
            pre_phase: 0.0,
            t_m: 0.0,
            horizon: self.horizon,
            n_paths: self.n_paths,
            base_seed: self.base_seed,
            market: self.market.clone(),
            hazard: self.hazard,
            checkpoints: Some(vec![self.horizon]),
            ..CycleConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    /// Constant inflow `+flow_rate`.
    pub investment: EnsembleStats,
    pub zero: EnsembleStats,
    /// Constant outflow `−flow_rate`.
    pub withdrawal: EnsembleStats,
}

/// Strong investment, zero flow and withdrawal from the same populations.
pub fn regime_comparison(cfg: &RegimeConfig) -> Result<RegimeComparison> {
    cfg.validate()?;
    let base = cfg.as_cycle();
    Ok(RegimeComparison {
        investment: ensemble_of(&base, FlowPolicy::Constant(cfg.flow_rate))?,
        zero: ensemble_of(&base, FlowPolicy::Constant(0.0))?,
        withdrawal: ensemble_of(&base, FlowPolicy::Constant(-cfg.flow_rate))?,
    })
}
