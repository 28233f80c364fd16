//! CSV and manifest writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`. Nothing time- or host-dependent is written,
//! so identical inputs give byte-identical files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::cycle::{CashHistogram, Column, EnsembleStats, PathRecord};
use crate::error::{Error, Result};
use crate::ponzi::OdeSolution;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_rows<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_f64))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn path_header() -> Vec<String> {
    std::iter::once("t")
        .chain(Column::ALL.iter().map(|c| c.name()))
        .map(String::from)
        .collect()
}

/// One row per day: `t` then every tracked series.
pub fn write_path_csv(rec: &PathRecord, path: &Path) -> Result<()> {
    let rows = (0..rec.len()).map(|d| {
        std::iter::once(rec.time[d])
            .chain(Column::ALL.iter().map(|&c| rec.column(c)[d]))
            .collect()
    });
    write_rows(path, &path_header(), rows)
}

const BAND_SUFFIXES: [&str; 5] = ["mean", "std", "p10", "p50", "p90"];

pub fn ensemble_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for c in Column::ALL {
        h.extend(BAND_SUFFIXES.iter().map(|s| format!("{}_{s}", c.name())));
    }
    h
}

/// Per-day mean, standard deviation and percentile bands of every series.
pub fn write_ensemble_csv(stats: &EnsembleStats, path: &Path) -> Result<()> {
    let rows = (0..stats.time.len()).map(|d| {
        let mut row = vec![stats.time[d]];
        for b in &stats.bands {
            row.extend([b.mean[d], b.std[d], b.p10[d], b.p50[d], b.p90[d]]);
        }
        row
    });
    write_rows(path, &ensemble_header(), rows)
}

/// Long format: one row per (checkpoint, bin).
pub fn write_histograms_csv(hists: &[CashHistogram], path: &Path) -> Result<()> {
    let header: Vec<String> = ["time", "lower", "upper", "count"].map(String::from).into();
    let rows = hists.iter().flat_map(|h| {
        h.counts
            .iter()
            .enumerate()
            .map(move |(i, &n)| vec![h.time, h.edges[i], h.edges[i + 1], n as f64])
    });
    write_rows(path, &header, rows)
}

/// `t, S, R`, plus `r_n, J` when the model tracks them.
pub fn write_ode_csv(sol: &OdeSolution, path: &Path) -> Result<()> {
    let with_rate = !sol.r_n.is_empty();
    let names: &[&str] = if with_rate {
        &["t", "S", "R", "r_n", "J"]
    } else {
        &["t", "S", "R"]
    };
    let header: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let rows = (0..sol.grid.len()).map(|i| {
        let mut row = vec![sol.grid[i], sol.s[i], sol.r[i]];
        if with_rate {
            row.extend([sol.r_n[i], sol.j[i]]);
        }
        row
    });
    write_rows(path, &header, rows)
}

/// A numeric CSV read back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_series_csv(path: &Path) -> Result<SeriesTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Domain(format!(
                        "{}: row {}: `{f}` is not a number",
                        path.display(),
                        line + 2
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(SeriesTable { header, rows })
}

/// Provenance record written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// How the realized market rate is measured for the ledger and hazard.
    pub realized_rate: String,
    pub clamp_count: usize,
    pub failure_count: usize,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            kind: cfg.kind.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config_sha256: config_hash(cfg),
            realized_rate: "annualized daily simple return".to_string(),
            clamp_count: 0,
            failure_count: 0,
            files: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(dir.to_path_buf())
}
